"""Command-line front end; a thin client of the HTTP service.

Each command reads an optional JSON config document (--config) whose keys
mirror the service request schema; scalar flags override config fields.
Set DISPATCHQ_LOG to control verbosity.  Exit codes: 0 success, 2 validation
failure, 3 infeasibility, 4 internal assertion.
"""
from __future__ import annotations

import functools
import json
import logging
import os
import sys

import click

from .client import ClientError, ServiceClient
from .experiments import FIG3_COLUMNS, FIG4_COLUMNS, SWEEP_COLUMNS

logging.basicConfig(level=os.environ.get("DISPATCHQ_LOG", "WARNING").upper())
logger = logging.getLogger("dispatchq.cli")


def _load_config(path):
    if path is None:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _parse_threshold(value):
    if value is None:
        return None
    if str(value).lower() in ("inf", "infinite"):
        return "inf"
    return int(value)


def _policy_payload(config, rates, tail, buffer_len, threshold):
    policy = dict(config.get("policy", {}))
    if rates is not None:
        policy["rate_prefix"] = [float(x) for x in rates.split(",")]
    if tail is not None:
        policy["tail_rate"] = tail
    if buffer_len is not None:
        policy["buffer_len"] = buffer_len
    if threshold is not None:
        policy["threshold"] = _parse_threshold(threshold)
    if "rate_prefix" not in policy:
        raise click.UsageError("dispatch rates required (--rates or config policy.rate_prefix)")
    policy.setdefault("tail_rate", policy["rate_prefix"][-1])
    policy.setdefault("buffer_len", 0)
    policy.setdefault("threshold", "inf")
    return policy


def _params_payload(config, mu, cap_lambda, tstar):
    params = dict(config.get("params", {}))
    if mu is not None:
        params["mu"] = mu
    if cap_lambda is not None:
        params["cap_lambda"] = cap_lambda
    if tstar is not None:
        params["t_star"] = tstar
    if "mu" not in params:
        raise click.UsageError("service rate required (--mu or config params.mu)")
    if "cap_lambda" not in params:
        raise click.UsageError("capacity required (--cap-lambda or config params.cap_lambda)")
    params.setdefault("t_star", 0.0)
    return params


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ClientError as exc:
            click.echo(f"error [{exc.code}]: {exc.detail}", err=True)
            sys.exit(exc.exit_code)

    return wrapper


def _emit(text, out):
    if out is None:
        click.echo(text, nl=False)
    else:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)


def _render(rows, columns, fmt):
    from . import experiments

    if fmt == "csv":
        return experiments.render_csv(rows, columns)
    return experiments.render_jsonl(rows, columns)


policy_options = [
    click.option("--rates", default=None, help="Comma-separated dispatch rates lambda_0,lambda_1,..."),
    click.option("--tail", type=float, default=None, help="Tail dispatch rate (default: last of --rates)"),
    click.option("--buffer", "-d", "buffer_len", type=int, default=None, help="Rider buffer length d"),
    click.option("--threshold", "-M", default=None, help='Disclosure threshold M (integer or "inf")'),
]
params_options = [
    click.option("--mu", type=float, default=None, help="Kitchen service rate"),
    click.option("--cap-lambda", "-L", type=float, default=None, help="Maximal dispatch rate Lambda"),
    click.option("--tstar", type=float, default=None, help="Customer patience time T*"),
]


def _add_options(options):
    def deco(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn

    return deco


@click.group()
@click.option("--server", default=None, help="Base URL of a running service (default: in-process)")
@click.pass_context
def main(ctx, server):
    """Queueing analytics and dispatch optimization for the two-queue delivery model."""
    ctx.obj = server


@main.command()
@click.option("--config", type=click.Path(exists=True), default=None)
@_add_options(policy_options)
@_add_options(params_options)
@click.pass_obj
@_handle_errors
def analyze(server, config, rates, tail, buffer_len, threshold, mu, cap_lambda, tstar):
    """Mean waiting times of a dispatch policy."""
    cfg = _load_config(config)
    payload = {
        "policy": _policy_payload(cfg, rates, tail, buffer_len, threshold),
        "params": _params_payload(cfg, mu, cap_lambda, tstar),
    }
    with ServiceClient(server) as client:
        res = client.analyze(payload)
    click.echo(f"order wait E[T_o] = {res['order_wait']:.12g}  (method: {res['method']})")
    click.echo(f"rider wait E[T_r] = {res['rider_wait']:.12g}")
    click.echo(f"order wait floor 1/(mu-1) = {res['order_wait_lower_bound']:.12g}")


@main.command()
@click.option("--config", type=click.Path(exists=True), default=None)
@_add_options(params_options)
@click.pass_obj
@_handle_errors
def optimize(server, config, mu, cap_lambda, tstar):
    """Optimal (lambda_0, d) under the patience constraint."""
    cfg = _load_config(config)
    payload = {"params": _params_payload(cfg, mu, cap_lambda, tstar)}
    with ServiceClient(server) as client:
        res = client.optimize(payload)
    click.echo(f"lambda_0 = {res['lambda0']:.12g}")
    click.echo(f"d        = {res['buffer_len']}")
    click.echo(f"rider wait E[T_r] = {res['rider_wait']:.12g}")
    click.echo(f"order wait E[T_o] = {res['order_wait']:.12g}")
    click.echo(f"constraint slack  = {res['constraint_slack']:.12g}")


@main.command()
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--new-threshold", "-m", type=int, required=True, help="Lowered disclosure threshold m")
@_add_options(policy_options)
@_add_options(params_options)
@click.pass_obj
@_handle_errors
def improve(server, config, new_threshold, rates, tail, buffer_len, threshold, mu, cap_lambda, tstar):
    """Rebuild dispatch rates after the restaurant lowers its threshold."""
    cfg = _load_config(config)
    payload = {
        "policy": _policy_payload(cfg, rates, tail, buffer_len, threshold),
        "params": _params_payload(cfg, mu, cap_lambda, tstar),
        "new_threshold": new_threshold,
    }
    with ServiceClient(server) as client:
        res = client.improve(payload)
    pol = res["new_policy"]
    rates_txt = ", ".join(f"{r:.12g}" for r in pol["rate_prefix"])
    click.echo(f"new rates  = ({rates_txt}), tail {pol['tail_rate']:.12g}")
    click.echo(f"new buffer = {pol['buffer_len']}, threshold = {pol['threshold']}")
    click.echo(f"C constant = {res['intermediate_c']:.12g}")
    click.echo(f"order wait E[T_o]: {res['order_wait_before']:.12g} -> {res['order_wait_after']:.12g}")
    click.echo(f"rider wait E[T_r]: {res['rider_wait_before']:.12g} -> {res['rider_wait_after']:.12g}")


@main.command()
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--events", type=int, default=None, help="Number of simulated events")
@click.option("--warmup", type=int, default=None, help="Events discarded before measurement")
@click.option("--seed", type=int, default=None, help="RNG seed")
@_add_options(policy_options)
@_add_options(params_options)
@click.pass_obj
@_handle_errors
def simulate(server, config, events, warmup, seed, rates, tail, buffer_len, threshold, mu, cap_lambda, tstar):
    """Discrete-event simulation with the analytic reference and z-scores."""
    cfg = _load_config(config)
    payload = {
        "policy": _policy_payload(cfg, rates, tail, buffer_len, threshold),
        "params": _params_payload(cfg, mu, cap_lambda, tstar),
    }
    for key, val in (("max_events", events), ("warmup_events", warmup), ("seed", seed)):
        if val is not None:
            payload[key] = val
        elif key in cfg:
            payload[key] = cfg[key]
    with ServiceClient(server) as client:
        res = client.simulate(payload)
    ref = res["reference"]
    click.echo(
        f"order wait = {res['order_wait_mean']:.6f} +/- {res['order_wait_stderr']:.6f}"
        f"  (ref {ref['order_wait']:.6f}, z = {ref['z_order']:+.2f})"
    )
    click.echo(
        f"rider wait = {res['rider_wait_mean']:.6f} +/- {res['rider_wait_stderr']:.6f}"
        f"  (ref {ref['rider_wait']:.6f}, z = {ref['z_rider']:+.2f})"
    )
    click.echo(f"orders completed = {res['orders_completed']}, riders dispatched = {res['riders_dispatched']}")
    click.echo(f"realized rider rate = {res['realized_rider_rate']:.6f}  (seed {res['seed']})")


@main.command()
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--tstar", "tstars", type=float, multiple=True, help="Patience time(s); repeatable")
@click.option("--mu", type=float, default=None)
@click.option("--cap-lambda", "-L", type=float, default=None)
@click.option("--out", type=click.Path(), default=None, help="Output file (default: stdout)")
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]), default="csv")
@click.pass_obj
@_handle_errors
def fig3(server, config, tstars, mu, cap_lambda, out, fmt):
    """Rider-wait curves over the rate grid with minimal feasible buffers."""
    cfg = _load_config(config)
    payload = dict(cfg)
    if tstars:
        payload["t_stars"] = list(tstars)
    if mu is not None:
        payload["mu"] = mu
    if cap_lambda is not None:
        payload["cap_lambda"] = cap_lambda
    payload.setdefault("t_stars", [0.01, 0.05, 0.1])
    with ServiceClient(server) as client:
        res = client.fig3(payload)
    _emit(_render(res["rows"], FIG3_COLUMNS, fmt), out)


@main.command()
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--threshold", "-M", "thresholds", multiple=True, help='Threshold(s), integer or "inf"; repeatable')
@click.option("--mu", type=float, default=None)
@click.option("--cap-lambda", "-L", type=float, default=None)
@click.option("--out", type=click.Path(), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]), default="csv")
@click.pass_obj
@_handle_errors
def fig4(server, config, thresholds, mu, cap_lambda, out, fmt):
    """Order-wait curves at d = 0 across disclosure thresholds."""
    cfg = _load_config(config)
    payload = dict(cfg)
    if thresholds:
        payload["thresholds"] = [_parse_threshold(t) for t in thresholds]
    if mu is not None:
        payload["mu"] = mu
    if cap_lambda is not None:
        payload["cap_lambda"] = cap_lambda
    payload.setdefault("thresholds", [0, 10, "inf"])
    with ServiceClient(server) as client:
        res = client.fig4(payload)
    _emit(_render(res["rows"], FIG4_COLUMNS, fmt), out)


@main.command()
@click.option("--config", type=click.Path(exists=True), required=True, help="JSON sweep definition")
@click.option("--out", type=click.Path(), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]), default="csv")
@click.pass_obj
@_handle_errors
def sweep(server, config, out, fmt):
    """Waiting times over an explicit (lambda_0, d) grid."""
    payload = _load_config(config)
    with ServiceClient(server) as client:
        res = client.sweep(payload)
    _emit(_render(res["rows"], SWEEP_COLUMNS, fmt), out)


if __name__ == "__main__":
    main()
