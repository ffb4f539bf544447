"""Batch experiment tables: rate sweeps with and without restaurant data.

Every generator returns rows in canonical sorted order with float cells kept
as floats; rendering to CSV/JSONL (17 significant digits, "inf" for the
no-disclosure threshold) lives here too so the CLI and the service share one
byte-exact serialization.
"""
from __future__ import annotations

import json
import math

import numpy as np

from .core import DispatchPolicy, INFINITE, InvalidInputError, SystemParams, TheoremViolationError
from .optimizer import improve_policy, smallest_buffer
from .stationary import order_wait_lower_bound, waiting_times

GRID_EPS = 1e-3
DEFAULT_GRID_POINTS = 64

FIG3_COLUMNS = ("tstar", "lambda0", "d", "rider_wait", "order_wait")
FIG4_COLUMNS = ("threshold", "lambda0", "order_wait_total", "order_wait_extra", "rider_wait")
SWEEP_COLUMNS = ("lambda0", "d", "order_wait", "rider_wait")


def default_lambda0_grid(cap_lambda: float, n: int = DEFAULT_GRID_POINTS) -> list[float]:
    """n evenly spaced dispatch rates strictly inside (1, Lambda)."""
    if cap_lambda <= 1 + 2 * GRID_EPS:
        raise InvalidInputError(f"capacity too small for a rate grid (Lambda={cap_lambda:g})")
    return list(np.linspace(1.0 + GRID_EPS, cap_lambda - GRID_EPS, n))


def _check_grid(lambda0_grid, cap_lambda):
    if not lambda0_grid:
        raise InvalidInputError("lambda0 grid is empty")
    for lam in lambda0_grid:
        if not 1.0 < lam < cap_lambda:
            raise InvalidInputError(f"grid rate {lam:g} outside (1, Lambda={cap_lambda:g})")


def _check_row_bounds(order_wait: float, mu: float):
    # Emitting a row that breaks the analytic floor would mean a library bug.
    if order_wait < 1.0 / (mu - 1.0) - 1e-9:
        raise TheoremViolationError(
            f"order wait {order_wait!r} below the M/M/1 floor {1.0 / (mu - 1.0)!r}"
        )


def fig3_rows(
    mu: float,
    cap_lambda: float,
    t_star_list: list[float],
    lambda0_grid: list[float] | None = None,
) -> list[dict]:
    """Rider wait across the rate grid with the smallest feasible buffer per point."""
    if lambda0_grid is None:
        lambda0_grid = default_lambda0_grid(cap_lambda)
    _check_grid(lambda0_grid, cap_lambda)
    if not t_star_list:
        raise InvalidInputError("t_star list is empty")
    rows = []
    for t_star in sorted(t_star_list):
        params = SystemParams(mu=mu, cap_lambda=cap_lambda, t_star=t_star)
        for lam in sorted(lambda0_grid):
            d = smallest_buffer(1.0 / lam, t_star)
            policy = DispatchPolicy(rate_prefix=(lam,), tail_rate=lam, buffer_len=d, threshold=INFINITE)
            wt = waiting_times(policy, params)
            _check_row_bounds(wt.order_wait, mu)
            rows.append(
                {
                    "tstar": t_star,
                    "lambda0": lam,
                    "d": d,
                    "rider_wait": wt.rider_wait,
                    "order_wait": wt.order_wait,
                }
            )
    return rows


def fig4_rows(
    mu: float,
    cap_lambda: float,
    thresholds: list,
    lambda0_grid: list[float] | None = None,
) -> list[dict]:
    """Order wait across the rate grid at d = 0, before and after using
    restaurant data (improvement applied for each finite threshold)."""
    if lambda0_grid is None:
        lambda0_grid = default_lambda0_grid(cap_lambda)
    _check_grid(lambda0_grid, cap_lambda)
    if not thresholds:
        raise InvalidInputError("threshold list is empty")
    params = SystemParams(mu=mu, cap_lambda=cap_lambda, t_star=0.0)
    floor = order_wait_lower_bound(params)

    def sort_key(thr):
        return math.inf if thr is INFINITE else int(thr)

    rows = []
    for thr in sorted(thresholds, key=sort_key):
        for lam in sorted(lambda0_grid):
            base = DispatchPolicy(rate_prefix=(lam,), tail_rate=lam, buffer_len=0, threshold=INFINITE)
            if thr is INFINITE:
                wt = waiting_times(base, params)
            else:
                wt = waiting_times(improve_policy(base, int(thr), params).new_policy, params)
            _check_row_bounds(wt.order_wait, mu)
            rows.append(
                {
                    "threshold": INFINITE if thr is INFINITE else int(thr),
                    "lambda0": lam,
                    "order_wait_total": wt.order_wait,
                    "order_wait_extra": wt.order_wait - floor,
                    "rider_wait": wt.rider_wait,
                }
            )
    return rows


def sweep_rows(
    mu: float,
    cap_lambda: float,
    lambda0_grid: list[float],
    buffer_lens: list[int],
) -> list[dict]:
    """Waiting times over a (lambda_0, d) grid with no restaurant disclosure."""
    _check_grid(lambda0_grid, cap_lambda)
    if not buffer_lens:
        raise InvalidInputError("buffer length list is empty")
    params = SystemParams(mu=mu, cap_lambda=cap_lambda, t_star=0.0)
    rows = []
    for lam in sorted(lambda0_grid):
        for d in sorted(buffer_lens):
            policy = DispatchPolicy(rate_prefix=(lam,), tail_rate=lam, buffer_len=int(d), threshold=INFINITE)
            wt = waiting_times(policy, params)
            _check_row_bounds(wt.order_wait, mu)
            rows.append(
                {"lambda0": lam, "d": int(d), "order_wait": wt.order_wait, "rider_wait": wt.rider_wait}
            )
    return rows


def _cell(value) -> str:
    if value is INFINITE:
        return "inf"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def render_csv(rows: list[dict], columns: tuple[str, ...]) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_cell(row[c]) for c in columns))
    return "\n".join(lines) + "\n"


def render_jsonl(rows: list[dict], columns: tuple[str, ...]) -> str:
    lines = []
    for row in rows:
        out = {c: ("inf" if row[c] is INFINITE else row[c]) for c in columns}
        lines.append(json.dumps(out))
    return "\n".join(lines) + "\n"
