"""FastAPI service wrapping the analytics core.

Run with: uvicorn dispatchq.app:app
Error payloads carry a machine-readable code the CLI maps to exit codes:
invalid-input, infeasible, assertion.
"""
from __future__ import annotations

import logging
import math
import os

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import experiments
from .core import INFINITE, InfeasibleError, InvalidInputError, TheoremViolationError, validate
from .optimizer import improve_policy, optimize_dispatch
from .schemas import (
    AnalyzeRequest,
    AnalyzeResponse,
    Fig3Request,
    Fig4Request,
    ImproveRequest,
    ImproveResponse,
    OptimizeRequest,
    OptimizeResponse,
    ReferenceModel,
    SimulateRequest,
    SimulateResponse,
    SweepRequest,
    TableResponse,
    from_policy,
    to_params,
    to_policy,
)
from .simulator import SimulationConfig, simulate
from .stationary import DispatchPolicy, order_wait_lower_bound, waiting_times

logger = logging.getLogger("dispatchq")
logging.basicConfig(level=os.environ.get("DISPATCHQ_LOG", "WARNING").upper())

app = FastAPI(title="dispatchq", description="Two-queue meal-delivery dispatch analytics")


def _error_response(status: int, code: str, exc: Exception) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": {"code": code, "detail": str(exc)}})


@app.exception_handler(InvalidInputError)
async def _invalid_input(request: Request, exc: InvalidInputError):
    return _error_response(422, "invalid-input", exc)


@app.exception_handler(InfeasibleError)
async def _infeasible(request: Request, exc: InfeasibleError):
    return _error_response(409, "infeasible", exc)


@app.exception_handler(TheoremViolationError)
async def _assertion(request: Request, exc: TheoremViolationError):
    logger.error("theorem check failed: %s", exc)
    return _error_response(500, "assertion", exc)


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/analyze", response_model=AnalyzeResponse)
def analyze(req: AnalyzeRequest):
    policy = to_policy(req.policy)
    params = to_params(req.params)
    report = validate(policy, params)
    if not report.ok:
        raise InvalidInputError("; ".join(report.violations))
    wt = waiting_times(policy, params)
    return AnalyzeResponse(
        order_wait=wt.order_wait,
        rider_wait=wt.rider_wait,
        method=wt.method.value,
        order_wait_lower_bound=order_wait_lower_bound(params),
    )


@app.post("/optimize", response_model=OptimizeResponse)
def optimize(req: OptimizeRequest):
    params = to_params(req.params)
    result = optimize_dispatch(params)
    policy = DispatchPolicy(
        rate_prefix=(result.lambda0,),
        tail_rate=result.lambda0,
        buffer_len=result.buffer_len,
        threshold=INFINITE,
    )
    wt = waiting_times(policy, params)
    return OptimizeResponse(
        lambda0=result.lambda0,
        buffer_len=result.buffer_len,
        constraint_slack=result.constraint_slack,
        rider_wait=result.rider_wait,
        order_wait=wt.order_wait,
    )


@app.post("/improve", response_model=ImproveResponse)
def improve(req: ImproveRequest):
    result = improve_policy(to_policy(req.policy), req.new_threshold, to_params(req.params))
    return ImproveResponse(
        new_policy=from_policy(result.new_policy),
        order_wait_before=result.order_wait_before,
        order_wait_after=result.order_wait_after,
        rider_wait_before=result.rider_wait_before,
        rider_wait_after=result.rider_wait_after,
        intermediate_c=result.intermediate_c,
    )


@app.post("/simulate", response_model=SimulateResponse)
def run_simulation(req: SimulateRequest):
    policy = to_policy(req.policy)
    params = to_params(req.params)
    cfg = SimulationConfig(
        policy=policy,
        params=params,
        max_events=req.max_events,
        warmup_events=req.warmup_events,
        seed=req.seed,
    )
    result = simulate(cfg)
    ref = waiting_times(policy, params)

    def z(est, se, target):
        if se > 0:
            return (est - target) / se
        return 0.0 if est == target else math.inf

    return SimulateResponse(
        order_wait_mean=result.order_wait_mean,
        order_wait_stderr=result.order_wait_stderr,
        rider_wait_mean=result.rider_wait_mean,
        rider_wait_stderr=result.rider_wait_stderr,
        orders_completed=result.orders_completed,
        riders_dispatched=result.riders_dispatched,
        realized_rider_rate=result.realized_rider_rate,
        seed=result.seed,
        reference=ReferenceModel(
            order_wait=ref.order_wait,
            rider_wait=ref.rider_wait,
            method=ref.method.value,
            z_order=z(result.order_wait_mean, result.order_wait_stderr, ref.order_wait),
            z_rider=z(result.rider_wait_mean, result.rider_wait_stderr, ref.rider_wait),
        ),
    )


def _table(rows, columns) -> TableResponse:
    out = []
    for row in rows:
        out.append({c: ("inf" if row[c] is INFINITE else row[c]) for c in columns})
    return TableResponse(columns=list(columns), rows=out)


@app.post("/experiments/fig3", response_model=TableResponse)
def fig3(req: Fig3Request):
    rows = experiments.fig3_rows(req.mu, req.cap_lambda, req.t_stars, req.lambda0_grid)
    return _table(rows, experiments.FIG3_COLUMNS)


@app.post("/experiments/fig4", response_model=TableResponse)
def fig4(req: Fig4Request):
    thresholds = [INFINITE if t == "inf" else int(t) for t in req.thresholds]
    rows = experiments.fig4_rows(req.mu, req.cap_lambda, thresholds, req.lambda0_grid)
    return _table(rows, experiments.FIG4_COLUMNS)


@app.post("/experiments/sweep", response_model=TableResponse)
def sweep(req: SweepRequest):
    rows = experiments.sweep_rows(req.mu, req.cap_lambda, req.lambda0_grid, req.buffer_lens)
    return _table(rows, experiments.SWEEP_COLUMNS)
