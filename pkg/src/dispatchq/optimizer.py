"""Dispatch optimization and policy improvement.

Contains the constrained optimum without restaurant data (choose the smallest
feasible buffer, then the smallest dispatch rate keeping the patience
constraint satisfied), the improvement construction when the restaurant lowers
its disclosure threshold, and the capacity-driven lower bound on rider waits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .core import (
    DispatchPolicy,
    INFINITE,
    InfeasibleError,
    InvalidInputError,
    SystemParams,
    TheoremViolationError,
    require_valid,
)
from .stationary import WaitingTimes, _tail_series_sum, waiting_times

_BISECT_TOL = 1e-12
_BISECT_MAX_ITER = 200


@dataclass(frozen=True)
class OptimalDispatch:
    """Optimal (lambda_0, d) under the patience constraint, with diagnostics."""

    lambda0: float
    buffer_len: int
    constraint_slack: float
    rider_wait: float


@dataclass(frozen=True)
class ImprovementResult:
    """Outcome of rebuilding the dispatch rates for a lower disclosure threshold."""

    new_policy: DispatchPolicy
    order_wait_before: float
    order_wait_after: float
    rider_wait_before: float
    rider_wait_after: float
    intermediate_c: float


def _extra_delay(rho: float, d: int) -> float:
    """Delivery-induced extra order delay rho^(d+1)/(1-rho) at no disclosure."""
    return rho ** (d + 1) / (1.0 - rho)


def smallest_buffer(rho: float, t_star: float) -> int:
    """Smallest nonnegative integer D with rho^(D+1)/(1-rho) <= t_star."""
    if not 0.0 < rho < 1.0:
        raise InvalidInputError(f"rho must lie in (0, 1), got {rho}")
    if t_star <= 0:
        raise InfeasibleError(f"patience time must be positive, got {t_star}")
    if _extra_delay(rho, 0) <= t_star:
        return 0
    # Candidate from the log form, then correct for floating boundary effects.
    cand = max(0, math.ceil(math.log(t_star * (1.0 - rho)) / math.log(rho) - 1.0))
    while _extra_delay(rho, cand) > t_star:
        cand += 1
    while cand > 0 and _extra_delay(rho, cand - 1) <= t_star:
        cand -= 1
    return cand


def max_utilization(n: int, t_star: float) -> float:
    """Largest rho in (0, 1) with rho^(n+1)/(1-rho) <= t_star.

    The map rho -> rho^(n+1)/(1-rho) is continuous and strictly increasing on
    (0, 1), vanishing at 0 and diverging at 1, so the root is unique; found by
    bisection to absolute tolerance 1e-12.
    """
    if n < 0:
        raise InvalidInputError(f"n must be nonnegative, got {n}")
    if t_star <= 0:
        raise InfeasibleError(f"patience time must be positive, got {t_star}")
    lo, hi = 0.0, 1.0
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if _extra_delay(mid, n) <= t_star:
            lo = mid
        else:
            hi = mid
        if hi - lo <= _BISECT_TOL:
            break
    return lo


def optimize_dispatch(params: SystemParams) -> OptimalDispatch:
    """Minimize the mean rider wait subject to the patience constraint (M = infinity).

    If d = 0 with full-capacity dispatch already meets the constraint
    (1/(Lambda-1) <= T*), riders never wait and that pair is optimal.
    Otherwise the smallest feasible buffer is D(1/Lambda) and the best rate is
    the reciprocal of the largest utilization keeping the constraint tight.
    """
    if params.mu <= 1 or params.cap_lambda <= 1:
        raise InvalidInputError(
            f"mu and Lambda must exceed 1 (mu={params.mu:g}, Lambda={params.cap_lambda:g})"
        )
    if params.t_star <= 0:
        raise InfeasibleError(f"patience time must be positive, got {params.t_star}")
    cap = params.cap_lambda
    rho_hat = 1.0 / cap
    if 1.0 / (cap - 1.0) <= params.t_star:
        d = 0
        lambda0 = cap
        rho = rho_hat
    else:
        d = smallest_buffer(rho_hat, params.t_star)
        rho = max_utilization(d, params.t_star)
        lambda0 = 1.0 / rho
    rider = d - (rho - rho ** (d + 1)) / (1.0 - rho)
    slack = params.t_star - _extra_delay(rho, d)
    return OptimalDispatch(lambda0=lambda0, buffer_len=d, constraint_slack=slack, rider_wait=rider)


def improve_policy(policy: DispatchPolicy, m: int, params: SystemParams) -> ImprovementResult:
    """Rebuild the dispatch rates for a lower disclosure threshold m.

    The new rates keep lambda_0, set tau_1 = 1/((1 - 1/Lambda) * C) with C the
    coupling constant of the original chain above the threshold, and run at
    full capacity beyond that.  Rider waits are preserved exactly and order
    waits can only drop; both relations are asserted at runtime.
    """
    require_valid(policy, params)
    if m < 0 or int(m) != m:
        raise InvalidInputError(f"new threshold must be a nonnegative integer, got {m}")
    if not policy.is_infinite_threshold:
        if policy.threshold <= 0:
            raise InvalidInputError("original threshold must be positive to improve")
        if m >= policy.threshold:
            raise InvalidInputError(
                f"new threshold must be below the original ({m} >= {policy.threshold})"
            )

    rho = policy.rho
    cap = params.cap_lambda
    if policy.is_infinite_threshold:
        c = rho / (1.0 - rho)
    else:
        gap = policy.threshold - m
        c = (rho - rho ** (gap + 1)) / (1.0 - rho) + rho**gap * _tail_series_sum(policy)

    tau1 = 1.0 / ((1.0 - 1.0 / cap) * c)
    if tau1 > cap + 1e-12:
        raise TheoremViolationError(
            f"improved rate tau_1 = {tau1!r} exceeds capacity {cap!r}"
        )
    tau1 = min(tau1, cap)
    new_policy = DispatchPolicy(
        rate_prefix=(policy.lambda0, tau1),
        tail_rate=cap,
        buffer_len=policy.buffer_len,
        threshold=int(m),
    )

    before = waiting_times(policy, params)
    after = waiting_times(new_policy, params)
    if abs(after.rider_wait - before.rider_wait) > 1e-9:
        raise TheoremViolationError(
            f"rider wait not preserved: {before.rider_wait!r} -> {after.rider_wait!r}"
        )
    if after.order_wait > before.order_wait + 1e-9:
        raise TheoremViolationError(
            f"order wait increased: {before.order_wait!r} -> {after.order_wait!r}"
        )
    return ImprovementResult(
        new_policy=new_policy,
        order_wait_before=before.order_wait,
        order_wait_after=after.order_wait,
        rider_wait_before=before.rider_wait,
        rider_wait_after=after.rider_wait,
        intermediate_c=c,
    )


def rider_wait_lower_bound(params: SystemParams) -> float | None:
    """Capacity-driven floor on the mean rider wait, ln(4/3)/(4(1-1/Lambda)) - T*.

    Applies when 1/Lambda >= 0.3 and (1/Lambda)^4/(1 - 1/Lambda) >= T*;
    returns None (not applicable) when those preconditions fail.
    """
    rho_hat = 1.0 / params.cap_lambda
    if rho_hat < 0.3:
        return None
    if rho_hat**4 / (1.0 - rho_hat) < params.t_star:
        return None
    return max(0.0, math.log(4.0 / 3.0) / (4.0 * (1.0 - rho_hat)) - params.t_star)
