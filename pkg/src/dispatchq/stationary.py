"""Exact stationary analysis of the order/rider chain.

The joint chain over (Q1, Q2) factorizes: Q1 is geometric with ratio 1/mu and
Q2 follows a birth-death chain on {-d, ..., -1} union N whose death rate at
level q is the signal-indexed dispatch rate.  All normalizations and tail
series have closed forms because the rate vector is a finite prefix plus a
constant tail.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

from .core import (
    DispatchPolicy,
    InfeasibleError,
    InvalidInputError,
    SystemParams,
    check_stable,
    require_valid,
)

# Per-state masses below this are not stored explicitly; their total is folded
# into truncation_tail (expectations are unaffected: they use closed forms).
STORE_EPS = 1e-15
_MAX_STORED_STATES = 2_000_000


class Method(str, enum.Enum):
    CLOSED_FORM = "closed-form"
    SERIES = "series"
    ORACLE = "oracle"
    SIMULATED = "simulated"


@dataclass(frozen=True)
class WaitingTimes:
    """Mean order and rider waiting times, with the computation route used."""

    order_wait: float
    rider_wait: float
    method: Method


@dataclass(frozen=True)
class StationaryDistribution:
    """Stationary law of the decoupled prepared-queue chain."""

    buffer_len: int
    threshold: object  # int or INFINITE
    mass: dict[int, float]
    norm_constant: float
    truncation_tail: float


def _geom_sum(x: float, n: int) -> float:
    """sum_{j=0}^{n} x^j for 0 < x < 1 (0 if n < 0)."""
    if n < 0:
        return 0.0
    return (1.0 - x ** (n + 1)) / (1.0 - x)


def _weighted_geom_sum(x: float, n: int) -> float:
    """sum_{j=0}^{n} j * x^j for 0 < x < 1."""
    if n < 1:
        return 0.0
    return x * (1.0 - (n + 1) * x**n + n * x ** (n + 1)) / (1.0 - x) ** 2


@lru_cache(maxsize=4096)
def _tail_series_sum(policy: DispatchPolicy) -> float:
    """sum_{i>=1} prod_{j=1}^{i} 1/lambda_j, summed exactly via the geometric tail."""
    total = 0.0
    prod = 1.0
    for r in policy.rate_prefix[1:]:
        prod /= r
        total += prod
    total += prod / (policy.tail_rate - 1.0)
    return total


@lru_cache(maxsize=4096)
def _normalization(policy: DispatchPolicy) -> float:
    """Normalizer Z of the shifted weights w_q = rho^(q+d) (w at q > M carry the
    rate products).  The stationary mass is nu_q = w_q / Z."""
    rho = policy.rho
    d = policy.buffer_len
    if policy.is_infinite_threshold:
        return 1.0 / (1.0 - rho)
    m_thr = policy.threshold
    z = _geom_sum(rho, m_thr + d)
    z += rho ** (m_thr + d) * _tail_series_sum(policy)
    return z


def _weight(policy: DispatchPolicy, q: int) -> float:
    """Unnormalized shifted mass w_q = rho^d * (nu_q / C_1)."""
    rho = policy.rho
    d = policy.buffer_len
    if q < -d:
        raise InvalidInputError(f"state {q} below buffer floor -{d}")
    if policy.is_infinite_threshold or q <= policy.threshold:
        return rho ** (q + d)
    m_thr = policy.threshold
    i = q - m_thr
    k = len(policy.rate_prefix) - 1
    prod = 1.0
    for j in range(1, min(i, k) + 1):
        prod /= policy.rate_prefix[j]
    if i > k:
        prod *= (1.0 / policy.tail_rate) ** (i - k)
    return rho ** (m_thr + d) * prod


def stationary_mass(policy: DispatchPolicy, q: int) -> float:
    """Stationary probability nu_q of the decoupled chain at level q."""
    check_stable(policy)
    return _weight(policy, q) / _normalization(policy)


def decoupled_stationary(policy: DispatchPolicy) -> StationaryDistribution:
    """Stationary distribution of the prepared-queue chain for a stable policy."""
    check_stable(policy)
    d = policy.buffer_len
    z = _normalization(policy)
    rho = policy.rho
    c1 = rho**d / z

    mass: dict[int, float] = {}
    stored = 0.0
    # Masses decay geometrically only past the rate prefix (prefix rates may be
    # < 1 and push mass up), so never stop inside the prefix region.
    if policy.is_infinite_threshold:
        decay_start = 0
    else:
        decay_start = policy.threshold + len(policy.rate_prefix) - 1
    q = -d
    while len(mass) < _MAX_STORED_STATES:
        nu = _weight(policy, q) / z
        if q > decay_start and nu < STORE_EPS:
            break
        mass[q] = nu
        stored += nu
        q += 1
    return StationaryDistribution(
        buffer_len=d,
        threshold=policy.threshold,
        mass=mass,
        norm_constant=c1,
        truncation_tail=max(0.0, 1.0 - stored),
    )


def joint_stationary_pmf(policy: DispatchPolicy, params: SystemParams, q1: int, q2: int) -> float:
    """Joint stationary probability of (Q1, Q2) = (q1, q2).

    The joint law is the product of a geometric Q1 marginal (ratio 1/mu) and
    the decoupled stationary mass of Q2.
    """
    require_valid(policy, params)
    if q1 < 0:
        raise InvalidInputError(f"q1 must be nonnegative, got {q1}")
    if q2 < -policy.buffer_len:
        raise InvalidInputError(f"q2 must be >= -{policy.buffer_len}, got {q2}")
    mu = params.mu
    return (1.0 - 1.0 / mu) * (1.0 / mu) ** q1 * stationary_mass(policy, q2)


def order_wait_lower_bound(params: SystemParams) -> float:
    """Floor on the mean order wait: the M/M/1 response time 1/(mu - 1)."""
    if params.mu <= 1:
        raise InfeasibleError(f"system unstable: mu <= 1 (mu={params.mu:g})")
    return 1.0 / (params.mu - 1.0)


def _series_expectations(policy: DispatchPolicy) -> tuple[float, float]:
    """(E[max(Q*, 0)], E[-min(Q*, 0)]) via the decoupled chain, with the
    geometric tail series summed in closed form."""
    rho = policy.rho
    d = policy.buffer_len
    z = _normalization(policy)

    e_neg = d * _geom_sum(rho, d - 1) - _weighted_geom_sum(rho, d - 1)

    if policy.is_infinite_threshold:
        e_pos = rho**d * rho / (1.0 - rho) ** 2
    else:
        m_thr = policy.threshold
        k = len(policy.rate_prefix) - 1
        base = rho ** (m_thr + d)
        e_pos = rho**d * _weighted_geom_sum(rho, m_thr)
        prod = 1.0
        for i in range(1, k + 1):
            prod /= policy.rate_prefix[i]
            e_pos += (m_thr + i) * base * prod
        r = 1.0 / policy.tail_rate
        e_pos += base * prod * ((m_thr + k) * r / (1.0 - r) + r / (1.0 - r) ** 2)
    return e_pos / z, e_neg / z


def waiting_times(policy: DispatchPolicy, params: SystemParams, force_series: bool = False) -> WaitingTimes:
    """Mean order and rider waits for a valid policy.

    With no restaurant disclosure (M = infinity) the closed forms
    E[T_o] = 1/(mu-1) + rho^(d+1)/(1-rho) and E[T_r] = d - (rho - rho^(d+1))/(1-rho)
    apply; otherwise the decoupled-chain series is used.
    """
    require_valid(policy, params)
    floor = 1.0 / (params.mu - 1.0)
    rho = policy.rho
    d = policy.buffer_len
    if policy.is_infinite_threshold and not force_series:
        order = floor + rho ** (d + 1) / (1.0 - rho)
        rider = d - (rho - rho ** (d + 1)) / (1.0 - rho)
        return WaitingTimes(order, rider, Method.CLOSED_FORM)
    e_pos, e_neg = _series_expectations(policy)
    return WaitingTimes(floor + e_pos, e_neg, Method.SERIES)
