"""Event-driven simulation of the order/rider process.

Competing exponential clocks: order arrivals at rate 1, service at rate mu
while the kitchen is busy, rider arrivals at the signal-indexed rate while the
buffer has room.  Memorylessness makes resampling the clocks after every event
distribution-preserving, so no thinning is needed.  The RNG is an embedded
xoshiro256++ seeded through splitmix64, giving identical streams on every
platform for a given seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import DispatchPolicy, InvalidInputError, SystemParams, require_valid
from .stationary import Method, WaitingTimes

_RING_BITS = 21
_RING = 1 << _RING_BITS
_MASK = _RING - 1
_BATCHES = 100


@dataclass(frozen=True)
class SimulationConfig:
    policy: DispatchPolicy
    params: SystemParams
    max_events: int
    warmup_events: int | None = None  # None -> 10% of max_events
    seed: int = 0


@dataclass(frozen=True)
class SimulationResult:
    order_wait_mean: float
    order_wait_stderr: float
    rider_wait_mean: float
    rider_wait_stderr: float
    orders_completed: int
    riders_dispatched: int
    realized_rider_rate: float
    seed: int

    @property
    def waiting_times(self) -> WaitingTimes:
        return WaitingTimes(self.order_wait_mean, self.rider_wait_mean, Method.SIMULATED)


@njit(cache=True)
def _splitmix64(state):
    state = state + np.uint64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return state, z


@njit(cache=True, inline="always")
def _xoshiro_next(s0, s1, s2, s3):
    out = ((s0 + s3) << np.uint64(23) | (s0 + s3) >> np.uint64(41)) + s0
    tmp = s1 << np.uint64(17)
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= tmp
    s3 = s3 << np.uint64(45) | s3 >> np.uint64(19)
    return out, s0, s1, s2, s3


@njit(cache=True)
def _sim_kernel(mu, rates, tail_rate, d, m_finite, m_thr, max_events, warmup_events, seed):
    st = np.uint64(seed)
    st, s0 = _splitmix64(st)
    st, s1 = _splitmix64(st)
    st, s2 = _splitmix64(st)
    st, s3 = _splitmix64(st)

    place_t = np.empty(_RING)
    rider_t = np.empty(_RING)
    order_waits = np.empty(max_events)
    rider_waits = np.empty(max_events)
    n_recorded = 0

    q1 = 0
    q2 = 0
    n_placed = 0
    n_riders = 0
    n_matched = 0
    t = 0.0
    n_rates = rates.shape[0]

    for ev in range(max_events):
        r_s = mu if q1 > 0 else 0.0
        if q2 > -d:
            sig = q2 - m_thr if (m_finite and q2 > m_thr) else 0
            r_r = rates[sig] if sig < n_rates else tail_rate
        else:
            r_r = 0.0
        total = 1.0 + r_s + r_r

        # two draws per event: holding time, then event choice
        out, s0, s1, s2, s3 = _xoshiro_next(s0, s1, s2, s3)
        u1 = (float(out >> np.uint64(11)) + 1.0) * (1.0 / 9007199254740992.0)
        out, s0, s1, s2, s3 = _xoshiro_next(s0, s1, s2, s3)
        u2 = float(out >> np.uint64(11)) * (1.0 / 9007199254740992.0)

        t += -math.log(u1) / total
        x = u2 * total

        if x < 1.0:
            # order placed
            if n_placed - n_matched >= _RING:
                raise RuntimeError("order backlog exceeded ring capacity")
            place_t[n_placed & _MASK] = t
            n_placed += 1
            q1 += 1
        elif x < 1.0 + r_s:
            # order prepared; matches instantly iff a rider is waiting
            q1 -= 1
            q2 += 1
            if q2 <= 0:
                if ev >= warmup_events:
                    order_waits[n_recorded] = t - place_t[n_matched & _MASK]
                    rider_waits[n_recorded] = t - rider_t[n_matched & _MASK]
                    n_recorded += 1
                n_matched += 1
        else:
            # rider arrives; matches instantly iff a prepared order is waiting
            rider_t[n_riders & _MASK] = t
            n_riders += 1
            q2 -= 1
            if q2 >= 0:
                if ev >= warmup_events:
                    order_waits[n_recorded] = t - place_t[n_matched & _MASK]
                    rider_waits[n_recorded] = t - rider_t[n_matched & _MASK]
                    n_recorded += 1
                n_matched += 1

    return order_waits[:n_recorded], rider_waits[:n_recorded], t, n_placed, n_riders, n_matched


def _batch_stats(x: np.ndarray) -> tuple[float, float]:
    """Mean and batch-means standard error (autocorrelation-robust)."""
    n = x.size
    if n == 0:
        return math.nan, math.nan
    mean = float(x.mean())
    if n < 2 * _BATCHES:
        se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return mean, se
    size = n // _BATCHES
    bm = x[: size * _BATCHES].reshape(_BATCHES, size).mean(axis=1)
    return mean, float(bm.std(ddof=1) / math.sqrt(_BATCHES))


def simulate(cfg: SimulationConfig) -> SimulationResult:
    """Run one simulation; deterministic given (config, seed)."""
    require_valid(cfg.policy, cfg.params)
    if cfg.max_events <= 0:
        raise InvalidInputError(f"max_events must be positive, got {cfg.max_events}")
    warmup = cfg.warmup_events if cfg.warmup_events is not None else cfg.max_events // 10
    if not 0 <= warmup < cfg.max_events:
        raise InvalidInputError(f"need max_events > warmup_events >= 0, got {cfg.max_events}, {warmup}")
    if cfg.policy.buffer_len >= _RING:
        raise InvalidInputError(f"buffer_len must be below {_RING}")

    policy = cfg.policy
    rates = np.asarray(policy.rate_prefix, dtype=np.float64)
    m_finite = not policy.is_infinite_threshold
    m_thr = int(policy.threshold) if m_finite else 0

    ow, rw, t_end, n_placed, n_riders, n_matched = _sim_kernel(
        float(cfg.params.mu),
        rates,
        float(policy.tail_rate),
        int(policy.buffer_len),
        m_finite,
        m_thr,
        int(cfg.max_events),
        int(warmup),
        np.uint64(cfg.seed),
    )

    order_mean, order_se = _batch_stats(ow)
    rider_mean, rider_se = _batch_stats(rw)
    return SimulationResult(
        order_wait_mean=order_mean,
        order_wait_stderr=order_se,
        rider_wait_mean=rider_mean,
        rider_wait_stderr=rider_se,
        orders_completed=int(n_matched),
        riders_dispatched=int(n_riders),
        realized_rider_rate=float(n_riders / t_end) if t_end > 0 else 0.0,
        seed=cfg.seed,
    )
