"""Brute-force verification backend: numerical solve of the truncated joint chain.

Builds the generator of the (Q1, Q2) chain on a finite grid (transitions that
would leave the grid are suppressed, keeping the generator conservative) and
solves the stationary balance equations directly.  Independent of every closed
form in the stationary module, so agreement between the two is a real check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import DispatchPolicy, DispatchQError, SystemParams, require_valid
from .stationary import Method, WaitingTimes

_RESIDUAL_TOL = 1e-10
_AXIS_CAP = 4096


class TruncationError(DispatchQError):
    """Boundary mass stayed above tolerance at the maximum grid size."""


@dataclass(frozen=True)
class TruncatedChainSolution:
    """Stationary vector of the truncated joint chain.

    pi is indexed [q1, q2 + d] over {0..q1_max} x {-d..q2_max}; residual is the
    probability mass on the truncation boundary before renormalization.
    """

    policy: DispatchPolicy
    params: SystemParams
    q1_max: int
    q2_max: int
    pi: np.ndarray
    residual: float


def _rider_rates(policy: DispatchPolicy, q2_max: int) -> np.ndarray:
    """Dispatch rate in effect at each q2 in [-d, q2_max]."""
    d = policy.buffer_len
    return np.array([policy.rate_at_state(q2) for q2 in range(-d, q2_max + 1)])


def _solve_once(policy: DispatchPolicy, params: SystemParams, q1_max: int, q2_max: int):
    d = policy.buffer_len
    n1 = q1_max + 1
    n2 = q2_max + d + 1
    n = n1 * n2
    mu = params.mu
    rates = _rider_rates(policy, q2_max)

    # State index: s = i2 * n1 + q1 with i2 = q2 + d (keeps the band narrow).
    q1_grid, i2_grid = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
    q1f = q1_grid.ravel()
    i2f = i2_grid.ravel()
    s = i2f * n1 + q1f

    rows, cols, vals = [], [], []

    def add(mask, dest, rate):
        rows.append(s[mask])
        cols.append(dest)
        vals.append(rate if np.ndim(rate) else np.full(mask.sum(), rate))

    # Order arrival: (q1, q2) -> (q1+1, q2) at rate 1.
    mask = q1f < q1_max
    add(mask, i2f[mask] * n1 + (q1f[mask] + 1), 1.0)
    # Service completion: (q1, q2) -> (q1-1, q2+1) at rate mu.
    mask = (q1f > 0) & (i2f < n2 - 1)
    add(mask, (i2f[mask] + 1) * n1 + (q1f[mask] - 1), mu)
    # Rider arrival: (q1, q2) -> (q1, q2-1) at the signal-indexed rate.
    mask = i2f > 0
    add(mask, (i2f[mask] - 1) * n1 + q1f[mask], rates[i2f[mask]])

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    gen = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    out_rates = np.asarray(gen.sum(axis=1)).ravel()
    gen = gen - sp.diags(out_rates)

    # pi Q = 0, grounded at state 0: fix pi_0 = 1, solve the remaining balance
    # equations (keeps the system banded; a dense normalization row would
    # destroy the sparse LU), then renormalize.
    a = gen.transpose().tocsr()
    b = -a[1:, 0].toarray().ravel()
    x_rest = spla.spsolve(a[1:, 1:].tocsc(), b)
    x = np.concatenate(([1.0], x_rest))
    x = np.clip(x, 0.0, None)
    x /= x.sum()

    pi = x.reshape((n2, n1)).T  # -> [q1, i2]
    residual = float(pi[q1_max, :].sum() + pi[:, n2 - 1].sum())
    pi = pi / pi.sum()
    return pi, residual


def _initial_grid(policy: DispatchPolicy, params: SystemParams) -> tuple[int, int]:
    """Grid sizes from the marginal decay ratios, targeting tail mass ~1e-13.

    Starting close to the needed size avoids both an oversized first solve and
    a wasted undersized one; the doubling loop still guards the estimate.
    """
    budget = math.log(1e13)
    q1_est = budget / math.log(params.mu)
    # Past the rate prefix the chain decays at least geometrically with the
    # slower of the base and tail ratios.
    r = max(policy.rho, 1.0 / policy.tail_rate)
    q2_est = budget / -math.log(r) + len(policy.rate_prefix)
    if not policy.is_infinite_threshold:
        q2_est += policy.threshold
    clamp = lambda v: max(32, min(_AXIS_CAP, int(v) + 8))
    return clamp(q1_est), clamp(q2_est)


def solve_truncated(
    policy: DispatchPolicy,
    params: SystemParams,
    q1_max: int | None = None,
    q2_max: int | None = None,
) -> TruncatedChainSolution:
    """Solve the truncated chain, doubling the grid until boundary mass < 1e-10."""
    require_valid(policy, params)
    est1, est2 = _initial_grid(policy, params)
    q1_max = est1 if q1_max is None else int(q1_max)
    q2_max = est2 if q2_max is None else int(q2_max)
    while True:
        pi, residual = _solve_once(policy, params, q1_max, q2_max)
        if residual < _RESIDUAL_TOL:
            return TruncatedChainSolution(
                policy=policy,
                params=params,
                q1_max=q1_max,
                q2_max=q2_max,
                pi=pi,
                residual=residual,
            )
        if q1_max >= _AXIS_CAP and q2_max >= _AXIS_CAP:
            raise TruncationError(
                f"boundary mass {residual:.3e} >= {_RESIDUAL_TOL:g} at grid cap {_AXIS_CAP}"
            )
        q1_max = min(2 * q1_max, _AXIS_CAP)
        q2_max = min(2 * q2_max, _AXIS_CAP)


def oracle_waiting_times(sol: TruncatedChainSolution) -> WaitingTimes:
    """Mean waits from the solved chain via Little's law, independent of closed forms.

    E[T_o] divides the mean unfetched-order count by the unit order arrival
    rate; E[T_r] divides the mean waiting-rider count by the realized rider
    throughput.
    """
    d = sol.policy.buffer_len
    q2_vals = np.arange(-d, sol.q2_max + 1)
    marg_q2 = sol.pi.sum(axis=0)
    q1_vals = np.arange(sol.q1_max + 1)
    marg_q1 = sol.pi.sum(axis=1)

    n_orders = float(marg_q1 @ q1_vals + marg_q2 @ np.maximum(q2_vals, 0))
    n_riders = float(marg_q2 @ np.maximum(-q2_vals, 0))

    rates = _rider_rates(sol.policy, sol.q2_max)
    active = q2_vals > -d
    realized_rate = float(marg_q2[active] @ rates[active])
    return WaitingTimes(order_wait=n_orders, rider_wait=n_riders / realized_rate, method=Method.ORACLE)
