import math
import random
from collections import deque

import pytest

from dispatchq import (
    DispatchPolicy,
    Method,
    SimulationConfig,
    SystemParams,
    simulate,
    waiting_times,
)
from dispatchq.core import InvalidInputError, InvalidPolicyError

PARAMS = SystemParams(mu=1.5, cap_lambda=1.5, t_star=0.1)
REFERENCE_POLICY = DispatchPolicy(rate_prefix=(1.25,), tail_rate=1.25, buffer_len=2)
IMPROVED = DispatchPolicy(rate_prefix=(1.2, 0.6), tail_rate=1.5, buffer_len=0, threshold=0)


def run(policy, events, seed=0, warmup=None):
    return simulate(
        SimulationConfig(policy=policy, params=PARAMS, max_events=events, warmup_events=warmup, seed=seed)
    )


def reference_sim(policy, mu, n_events, rng):
    """Slow deque-based re-implementation used to cross-check the kernel.

    Asserts the structural invariants at every event: orders and riders never
    wait simultaneously, the buffer floor is enforced, and pickups are FIFO.
    """
    d = policy.buffer_len
    prepared = deque()  # completion times of prepared, unfetched orders
    riders = deque()  # arrival times of waiting riders
    q1 = 0
    t = 0.0
    order_waits, rider_waits = [], []
    kitchen = deque()  # placement times, FIFO through prep
    prep_placed = deque()  # placement time of each prepared order, parallel to `prepared`
    for _ in range(n_events):
        assert not (prepared and riders)
        assert len(riders) <= d
        q2 = len(prepared) - len(riders)
        r_r = policy.rate_at_state(q2) if q2 > -d else 0.0
        r_s = mu if q1 > 0 else 0.0
        total = 1.0 + r_s + r_r
        t += rng.expovariate(total)
        x = rng.random() * total
        if x < 1.0:
            kitchen.append(t)
            q1 += 1
        elif x < 1.0 + r_s:
            placed = kitchen.popleft()
            q1 -= 1
            if riders:
                rider_waits.append(t - riders.popleft())
                order_waits.append(t - placed)
            else:
                prepared.append(t)
                prep_placed.append(placed)
        else:
            if prepared:
                prepared.popleft()
                order_waits.append(t - prep_placed.popleft())
                rider_waits.append(0.0)
            else:
                riders.append(t)
    return order_waits, rider_waits


class TestDeterminism:
    def test_identical_runs(self):
        a = run(REFERENCE_POLICY, 200_000, seed=42)
        b = run(REFERENCE_POLICY, 200_000, seed=42)
        assert a == b

    def test_seed_changes_stream(self):
        a = run(REFERENCE_POLICY, 50_000, seed=1)
        b = run(REFERENCE_POLICY, 50_000, seed=2)
        assert a.order_wait_mean != b.order_wait_mean


class TestStatistics:
    def test_agrees_with_analysis(self):
        res = run(REFERENCE_POLICY, 2_000_000, seed=3)
        ref = waiting_times(REFERENCE_POLICY, PARAMS)
        assert abs(res.order_wait_mean - ref.order_wait) <= 4 * res.order_wait_stderr
        assert abs(res.rider_wait_mean - ref.rider_wait) <= 4 * res.rider_wait_stderr
        assert res.order_wait_stderr > 0
        assert res.waiting_times.method is Method.SIMULATED

    def test_finite_threshold_agrees_with_analysis(self):
        res = run(IMPROVED, 2_000_000, seed=5)
        ref = waiting_times(IMPROVED, PARAMS)
        assert abs(res.order_wait_mean - ref.order_wait) <= 4 * res.order_wait_stderr

    def test_no_buffer_means_exactly_zero_rider_wait(self):
        res = run(DispatchPolicy(rate_prefix=(1.3,), tail_rate=1.3, buffer_len=0), 100_000)
        assert res.rider_wait_mean == 0.0
        assert res.rider_wait_stderr == 0.0

    def test_realized_rider_rate_near_unit(self):
        res = run(REFERENCE_POLICY, 1_000_000, seed=9)
        assert res.realized_rider_rate == pytest.approx(1.0, abs=0.02)

    def test_counters_consistent(self):
        res = run(REFERENCE_POLICY, 500_000, seed=4)
        assert 0 < res.orders_completed <= res.riders_dispatched + REFERENCE_POLICY.buffer_len


class TestAgainstReferenceImplementation:
    def test_kernel_matches_slow_reference(self):
        # Independent deque-based implementation (with invariant assertions)
        # and the compiled kernel must estimate the same stationary waits.
        rng = random.Random(123)
        ow, rw = reference_sim(IMPROVED, PARAMS.mu, 400_000, rng)
        cut = len(ow) // 10
        ref = waiting_times(IMPROVED, PARAMS)
        slow_order = sum(ow[cut:]) / (len(ow) - cut)
        slow_rider = sum(rw[cut:]) / (len(rw) - cut)
        assert slow_order == pytest.approx(ref.order_wait, abs=0.25)
        assert slow_rider == 0.0
        fast = run(IMPROVED, 400_000, seed=6)
        assert fast.order_wait_mean == pytest.approx(ref.order_wait, abs=0.25)

    def test_buffered_policy_invariants_hold(self):
        rng = random.Random(321)
        ow, rw = reference_sim(REFERENCE_POLICY, PARAMS.mu, 200_000, rng)
        assert max(rw) > 0.0  # riders do wait when a buffer exists
        assert min(rw) >= 0.0
        assert min(ow) >= 0.0


class TestConfigValidation:
    def test_rejects_invalid_policy(self):
        bad = DispatchPolicy(rate_prefix=(0.9,), tail_rate=0.9, buffer_len=0)
        with pytest.raises(InvalidPolicyError):
            simulate(SimulationConfig(policy=bad, params=PARAMS, max_events=100))

    def test_rejects_nonpositive_events(self):
        with pytest.raises(InvalidInputError):
            simulate(SimulationConfig(policy=REFERENCE_POLICY, params=PARAMS, max_events=0))

    def test_rejects_warmup_at_or_past_end(self):
        with pytest.raises(InvalidInputError):
            simulate(
                SimulationConfig(
                    policy=REFERENCE_POLICY, params=PARAMS, max_events=100, warmup_events=100
                )
            )

    def test_default_warmup_is_tenth(self):
        # Same stream: explicit warmup at 10% reproduces the default exactly.
        a = run(REFERENCE_POLICY, 100_000, seed=8)
        b = run(REFERENCE_POLICY, 100_000, seed=8, warmup=10_000)
        assert a == b
