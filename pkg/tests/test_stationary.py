import math
import random

import pytest
from hypothesis import given, strategies as st

from dispatchq import (
    INFINITE,
    DispatchPolicy,
    InfeasibleError,
    Method,
    SystemParams,
    decoupled_stationary,
    joint_stationary_pmf,
    order_wait_lower_bound,
    stationary_mass,
    waiting_times,
)
from dispatchq.core import InvalidInputError, InvalidPolicyError

from conftest import dispatch_rate, random_valid_policy

PARAMS = SystemParams(mu=1.5, cap_lambda=1.5, t_star=0.1)


def flat(lambda0, d=0):
    return DispatchPolicy(rate_prefix=(lambda0,), tail_rate=lambda0, buffer_len=d)

# Improved two-rate policy from the threshold-lowering construction at
# lambda_0 = 1.2: rates (1.2, 0.6), tail 1.5, d = 0, full disclosure.
IMPROVED = DispatchPolicy(rate_prefix=(1.2, 0.6), tail_rate=1.5, buffer_len=0, threshold=0)

policy_strategy = st.builds(
    random_valid_policy,
    st.integers(min_value=0, max_value=2**31).map(random.Random),
)


class TestGeometricCase:
    """No disclosure: the decoupled chain is a plain geometric on {-d, ...}."""

    def test_floor_mass(self):
        # nu_{-d} = 1 - rho
        assert stationary_mass(flat(1.25, d=2), -2) == pytest.approx(0.2, abs=1e-15)

    def test_geometric_ratio(self):
        p = flat(1.25, d=2)
        for q in range(-2, 10):
            assert stationary_mass(p, q + 1) / stationary_mass(p, q) == pytest.approx(0.8, rel=1e-12)

    def test_mass_at_zero(self):
        assert stationary_mass(flat(1.25, d=2), 0) == pytest.approx(0.2 * 0.8**2, rel=1e-12)

    def test_below_floor_rejected(self):
        with pytest.raises(InvalidInputError):
            stationary_mass(flat(1.25, d=2), -3)

    def test_unstable_policy_rejected(self):
        with pytest.raises(InvalidPolicyError):
            stationary_mass(flat(0.9), 0)


class TestFiniteThreshold:
    def test_improved_policy_base_mass(self):
        # Normalizer is 1 + 1 * C with C = 5, hence nu_0 = 1/6.
        assert stationary_mass(IMPROVED, 0) == pytest.approx(1.0 / 6.0, rel=1e-12)

    def test_improved_policy_above_threshold(self):
        # nu_1 = nu_0 / tau_1, then geometric with ratio 1/tail beyond the prefix.
        nu0 = stationary_mass(IMPROVED, 0)
        assert stationary_mass(IMPROVED, 1) == pytest.approx(nu0 / 0.6, rel=1e-12)
        for q in range(1, 8):
            ratio = stationary_mass(IMPROVED, q + 1) / stationary_mass(IMPROVED, q)
            assert ratio == pytest.approx(1.0 / 1.5, rel=1e-12)

    def test_norm_constant_matches_direct_normalization(self):
        # C_1 from the closed form vs brute-force normalization of the weights.
        p = DispatchPolicy(rate_prefix=(1.25, 1.5), tail_rate=1.5, buffer_len=1, threshold=0)
        dist = decoupled_stationary(p)
        rho = p.rho
        total = rho**-1 + 1.0  # q = -1, 0 (at or below the threshold)
        prod = 1.0
        for i in range(1, 400):  # q = i > 0 carries the rate product
            prod /= p.rate(i)
            total += prod
        assert dist.norm_constant == pytest.approx(1.0 / total, rel=1e-10)

    @given(policy_strategy)
    def test_birth_death_detailed_balance(self, policy):
        # nu_q * 1 = nu_{q+1} * rate(q+1) for every adjacent pair.
        for q in range(-policy.buffer_len, 12):
            lhs = stationary_mass(policy, q)
            rhs = stationary_mass(policy, q + 1) * dispatch_rate(policy, q + 1)
            assert rhs == pytest.approx(lhs, rel=1e-10)


class TestDistributionObject:
    @given(policy_strategy)
    def test_mass_sums_to_one(self, policy):
        dist = decoupled_stationary(policy)
        assert sum(dist.mass.values()) + dist.truncation_tail == pytest.approx(1.0, abs=1e-12)
        assert dist.truncation_tail >= 0.0
        assert all(v >= 0.0 for v in dist.mass.values())

    @given(policy_strategy)
    def test_mass_dict_consistent_with_pointwise(self, policy):
        dist = decoupled_stationary(policy)
        for q, v in list(dist.mass.items())[:50]:
            assert stationary_mass(policy, q) == v

    def test_covers_buffer_states(self):
        dist = decoupled_stationary(flat(1.1, d=5))
        assert set(range(-5, 1)) <= set(dist.mass)


class TestJointPmf:
    def test_factorizes(self):
        p = flat(1.25, d=2)
        for q1, q2 in [(0, -2), (1, 0), (3, 4)]:
            expected = (1 - 1 / 1.5) * (1 / 1.5) ** q1 * stationary_mass(p, q2)
            assert joint_stationary_pmf(p, PARAMS, q1, q2) == pytest.approx(expected, rel=1e-14)

    def test_kitchen_marginal_ratio(self):
        p = flat(1.25, d=1)
        r = joint_stationary_pmf(p, PARAMS, 5, 0) / joint_stationary_pmf(p, PARAMS, 4, 0)
        assert r == pytest.approx(1 / 1.5, rel=1e-12)

    def test_total_mass_one(self):
        p = DispatchPolicy(rate_prefix=(1.25, 0.8), tail_rate=1.5, buffer_len=1, threshold=0)
        total = sum(
            joint_stationary_pmf(p, PARAMS, q1, q2)
            for q1 in range(120)
            for q2 in range(-1, 250)
        )
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_domain_checks(self):
        p = flat(1.25, d=1)
        with pytest.raises(InvalidInputError):
            joint_stationary_pmf(p, PARAMS, -1, 0)
        with pytest.raises(InvalidInputError):
            joint_stationary_pmf(p, PARAMS, 0, -2)

    @given(policy_strategy)
    def test_global_balance_at_random_states(self, policy):
        """Flow balance of the joint chain at states straddling the threshold."""
        d = policy.buffer_len
        thr = 2 if policy.is_infinite_threshold else policy.threshold
        mu = PARAMS.mu
        for q1 in (0, 2):
            for q2 in range(-d, thr + 3):
                out = joint_stationary_pmf(policy, PARAMS, q1, q2) * (
                    1.0 + (mu if q1 > 0 else 0.0) + dispatch_rate(policy, q2)
                )
                inflow = joint_stationary_pmf(policy, PARAMS, q1, q2 + 1) * dispatch_rate(policy, q2 + 1)
                if q1 >= 1:
                    inflow += joint_stationary_pmf(policy, PARAMS, q1 - 1, q2)
                if q2 - 1 >= -d:
                    inflow += joint_stationary_pmf(policy, PARAMS, q1 + 1, q2 - 1) * mu
                assert inflow == pytest.approx(out, rel=1e-10)


class TestOrderWaitLowerBound:
    def test_value(self):
        assert order_wait_lower_bound(PARAMS) == pytest.approx(2.0)

    def test_unstable_raises(self):
        with pytest.raises(InfeasibleError):
            order_wait_lower_bound(SystemParams(mu=1.0, cap_lambda=1.5, t_star=0.1))


class TestWaitingTimes:
    def test_reference_point(self):
        wt = waiting_times(flat(1.25, d=2), PARAMS)
        assert wt.method is Method.CLOSED_FORM
        assert wt.order_wait == pytest.approx(4.56, abs=1e-12)
        assert wt.rider_wait == pytest.approx(0.56, abs=1e-12)

    def test_no_buffer_means_no_rider_wait(self):
        wt = waiting_times(flat(1.3), PARAMS)
        assert wt.rider_wait == 0.0

    def test_series_route_matches_closed_form(self):
        for lam, d in [(1.05, 0), (1.25, 2), (1.45, 5)]:
            cf = waiting_times(flat(lam, d), PARAMS)
            sr = waiting_times(flat(lam, d), PARAMS, force_series=True)
            assert sr.method is Method.SERIES
            assert sr.order_wait == pytest.approx(cf.order_wait, rel=1e-12)
            assert sr.rider_wait == pytest.approx(cf.rider_wait, rel=1e-12)

    def test_improved_policy_value(self):
        wt = waiting_times(IMPROVED, PARAMS)
        assert wt.order_wait == pytest.approx(4.5, abs=1e-12)
        assert wt.rider_wait == 0.0

    @given(policy_strategy)
    def test_matches_direct_summation(self, policy):
        """Both expectations agree with term-by-term summation over the chain."""
        wt = waiting_times(policy, PARAMS, force_series=True)
        e_pos = 0.0
        e_neg = 0.0
        for q in range(-policy.buffer_len, 3000):
            nu = stationary_mass(policy, q)
            e_pos += max(q, 0) * nu
            e_neg += max(-q, 0) * nu
        assert wt.order_wait == pytest.approx(2.0 + e_pos, rel=1e-9)
        assert wt.rider_wait == pytest.approx(e_neg, rel=1e-9, abs=1e-12)

    def test_order_wait_decreasing_in_lambda0(self):
        waits = [waiting_times(flat(lam, d=2), PARAMS).order_wait for lam in (1.1, 1.2, 1.3, 1.4)]
        assert waits == sorted(waits, reverse=True)

    def test_rider_wait_increasing_in_buffer(self):
        waits = [waiting_times(flat(1.25, d), PARAMS).rider_wait for d in range(6)]
        assert waits == sorted(waits)
        assert waits[0] == 0.0

    def test_invalid_policy_rejected(self):
        with pytest.raises(InvalidPolicyError):
            waiting_times(flat(0.9), PARAMS)
