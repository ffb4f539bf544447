"""Shared fixtures and helpers for the test suite."""
from __future__ import annotations

import random

from hypothesis import settings

from dispatchq import INFINITE, DispatchPolicy, SystemParams

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

PARAMS = SystemParams(mu=1.5, cap_lambda=1.5, t_star=0.1)


def random_valid_policy(rng: random.Random, cap_lambda: float = 1.5) -> DispatchPolicy:
    """A policy passing validate() against cap_lambda: lambda_0 and tail in
    (1, Lambda], interior prefix rates in (0, Lambda], random buffer/threshold."""
    lambda0 = rng.uniform(1.05, cap_lambda)
    n_extra = rng.randint(0, 3)
    extras = [rng.uniform(0.2, cap_lambda) for _ in range(n_extra)]
    tail = rng.uniform(1.05, cap_lambda)
    d = rng.randint(0, 5)
    threshold = INFINITE if rng.random() < 0.4 else rng.randint(0, 5)
    return DispatchPolicy(
        rate_prefix=(lambda0, *extras),
        tail_rate=tail,
        buffer_len=d,
        threshold=threshold,
    )


def dispatch_rate(policy: DispatchPolicy, q2: int) -> float:
    """Rate in effect at prepared-queue level q2 (0 below the buffer floor)."""
    if q2 <= -policy.buffer_len:
        return 0.0
    return policy.rate_at_state(q2)
