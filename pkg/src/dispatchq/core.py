"""Model primitives: system parameters, dispatch policies, validation.

The environment is a restaurant with unit-rate Poisson order arrivals, an
exponential kitchen of rate mu, and a platform that sends riders in a Poisson
process whose rate is indexed by the restaurant's disclosure signal.  Time is
normalized so that the order arrival rate is 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field


class DispatchQError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(DispatchQError):
    """Input rejected: parameters or policy violate the stability assumptions."""


class InvalidPolicyError(InvalidInputError):
    """A dispatch policy failed validation."""


class InfeasibleError(DispatchQError):
    """The requested optimization problem has no feasible solution."""


class TheoremViolationError(DispatchQError):
    """A relation that must hold analytically failed its runtime check."""


class _InfiniteThreshold:
    """Distinguished value for 'restaurant shares no information' (M = infinity)."""

    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITE"


INFINITE = _InfiniteThreshold()


@dataclass(frozen=True)
class SystemParams:
    """Environment constants.

    mu:         kitchen service rate (orders per unit time)
    cap_lambda: maximal dispatch rate, i.e. rider availability near the restaurant
    t_star:     customer patience time: tolerated extra order delay beyond the
                M/M/1 floor 1/(mu-1)
    """

    mu: float
    cap_lambda: float
    t_star: float

    def __post_init__(self):
        if self.mu <= 0:
            raise InvalidInputError(f"mu must be positive, got {self.mu}")
        if self.cap_lambda <= 0:
            raise InvalidInputError(f"cap_lambda must be positive, got {self.cap_lambda}")
        if self.t_star < 0:
            raise InvalidInputError(f"t_star must be nonnegative, got {self.t_star}")


@dataclass(frozen=True)
class DispatchPolicy:
    """Signal-indexed dispatch rates plus the rider buffer and disclosure threshold.

    rate_prefix holds the first rates (lambda_0, lambda_1, ..., lambda_k); every
    signal index beyond the prefix uses tail_rate.  buffer_len is the maximum
    number of riders allowed to wait; threshold is the restaurant's disclosure
    cutoff M (an int, or INFINITE for no disclosure).
    """

    rate_prefix: tuple[float, ...]
    tail_rate: float
    buffer_len: int
    threshold: int | _InfiniteThreshold = INFINITE

    def __post_init__(self):
        if len(self.rate_prefix) == 0:
            raise InvalidPolicyError("rate_prefix must contain at least lambda_0")
        object.__setattr__(self, "rate_prefix", tuple(float(r) for r in self.rate_prefix))
        if self.buffer_len < 0 or int(self.buffer_len) != self.buffer_len:
            raise InvalidPolicyError(f"buffer_len must be a nonnegative integer, got {self.buffer_len}")
        if not self.is_infinite_threshold:
            if self.threshold < 0 or int(self.threshold) != self.threshold:
                raise InvalidPolicyError(f"threshold must be a nonnegative integer or INFINITE, got {self.threshold}")

    @property
    def is_infinite_threshold(self) -> bool:
        return isinstance(self.threshold, _InfiniteThreshold)

    @property
    def lambda0(self) -> float:
        return self.rate_prefix[0]

    @property
    def rho(self) -> float:
        """Base utilization 1/lambda_0."""
        return 1.0 / self.rate_prefix[0]

    def rate(self, signal: int) -> float:
        """Dispatch rate used when the disclosure signal equals `signal`."""
        if signal < 0:
            raise InvalidInputError(f"signal must be nonnegative, got {signal}")
        if signal < len(self.rate_prefix):
            return self.rate_prefix[signal]
        return self.tail_rate

    def rate_at_state(self, q2: int) -> float:
        """Dispatch rate in effect when the prepared queue is at level q2."""
        if self.is_infinite_threshold:
            return self.rate_prefix[0]
        return self.rate(max(q2 - self.threshold, 0))


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of checking a (policy, params) pair against the stability assumptions."""

    violations: tuple[str, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(policy: DispatchPolicy, params: SystemParams) -> ValidationReport:
    """Check every stability constraint; never raises, reports all violations."""
    violations = []
    if params.mu <= 1:
        violations.append(f"mu <= 1 (mu={params.mu:g})")
    if params.cap_lambda <= 1:
        violations.append(f"capacity <= 1 (Lambda={params.cap_lambda:g})")
    if policy.lambda0 <= 1:
        violations.append(f"lambda_0 <= 1 (lambda_0={policy.lambda0:g})")
    for i, r in enumerate(policy.rate_prefix):
        if i > 0 and r <= 0:
            violations.append(f"lambda_{i} <= 0 (lambda_{i}={r:g})")
        if r > params.cap_lambda:
            violations.append(f"lambda_{i} > Lambda (lambda_{i}={r:g}, Lambda={params.cap_lambda:g})")
    if policy.tail_rate <= 1:
        violations.append(f"tail rate <= 1 (tail={policy.tail_rate:g})")
    if policy.tail_rate > params.cap_lambda:
        violations.append(f"tail rate > Lambda (tail={policy.tail_rate:g}, Lambda={params.cap_lambda:g})")
    return ValidationReport(tuple(violations))


def check_stable(policy: DispatchPolicy) -> None:
    """Raise InvalidPolicyError unless the policy alone satisfies the stability
    assumptions (the capacity cap needs SystemParams and is checked by validate)."""
    problems = []
    if policy.lambda0 <= 1:
        problems.append(f"lambda_0 <= 1 (lambda_0={policy.lambda0:g})")
    for i, r in enumerate(policy.rate_prefix):
        if i > 0 and r <= 0:
            problems.append(f"lambda_{i} <= 0")
    if policy.tail_rate <= 1:
        problems.append(f"tail rate <= 1 (tail={policy.tail_rate:g})")
    if problems:
        raise InvalidPolicyError("; ".join(problems))


def require_valid(policy: DispatchPolicy, params: SystemParams) -> None:
    report = validate(policy, params)
    if not report.ok:
        raise InvalidPolicyError("; ".join(report.violations))
