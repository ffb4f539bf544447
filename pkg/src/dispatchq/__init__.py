"""Queueing analytics and labor-friendly dispatch optimization for a
two-queue meal-delivery model."""

from .core import (
    DispatchPolicy,
    DispatchQError,
    INFINITE,
    InfeasibleError,
    InvalidInputError,
    InvalidPolicyError,
    SystemParams,
    TheoremViolationError,
    ValidationReport,
    validate,
)
from .optimizer import (
    ImprovementResult,
    OptimalDispatch,
    improve_policy,
    max_utilization,
    optimize_dispatch,
    rider_wait_lower_bound,
    smallest_buffer,
)
from .oracle import TruncatedChainSolution, oracle_waiting_times, solve_truncated
from .simulator import SimulationConfig, SimulationResult, simulate
from .stationary import (
    Method,
    StationaryDistribution,
    WaitingTimes,
    decoupled_stationary,
    joint_stationary_pmf,
    order_wait_lower_bound,
    stationary_mass,
    waiting_times,
)

__version__ = "0.1.0"

__all__ = [
    "DispatchPolicy",
    "DispatchQError",
    "INFINITE",
    "InfeasibleError",
    "InvalidInputError",
    "InvalidPolicyError",
    "SystemParams",
    "TheoremViolationError",
    "ValidationReport",
    "validate",
    "ImprovementResult",
    "OptimalDispatch",
    "improve_policy",
    "max_utilization",
    "optimize_dispatch",
    "rider_wait_lower_bound",
    "smallest_buffer",
    "TruncatedChainSolution",
    "oracle_waiting_times",
    "solve_truncated",
    "SimulationConfig",
    "SimulationResult",
    "simulate",
    "Method",
    "StationaryDistribution",
    "WaitingTimes",
    "decoupled_stationary",
    "joint_stationary_pmf",
    "order_wait_lower_bound",
    "stationary_mass",
    "waiting_times",
]
