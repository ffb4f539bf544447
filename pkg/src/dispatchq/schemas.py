"""Pydantic request/response models for the HTTP service.

The wire encoding of the no-disclosure threshold is the string "inf"; the
conversion helpers map between these models and the core dataclasses.
"""
from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, Field

from .core import DispatchPolicy, INFINITE, SystemParams

Threshold = Union[int, Literal["inf"]]


class PolicyModel(BaseModel):
    rate_prefix: list[float] = Field(min_length=1)
    tail_rate: float
    buffer_len: int = Field(ge=0)
    threshold: Threshold = "inf"


class ParamsModel(BaseModel):
    mu: float = Field(gt=0)
    cap_lambda: float = Field(gt=0)
    t_star: float = Field(ge=0, default=0.0)


def to_policy(model: PolicyModel) -> DispatchPolicy:
    thr = INFINITE if model.threshold == "inf" else int(model.threshold)
    return DispatchPolicy(
        rate_prefix=tuple(model.rate_prefix),
        tail_rate=model.tail_rate,
        buffer_len=model.buffer_len,
        threshold=thr,
    )


def from_policy(policy: DispatchPolicy) -> PolicyModel:
    return PolicyModel(
        rate_prefix=list(policy.rate_prefix),
        tail_rate=policy.tail_rate,
        buffer_len=policy.buffer_len,
        threshold="inf" if policy.is_infinite_threshold else int(policy.threshold),
    )


def to_params(model: ParamsModel) -> SystemParams:
    return SystemParams(mu=model.mu, cap_lambda=model.cap_lambda, t_star=model.t_star)


class AnalyzeRequest(BaseModel):
    policy: PolicyModel
    params: ParamsModel


class AnalyzeResponse(BaseModel):
    order_wait: float
    rider_wait: float
    method: str
    order_wait_lower_bound: float


class OptimizeRequest(BaseModel):
    params: ParamsModel


class OptimizeResponse(BaseModel):
    lambda0: float
    buffer_len: int
    constraint_slack: float
    rider_wait: float
    order_wait: float


class ImproveRequest(BaseModel):
    policy: PolicyModel
    params: ParamsModel
    new_threshold: int = Field(ge=0)


class ImproveResponse(BaseModel):
    new_policy: PolicyModel
    order_wait_before: float
    order_wait_after: float
    rider_wait_before: float
    rider_wait_after: float
    intermediate_c: float


class SimulateRequest(BaseModel):
    policy: PolicyModel
    params: ParamsModel
    max_events: int = Field(gt=0, default=1_000_000)
    warmup_events: Optional[int] = Field(ge=0, default=None)
    seed: int = Field(ge=0, default=0)


class ReferenceModel(BaseModel):
    order_wait: float
    rider_wait: float
    method: str
    z_order: float
    z_rider: float


class SimulateResponse(BaseModel):
    order_wait_mean: float
    order_wait_stderr: float
    rider_wait_mean: float
    rider_wait_stderr: float
    orders_completed: int
    riders_dispatched: int
    realized_rider_rate: float
    seed: int
    reference: ReferenceModel


class Fig3Request(BaseModel):
    mu: float = 1.5
    cap_lambda: float = 1.5
    t_stars: list[float] = Field(min_length=1)
    lambda0_grid: Optional[list[float]] = None


class Fig4Request(BaseModel):
    mu: float = 1.5
    cap_lambda: float = 1.5
    thresholds: list[Threshold] = Field(min_length=1)
    lambda0_grid: Optional[list[float]] = None


class SweepRequest(BaseModel):
    mu: float = 1.5
    cap_lambda: float = 1.5
    lambda0_grid: list[float] = Field(min_length=1)
    buffer_lens: list[int] = Field(min_length=1)


class TableResponse(BaseModel):
    columns: list[str]
    rows: list[dict]
