"""Pydantic request/response models for the checker service."""

from __future__ import annotations

from typing import Any

from pydantic import BaseModel, Field


class ErrorModel(BaseModel):
    code: str
    message: str
    span: tuple[int, int] | None = None


class VerdictModel(BaseModel):
    score: int
    errors: list[ErrorModel] = Field(default_factory=list)


class CheckRequest(BaseModel):
    task: str
    instance: dict[str, Any]
    response: str


class CheckBatchRequest(BaseModel):
    items: list[CheckRequest]


class CheckBatchResponse(BaseModel):
    verdicts: list[VerdictModel]


class RewardRequest(BaseModel):
    score: int
    logp_phi: float
    logp_theta: float
    beta: float


class RewardResponse(BaseModel):
    reward: float


class FfrRequest(BaseModel):
    scores: list[int]


class FfrResponse(BaseModel):
    ffr: float


class VersionResponse(BaseModel):
    version: str


class TasksResponse(BaseModel):
    tasks: list[str]
