"""HTTP surface exposing checkers, the pass-rate metric, and the RL reward.

The service is stateless: every call is an independent pure computation, so
it can sit behind an external training loop as a reward backend, serve many
clients at once, and be replayed deterministically.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..checkers import CheckerRegistry, build_registry
from ..data_io import instance_from_doc
from ..errors import EmptySetError, SchemaViolation, ToolkitError
from ..model import TaskKind, Verdict
from ..reff import reward as compute_reward
from .schemas import (
    CheckBatchRequest,
    CheckBatchResponse,
    CheckRequest,
    ErrorModel,
    FfrRequest,
    FfrResponse,
    RewardRequest,
    RewardResponse,
    TasksResponse,
    VerdictModel,
    VersionResponse,
)


def _verdict_model(verdict: Verdict) -> VerdictModel:
    return VerdictModel(
        score=verdict.score,
        errors=[
            ErrorModel(code=e.code, message=e.message, span=e.span)
            for e in verdict.errors
        ],
    )


def _bad_request(exc: ToolkitError) -> HTTPException:
    return HTTPException(
        status_code=400, detail={"code": exc.code, "message": str(exc)}
    )


def create_app(registry: CheckerRegistry | None = None) -> FastAPI:
    registry = registry if registry is not None else build_registry()
    app = FastAPI(title="formatkit", version=__version__)

    def run_check(item: CheckRequest) -> VerdictModel:
        task = TaskKind.from_name(item.task)
        doc = dict(item.instance)
        doc.setdefault("task", task.value)
        if doc["task"] != task.value:
            raise SchemaViolation(
                "task", f"instance task {doc['task']!r} contradicts {task.value!r}"
            )
        instance = instance_from_doc(doc)
        return _verdict_model(registry.check(instance, item.response))

    @app.get("/version", response_model=VersionResponse)
    def version() -> VersionResponse:
        return VersionResponse(version=__version__)

    @app.get("/tasks", response_model=TasksResponse)
    def tasks() -> TasksResponse:
        return TasksResponse(tasks=[kind.value for kind in TaskKind])

    @app.post("/check", response_model=VerdictModel)
    def check(item: CheckRequest) -> VerdictModel:
        try:
            return run_check(item)
        except ToolkitError as exc:
            raise _bad_request(exc) from exc

    @app.post("/check/batch", response_model=CheckBatchResponse)
    def check_batch(request: CheckBatchRequest) -> CheckBatchResponse:
        try:
            return CheckBatchResponse(verdicts=[run_check(i) for i in request.items])
        except ToolkitError as exc:
            raise _bad_request(exc) from exc

    @app.post("/reward", response_model=RewardResponse)
    def reward(request: RewardRequest) -> RewardResponse:
        try:
            value = compute_reward(
                request.score, request.logp_phi, request.logp_theta, request.beta
            )
        except ToolkitError as exc:
            raise _bad_request(exc) from exc
        return RewardResponse(reward=value)

    @app.post("/metrics/ffr", response_model=FfrResponse)
    def pass_rate(request: FfrRequest) -> FfrResponse:
        if not request.scores:
            raise _bad_request(EmptySetError("scores must be nonempty"))
        for s in request.scores:
            if s not in (1, -1):
                raise _bad_request(
                    SchemaViolation("scores", f"scores must be 1 or -1, got {s}")
                )
        return FfrResponse(ffr=sum(1 for s in request.scores if s == 1) / len(request.scores))

    return app


app = create_app()
