"""Batch drivers: generate-check over a dataset, raw or with refinement.

Responders abstract over where completions come from (an HTTP backend or a
keyed mock script), so the same driver serves live evaluation and fully
deterministic replays. Results are keyed by instance id and aggregation is
order-insensitive, which makes reports identical at any concurrency level.
"""

from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Protocol, Sequence

from .checkers import CheckerRegistry
from .errors import MockScriptExhausted, ToolkitError
from .generator import (
    GeneratorClient,
    GenParams,
    HttpGenerator,
    PromptBuilder,
    build_raw_prompt,
)
from .metrics import ScoredRow
from .model import TaskInstance, TaskKind
from .refine import GeneratorFailure, RefinementTrace, refine_loop


class Responder(Protocol):
    """Produces the next completion for a given instance."""

    def respond(self, instance: TaskInstance, prompt: str) -> str: ...


class HttpResponder:
    def __init__(self, generator: HttpGenerator, params: GenParams):
        self._generator = generator
        self._params = params

    def respond(self, instance: TaskInstance, prompt: str) -> str:
        return self._generator.generate(prompt, self._params)


class KeyedMockResponder:
    """Replays scripted completions per instance id, independent of order.

    The script maps id -> completion or id -> list of completions (consumed
    one per call, for multi-attempt refinement). Thread safe.
    """

    def __init__(self, script: Mapping[str, object]):
        self._queues: dict[str, list[str]] = {}
        for key, value in script.items():
            if isinstance(value, str):
                self._queues[key] = [value]
            else:
                self._queues[key] = [str(v) for v in value]
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | Path) -> "KeyedMockResponder":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def respond(self, instance: TaskInstance, prompt: str) -> str:
        with self._lock:
            queue = self._queues.get(instance.id)
            if not queue:
                raise MockScriptExhausted(
                    f"no scripted completion left for id {instance.id!r}"
                )
            return queue.pop(0)


class _BoundGenerator:
    """Adapts a Responder to the GeneratorClient interface for one instance."""

    def __init__(self, responder: Responder, instance: TaskInstance):
        self._responder = responder
        self._instance = instance

    def generate(self, prompt: str, params: GenParams) -> str:
        return self._responder.respond(self._instance, prompt)


def default_builders(
    few_shot: Mapping[TaskKind, Sequence[tuple[str, str]]] | None = None,
) -> dict[TaskKind, PromptBuilder]:
    few_shot = few_shot or {}
    return {
        task: PromptBuilder.for_task(task, few_shot.get(task, ()))
        for task in TaskKind
    }


@dataclass(frozen=True)
class EvalFailure:
    instance_id: str
    error_code: str
    message: str


@dataclass(frozen=True)
class EvalOutcome:
    rows: tuple[ScoredRow, ...]
    failures: tuple[EvalFailure, ...]


def run_eval(
    instances: Sequence[TaskInstance],
    responder: Responder,
    registry: CheckerRegistry,
    builders: Mapping[TaskKind, PromptBuilder],
    params: GenParams = GenParams(),
    concurrency: int = 1,
) -> EvalOutcome:
    """One raw completion per instance, checked; failures don't abort the run."""

    def work(instance: TaskInstance):
        prompt = build_raw_prompt(builders[instance.task], instance)
        try:
            response = responder.respond(instance, prompt)
        except ToolkitError as exc:
            return instance.id, None, EvalFailure(instance.id, exc.code, str(exc))
        verdict = registry.check(instance, response)
        return instance.id, ScoredRow(instance, response, verdict), None

    results: dict[str, ScoredRow] = {}
    failures: list[EvalFailure] = []
    if concurrency <= 1:
        outputs = [work(inst) for inst in instances]
    else:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            outputs = list(pool.map(work, instances))
    for instance_id, row, failure in outputs:
        if failure is not None:
            failures.append(failure)
        else:
            results[instance_id] = row
    ordered = tuple(results[i.id] for i in instances if i.id in results)
    return EvalOutcome(rows=ordered, failures=tuple(sorted(failures, key=lambda f: f.instance_id)))


@dataclass(frozen=True)
class RefineRow:
    instance: TaskInstance
    trace: RefinementTrace | None
    final_response: str | None
    error: EvalFailure | None


@dataclass(frozen=True)
class RefineOutcome:
    rows: tuple[RefineRow, ...]

    def failures(self) -> tuple[EvalFailure, ...]:
        return tuple(r.error for r in self.rows if r.error is not None)


def run_refine(
    instances: Sequence[TaskInstance],
    responder: Responder,
    registry: CheckerRegistry,
    builders: Mapping[TaskKind, PromptBuilder],
    max_steps: int = 5,
    with_thoughts: bool = False,
    max_prompt_chars: int = 8000,
    params: GenParams = GenParams(),
    concurrency: int = 1,
) -> RefineOutcome:
    """Refinement loop per instance; a generator failure mid-loop keeps the
    best answer produced so far instead of discarding the instance."""

    def work(instance: TaskInstance) -> RefineRow:
        generator: GeneratorClient = _BoundGenerator(responder, instance)
        checker = registry.lookup(instance.task)
        try:
            trace = refine_loop(
                instance,
                generator,
                checker,
                builders[instance.task],
                max_steps=max_steps,
                with_thoughts=with_thoughts,
                max_prompt_chars=max_prompt_chars,
                params=params,
            )
        except GeneratorFailure as exc:
            failure = EvalFailure(instance.id, exc.cause.__class__.__name__, str(exc))
            if isinstance(exc.cause, ToolkitError):
                failure = EvalFailure(instance.id, exc.cause.code, str(exc))
            return RefineRow(
                instance=instance,
                trace=None,
                final_response=exc.best_response(),
                error=failure,
            )
        return RefineRow(
            instance=instance,
            trace=trace,
            final_response=trace.final_response,
            error=None,
        )

    if concurrency <= 1:
        rows = [work(inst) for inst in instances]
    else:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            rows = list(pool.map(work, instances))
    by_id = {row.instance.id: row for row in rows}
    return RefineOutcome(rows=tuple(by_id[i.id] for i in instances))
