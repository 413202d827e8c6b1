"""Iterative format repair around any generator.

Attempt 1 uses the raw prompt; each later attempt feeds the previous answer
and the checker's error messages back through the refinement template. The
loop stops at the first satisfied criterion, in this order: the checker
passes, the attempt limit is reached, the next prompt would not fit the
length budget, or the generator repeats an earlier answer.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .checkers.base import Checker
from .errors import RangeViolation, ToolkitError
from .generator import (
    GeneratorClient,
    GenParams,
    PromptBuilder,
    build_raw_prompt,
    build_refine_prompt,
)
from .model import TaskInstance, Verdict


class StopReason(str, Enum):
    CLEAN = "CLEAN"
    STEP_LIMIT = "STEP_LIMIT"
    PROMPT_OVERFLOW = "PROMPT_OVERFLOW"
    REPEATED_ANSWER = "REPEATED_ANSWER"


@dataclass(frozen=True)
class Attempt:
    prompt: str
    response: str
    verdict: Verdict


@dataclass(frozen=True)
class RefinementTrace:
    attempts: tuple[Attempt, ...]
    stop_reason: StopReason
    final_response: str

    def __post_init__(self):
        if not self.attempts:
            raise RangeViolation("a trace needs at least one attempt")
        clean = self.stop_reason is StopReason.CLEAN
        if clean != self.attempts[-1].verdict.passed:
            raise RangeViolation("stop reason CLEAN must match the last verdict")

    @property
    def first_verdict(self) -> Verdict:
        return self.attempts[0].verdict

    @property
    def final_verdict(self) -> Verdict:
        return self.attempts[-1].verdict


class GeneratorFailure(ToolkitError):
    """A generator error mid-loop; carries whatever attempts completed."""

    code = "GENERATOR_FAILURE"

    def __init__(self, attempts: tuple[Attempt, ...], cause: Exception):
        self.attempts = attempts
        self.cause = cause
        super().__init__(f"generator failed after {len(attempts)} attempts: {cause}")

    def best_response(self) -> str | None:
        """Best answer so far: a passing one if any, else the latest."""
        if not self.attempts:
            return None
        for attempt in self.attempts:
            if attempt.verdict.passed:
                return attempt.response
        return self.attempts[-1].response


def refine_loop(
    instance: TaskInstance,
    generator: GeneratorClient,
    checker: Checker,
    builder: PromptBuilder,
    max_steps: int = 5,
    with_thoughts: bool = False,
    max_prompt_chars: int = 8000,
    params: GenParams = GenParams(),
) -> RefinementTrace:
    """Run the repair loop for one instance and return the full trace.

    A passing answer is never replaced: the loop exits as CLEAN immediately.
    Repetition compares whitespace-trimmed responses for exact equality.
    """
    if max_steps < 1:
        raise RangeViolation(f"max_steps must be >= 1, got {max_steps}")
    attempts: list[Attempt] = []
    prompt = build_raw_prompt(builder, instance)
    while True:
        try:
            response = generator.generate(prompt, params)
        except ToolkitError as exc:
            raise GeneratorFailure(tuple(attempts), exc) from exc
        verdict = checker.check(instance, response)
        attempts.append(Attempt(prompt=prompt, response=response, verdict=verdict))
        if verdict.passed:
            reason = StopReason.CLEAN
            break
        if len(attempts) == max_steps:
            reason = StopReason.STEP_LIMIT
            break
        next_prompt = build_refine_prompt(
            builder, instance, response, verdict.errors, with_thoughts
        )
        if len(next_prompt) > max_prompt_chars:
            reason = StopReason.PROMPT_OVERFLOW
            break
        if any(response.strip() == prev.response.strip() for prev in attempts[:-1]):
            reason = StopReason.REPEATED_ANSWER
            break
        prompt = next_prompt
    return RefinementTrace(
        attempts=tuple(attempts),
        stop_reason=reason,
        final_response=attempts[-1].response,
    )
