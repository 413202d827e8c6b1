"""Checker interface and shared text normalization."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Protocol, runtime_checkable

from ..model import TaskInstance, TaskKind, Verdict

_WS_RUN = re.compile(r"[ \t]+")


def normalize_ws(text: str) -> str:
    """Collapse runs of spaces/tabs to a single space and trim the ends.

    This is the equality used by every content-preservation check: it
    tolerates spacing drift around inserted tags while rejecting any real
    edit to the text.
    """
    return _WS_RUN.sub(" ", text).strip()


@runtime_checkable
class Checker(Protocol):
    """A decidable recognizer for one task's format requirements."""

    task: TaskKind

    def check(self, instance: TaskInstance, response: str) -> Verdict: ...


@runtime_checkable
class ExternalValidator(Protocol):
    """Pluggable backend judging a response against an external system.

    Implementations must be deterministic for a fixed instance.
    """

    def validate(self, payload: str, context: TaskInstance) -> Verdict: ...


@dataclass(frozen=True)
class FunctionChecker:
    """Adapts a plain check function to the Checker interface."""

    task: TaskKind
    fn: Callable[[TaskInstance, str], Verdict]

    def check(self, instance: TaskInstance, response: str) -> Verdict:
        if instance.task is not self.task:
            raise ValueError(
                f"checker for {self.task.value} got a {instance.task.value} instance"
            )
        return self.fn(instance, response)
