"""Total task -> checker registry."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from ..model import TaskInstance, TaskKind, Verdict
from .base import Checker, ExternalValidator, FunctionChecker
from .core import (
    check_acrow,
    check_capseg,
    check_eqa,
    check_ftime,
    check_mcq,
    check_mtt,
    check_ner,
    check_parse,
)
from .external import (
    StructuralXdlValidator,
    ToyTextEnv,
    check_agent,
    check_xdl,
)


@dataclass(frozen=True)
class CheckerRegistry:
    """One checker per task kind; total over TaskKind."""

    checkers: Mapping[TaskKind, Checker]

    def lookup(self, task: TaskKind) -> Checker:
        return self.checkers[task]

    def check(self, instance: TaskInstance, response: str) -> Verdict:
        return self.lookup(instance.task).check(instance, response)


def build_registry(
    agent_validator: ExternalValidator | None = None,
    xdl_validator: ExternalValidator | None = None,
) -> CheckerRegistry:
    """Assemble a registry, binding Agent/XDL to the given validators."""
    agent = agent_validator if agent_validator is not None else ToyTextEnv()
    xdl = xdl_validator if xdl_validator is not None else StructuralXdlValidator.default()
    checkers: dict[TaskKind, Checker] = {
        TaskKind.MCQ: FunctionChecker(TaskKind.MCQ, check_mcq),
        TaskKind.EQA: FunctionChecker(TaskKind.EQA, check_eqa),
        TaskKind.NER: FunctionChecker(TaskKind.NER, check_ner),
        TaskKind.PARSE: FunctionChecker(TaskKind.PARSE, check_parse),
        TaskKind.CAPSEG: FunctionChecker(TaskKind.CAPSEG, check_capseg),
        TaskKind.MTT: FunctionChecker(TaskKind.MTT, check_mtt),
        TaskKind.ACROW: FunctionChecker(TaskKind.ACROW, check_acrow),
        TaskKind.FTIME: FunctionChecker(TaskKind.FTIME, check_ftime),
        TaskKind.AGENT: FunctionChecker(
            TaskKind.AGENT, lambda inst, resp: check_agent(inst, resp, agent)
        ),
        TaskKind.XDL: FunctionChecker(
            TaskKind.XDL, lambda inst, resp: check_xdl(inst, resp, xdl)
        ),
    }
    return CheckerRegistry(checkers=checkers)


_DEFAULT_REGISTRY = build_registry()


def registry_lookup(task: TaskKind) -> Checker:
    """Return the default-configured checker for a task."""
    return _DEFAULT_REGISTRY.lookup(task)
