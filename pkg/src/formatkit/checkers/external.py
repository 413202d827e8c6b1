"""Validator-backed checkers for the Agent and XDL tasks.

The real backends (a text-adventure engine and a chemistry-procedure
compiler) live behind the ExternalValidator interface. The two shipped
implementations are deliberately small stand-ins: ToyTextEnv keeps a fixed
legal-action table, and StructuralXdlValidator checks markup structure
against a tag/attribute schema. Neither claims to reproduce the real
systems; they exist so the toolkit is runnable end to end.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from ..errors import SchemaViolation
from ..model import FormatError, TaskInstance, Verdict
from .base import ExternalValidator

DEFAULT_ACTION_TABLE: dict[str, tuple[str, ...]] = {
    "demo": ("go north", "go south", "take key", "open door", "look"),
}


def parse_actions_config(text: str) -> dict[str, tuple[str, ...]]:
    """Parse a legal-action table from `session: action | action | ...` lines.

    Blank lines and lines starting with '#' are ignored.
    """
    table: dict[str, tuple[str, ...]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise SchemaViolation("actions", f"expected 'session: actions'", line=lineno)
        session, _, rest = line.partition(":")
        actions = tuple(a.strip() for a in rest.split("|") if a.strip())
        table[session.strip()] = actions
    return table


@dataclass(frozen=True)
class ToyTextEnv:
    """Stand-in game backend: a fixed session -> legal-actions table.

    When a session is absent from the table, the instance's
    `legal_action_hint` (pipe-separated) is used instead, so fixture
    datasets can be self-contained.
    """

    table: Mapping[str, tuple[str, ...]] = field(
        default_factory=lambda: dict(DEFAULT_ACTION_TABLE)
    )

    @classmethod
    def from_file(cls, path: str | Path) -> "ToyTextEnv":
        return cls(table=parse_actions_config(Path(path).read_text(encoding="utf-8")))

    def legal_actions(self, context: TaskInstance) -> tuple[str, ...]:
        q = context.query
        actions = self.table.get(q.session_id)
        if actions is not None:
            return tuple(actions)
        if q.legal_action_hint:
            return tuple(a.strip() for a in q.legal_action_hint.split("|") if a.strip())
        return ()

    def validate(self, payload: str, context: TaskInstance) -> Verdict:
        actions = self.legal_actions(context)
        attempt = payload.strip()
        if attempt.casefold() in {a.casefold() for a in actions}:
            return Verdict.ok()
        listing = ", ".join(actions) if actions else "(none)"
        return Verdict.fail(
            [
                FormatError(
                    code="ILLEGAL_ACTION",
                    message=(
                        f"action {attempt!r} cannot be executed here; legal actions: "
                        f"{listing}"
                    ),
                )
            ]
        )


DEFAULT_XDL_SCHEMA = """\
# element: required attributes (comma-separated, blank if none)
XDL:
Synthesis:
Hardware:
Component: id
Reagents:
Reagent: name
Procedure:
Add: reagent, vessel
Transfer: from_vessel, to_vessel
Stir: vessel
HeatChill: vessel, temp
HeatChillToTemp: vessel, temp
Filter: vessel
Dry: vessel
Evaporate: vessel
Separate: from_vessel, separation_vessel
Dissolve: vessel, solvent
Wait: time
Repeat: repeats
"""


def parse_xdl_schema(text: str) -> tuple[frozenset[str], dict[str, tuple[str, ...]]]:
    """Parse `Element: attr, attr` lines into (allowed tags, required attrs)."""
    allowed: list[str] = []
    required: dict[str, tuple[str, ...]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise SchemaViolation("xdl_schema", "expected 'Element: attrs'", line=lineno)
        name, _, rest = line.partition(":")
        name = name.strip()
        allowed.append(name)
        required[name] = tuple(a.strip() for a in rest.split(",") if a.strip())
    return frozenset(allowed), required


@dataclass(frozen=True)
class StructuralXdlValidator:
    """Structural stand-in for the real XDL compiler.

    Accepts a response iff it is well-formed markup, its root element is
    `XDL`, every element name is in the allowed-tag list, and every element
    carries all attributes the schema marks required. This is a desk-scale
    proxy: passing here does not imply the program would truly compile.
    """

    allowed: frozenset[str]
    required_attrs: Mapping[str, tuple[str, ...]]
    root_tag: str = "XDL"

    @classmethod
    def default(cls) -> "StructuralXdlValidator":
        allowed, required = parse_xdl_schema(DEFAULT_XDL_SCHEMA)
        return cls(allowed=allowed, required_attrs=required)

    @classmethod
    def from_file(cls, path: str | Path) -> "StructuralXdlValidator":
        allowed, required = parse_xdl_schema(Path(path).read_text(encoding="utf-8"))
        return cls(allowed=allowed, required_attrs=required)

    def validate(self, payload: str, context: TaskInstance) -> Verdict:
        def fail(message: str) -> Verdict:
            return Verdict.fail([FormatError(code="COMPILE_FAIL", message=message)])

        try:
            root = ET.fromstring(payload)
        except ET.ParseError as exc:
            return fail(f"markup is not well formed: {exc}")
        if root.tag != self.root_tag:
            return fail(f"root element must be <{self.root_tag}>, got <{root.tag}>")
        for elem in root.iter():
            if elem.tag not in self.allowed:
                return fail(f"element <{elem.tag}> is not a known element")
            for attr in self.required_attrs.get(elem.tag, ()):
                if attr not in elem.attrib:
                    return fail(
                        f"element <{elem.tag}> is missing required attribute "
                        f"{attr!r}"
                    )
        return Verdict.ok()


def check_agent(
    instance: TaskInstance, response: str, validator: ExternalValidator | None = None
) -> Verdict:
    """Delegate Agent responses to the configured environment backend."""
    validator = validator if validator is not None else ToyTextEnv()
    return validator.validate(response, instance)


def check_xdl(
    instance: TaskInstance, response: str, validator: ExternalValidator | None = None
) -> Verdict:
    """Delegate XDL responses to the configured compiler stand-in."""
    validator = validator if validator is not None else StructuralXdlValidator.default()
    return validator.validate(response, instance)
