"""Exception hierarchy shared across the toolkit.

Every exception carries a short machine code so CLI and service layers can
map failures to diagnostics without string matching.
"""

from __future__ import annotations


class ToolkitError(Exception):
    """Base class for all formatkit errors."""

    code = "TOOLKIT_ERROR"


class SchemaViolation(ToolkitError):
    """A record or domain object violates a structural invariant."""

    code = "SCHEMA_VIOLATION"

    def __init__(self, field: str, message: str, line: int | None = None):
        self.field = field
        self.line = line
        self.bare_message = message
        where = f"line {line}, " if line is not None else ""
        super().__init__(f"{where}{field}: {message}")


class DatasetParseError(ToolkitError):
    code = "PARSE_ERROR"

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class DuplicateIdError(ToolkitError):
    code = "DUPLICATE_ID"

    def __init__(self, record_id: str, first_line: int, second_line: int):
        self.record_id = record_id
        super().__init__(
            f"id {record_id!r} appears on lines {first_line} and {second_line}"
        )


class EmptySetError(ToolkitError):
    code = "EMPTY_SET"


class LengthMismatchError(ToolkitError):
    code = "LENGTH_MISMATCH"


class RangeViolation(ToolkitError):
    code = "RANGE"


class MissingTemplateField(ToolkitError):
    code = "MISSING_TEMPLATE_FIELD"

    def __init__(self, field: str, template_name: str):
        self.field = field
        super().__init__(f"template {template_name!r} lacks placeholder {{{field}}}")


class AuthMissing(ToolkitError):
    code = "AUTH_MISSING"


class BackendError(ToolkitError):
    code = "BACKEND_ERROR"

    def __init__(self, status: int, message: str = ""):
        self.status = status
        super().__init__(f"backend returned status {status}: {message}".rstrip(": "))


class BackendTimeout(ToolkitError):
    code = "TIMEOUT"


class MockScriptExhausted(ToolkitError):
    """A scripted mock generator was asked for more completions than scripted."""

    code = "SCRIPT_EXHAUSTED"


class NonfiniteValue(ToolkitError):
    code = "NONFINITE"


class NonfiniteGradient(ToolkitError):
    code = "NONFINITE_GRADIENT"
