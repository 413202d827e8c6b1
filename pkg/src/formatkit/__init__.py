"""formatkit: decidable format checkers, faithfulness metrics, refinement,
and a checker-rewarded reinforcement demo, usable as a library, a CLI, and
an HTTP reward backend."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    ERROR_CODES,
    FormatError,
    Recurrence,
    Duration,
    TaskInstance,
    TaskKind,
    Timestamp,
    Verdict,
    validate_instance,
)

__all__ = [
    "ERROR_CODES",
    "Duration",
    "FormatError",
    "Recurrence",
    "TaskInstance",
    "TaskKind",
    "Timestamp",
    "Verdict",
    "__version__",
    "validate_instance",
]
