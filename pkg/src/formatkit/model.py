"""Domain types: task instances, query payloads, verdicts, and time values.

Everything here is immutable after construction and safe to share across
threads. Behavior is limited to construction checks and `validate_instance`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import ClassVar, Mapping, Union

from .errors import SchemaViolation


class TaskKind(str, Enum):
    """The closed set of supported task kinds.

    Serialized names are exactly the member values below.
    """

    MCQ = "MCQ"
    EQA = "EQA"
    NER = "NER"
    PARSE = "Parse"
    CAPSEG = "CapSeg"
    MTT = "MTT"
    ACROW = "AcroW"
    FTIME = "FTime"
    AGENT = "Agent"
    XDL = "XDL"

    @classmethod
    def from_name(cls, name: str) -> "TaskKind":
        for kind in cls:
            if kind.value == name:
                return kind
        valid = ", ".join(k.value for k in cls)
        raise SchemaViolation("task", f"unknown task {name!r}; expected one of: {valid}")


#: Closed registry of machine codes a checker may attach to a Verdict.
ERROR_CODES = frozenset(
    {
        "ILLEGAL_OPTION",
        "NOT_A_SPAN",
        "TAG_MISMATCH",
        "ILLEGAL_LABEL",
        "CONTENT_ALTERED",
        "UNBALANCED_PARENS",
        "EMPTY_CONSTITUENT",
        "LINE_TOO_LONG",
        "TOO_MANY_LINES",
        "RULE_VIOLATED",
        "SPELLING_MISMATCH",
        "WRONG_LINE_COUNT",
        "GRAMMAR_MISMATCH",
        "ILLEGAL_DATE",
        "ILLEGAL_RECURRENCE",
        "ILLEGAL_ACTION",
        "COMPILE_FAIL",
    }
)


@dataclass(frozen=True)
class FormatError:
    """One structural violation, phrased so it can be fed back to a generator."""

    code: str
    message: str
    span: tuple[int, int] | None = None

    def __post_init__(self):
        if self.code not in ERROR_CODES:
            raise SchemaViolation("code", f"unknown error code {self.code!r}")
        if not self.message:
            raise SchemaViolation("message", "error message must be nonempty")
        if self.span is not None:
            start, end = self.span
            if start < 0 or end < start:
                raise SchemaViolation("span", f"invalid span {self.span!r}")


@dataclass(frozen=True)
class Verdict:
    """Checker output: score 1 with no errors, or score -1 with at least one."""

    score: int
    errors: tuple[FormatError, ...] = ()

    def __post_init__(self):
        if self.score not in (1, -1):
            raise SchemaViolation("score", f"score must be 1 or -1, got {self.score}")
        if self.score == 1 and self.errors:
            raise SchemaViolation("errors", "score 1 requires an empty error list")
        if self.score == -1 and not self.errors:
            raise SchemaViolation("errors", "score -1 requires at least one error")

    @property
    def passed(self) -> bool:
        return self.score == 1

    @classmethod
    def ok(cls) -> "Verdict":
        return cls(score=1)

    @classmethod
    def fail(cls, errors) -> "Verdict":
        return cls(score=-1, errors=tuple(errors))


def _days_in_month(year: int, month: int) -> int:
    if month in (1, 3, 5, 7, 8, 10, 12):
        return 31
    if month in (4, 6, 9, 11):
        return 30
    leap = year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)
    return 29 if leap else 28


@dataclass(frozen=True, order=True)
class Timestamp:
    """A naive proleptic-Gregorian datetime, bounded to four-digit years."""

    year: int
    month: int
    day: int
    hour: int
    minute: int
    second: int

    def __post_init__(self):
        if not 0 <= self.year <= 9999:
            raise SchemaViolation("year", f"year {self.year} outside 0..9999")
        if not 1 <= self.month <= 12:
            raise SchemaViolation("month", f"month {self.month} outside 1..12")
        if not 1 <= self.day <= _days_in_month(self.year, self.month):
            raise SchemaViolation(
                "day", f"day {self.day} invalid for {self.year:04d}-{self.month:02d}"
            )
        if not 0 <= self.hour <= 23:
            raise SchemaViolation("hour", f"hour {self.hour} outside 0..23")
        if not 0 <= self.minute <= 59:
            raise SchemaViolation("minute", f"minute {self.minute} outside 0..59")
        if not 0 <= self.second <= 59:
            raise SchemaViolation("second", f"second {self.second} outside 0..59")

    def compact(self) -> str:
        """Render as the 15-character YYYYMMDDTHHMMSS form."""
        return (
            f"{self.year:04d}{self.month:02d}{self.day:02d}"
            f"T{self.hour:02d}{self.minute:02d}{self.second:02d}"
        )

    @classmethod
    def from_compact(cls, text: str) -> "Timestamp":
        """Parse the 15-character form; raises SchemaViolation on bad fields."""
        if len(text) != 15 or text[8] != "T" or not (text[:8] + text[9:]).isdigit():
            raise SchemaViolation("timestamp", f"not a YYYYMMDDTHHMMSS string: {text!r}")
        return cls(
            year=int(text[0:4]),
            month=int(text[4:6]),
            day=int(text[6:8]),
            hour=int(text[9:11]),
            minute=int(text[11:13]),
            second=int(text[13:15]),
        )


@dataclass(frozen=True)
class Duration:
    """Calendar-style duration with nonnegative integer components."""

    years: int = 0
    months: int = 0
    days: int = 0
    hours: int = 0
    minutes: int = 0
    seconds: int = 0

    def __post_init__(self):
        for name in ("years", "months", "days", "hours", "minutes", "seconds"):
            if getattr(self, name) < 0:
                raise SchemaViolation(name, "duration components must be nonnegative")

    @property
    def is_zero(self) -> bool:
        return not any(
            (self.years, self.months, self.days, self.hours, self.minutes, self.seconds)
        )


@dataclass(frozen=True)
class Recurrence:
    """Repeating trigger: count (-1 = unbounded), first occurrence, and period."""

    count: int
    start: Timestamp
    period: Duration

    def __post_init__(self):
        if self.count != -1 and self.count < 1:
            raise SchemaViolation("count", f"count must be -1 or >= 1, got {self.count}")
        if self.period.is_zero:
            raise SchemaViolation("period", "recurrence period must not be all-zero")


# --- query payloads, one variant per task ---------------------------------


@dataclass(frozen=True)
class McqQuery:
    task: ClassVar[TaskKind] = TaskKind.MCQ
    question: str
    options: tuple[str, ...]


@dataclass(frozen=True)
class EqaQuery:
    task: ClassVar[TaskKind] = TaskKind.EQA
    passage: str
    question: str


@dataclass(frozen=True)
class NerQuery:
    task: ClassVar[TaskKind] = TaskKind.NER
    sentence: str
    tagset: tuple[str, ...] = ("PER", "ORG", "LOC", "MISC")


@dataclass(frozen=True)
class ParseQuery:
    task: ClassVar[TaskKind] = TaskKind.PARSE
    sentence: str
    word_labels: frozenset[str]
    span_labels: frozenset[str]


@dataclass(frozen=True)
class CapSegQuery:
    task: ClassVar[TaskKind] = TaskKind.CAPSEG
    text: str
    max_line_chars: int = 42
    max_lines_per_block: int = 2


@dataclass(frozen=True)
class MttQuery:
    task: ClassVar[TaskKind] = TaskKind.MTT
    source: str
    rules: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class AcroWQuery:
    task: ClassVar[TaskKind] = TaskKind.ACROW
    word: str


@dataclass(frozen=True)
class FTimeQuery:
    task: ClassVar[TaskKind] = TaskKind.FTIME
    reference_time: Timestamp
    weekday: str
    category: str  # one of "interval", "absolute", "recurring"


@dataclass(frozen=True)
class AgentQuery:
    task: ClassVar[TaskKind] = TaskKind.AGENT
    session_id: str
    observation: str
    legal_action_hint: str | None = None


@dataclass(frozen=True)
class XdlQuery:
    task: ClassVar[TaskKind] = TaskKind.XDL
    description: str


QueryPayload = Union[
    McqQuery,
    EqaQuery,
    NerQuery,
    ParseQuery,
    CapSegQuery,
    MttQuery,
    AcroWQuery,
    FTimeQuery,
    AgentQuery,
    XdlQuery,
]

QUERY_TYPES: dict[TaskKind, type] = {
    TaskKind.MCQ: McqQuery,
    TaskKind.EQA: EqaQuery,
    TaskKind.NER: NerQuery,
    TaskKind.PARSE: ParseQuery,
    TaskKind.CAPSEG: CapSegQuery,
    TaskKind.MTT: MttQuery,
    TaskKind.ACROW: AcroWQuery,
    TaskKind.FTIME: FTimeQuery,
    TaskKind.AGENT: AgentQuery,
    TaskKind.XDL: XdlQuery,
}

FTIME_CATEGORIES = ("interval", "absolute", "recurring")


@dataclass(frozen=True)
class TaskInstance:
    """One benchmark item: a task-tagged query plus reference answers."""

    task: TaskKind
    id: str
    query: QueryPayload
    references: tuple[str, ...] = ()
    meta: Mapping[str, str] = field(default_factory=dict)


def validate_instance(instance: TaskInstance) -> None:
    """Check every structural invariant; raises SchemaViolation on the first hit.

    The query variant must match the instance's task, the id must be
    nonempty, and every per-task payload constraint must hold.
    """
    if not isinstance(instance.task, TaskKind):
        raise SchemaViolation("task", f"not a TaskKind: {instance.task!r}")
    if not instance.id:
        raise SchemaViolation("id", "id must be nonempty")
    expected = QUERY_TYPES[instance.task]
    if type(instance.query) is not expected:
        raise SchemaViolation(
            "query",
            f"payload {type(instance.query).__name__} does not match task "
            f"{instance.task.value}",
        )
    q = instance.query
    if isinstance(q, McqQuery):
        if not q.options:
            raise SchemaViolation("options", "options must be nonempty")
        if len(set(q.options)) != len(q.options):
            raise SchemaViolation("options", "options must be distinct")
        if any(not opt for opt in q.options):
            raise SchemaViolation("options", "options must be nonempty strings")
    elif isinstance(q, NerQuery):
        if not q.tagset:
            raise SchemaViolation("tagset", "tagset must be nonempty")
    elif isinstance(q, CapSegQuery):
        if q.max_line_chars <= 0:
            raise SchemaViolation("max_line_chars", "must be a positive integer")
        if q.max_lines_per_block <= 0:
            raise SchemaViolation("max_lines_per_block", "must be a positive integer")
    elif isinstance(q, MttQuery):
        for i, (src, tgt) in enumerate(q.rules):
            if not src or not tgt:
                raise SchemaViolation(f"rules[{i}]", "rule terms must be nonempty")
    elif isinstance(q, AcroWQuery):
        if not q.word or not q.word.isalpha():
            raise SchemaViolation("word", f"word must be nonempty alphabetic, got {q.word!r}")
    elif isinstance(q, FTimeQuery):
        if q.category not in FTIME_CATEGORIES:
            raise SchemaViolation(
                "category",
                f"category {q.category!r} not in {FTIME_CATEGORIES}",
            )
    for key in instance.meta:
        if not isinstance(key, str):
            raise SchemaViolation("meta", f"meta keys must be strings, got {key!r}")
