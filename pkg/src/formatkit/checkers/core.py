"""Format checkers for the eight self-contained tasks.

Each function maps (instance, response) to a Verdict. Checkers are pure and
deterministic; error messages are phrased so they can be pasted into a
refinement prompt as-is.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import SchemaViolation
from ..model import (
    FormatError,
    Recurrence,
    Duration,
    TaskInstance,
    Timestamp,
    Verdict,
)
from .base import normalize_ws

# --- MCQ -------------------------------------------------------------------


def check_mcq(instance: TaskInstance, response: str) -> Verdict:
    """Accept iff the trimmed response equals one option, ignoring case."""
    answer = response.strip()
    options = instance.query.options
    if answer.casefold() in {opt.casefold() for opt in options}:
        return Verdict.ok()
    listing = ", ".join(options)
    return Verdict.fail(
        [
            FormatError(
                code="ILLEGAL_OPTION",
                message=f"answer {answer!r} is not among the legal options: {listing}",
            )
        ]
    )


# --- EQA -------------------------------------------------------------------


def check_eqa(instance: TaskInstance, response: str) -> Verdict:
    """Accept iff the trimmed response is a verbatim substring of the passage.

    An all-whitespace response is rejected: an empty string is not a span.
    """
    answer = response.strip()
    passage = instance.query.passage
    if answer and answer in passage:
        return Verdict.ok()
    return Verdict.fail(
        [
            FormatError(
                code="NOT_A_SPAN",
                message=(
                    f"answer {answer!r} is not a contiguous span copied verbatim "
                    "from the passage"
                ),
            )
        ]
    )


# --- NER -------------------------------------------------------------------

_NER_TAG = re.compile(r"<(/?)([A-Za-z][A-Za-z0-9_.\-]*)>")


def check_ner(instance: TaskInstance, response: str) -> Verdict:
    """Validate a flat open/close tagging of the original sentence.

    Three requirements, checked in order: tags pair up without nesting,
    every tag type is in the instance tagset, and deleting all tags
    reproduces the sentence under whitespace normalization.
    """
    tagset = set(instance.query.tagset)
    errors: list[FormatError] = []
    open_type: str | None = None
    open_span: tuple[int, int] | None = None
    flagged_names: set[str] = set()
    for m in _NER_TAG.finditer(response):
        closing = m.group(1) == "/"
        name = m.group(2)
        span = m.span()
        if name not in tagset and name not in flagged_names:
            flagged_names.add(name)
            errors.append(
                FormatError(
                    code="ILLEGAL_LABEL",
                    message=(
                        f"tag type {name!r} is not in the legal tagset "
                        f"{{{', '.join(instance.query.tagset)}}}"
                    ),
                    span=span,
                )
            )
        if not closing:
            if open_type is not None:
                errors.append(
                    FormatError(
                        code="TAG_MISMATCH",
                        message=(
                            f"opening tag <{name}> appears inside the still-open "
                            f"<{open_type}> span; the schema is flat, close "
                            f"</{open_type}> first"
                        ),
                        span=span,
                    )
                )
            open_type, open_span = name, span
        else:
            if open_type is None:
                errors.append(
                    FormatError(
                        code="TAG_MISMATCH",
                        message=f"closing tag </{name}> has no matching opening tag",
                        span=span,
                    )
                )
            elif open_type != name:
                errors.append(
                    FormatError(
                        code="TAG_MISMATCH",
                        message=(
                            f"opening tag <{open_type}> is closed by </{name}>; "
                            "types must match"
                        ),
                        span=span,
                    )
                )
                open_type, open_span = None, None
            else:
                open_type, open_span = None, None
    if open_type is not None:
        errors.append(
            FormatError(
                code="TAG_MISMATCH",
                message=f"opening tag <{open_type}> is never closed",
                span=open_span,
            )
        )
    stripped = _NER_TAG.sub("", response)
    if normalize_ws(stripped) != normalize_ws(instance.query.sentence):
        errors.append(
            FormatError(
                code="CONTENT_ALTERED",
                message=(
                    "removing the tags must reproduce the original sentence "
                    f"exactly; expected {normalize_ws(instance.query.sentence)!r}, "
                    f"got {normalize_ws(stripped)!r}"
                ),
            )
        )
    return Verdict.fail(errors) if errors else Verdict.ok()


# --- Parse -----------------------------------------------------------------


@dataclass
class SexprAtom:
    text: str
    pos: int


@dataclass
class SexprNode:
    label: str
    children: list  # SexprAtom | SexprNode
    pos: int


def _sexpr_tokens(text: str):
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c in "()":
            yield c, i
            i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()":
                j += 1
            yield text[i:j], i
            i = j


def parse_sexpr(text: str):
    """Parse one bracketed tree; returns (root, None) or (None, FormatError)."""

    def bad(message: str, pos: int | None = None) -> tuple[None, FormatError]:
        span = (pos, pos + 1) if pos is not None else None
        return None, FormatError(code="UNBALANCED_PARENS", message=message, span=span)

    stack: list[tuple[list, int]] = []
    root: SexprNode | None = None
    for tok, pos in _sexpr_tokens(text):
        if root is not None:
            return bad("expected a single tree, found trailing material", pos)
        if tok == "(":
            stack.append(([], pos))
        elif tok == ")":
            if not stack:
                return bad("closing parenthesis without a matching opening one", pos)
            items, open_pos = stack.pop()
            if not items:
                return None, FormatError(
                    code="EMPTY_CONSTITUENT",
                    message="empty constituent '()': every node needs a label and content",
                    span=(open_pos, pos + 1),
                )
            head = items[0]
            if not isinstance(head, SexprAtom):
                return None, FormatError(
                    code="ILLEGAL_LABEL",
                    message="a constituent must start with a label atom",
                    span=(open_pos, pos + 1),
                )
            node = SexprNode(label=head.text, children=items[1:], pos=open_pos)
            if stack:
                stack[-1][0].append(node)
            else:
                root = node
        else:
            if not stack:
                return bad(
                    f"token {tok!r} appears outside any parenthesized constituent", pos
                )
            stack[-1][0].append(SexprAtom(tok, pos))
    if stack:
        return bad("opening parenthesis is never closed", stack[-1][1])
    if root is None:
        return bad("no bracketed tree found in the response")
    return root, None


def check_parse(instance: TaskInstance, response: str) -> Verdict:
    """Validate a constituency bracketing of the original sentence.

    The response must be one balanced tree in which word-level labels wrap
    exactly one token, span-level labels wrap one or more subtrees, every
    label is legal, and the left-to-right leaf tokens equal the sentence.
    """
    root, parse_err = parse_sexpr(response)
    if parse_err is not None:
        return Verdict.fail([parse_err])

    q = instance.query
    errors: list[FormatError] = []
    leaf_tokens: list[str] = []

    def visit(node: SexprNode) -> None:
        atoms = [c for c in node.children if isinstance(c, SexprAtom)]
        nodes = [c for c in node.children if isinstance(c, SexprNode)]
        if not node.children:
            errors.append(
                FormatError(
                    code="EMPTY_CONSTITUENT",
                    message=f"constituent ({node.label}) has no subtrees or words",
                )
            )
            return
        if not nodes and len(atoms) == 1:
            # leaf: (word_label token)
            if node.label not in q.word_labels:
                hint = (
                    "is a span-level label and cannot tag a single word"
                    if node.label in q.span_labels
                    else "is not a legal word-level label"
                )
                errors.append(
                    FormatError(
                        code="ILLEGAL_LABEL",
                        message=f"label {node.label!r} {hint}",
                    )
                )
            leaf_tokens.append(atoms[0].text)
            return
        # internal: (span_label child+)
        if node.label not in q.span_labels:
            hint = (
                "is a word-level label and cannot head a span"
                if node.label in q.word_labels
                else "is not a legal span-level label"
            )
            errors.append(
                FormatError(code="ILLEGAL_LABEL", message=f"label {node.label!r} {hint}")
            )
        for child in node.children:
            if isinstance(child, SexprAtom):
                errors.append(
                    FormatError(
                        code="ILLEGAL_LABEL",
                        message=(
                            f"bare token {child.text!r} under ({node.label} ...); every "
                            "word needs its own word-level constituent"
                        ),
                    )
                )
                leaf_tokens.append(child.text)
            else:
                visit(child)

    visit(root)

    expected_tokens = q.sentence.split()
    if leaf_tokens != expected_tokens:
        errors.append(
            FormatError(
                code="CONTENT_ALTERED",
                message=(
                    "the tree's words must equal the original sentence; expected "
                    f"{' '.join(expected_tokens)!r}, got {' '.join(leaf_tokens)!r}"
                ),
            )
        )
    return Verdict.fail(errors) if errors else Verdict.ok()


# --- CapSeg ----------------------------------------------------------------

_CAPSEG_TAG = re.compile(r"<eol>|<eob>")


def _capseg_blocks(response: str):
    """Split the response into blocks of (line_text, start, end) triples.

    A trailing "<eob>" is optional: a blank final segment after the last tag
    is not counted as a block.
    """
    segments: list[tuple[str, int, int, str | None]] = []
    last = 0
    for m in _CAPSEG_TAG.finditer(response):
        segments.append((response[last : m.start()], last, m.start(), m.group()))
        last = m.end()
    segments.append((response[last:], last, len(response), None))

    blocks: list[list[tuple[str, int, int]]] = []
    current: list[tuple[str, int, int]] = []
    for text, start, end, tag in segments:
        if tag is None and not current and not text.strip():
            break  # nothing after the final <eob>
        current.append((text, start, end))
        if tag == "<eob>" or tag is None:
            blocks.append(current)
            current = []
    return blocks


def check_capseg(instance: TaskInstance, response: str) -> Verdict:
    """Validate caption segmentation into <eol>/<eob>-delimited lines and blocks."""
    q = instance.query
    errors: list[FormatError] = []

    stripped = _CAPSEG_TAG.sub("", response)
    if normalize_ws(stripped) != normalize_ws(q.text):
        errors.append(
            FormatError(
                code="CONTENT_ALTERED",
                message=(
                    "removing the separator tags must reproduce the original text "
                    f"exactly; expected {normalize_ws(q.text)!r}, got "
                    f"{normalize_ws(stripped)!r}"
                ),
            )
        )

    for b, lines in enumerate(_capseg_blocks(response), start=1):
        if len(lines) > q.max_lines_per_block:
            errors.append(
                FormatError(
                    code="TOO_MANY_LINES",
                    message=(
                        f"block {b} has {len(lines)} lines; each block may contain "
                        f"at most {q.max_lines_per_block}"
                    ),
                    span=(lines[0][1], lines[-1][2]),
                )
            )
        for l, (text, start, end) in enumerate(lines, start=1):
            length = len(text.strip())
            if length > q.max_line_chars:
                errors.append(
                    FormatError(
                        code="LINE_TOO_LONG",
                        message=(
                            f"line {l} of block {b} is {length} characters long; "
                            f"each line may contain at most {q.max_line_chars}"
                        ),
                        span=(start, end),
                    )
                )
    return Verdict.fail(errors) if errors else Verdict.ok()


# --- MTT -------------------------------------------------------------------


def _term_pattern(term: str) -> re.Pattern:
    return re.compile(r"(?<!\w)" + re.escape(term) + r"(?!\w)", re.IGNORECASE)


def check_mtt(instance: TaskInstance, response: str) -> Verdict:
    """Accept iff every rule's target term occurs as a whole word, any case."""
    errors = []
    for src, tgt in instance.query.rules:
        if not _term_pattern(tgt).search(response):
            errors.append(
                FormatError(
                    code="RULE_VIOLATED",
                    message=(
                        f"the translation must contain the term {tgt!r} "
                        f"(required translation of {src!r})"
                    ),
                )
            )
    return Verdict.fail(errors) if errors else Verdict.ok()


# --- AcroW -----------------------------------------------------------------

_LINE = re.compile(r"[^\n]+")


def check_acrow(instance: TaskInstance, response: str) -> Verdict:
    """Accept iff the non-blank lines' initial letters spell the word."""
    word = instance.query.word
    lines = [m for m in _LINE.finditer(response) if m.group().strip()]
    if len(lines) != len(word):
        return Verdict.fail(
            [
                FormatError(
                    code="WRONG_LINE_COUNT",
                    message=(
                        f"the poem must have exactly {len(word)} non-blank lines, "
                        f"one per letter of {word!r}; found {len(lines)}"
                    ),
                )
            ]
        )
    errors = []
    for i, m in enumerate(lines):
        line = m.group()
        first = next((c for c in line if c.isalpha()), None)
        if first is None:
            errors.append(
                FormatError(
                    code="SPELLING_MISMATCH",
                    message=(
                        f"line {i + 1} has no letter; it must start with "
                        f"{word[i]!r}"
                    ),
                    span=m.span(),
                )
            )
        elif first.casefold() != word[i].casefold():
            offset = m.start() + line.index(first)
            errors.append(
                FormatError(
                    code="SPELLING_MISMATCH",
                    message=(
                        f"line {i + 1} starts with {first!r} but must start with "
                        f"{word[i]!r} to spell {word!r}"
                    ),
                    span=(offset, offset + 1),
                )
            )
    return Verdict.fail(errors) if errors else Verdict.ok()


# --- FTime -----------------------------------------------------------------

_SINGLE_TRIGGER = re.compile(r"^\d{8}T\d{6}$")
_RECURRING = re.compile(
    r"^R(-?\d+)/(\d{8}T\d{6})/P(\d+)Y(\d+)M(\d+)DT(\d+)H(\d+)M(\d+)S$"
)


def parse_single_trigger(text: str) -> Timestamp:
    """Parse a 15-char YYYYMMDDTHHMMSS string into a validated Timestamp."""
    if not _SINGLE_TRIGGER.match(text):
        raise SchemaViolation("timestamp", f"not a YYYYMMDDTHHMMSS string: {text!r}")
    return Timestamp.from_compact(text)


def check_ftime(instance: TaskInstance, response: str) -> Verdict:
    """Accept a single-trigger or recurring time string with a legal date.

    The response is trimmed of outer whitespace, then must match one of
    YYYYMMDDTHHMMSS or Rn/YYYYMMDDTHHMMSS/PnYnMnDTnHnMnS exactly.
    """
    text = response.strip()
    if _SINGLE_TRIGGER.match(text):
        try:
            parse_single_trigger(text)
        except SchemaViolation as exc:
            return Verdict.fail(
                [FormatError(code="ILLEGAL_DATE", message=f"not a legal date: {exc}")]
            )
        return Verdict.ok()

    m = _RECURRING.match(text)
    if m is None:
        return Verdict.fail(
            [
                FormatError(
                    code="GRAMMAR_MISMATCH",
                    message=(
                        f"{text!r} matches neither YYYYMMDDTHHMMSS nor "
                        "Rn/YYYYMMDDTHHMMSS/PnYnMnDTnHnMnS"
                    ),
                )
            ]
        )
    errors = []
    count = int(m.group(1))
    if count != -1 and count < 1:
        errors.append(
            FormatError(
                code="ILLEGAL_RECURRENCE",
                message=f"recurrence count must be -1 (unbounded) or >= 1, got {count}",
            )
        )
    start: Timestamp | None = None
    try:
        start = parse_single_trigger(m.group(2))
    except SchemaViolation as exc:
        errors.append(
            FormatError(code="ILLEGAL_DATE", message=f"not a legal start date: {exc}")
        )
    period = Duration(
        years=int(m.group(3)),
        months=int(m.group(4)),
        days=int(m.group(5)),
        hours=int(m.group(6)),
        minutes=int(m.group(7)),
        seconds=int(m.group(8)),
    )
    if period.is_zero:
        errors.append(
            FormatError(
                code="ILLEGAL_RECURRENCE",
                message="recurrence period must not be all-zero",
            )
        )
    if errors:
        return Verdict.fail(errors)
    Recurrence(count=count, start=start, period=period)  # invariant double-check
    return Verdict.ok()
