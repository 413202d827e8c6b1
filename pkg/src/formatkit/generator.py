"""Pluggable completion backends and deterministic prompt assembly.

Prompt templates are authored here and frozen: rendering is a pure function
of (builder, instance, history), so identical inputs always produce
byte-identical prompts.
"""

from __future__ import annotations

import json
import os
import string
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

import httpx

from .errors import (
    AuthMissing,
    BackendError,
    BackendTimeout,
    MissingTemplateField,
    MockScriptExhausted,
    RangeViolation,
)
from .model import (
    AgentQuery,
    CapSegQuery,
    EqaQuery,
    FormatError,
    FTimeQuery,
    McqQuery,
    MttQuery,
    NerQuery,
    ParseQuery,
    TaskInstance,
    TaskKind,
    XdlQuery,
)

API_KEY_ENV = "FORMATKIT_API_KEY"


@dataclass(frozen=True)
class GenParams:
    """Decoding controls; temperature 0 means greedy decoding."""

    temperature: float = 0.0
    max_new_tokens: int = 256
    stop_sequences: tuple[str, ...] = ()

    def __post_init__(self):
        if self.temperature < 0:
            raise RangeViolation(f"temperature must be >= 0, got {self.temperature}")


@runtime_checkable
class GeneratorClient(Protocol):
    def generate(self, prompt: str, params: GenParams) -> str: ...


DEFAULT_TASK_DESCRIPTIONS: dict[TaskKind, str] = {
    TaskKind.MCQ: (
        "Classify the question into exactly one of the listed options. "
        "Reply with that option and nothing else."
    ),
    TaskKind.EQA: (
        "Answer the question by copying a contiguous span from the passage. "
        "Do not change, add, or remove a single character of the copied span."
    ),
    TaskKind.NER: (
        "Mark every named entity in the sentence by wrapping it in <TYPE> and "
        "</TYPE> tags. Use only the listed entity types, close every tag you "
        "open, never nest tags, and keep the rest of the sentence unchanged."
    ),
    TaskKind.PARSE: (
        "Produce a constituency tree for the sentence in bracket notation. "
        "Parentheses must balance, word-level labels wrap exactly one word, "
        "span-level labels wrap one or more subtrees, and the tree's words "
        "must equal the sentence."
    ),
    TaskKind.CAPSEG: (
        "Insert <eol> and <eob> tags into the text to split it into caption "
        "lines and caption blocks. Keep the wording unchanged and respect the "
        "line-length and lines-per-block limits."
    ),
    TaskKind.MTT: (
        "Translate the source sentence into English. Every listed terminology "
        "rule must be applied: the required target term must appear in your "
        "translation as a whole word."
    ),
    TaskKind.ACROW: (
        "Write an acrostic poem. The first letter of each line must spell the "
        "given word, one line per letter, in order."
    ),
    TaskKind.FTIME: (
        "Write the trigger time in the compact form YYYYMMDDTHHMMSS, or "
        "Rn/YYYYMMDDTHHMMSS/PnYnMnDTnHnMnS for a recurring event. The date "
        "must be a legal calendar date. Reply with the time string only."
    ),
    TaskKind.AGENT: (
        "You are playing a text adventure. Reply with a single action that "
        "can be executed in the current situation, and nothing else."
    ),
    TaskKind.XDL: (
        "Write the chemical procedure as XDL markup. The markup must be well "
        "formed, rooted at <XDL>, and use only known elements with their "
        "required attributes."
    ),
}

RAW_TEMPLATE = "{description}\n\n{examples}Query:\n{query}\n\nAnswer:\n"

REFINE_TEMPLATE = (
    "{description}\n\nQuery:\n{query}\n\nPrevious answer:\n{prior_response}\n\n"
    "The previous answer violates the format requirements:\n{errors}\n\n"
    "{thoughts}Rewrite the answer so it satisfies every requirement.\n\nAnswer:\n"
)

THOUGHTS_INSTRUCTION = (
    "First write a short reflection on how to fix each problem above, "
    "then give the corrected answer.\n\n"
)


def render_query(instance: TaskInstance) -> str:
    """Deterministic plain-text rendering of a query payload."""
    q = instance.query
    if isinstance(q, McqQuery):
        return f"Question: {q.question}\nOptions: {' | '.join(q.options)}"
    if isinstance(q, EqaQuery):
        return f"Passage: {q.passage}\nQuestion: {q.question}"
    if isinstance(q, NerQuery):
        return f"Sentence: {q.sentence}\nEntity types: {' | '.join(q.tagset)}"
    if isinstance(q, ParseQuery):
        return (
            f"Sentence: {q.sentence}\n"
            f"Word-level labels: {' '.join(sorted(q.word_labels))}\n"
            f"Span-level labels: {' '.join(sorted(q.span_labels))}"
        )
    if isinstance(q, CapSegQuery):
        return (
            f"Text: {q.text}\n"
            f"Limits: at most {q.max_line_chars} characters per line, "
            f"at most {q.max_lines_per_block} lines per block"
        )
    if isinstance(q, MttQuery):
        rules = "; ".join(f"{src} -> {tgt}" for src, tgt in q.rules) or "(none)"
        return f"Source: {q.source}\nTerminology rules: {rules}"
    if isinstance(q, FTimeQuery):
        text = (
            f"Reference time: {q.reference_time.compact()} ({q.weekday})\n"
            f"Category: {q.category}"
        )
        instruction = instance.meta.get("instruction")
        if instruction:
            text += f"\nInstruction: {instruction}"
        return text
    if isinstance(q, AgentQuery):
        text = f"Observation: {q.observation}"
        if q.legal_action_hint:
            text += f"\nKnown actions: {q.legal_action_hint}"
        return text
    if isinstance(q, XdlQuery):
        return f"Description: {q.description}"
    return f"Word: {q.word}"  # AcroW


def _template_fields(template: str) -> set[str]:
    return {
        name for _, name, _, _ in string.Formatter().parse(template) if name is not None
    }


@dataclass(frozen=True)
class PromptBuilder:
    """Frozen prompt recipe: task description, few-shot pairs, templates."""

    task_description: str
    few_shot: tuple[tuple[str, str], ...] = ()
    raw_template: str = RAW_TEMPLATE
    refine_template: str = REFINE_TEMPLATE
    thoughts_instruction: str = THOUGHTS_INSTRUCTION

    def __post_init__(self):
        for name in ("description", "examples", "query"):
            if name not in _template_fields(self.raw_template):
                raise MissingTemplateField(name, "raw_template")
        for name in ("description", "query", "prior_response", "errors", "thoughts"):
            if name not in _template_fields(self.refine_template):
                raise MissingTemplateField(name, "refine_template")

    @classmethod
    def for_task(
        cls, task: TaskKind, few_shot: Sequence[tuple[str, str]] = ()
    ) -> "PromptBuilder":
        return cls(
            task_description=DEFAULT_TASK_DESCRIPTIONS[task],
            few_shot=tuple(few_shot),
        )


def build_raw_prompt(builder: PromptBuilder, instance: TaskInstance) -> str:
    """Render the first-attempt prompt: description, examples, then query."""
    examples = "".join(
        f"Query:\n{q}\n\nAnswer:\n{a}\n\n" for q, a in builder.few_shot
    )
    return builder.raw_template.format(
        description=builder.task_description,
        examples=examples,
        query=render_query(instance),
    )


def build_refine_prompt(
    builder: PromptBuilder,
    instance: TaskInstance,
    prior_response: str,
    errors: Sequence[FormatError],
    with_thoughts: bool = False,
) -> str:
    """Render a repair prompt carrying the prior answer and checker messages."""
    if not errors:
        raise RangeViolation("a refinement prompt needs at least one error")
    error_block = "\n".join(f"- {err.message}" for err in errors)
    return builder.refine_template.format(
        description=builder.task_description,
        query=render_query(instance),
        prior_response=prior_response,
        errors=error_block,
        thoughts=builder.thoughts_instruction if with_thoughts else "",
    )


class MockGenerator:
    """Replays a fixed script of completions; errors when consumed past it."""

    def __init__(self, script: Sequence[str]):
        self._script = list(script)
        self._index = 0
        self._lock = threading.Lock()
        self.prompts: list[str] = []

    def generate(self, prompt: str, params: GenParams) -> str:
        with self._lock:
            if self._index >= len(self._script):
                raise MockScriptExhausted(
                    f"mock script exhausted after {len(self._script)} completions"
                )
            self.prompts.append(prompt)
            text = self._script[self._index]
            self._index += 1
            return text


def _log_line(log_path: str | Path | None, event: dict) -> None:
    if log_path is None:
        return
    with open(log_path, "a", encoding="utf-8") as handle:
        handle.write(json.dumps(event, ensure_ascii=False) + "\n")


def http_generate(
    endpoint: str,
    model_name: str,
    prompt: str,
    params: GenParams,
    *,
    api_key: str | None = None,
    client: httpx.Client | None = None,
    max_attempts: int = 3,
    backoff_seconds: float = 0.5,
    timeout: float = 60.0,
    log_path: str | Path | None = None,
) -> str:
    """Call a completions-style HTTP endpoint, retrying transient failures.

    The credential comes from `api_key` or the FORMATKIT_API_KEY environment
    variable and is checked before any network activity. Server errors (5xx),
    timeouts, and transport failures are retried with exponential backoff for
    `max_attempts` total attempts; client errors (4xx) fail immediately.
    """
    key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
    if not key:
        raise AuthMissing(
            f"no API credential: set {API_KEY_ENV} or pass api_key explicitly"
        )
    payload = {
        "model": model_name,
        "prompt": prompt,
        "temperature": params.temperature,
        "max_tokens": params.max_new_tokens,
    }
    if params.stop_sequences:
        payload["stop"] = list(params.stop_sequences)
    own_client = client is None
    http = client or httpx.Client(timeout=timeout)
    last_error: Exception | None = None
    try:
        for attempt in range(1, max_attempts + 1):
            started = time.monotonic()
            try:
                response = http.post(
                    endpoint,
                    json=payload,
                    headers={"Authorization": f"Bearer {key}"},
                )
            except httpx.TimeoutException as exc:
                last_error = BackendTimeout(f"attempt {attempt}: {exc}")
            except httpx.TransportError as exc:
                last_error = BackendError(0, f"attempt {attempt}: {exc}")
            else:
                latency_ms = round((time.monotonic() - started) * 1000, 3)
                event = {
                    "event": "generate",
                    "endpoint": endpoint,
                    "model": model_name,
                    "attempt": attempt,
                    "status": response.status_code,
                    "latency_ms": latency_ms,
                    "request_id": response.headers.get("x-request-id"),
                    "prompt_chars": len(prompt),
                }
                if response.status_code == 200:
                    data = response.json()
                    if isinstance(data.get("usage"), dict):
                        event["token_usage"] = data["usage"]
                    _log_line(log_path, event)
                    try:
                        return data["choices"][0]["text"]
                    except (KeyError, IndexError, TypeError) as exc:
                        raise BackendError(
                            200, f"malformed completion payload: {exc}"
                        ) from exc
                _log_line(log_path, event)
                if 400 <= response.status_code < 500:
                    raise BackendError(response.status_code, response.text[:200])
                last_error = BackendError(response.status_code, response.text[:200])
            if attempt < max_attempts and backoff_seconds > 0:
                time.sleep(backoff_seconds * (2 ** (attempt - 1)))
        assert last_error is not None
        raise last_error
    finally:
        if own_client:
            http.close()


@dataclass
class HttpGenerator:
    """GeneratorClient backed by a completions-style HTTP endpoint."""

    endpoint: str
    model: str
    api_key: str | None = None
    max_attempts: int = 3
    backoff_seconds: float = 0.5
    timeout: float = 60.0
    log_path: str | None = None
    client: httpx.Client | None = field(default=None, repr=False)

    def generate(self, prompt: str, params: GenParams) -> str:
        return http_generate(
            self.endpoint,
            self.model,
            prompt,
            params,
            api_key=self.api_key,
            client=self.client,
            max_attempts=self.max_attempts,
            backoff_seconds=self.backoff_seconds,
            timeout=self.timeout,
            log_path=self.log_path,
        )
