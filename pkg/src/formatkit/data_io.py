"""Dataset ingestion, seeded sampling, and report serialization.

Datasets are line-delimited JSON with the fields `task`, `id`, `query`,
`references`, and optional `meta`. Serialization is canonical: field order
is fixed, label sets are sorted, and empty `meta` is omitted, so a load
followed by a write is byte-identical.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .errors import (
    DatasetParseError,
    DuplicateIdError,
    RangeViolation,
    SchemaViolation,
)
from .metrics import EvalReport
from .model import (
    AcroWQuery,
    AgentQuery,
    CapSegQuery,
    EqaQuery,
    FormatError,
    FTimeQuery,
    McqQuery,
    MttQuery,
    NerQuery,
    ParseQuery,
    QueryPayload,
    TaskInstance,
    TaskKind,
    Timestamp,
    Verdict,
    XdlQuery,
    validate_instance,
)


def _want(doc: Mapping[str, Any], field: str, kind, *, path: str) -> Any:
    if field not in doc:
        raise SchemaViolation(f"{path}.{field}", "missing required field")
    value = doc[field]
    if kind is int and isinstance(value, bool) or not isinstance(value, kind):
        raise SchemaViolation(
            f"{path}.{field}", f"expected {kind.__name__}, got {type(value).__name__}"
        )
    return value


def _str_list(doc: Mapping[str, Any], field: str, *, path: str) -> list[str]:
    value = _want(doc, field, list, path=path)
    for i, item in enumerate(value):
        if not isinstance(item, str):
            raise SchemaViolation(f"{path}.{field}[{i}]", "expected a string")
    return value


def _reject_unknown(doc: Mapping[str, Any], known: set[str], *, path: str) -> None:
    for key in doc:
        if key not in known:
            raise SchemaViolation(f"{path}.{key}", "unknown field")


def query_from_doc(task: TaskKind, doc: Mapping[str, Any]) -> QueryPayload:
    """Decode one task-tagged query object; fails fast on shape errors."""
    if not isinstance(doc, Mapping):
        raise SchemaViolation("query", "expected an object")
    path = "query"
    if task is TaskKind.MCQ:
        _reject_unknown(doc, {"question", "options"}, path=path)
        return McqQuery(
            question=_want(doc, "question", str, path=path),
            options=tuple(_str_list(doc, "options", path=path)),
        )
    if task is TaskKind.EQA:
        _reject_unknown(doc, {"passage", "question"}, path=path)
        return EqaQuery(
            passage=_want(doc, "passage", str, path=path),
            question=_want(doc, "question", str, path=path),
        )
    if task is TaskKind.NER:
        _reject_unknown(doc, {"sentence", "tagset"}, path=path)
        return NerQuery(
            sentence=_want(doc, "sentence", str, path=path),
            tagset=tuple(_str_list(doc, "tagset", path=path)),
        )
    if task is TaskKind.PARSE:
        _reject_unknown(doc, {"sentence", "word_labels", "span_labels"}, path=path)
        return ParseQuery(
            sentence=_want(doc, "sentence", str, path=path),
            word_labels=frozenset(_str_list(doc, "word_labels", path=path)),
            span_labels=frozenset(_str_list(doc, "span_labels", path=path)),
        )
    if task is TaskKind.CAPSEG:
        _reject_unknown(doc, {"text", "max_line_chars", "max_lines_per_block"}, path=path)
        return CapSegQuery(
            text=_want(doc, "text", str, path=path),
            max_line_chars=(
                _want(doc, "max_line_chars", int, path=path)
                if "max_line_chars" in doc
                else 42
            ),
            max_lines_per_block=(
                _want(doc, "max_lines_per_block", int, path=path)
                if "max_lines_per_block" in doc
                else 2
            ),
        )
    if task is TaskKind.MTT:
        _reject_unknown(doc, {"source", "rules"}, path=path)
        rules = []
        raw_rules = _want(doc, "rules", list, path=path) if "rules" in doc else []
        for i, pair in enumerate(raw_rules):
            if (
                not isinstance(pair, list)
                or len(pair) != 2
                or not all(isinstance(x, str) for x in pair)
            ):
                raise SchemaViolation(
                    f"{path}.rules[{i}]", "expected a [source, target] string pair"
                )
            rules.append((pair[0], pair[1]))
        return MttQuery(source=_want(doc, "source", str, path=path), rules=tuple(rules))
    if task is TaskKind.ACROW:
        _reject_unknown(doc, {"word"}, path=path)
        return AcroWQuery(word=_want(doc, "word", str, path=path))
    if task is TaskKind.FTIME:
        _reject_unknown(doc, {"reference_time", "weekday", "category"}, path=path)
        raw = _want(doc, "reference_time", str, path=path)
        try:
            reference = Timestamp.from_compact(raw)
        except SchemaViolation as exc:
            raise SchemaViolation(f"{path}.reference_time", str(exc)) from exc
        return FTimeQuery(
            reference_time=reference,
            weekday=_want(doc, "weekday", str, path=path),
            category=_want(doc, "category", str, path=path),
        )
    if task is TaskKind.AGENT:
        _reject_unknown(doc, {"session_id", "observation", "legal_action_hint"}, path=path)
        hint = doc.get("legal_action_hint")
        if hint is not None and not isinstance(hint, str):
            raise SchemaViolation(f"{path}.legal_action_hint", "expected a string or null")
        return AgentQuery(
            session_id=_want(doc, "session_id", str, path=path),
            observation=_want(doc, "observation", str, path=path),
            legal_action_hint=hint,
        )
    if task is TaskKind.XDL:
        _reject_unknown(doc, {"description"}, path=path)
        return XdlQuery(description=_want(doc, "description", str, path=path))
    raise SchemaViolation("task", f"unhandled task {task!r}")


def query_to_doc(query: QueryPayload) -> dict[str, Any]:
    """Encode a query payload in canonical field order."""
    if isinstance(query, McqQuery):
        return {"question": query.question, "options": list(query.options)}
    if isinstance(query, EqaQuery):
        return {"passage": query.passage, "question": query.question}
    if isinstance(query, NerQuery):
        return {"sentence": query.sentence, "tagset": list(query.tagset)}
    if isinstance(query, ParseQuery):
        return {
            "sentence": query.sentence,
            "word_labels": sorted(query.word_labels),
            "span_labels": sorted(query.span_labels),
        }
    if isinstance(query, CapSegQuery):
        return {
            "text": query.text,
            "max_line_chars": query.max_line_chars,
            "max_lines_per_block": query.max_lines_per_block,
        }
    if isinstance(query, MttQuery):
        return {"source": query.source, "rules": [list(pair) for pair in query.rules]}
    if isinstance(query, AcroWQuery):
        return {"word": query.word}
    if isinstance(query, FTimeQuery):
        return {
            "reference_time": query.reference_time.compact(),
            "weekday": query.weekday,
            "category": query.category,
        }
    if isinstance(query, AgentQuery):
        doc: dict[str, Any] = {
            "session_id": query.session_id,
            "observation": query.observation,
        }
        if query.legal_action_hint is not None:
            doc["legal_action_hint"] = query.legal_action_hint
        return doc
    if isinstance(query, XdlQuery):
        return {"description": query.description}
    raise SchemaViolation("query", f"unhandled payload {type(query).__name__}")


def instance_from_doc(doc: Any, line: int | None = None) -> TaskInstance:
    """Decode and fully validate one dataset record."""
    try:
        if not isinstance(doc, Mapping):
            raise SchemaViolation("record", "expected an object")
        _reject_unknown(
            dict(doc), {"task", "id", "query", "references", "meta"}, path="record"
        )
        task = TaskKind.from_name(_want(doc, "task", str, path="record"))
        query = query_from_doc(task, _want(doc, "query", dict, path="record"))
        references = tuple(_str_list(doc, "references", path="record")) if "references" in doc else ()
        meta_doc = doc.get("meta", {})
        if not isinstance(meta_doc, Mapping) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in meta_doc.items()
        ):
            raise SchemaViolation("record.meta", "expected a string-to-string object")
        instance = TaskInstance(
            task=task,
            id=_want(doc, "id", str, path="record"),
            query=query,
            references=references,
            meta=dict(meta_doc),
        )
        validate_instance(instance)
        return instance
    except SchemaViolation as exc:
        if line is not None and exc.line is None:
            raise SchemaViolation(exc.field, exc.bare_message, line=line) from exc
        raise


def instance_to_doc(instance: TaskInstance) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "task": instance.task.value,
        "id": instance.id,
        "query": query_to_doc(instance.query),
        "references": list(instance.references),
    }
    if instance.meta:
        doc["meta"] = dict(instance.meta)
    return doc


def dumps_record(doc: Mapping[str, Any]) -> str:
    """Canonical single-line JSON used for every line-delimited record."""
    return json.dumps(doc, ensure_ascii=False)


def verdict_to_doc(verdict: Verdict) -> dict[str, Any]:
    errors = []
    for err in verdict.errors:
        e: dict[str, Any] = {"code": err.code, "message": err.message}
        if err.span is not None:
            e["span"] = list(err.span)
        errors.append(e)
    return {"score": verdict.score, "errors": errors}


def verdict_from_doc(doc: Mapping[str, Any]) -> Verdict:
    errors = []
    for e in doc.get("errors", ()):
        span = tuple(e["span"]) if e.get("span") is not None else None
        errors.append(FormatError(code=e["code"], message=e["message"], span=span))
    return Verdict(score=doc["score"], errors=tuple(errors))


@dataclass(frozen=True)
class DatasetFile:
    """A loaded dataset: validated records with unique ids."""

    path: str
    records: tuple[TaskInstance, ...]

    def __len__(self) -> int:
        return len(self.records)

    def by_id(self) -> dict[str, TaskInstance]:
        return {inst.id: inst for inst in self.records}


def load_jsonl(path: str | Path) -> DatasetFile:
    """Load a line-delimited dataset; diagnostics carry 1-based line numbers."""
    records: list[TaskInstance] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            try:
                doc = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DatasetParseError(lineno, exc.msg) from exc
            instance = instance_from_doc(doc, line=lineno)
            if instance.id in seen:
                raise DuplicateIdError(instance.id, seen[instance.id], lineno)
            seen[instance.id] = lineno
            records.append(instance)
    return DatasetFile(path=str(path), records=tuple(records))


def write_jsonl(records: Iterable[TaskInstance], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for instance in records:
            handle.write(dumps_record(instance_to_doc(instance)) + "\n")


def sample_queries(
    dataset: DatasetFile | Sequence[TaskInstance], cap: int = 4000, seed: int = 0
) -> list[TaskInstance]:
    """Seeded shuffle of all records, truncated to `cap` if there are more.

    With n <= cap this is a plain shuffled copy; otherwise it is a uniform
    sample without replacement of size cap. Deterministic for a fixed seed.
    """
    if cap < 1:
        raise RangeViolation(f"cap must be >= 1, got {cap}")
    records = list(dataset.records if isinstance(dataset, DatasetFile) else dataset)
    return random.Random(seed).sample(records, k=min(cap, len(records)))


def report_to_doc(
    report: EvalReport, provenance: Mapping[str, Any] | None = None
) -> dict[str, Any]:
    tasks: dict[str, Any] = {}
    for name, task in report.tasks.items():
        tasks[name] = {
            "n": task.n,
            "ffr": task.ffr,
            "gq": task.gq,
            "gq_metric": task.gq_metric,
        }
    doc: dict[str, Any] = {
        "tasks": tasks,
        "task_count": len(tasks),
        "overall_ffr": report.overall_ffr,
    }
    if provenance is not None:
        doc["provenance"] = dict(provenance)
    return doc


def write_report(
    report: EvalReport,
    path: str | Path,
    *,
    records: Iterable[Mapping[str, Any]] | None = None,
    traces: Iterable[Mapping[str, Any]] | None = None,
    provenance: Mapping[str, Any] | None = None,
) -> None:
    """Write summary.json (always) plus optional records/traces JSONL files.

    `path` is a directory, created if needed. An empty report still produces
    a summary with zero tasks.
    """
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    summary = report_to_doc(report, provenance)
    (out / "summary.json").write_text(
        json.dumps(summary, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    if records is not None:
        with open(out / "records.jsonl", "w", encoding="utf-8") as handle:
            for doc in records:
                handle.write(dumps_record(doc) + "\n")
    if traces is not None:
        with open(out / "traces.jsonl", "w", encoding="utf-8") as handle:
            for doc in traces:
                handle.write(dumps_record(doc) + "\n")
