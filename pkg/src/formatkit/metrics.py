"""Format faithfulness rate and per-task general-quality scorers.

All scorers return values in [0, 1]. Responses that fail their structural
check receive a general-quality score of 0 for the structure-dependent
metrics (entity-bag F1, bracket F1, break F1); the aggregation layer applies
the same rule using the checker verdicts.
"""

from __future__ import annotations

import math
import re
import string
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .checkers.core import SexprAtom, SexprNode, _NER_TAG, parse_sexpr
from .errors import EmptySetError, LengthMismatchError, RangeViolation
from .model import TaskInstance, TaskKind, Verdict


def ffr(verdicts: Sequence[Verdict]) -> float:
    """Fraction of verdicts with score 1."""
    if not verdicts:
        raise EmptySetError("cannot compute a pass rate over an empty verdict list")
    return sum(1 for v in verdicts if v.score == 1) / len(verdicts)


def exact_match_accuracy(pred: str, refs: Sequence[str], casefold: bool = False) -> int:
    """1 iff the trimmed prediction equals any trimmed reference."""
    p = pred.strip().casefold() if casefold else pred.strip()
    for ref in refs:
        r = ref.strip().casefold() if casefold else ref.strip()
        if p == r:
            return 1
    return 0


def _f1_from_counts(match: int, n_pred: int, n_gold: int) -> float:
    # single division: 2PR/(P+R) simplifies to 2m/(n_pred+n_gold), which keeps
    # the result correctly rounded and bit-reproducible
    if n_pred == 0 and n_gold == 0:
        return 1.0
    if n_pred == 0 or n_gold == 0:
        return 0.0
    return 2 * match / (n_pred + n_gold)


_ARTICLES = re.compile(r"\b(a|an|the)\b")
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def _answer_tokens(text: str) -> list[str]:
    # lower-case, drop punctuation, drop articles, split on whitespace
    text = text.lower().translate(_PUNCT_TABLE)
    text = _ARTICLES.sub(" ", text)
    return text.split()


def token_f1(pred: str, refs: Sequence[str]) -> float:
    """Best token-overlap F1 against any reference, after answer normalization.

    Both token lists empty scores 1; exactly one empty scores 0.
    """
    if not refs:
        raise EmptySetError("token_f1 needs at least one reference")
    p_tokens = _answer_tokens(pred)
    best = 0.0
    for ref in refs:
        r_tokens = _answer_tokens(ref)
        match = sum((Counter(p_tokens) & Counter(r_tokens)).values())
        best = max(best, _f1_from_counts(match, len(p_tokens), len(r_tokens)))
    return best


def entity_bag(tagged: str) -> Counter | None:
    """Multiset of (token, type) pairs from a flat tagging, or None if broken.

    Returns None when the open/close tag structure is not a legal flat
    pairing, so callers can apply the zero-score rule.
    """
    bag: Counter = Counter()
    open_type: str | None = None
    span_start = 0
    for m in _NER_TAG.finditer(tagged):
        closing = m.group(1) == "/"
        name = m.group(2)
        if not closing:
            if open_type is not None:
                return None
            open_type = name
            span_start = m.end()
        else:
            if open_type != name:
                return None
            for token in tagged[span_start : m.start()].split():
                bag[(token, name)] += 1
            open_type = None
    if open_type is not None:
        return None
    return bag


def ner_bag_f1(pred_tagged: str, gold_tagged: str) -> float:
    """F1 over (token, type) multisets extracted from two flat taggings."""
    gold = entity_bag(gold_tagged)
    if gold is None:
        raise ValueError("gold tagging is not a legal flat tag structure")
    pred = entity_bag(pred_tagged)
    if pred is None:
        return 0.0
    match = sum((pred & gold).values())
    return _f1_from_counts(match, sum(pred.values()), sum(gold.values()))


def tree_constituents(tree_text: str) -> Counter | None:
    """Multiset of (label, start, end) for internal nodes, or None if unusable.

    Token positions are 0-based; `end` is exclusive. Leaf (single-token)
    constituents are excluded. A tree containing a childless node is
    unusable, like one that does not parse at all.
    """
    root, err = parse_sexpr(tree_text)
    if err is not None:
        return None
    out: Counter = Counter()

    def walk(node: SexprNode, i: int) -> int:
        if not node.children:
            raise ValueError("childless node")
        atoms = [c for c in node.children if isinstance(c, SexprAtom)]
        nodes = [c for c in node.children if isinstance(c, SexprNode)]
        if not nodes and len(atoms) == 1:
            return i + 1
        start = i
        for child in node.children:
            if isinstance(child, SexprAtom):
                i += 1
            else:
                i = walk(child, i)
        out[(node.label, start, i)] += 1
        return i

    try:
        walk(root, 0)
    except ValueError:
        return None
    return out


def bracket_f1(pred_tree: str, gold_tree: str) -> float:
    """F1 over labeled constituent multisets of two bracketed trees."""
    gold = tree_constituents(gold_tree)
    if gold is None:
        raise ValueError("gold tree does not parse")
    pred = tree_constituents(pred_tree)
    if pred is None:
        return 0.0
    match = sum((pred & gold).values())
    return _f1_from_counts(match, sum(pred.values()), sum(gold.values()))


_SEG_TAG = re.compile(r"(<eol>|<eob>)")


def segmentation_breaks(segmented: str) -> tuple[tuple[str, ...], set[tuple[int, str]]]:
    """Words plus break positions of an <eol>/<eob>-segmented text.

    A break is (character offset into the tag-stripped, whitespace-normalized
    text, kind), where kind is "eol" or "eob".
    """
    words: list[str] = []
    breaks: set[tuple[int, str]] = set()
    offset = 0
    for part in _SEG_TAG.split(segmented):
        if part == "<eol>" or part == "<eob>":
            breaks.add((offset, part[1:4]))
        else:
            for w in part.split():
                offset = offset + len(w) if not words else offset + 1 + len(w)
                words.append(w)
    return tuple(words), breaks


def break_f1(pred_segmented: str, gold_segmented: str) -> float:
    """F1 over (offset, kind) break sets of two segmentations.

    A prediction whose tag-stripped text differs from the gold text scores 0.
    """
    gold_words, gold_breaks = segmentation_breaks(gold_segmented)
    pred_words, pred_breaks = segmentation_breaks(pred_segmented)
    if pred_words != gold_words:
        return 0.0
    match = len(pred_breaks & gold_breaks)
    return _f1_from_counts(match, len(pred_breaks), len(gold_breaks))


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu4(hyps: Sequence[str], refs: Sequence[Sequence[str]]) -> float:
    """Corpus-level BLEU-4: pooled modified n-gram precisions, no smoothing.

    Returns 0 when any pooled n-gram precision is 0. The brevity penalty
    uses the closest reference length per segment (ties prefer the shorter).
    """
    if len(hyps) != len(refs):
        raise LengthMismatchError(
            f"{len(hyps)} hypotheses but {len(refs)} reference lists"
        )
    if not hyps:
        raise EmptySetError("cannot compute BLEU over an empty corpus")
    match = [0] * 5
    total = [0] * 5
    hyp_len = 0
    ref_len = 0
    for hyp, ref_list in zip(hyps, refs):
        if not ref_list:
            raise LengthMismatchError("every hypothesis needs at least one reference")
        h = hyp.split()
        rs = [r.split() for r in ref_list]
        hyp_len += len(h)
        ref_len += min((abs(len(r) - len(h)), len(r)) for r in rs)[1]
        for n in range(1, 5):
            h_counts = _ngram_counts(h, n)
            total[n] += sum(h_counts.values())
            if h_counts:
                best: Counter = Counter()
                for r in rs:
                    best |= _ngram_counts(r, n)
                match[n] += sum((h_counts & best).values())
    if any(total[n] == 0 or match[n] == 0 for n in range(1, 5)):
        return 0.0
    log_precision = sum(math.log(match[n] / total[n]) for n in range(1, 5)) / 4.0
    brevity = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return brevity * math.exp(log_precision)


def agent_score_ratio(score: float, max_score: float) -> float:
    """Game score divided by the maximum achievable score."""
    if max_score <= 0:
        raise RangeViolation(f"max_score must be positive, got {max_score}")
    if not 0 <= score <= max_score:
        raise RangeViolation(f"score {score} outside [0, {max_score}]")
    return score / max_score


# --- report aggregation ------------------------------------------------------


@dataclass(frozen=True)
class TaskReport:
    n: int
    ffr: float
    gq: float | None = None
    gq_metric: str | None = None


@dataclass(frozen=True)
class EvalReport:
    """Per-task pass rates and quality aggregates, plus the macro-average FFR."""

    tasks: Mapping[str, TaskReport]
    overall_ffr: float | None


@dataclass(frozen=True)
class ScoredRow:
    instance: TaskInstance
    response: str
    verdict: Verdict


GQ_METRIC_NAMES: dict[TaskKind, str] = {
    TaskKind.MCQ: "accuracy",
    TaskKind.EQA: "token_f1",
    TaskKind.NER: "bag_f1",
    TaskKind.PARSE: "bracket_f1",
    TaskKind.CAPSEG: "break_f1",
    TaskKind.MTT: "corpus_bleu4",
    TaskKind.FTIME: "accuracy",
    TaskKind.AGENT: "score_ratio",
}

_ZERO_ON_FORMAT_FAIL = {TaskKind.NER, TaskKind.PARSE, TaskKind.CAPSEG}


def _task_gq(task: TaskKind, rows: list[ScoredRow]) -> float | None:
    def per_row(score_fn) -> float | None:
        values = []
        for row in rows:
            if not row.instance.references:
                continue
            if task in _ZERO_ON_FORMAT_FAIL and not row.verdict.passed:
                values.append(0.0)
            else:
                values.append(score_fn(row))
        return sum(values) / len(values) if values else None

    if task is TaskKind.MCQ:
        return per_row(
            lambda r: exact_match_accuracy(r.response, r.instance.references, casefold=True)
        )
    if task is TaskKind.FTIME:
        return per_row(lambda r: exact_match_accuracy(r.response, r.instance.references))
    if task is TaskKind.EQA:
        return per_row(lambda r: token_f1(r.response, r.instance.references))
    if task is TaskKind.NER:
        return per_row(lambda r: ner_bag_f1(r.response, r.instance.references[0]))
    if task is TaskKind.PARSE:
        return per_row(lambda r: bracket_f1(r.response, r.instance.references[0]))
    if task is TaskKind.CAPSEG:
        return per_row(lambda r: break_f1(r.response, r.instance.references[0]))
    if task is TaskKind.MTT:
        pairs = [(r.response, r.instance.references) for r in rows if r.instance.references]
        if not pairs:
            return None
        return bleu4([p[0] for p in pairs], [p[1] for p in pairs])
    if task is TaskKind.AGENT:
        values = []
        for row in rows:
            meta = row.instance.meta
            if "score" in meta and "max_score" in meta:
                try:
                    values.append(
                        agent_score_ratio(float(meta["score"]), float(meta["max_score"]))
                    )
                except (ValueError, RangeViolation):
                    continue  # malformed annotations don't sink the report
        return sum(values) / len(values) if values else None
    return None  # AcroW (judge out of scope) and XDL (no references)


def aggregate_report(rows: Iterable[ScoredRow]) -> EvalReport:
    """Fold scored rows into per-task FFR/GQ aggregates.

    The overall figure is the unweighted mean of per-task pass rates.
    """
    by_task: dict[TaskKind, list[ScoredRow]] = {}
    for row in rows:
        by_task.setdefault(row.instance.task, []).append(row)
    tasks: dict[str, TaskReport] = {}
    for task in TaskKind:
        group = by_task.get(task)
        if not group:
            continue
        task_ffr = ffr([r.verdict for r in group])
        gq = _task_gq(task, group)
        tasks[task.value] = TaskReport(
            n=len(group),
            ffr=task_ffr,
            gq=gq,
            gq_metric=GQ_METRIC_NAMES.get(task) if gq is not None else None,
        )
    overall = sum(t.ffr for t in tasks.values()) / len(tasks) if tasks else None
    return EvalReport(tasks=tasks, overall_ffr=overall)
