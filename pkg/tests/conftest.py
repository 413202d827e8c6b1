from __future__ import annotations

import json
from pathlib import Path

import pytest

from formatkit.model import (
    AcroWQuery,
    AgentQuery,
    CapSegQuery,
    EqaQuery,
    FTimeQuery,
    McqQuery,
    MttQuery,
    NerQuery,
    ParseQuery,
    TaskInstance,
    TaskKind,
    Timestamp,
    XdlQuery,
)

FIXTURES = Path(__file__).parent / "fixtures"

PTB_WORD_LABELS = frozenset(
    {"DT", "NN", "NNS", "NNP", "VBD", "VBZ", "JJ", "IN", "RB", "PRP", "CC", "TO"}
)
PTB_SPAN_LABELS = frozenset({"S", "NP", "VP", "PP", "ADJP", "ADVP", "SBAR"})


def mcq_instance(options=("LOC", "NUM", "HUM"), question="Where is it?", id="mcq-1"):
    return TaskInstance(
        task=TaskKind.MCQ, id=id, query=McqQuery(question=question, options=tuple(options))
    )


def eqa_instance(passage="The cat sat on the mat.", question="Where?", id="eqa-1"):
    return TaskInstance(
        task=TaskKind.EQA, id=id, query=EqaQuery(passage=passage, question=question)
    )


def ner_instance(
    sentence="Sarah baked delicious cookies yesterday.",
    tagset=("PER", "ORG", "LOC", "MISC"),
    id="ner-1",
):
    return TaskInstance(
        task=TaskKind.NER, id=id, query=NerQuery(sentence=sentence, tagset=tuple(tagset))
    )


def parse_instance(sentence="The cat sat", id="parse-1"):
    return TaskInstance(
        task=TaskKind.PARSE,
        id=id,
        query=ParseQuery(
            sentence=sentence,
            word_labels=PTB_WORD_LABELS,
            span_labels=PTB_SPAN_LABELS,
        ),
    )


def capseg_instance(
    text="The shimmering lake reflected the colors of the setting sun.",
    id="capseg-1",
    max_line_chars=42,
    max_lines_per_block=2,
):
    return TaskInstance(
        task=TaskKind.CAPSEG,
        id=id,
        query=CapSegQuery(
            text=text,
            max_line_chars=max_line_chars,
            max_lines_per_block=max_lines_per_block,
        ),
    )


def mtt_instance(
    source="Das Exanthem des M. Still ist ein Symptom von hoher Sensitivität.",
    rules=(("Exanthem", "rash"),),
    id="mtt-1",
):
    return TaskInstance(
        task=TaskKind.MTT, id=id, query=MttQuery(source=source, rules=tuple(rules))
    )


def acrow_instance(word="CAT", id="acrow-1"):
    return TaskInstance(task=TaskKind.ACROW, id=id, query=AcroWQuery(word=word))


def ftime_instance(
    reference="20021019T140000", weekday="Saturday", category="interval", id="ftime-1"
):
    return TaskInstance(
        task=TaskKind.FTIME,
        id=id,
        query=FTimeQuery(
            reference_time=Timestamp.from_compact(reference),
            weekday=weekday,
            category=category,
        ),
    )


def agent_instance(
    session_id="demo",
    observation="You are in a hallway. A locked door blocks the way north.",
    hint=None,
    id="agent-1",
):
    return TaskInstance(
        task=TaskKind.AGENT,
        id=id,
        query=AgentQuery(
            session_id=session_id, observation=observation, legal_action_hint=hint
        ),
    )


def xdl_instance(description="Add water to reactor r1.", id="xdl-1"):
    return TaskInstance(task=TaskKind.XDL, id=id, query=XdlQuery(description=description))


@pytest.fixture(scope="session")
def golden_checks():
    rows = []
    with open(FIXTURES / "golden_checks.jsonl", encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                rows.append(json.loads(line))
    return rows


@pytest.fixture(scope="session")
def ftime_mutations():
    return json.loads((FIXTURES / "ftime_mutations.json").read_text(encoding="utf-8"))
