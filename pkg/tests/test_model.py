from __future__ import annotations

import json

import pytest
from hypothesis import given, strategies as st

from formatkit.data_io import dumps_record, instance_from_doc, instance_to_doc
from formatkit.errors import SchemaViolation
from formatkit.model import (
    ERROR_CODES,
    AcroWQuery,
    Duration,
    FormatError,
    McqQuery,
    Recurrence,
    TaskInstance,
    TaskKind,
    Timestamp,
    Verdict,
    validate_instance,
)

from .conftest import FIXTURES, mcq_instance


def test_task_kind_serialized_names():
    assert [k.value for k in TaskKind] == [
        "MCQ", "EQA", "NER", "Parse", "CapSeg", "MTT", "AcroW", "FTime", "Agent", "XDL",
    ]


def test_unknown_task_name_fails_fast():
    with pytest.raises(SchemaViolation) as err:
        TaskKind.from_name("Sonnet")
    assert "Sonnet" in str(err.value)


class TestValidateInstance:
    def test_well_formed_mcq(self):
        validate_instance(mcq_instance(options=("A", "B", "C", "D")))

    def test_empty_options_rejected(self):
        instance = TaskInstance(
            task=TaskKind.MCQ, id="x", query=McqQuery(question="q", options=())
        )
        with pytest.raises(SchemaViolation) as err:
            validate_instance(instance)
        assert err.value.field == "options"

    def test_duplicate_options_rejected(self):
        instance = TaskInstance(
            task=TaskKind.MCQ, id="x", query=McqQuery(question="q", options=("A", "A"))
        )
        with pytest.raises(SchemaViolation):
            validate_instance(instance)

    def test_non_alphabetic_acrostic_word_rejected(self):
        instance = TaskInstance(task=TaskKind.ACROW, id="x", query=AcroWQuery(word="A1"))
        with pytest.raises(SchemaViolation) as err:
            validate_instance(instance)
        assert err.value.field == "word"

    def test_payload_task_mismatch_rejected(self):
        instance = TaskInstance(task=TaskKind.EQA, id="x", query=AcroWQuery(word="AB"))
        with pytest.raises(SchemaViolation) as err:
            validate_instance(instance)
        assert err.value.field == "query"

    def test_empty_id_rejected(self):
        instance = TaskInstance(
            task=TaskKind.MCQ, id="", query=McqQuery(question="q", options=("A",))
        )
        with pytest.raises(SchemaViolation):
            validate_instance(instance)


class TestVerdict:
    def test_ok_and_fail_helpers(self):
        assert Verdict.ok().score == 1
        failed = Verdict.fail([FormatError(code="ILLEGAL_OPTION", message="nope")])
        assert failed.score == -1 and len(failed.errors) == 1

    def test_pass_with_errors_rejected(self):
        with pytest.raises(SchemaViolation):
            Verdict(score=1, errors=(FormatError(code="ILLEGAL_OPTION", message="x"),))

    def test_fail_without_errors_rejected(self):
        with pytest.raises(SchemaViolation):
            Verdict(score=-1, errors=())

    def test_score_must_be_plus_or_minus_one(self):
        with pytest.raises(SchemaViolation):
            Verdict(score=0)

    def test_error_code_registry_is_closed(self):
        with pytest.raises(SchemaViolation):
            FormatError(code="MADE_UP_CODE", message="x")
        with pytest.raises(SchemaViolation):
            FormatError(code="LINE_TOO_LONG", message="")
        assert "LINE_TOO_LONG" in ERROR_CODES


class TestTimestamp:
    @pytest.mark.parametrize(
        "text", ["20021019T142000", "20240229T000000", "00000101T000000", "99991231T235959"]
    )
    def test_valid_round_trip(self, text):
        assert Timestamp.from_compact(text).compact() == text

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(year=2002, month=13, day=1, hour=0, minute=0, second=0),
            dict(year=2002, month=0, day=1, hour=0, minute=0, second=0),
            dict(year=2002, month=2, day=30, hour=0, minute=0, second=0),
            dict(year=2023, month=2, day=29, hour=0, minute=0, second=0),
            dict(year=1900, month=2, day=29, hour=0, minute=0, second=0),
            dict(year=2002, month=1, day=1, hour=24, minute=0, second=0),
            dict(year=2002, month=1, day=1, hour=0, minute=60, second=0),
            dict(year=2002, month=1, day=1, hour=0, minute=0, second=60),
        ],
    )
    def test_invalid_fields_rejected(self, kwargs):
        with pytest.raises(SchemaViolation):
            Timestamp(**kwargs)

    def test_leap_centuries(self):
        Timestamp(year=2000, month=2, day=29, hour=0, minute=0, second=0)
        with pytest.raises(SchemaViolation):
            Timestamp(year=2100, month=2, day=29, hour=0, minute=0, second=0)

    @given(
        st.integers(0, 9999),
        st.integers(1, 12),
        st.integers(1, 28),
        st.integers(0, 23),
        st.integers(0, 59),
        st.integers(0, 59),
    )
    def test_compact_form_always_parses_back(self, y, m, d, hh, mm, ss):
        ts = Timestamp(year=y, month=m, day=d, hour=hh, minute=mm, second=ss)
        assert Timestamp.from_compact(ts.compact()) == ts


class TestRecurrence:
    def test_unbounded_count(self):
        Recurrence(
            count=-1,
            start=Timestamp.from_compact("20121217T100000"),
            period=Duration(days=7),
        )

    @pytest.mark.parametrize("count", [0, -2, -100])
    def test_bad_count_rejected(self, count):
        with pytest.raises(SchemaViolation):
            Recurrence(
                count=count,
                start=Timestamp.from_compact("20121217T100000"),
                period=Duration(days=7),
            )

    def test_zero_period_rejected(self):
        with pytest.raises(SchemaViolation):
            Recurrence(
                count=1, start=Timestamp.from_compact("20121217T100000"), period=Duration()
            )

    def test_negative_period_component_rejected(self):
        with pytest.raises(SchemaViolation):
            Duration(days=-1)


def test_golden_round_trip_is_byte_identical():
    with open(FIXTURES / "golden_instances.jsonl", encoding="utf-8") as handle:
        for raw in handle:
            raw = raw.rstrip("\n")
            if not raw:
                continue
            instance = instance_from_doc(json.loads(raw))
            validate_instance(instance)
            assert dumps_record(instance_to_doc(instance)) == raw
