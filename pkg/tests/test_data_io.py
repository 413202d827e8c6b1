from __future__ import annotations

import json

import pytest

from formatkit.data_io import (
    DatasetFile,
    dumps_record,
    instance_from_doc,
    instance_to_doc,
    load_jsonl,
    report_to_doc,
    sample_queries,
    write_jsonl,
    write_report,
)
from formatkit.errors import (
    DatasetParseError,
    DuplicateIdError,
    RangeViolation,
    SchemaViolation,
)
from formatkit.metrics import EvalReport, TaskReport

from .conftest import FIXTURES, mcq_instance


def _lines(path):
    return [l for l in path.read_text(encoding="utf-8").splitlines() if l]


def test_load_golden_fixture():
    dataset = load_jsonl(FIXTURES / "golden_instances.jsonl")
    assert len(dataset) == 11
    tasks = {inst.task.value for inst in dataset.records}
    assert len(tasks) == 10


def test_three_valid_lines(tmp_path):
    path = tmp_path / "d.jsonl"
    instances = [mcq_instance(id=f"q{i}") for i in range(3)]
    write_jsonl(instances, path)
    assert len(load_jsonl(path)) == 3


def test_malformed_line_reports_line_number(tmp_path):
    path = tmp_path / "d.jsonl"
    good = dumps_record(instance_to_doc(mcq_instance(id="a")))
    path.write_text(good + "\n{not json}\n", encoding="utf-8")
    with pytest.raises(DatasetParseError) as err:
        load_jsonl(path)
    assert err.value.line == 2


def test_schema_error_reports_line_and_field(tmp_path):
    path = tmp_path / "d.jsonl"
    doc = instance_to_doc(mcq_instance(id="a"))
    doc["query"]["options"] = []
    path.write_text(dumps_record(doc) + "\n", encoding="utf-8")
    with pytest.raises(SchemaViolation) as err:
        load_jsonl(path)
    assert err.value.line == 1
    assert "options" in err.value.field


def test_duplicate_id_across_lines(tmp_path):
    path = tmp_path / "d.jsonl"
    line = dumps_record(instance_to_doc(mcq_instance(id="dup")))
    other = dumps_record(instance_to_doc(mcq_instance(id="x")))
    path.write_text("\n".join([line, other, other.replace('"x"', '"y"'), line]) + "\n")
    with pytest.raises(DuplicateIdError) as err:
        load_jsonl(path)
    assert "dup" in str(err.value)


def test_unknown_task_is_load_time_error(tmp_path):
    path = tmp_path / "d.jsonl"
    doc = instance_to_doc(mcq_instance(id="a"))
    doc["task"] = "Haiku"
    path.write_text(dumps_record(doc) + "\n")
    with pytest.raises(SchemaViolation):
        load_jsonl(path)


def test_unknown_field_rejected():
    doc = instance_to_doc(mcq_instance(id="a"))
    doc["query"]["bonus"] = 1
    with pytest.raises(SchemaViolation):
        instance_from_doc(doc)


def test_load_write_idempotent(tmp_path):
    first = tmp_path / "one.jsonl"
    second = tmp_path / "two.jsonl"
    dataset = load_jsonl(FIXTURES / "golden_instances.jsonl")
    write_jsonl(dataset.records, first)
    write_jsonl(load_jsonl(first).records, second)
    assert first.read_bytes() == second.read_bytes()
    assert first.read_bytes() == (FIXTURES / "golden_instances.jsonl").read_bytes()


class TestSampleQueries:
    def _dataset(self, n):
        return DatasetFile(
            path="mem", records=tuple(mcq_instance(id=f"q{i}") for i in range(n))
        )

    def test_small_dataset_is_shuffled_copy(self):
        dataset = self._dataset(10)
        sample = sample_queries(dataset, cap=4000, seed=11)
        assert sorted(i.id for i in sample) == sorted(i.id for i in dataset.records)

    def test_cap_limits_and_keeps_distinct(self):
        dataset = self._dataset(5000)
        sample = sample_queries(dataset, cap=4000, seed=3)
        assert len(sample) == 4000
        assert len({i.id for i in sample}) == 4000

    def test_deterministic_for_fixed_seed(self):
        dataset = self._dataset(50)
        a = [i.id for i in sample_queries(dataset, seed=9)]
        b = [i.id for i in sample_queries(dataset, seed=9)]
        c = [i.id for i in sample_queries(dataset, seed=10)]
        assert a == b
        assert a != c

    def test_cap_must_be_positive(self):
        with pytest.raises(RangeViolation):
            sample_queries(self._dataset(3), cap=0)


class TestWriteReport:
    def test_summary_values(self, tmp_path):
        report = EvalReport(
            tasks={"MCQ": TaskReport(n=4, ffr=0.75, gq=None, gq_metric=None)},
            overall_ffr=0.75,
        )
        write_report(report, tmp_path / "out")
        doc = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert doc["tasks"]["MCQ"]["ffr"] == 0.75
        assert doc["overall_ffr"] == 0.75

    def test_macro_average_convention(self, tmp_path):
        report = EvalReport(
            tasks={
                "MCQ": TaskReport(n=2, ffr=1.0),
                "NER": TaskReport(n=10, ffr=0.5),
            },
            overall_ffr=(1.0 + 0.5) / 2,
        )
        write_report(report, tmp_path / "out")
        doc = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert doc["overall_ffr"] == 0.75

    def test_empty_report_still_writes_header(self, tmp_path):
        write_report(EvalReport(tasks={}, overall_ffr=None), tmp_path / "out")
        doc = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert doc["task_count"] == 0
        assert doc["overall_ffr"] is None

    def test_records_and_traces_files(self, tmp_path):
        report = EvalReport(tasks={}, overall_ffr=None)
        write_report(
            report,
            tmp_path / "out",
            records=[{"id": "a", "score": 1}],
            traces=[{"id": "a", "stop_reason": "CLEAN"}],
            provenance={"command": "test"},
        )
        records = _lines(tmp_path / "out" / "records.jsonl")
        traces = _lines(tmp_path / "out" / "traces.jsonl")
        assert json.loads(records[0])["id"] == "a"
        assert json.loads(traces[0])["stop_reason"] == "CLEAN"
        doc = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert doc["provenance"]["command"] == "test"


def test_report_doc_round_trip_stable():
    report = EvalReport(
        tasks={"MCQ": TaskReport(n=1, ffr=1.0, gq=0.5, gq_metric="accuracy")},
        overall_ffr=1.0,
    )
    assert report_to_doc(report) == report_to_doc(report)
