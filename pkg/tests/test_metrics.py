from __future__ import annotations

import itertools
import random
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from formatkit.errors import EmptySetError, LengthMismatchError, RangeViolation
from formatkit.metrics import (
    ScoredRow,
    agent_score_ratio,
    aggregate_report,
    bleu4,
    bracket_f1,
    break_f1,
    entity_bag,
    exact_match_accuracy,
    ffr,
    ner_bag_f1,
    segmentation_breaks,
    token_f1,
    tree_constituents,
)
from formatkit.model import Verdict, FormatError

from . import oracles
from .conftest import capseg_instance, mcq_instance, mtt_instance, ner_instance


def _fail():
    return Verdict.fail([FormatError(code="GRAMMAR_MISMATCH", message="x")])


class TestFfr:
    def test_all_pass(self):
        assert ffr([Verdict.ok()] * 4) == 1.0

    def test_quarter(self):
        assert ffr([Verdict.ok(), _fail(), _fail(), _fail()]) == 0.25

    def test_empty_rejected(self):
        with pytest.raises(EmptySetError):
            ffr([])


class TestExactMatch:
    def test_identity(self):
        assert exact_match_accuracy("20021019T142000", ["20021019T142000"]) == 1

    def test_mismatch(self):
        assert exact_match_accuracy("20021019T142001", ["20021019T142000"]) == 0

    def test_any_reference(self):
        assert exact_match_accuracy("b", ["a", "b"]) == 1

    def test_casefold_only_when_asked(self):
        assert exact_match_accuracy("num", ["NUM"]) == 0
        assert exact_match_accuracy("num", ["NUM"], casefold=True) == 1


class TestTokenF1:
    def test_identity(self):
        assert token_f1("the cat sat", ["the cat sat"]) == 1.0

    def test_hand_computed_overlap(self):
        # "the" is an article and drops out: pred {cat}, ref {cat sat}
        assert token_f1("the cat", ["cat sat"]) == pytest.approx(2 / 3)

    def test_empty_vs_nonempty(self):
        assert token_f1("", ["cat"]) == 0.0

    def test_empty_vs_empty(self):
        assert token_f1("the", ["a an"]) == 1.0

    def test_punctuation_stripped(self):
        assert token_f1("cat, sat!", ["cat sat"]) == 1.0


class TestNerBagF1:
    def test_identity(self):
        tagged = "<PER>Sarah</PER> baked."
        assert ner_bag_f1(tagged, tagged) == 1.0

    def test_empty_prediction_bag(self):
        gold = "<PER>Sarah Smith</PER> baked."
        assert ner_bag_f1("Sarah Smith baked.", gold) == 0.0

    def test_half_recall(self):
        gold = "<PER>Sarah</PER> visited <LOC>Bonn</LOC>."
        pred = "<PER>Sarah</PER> visited Bonn."
        assert ner_bag_f1(pred, gold) == pytest.approx(2 / 3)

    def test_broken_structure_scores_zero(self):
        gold = "<PER>Sarah</PER> baked."
        assert ner_bag_f1("<PER>Sarah</ORG> baked.", gold) == 0.0

    def test_invalid_gold_raises(self):
        with pytest.raises(ValueError):
            ner_bag_f1("x", "<PER>Sarah</ORG> baked.")


class TestBracketF1:
    GOLD = "(S (NP (DT The) (NN cat)) (VP (VBD sat)))"

    def test_identity(self):
        assert bracket_f1(self.GOLD, self.GOLD) == 1.0

    def test_half_overlap(self):
        pred = "(S (NP (DT The) (NN cat) (VBD sat)))"
        # pred brackets: (S,0,3), (NP,0,3); gold: (S,0,3), (NP,0,2), (VP,2,3)
        assert bracket_f1(pred, self.GOLD) == pytest.approx(2 * 1 / (2 + 3))

    def test_unparseable_scores_zero(self):
        assert bracket_f1("((S", self.GOLD) == 0.0

    def test_childless_node_scores_zero(self):
        assert bracket_f1("(S (NP))", self.GOLD) == 0.0

    def test_invalid_gold_raises(self):
        with pytest.raises(ValueError):
            bracket_f1(self.GOLD, "((")


class TestBreakF1:
    GOLD = "The shimmering lake <eol> reflected the colors <eob> of the setting sun. <eob>"

    def test_identity(self):
        assert break_f1(self.GOLD, self.GOLD) == 1.0

    def test_kind_mismatch_does_not_count(self):
        pred = "The shimmering lake <eob> reflected the colors <eol> of the setting sun. <eob>"
        # positions match pairwise but kinds are swapped for the first two
        assert break_f1(pred, self.GOLD) == pytest.approx(2 * 1 / (3 + 3))

    def test_partial_recall(self):
        gold = "one <eol> two <eob> three"
        pred = "one <eol> two three"
        assert break_f1(pred, gold) == pytest.approx(2 * 1 / (1 + 2))

    def test_text_mismatch_scores_zero(self):
        assert break_f1("one <eol> two", "one <eol> three") == 0.0

    def test_offsets_are_in_stripped_text(self):
        words, breaks = segmentation_breaks("ab <eol>cd <eob>")
        assert words == ("ab", "cd")
        assert breaks == {(2, "eol"), (5, "eob")}


class TestBleu4:
    def test_identity_corpus(self):
        hyps = ["the black cat sat on the mat", "a quick brown fox jumps high"]
        refs = [[h] for h in hyps]
        assert bleu4(hyps, refs) == pytest.approx(1.0)

    def test_clipping_zeroes_higher_order(self):
        assert bleu4(["the the the the"], [["the cat"]]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            bleu4(["a"], [])

    def test_missing_reference(self):
        with pytest.raises(LengthMismatchError):
            bleu4(["a"], [[]])

    def test_empty_corpus(self):
        with pytest.raises(EmptySetError):
            bleu4([], [])

    def test_brevity_penalty_direction(self):
        ref = [["one two three four five six"]]
        short = bleu4(["one two three four"], ref)
        full = bleu4(["one two three four five six"], ref)
        assert short < full

    def test_matches_reference_on_random_corpora(self):
        rng = random.Random(20240801)
        vocab = ["the", "cat", "sat", "mat", "on", "a", "dog", "ran", "far", "near"]
        for _ in range(20):
            n = rng.randint(1, 10)
            hyps, refs = [], []
            for _ in range(n):
                hyps.append(" ".join(rng.choices(vocab, k=rng.randint(1, 12))))
                refs.append(
                    [
                        " ".join(rng.choices(vocab, k=rng.randint(1, 12)))
                        for _ in range(rng.randint(1, 3))
                    ]
                )
            assert bleu4(hyps, refs) == pytest.approx(
                oracles.bleu_reference(hyps, refs), abs=1e-9
            )

    def test_corpus_permutation_invariance(self):
        rng = random.Random(7)
        vocab = ["a", "b", "c", "d"]
        hyps = [" ".join(rng.choices(vocab, k=6)) for _ in range(6)]
        refs = [[" ".join(rng.choices(vocab, k=6))] for _ in range(6)]
        paired = list(zip(hyps, refs))
        rng.shuffle(paired)
        shuffled_h = [p[0] for p in paired]
        shuffled_r = [p[1] for p in paired]
        assert bleu4(hyps, refs) == pytest.approx(bleu4(shuffled_h, shuffled_r), abs=1e-12)


class TestAgentScoreRatio:
    @pytest.mark.parametrize("score,mx,expected", [(0, 10, 0.0), (10, 10, 1.0), (3, 4, 0.75)])
    def test_ratio(self, score, mx, expected):
        assert agent_score_ratio(score, mx) == expected

    def test_range_errors(self):
        with pytest.raises(RangeViolation):
            agent_score_ratio(5, 4)
        with pytest.raises(RangeViolation):
            agent_score_ratio(-1, 4)
        with pytest.raises(RangeViolation):
            agent_score_ratio(1, 0)


# --- exhaustive-enumeration oracle comparisons ---------------------------------


def test_token_f1_exhaustive_against_oracle():
    vocab = ["cat", "sat"]
    texts = [
        " ".join(combo)
        for length in range(0, 4)
        for combo in itertools.product(vocab, repeat=length)
    ]
    for pred in texts:
        for ref in texts:
            assert token_f1(pred, [ref]) == oracles.token_f1_reference(pred, [ref])


def test_ner_bag_f1_exhaustive_against_oracle():
    words = ["Sarah", "likes", "Bonn"]
    choices = [None, "PER", "LOC"]
    taggings = []
    for assignment in itertools.product(choices, repeat=3):
        parts = []
        for word, tag in zip(words, assignment):
            parts.append(word if tag is None else f"<{tag}>{word}</{tag}>")
        taggings.append(" ".join(parts))
    for pred in taggings:
        for gold in taggings:
            assert ner_bag_f1(pred, gold) == oracles.bag_f1_reference(pred, gold)


def _enumerate_trees(tokens, span_labels, word_label):
    """All bracketings of the token list with every span-label choice."""
    if len(tokens) == 1:
        yield f"({word_label} {tokens[0]})"
        return
    for split in range(1, len(tokens)):
        for left in _enumerate_trees(tokens[:split], span_labels, word_label):
            for right in _enumerate_trees(tokens[split:], span_labels, word_label):
                for label in span_labels:
                    yield f"({label} {left} {right})"


def test_bracket_f1_exhaustive_against_oracle():
    trees = list(_enumerate_trees(["a", "b", "c"], ["S", "NP"], "NN"))
    assert len(trees) == 8  # 2 shapes x 2 labels x 2 labels
    for pred in trees:
        for gold in trees:
            assert bracket_f1(pred, gold) == oracles.bracket_f1_reference(pred, gold)


def test_break_f1_exhaustive_against_oracle():
    words = ["w1", "w2", "w3", "w4"]
    gap_choices = [None, "<eol>", "<eob>"]
    segmentations = []
    for gaps in itertools.product(gap_choices, repeat=3):
        parts = [words[0]]
        for word, gap in zip(words[1:], gaps):
            if gap:
                parts.append(gap)
            parts.append(word)
        for trailing in (None, "<eob>"):
            if trailing:
                segmentations.append(" ".join(parts + [trailing]))
            else:
                segmentations.append(" ".join(parts))
    assert len(segmentations) == 54
    for pred in segmentations:
        for gold in segmentations:
            assert break_f1(pred, gold) == oracles.break_f1_reference(pred, gold)


# --- range / symmetry properties ------------------------------------------------

_TOKEN_TEXT = st.lists(
    st.sampled_from(["cat", "sat", "mat", "dog", "ran"]), max_size=6
).map(" ".join)


@settings(max_examples=200, deadline=None)
@given(pred=_TOKEN_TEXT, gold=_TOKEN_TEXT)
def test_token_f1_symmetric_and_bounded(pred, gold):
    forward = token_f1(pred, [gold])
    backward = token_f1(gold, [pred])
    assert 0.0 <= forward <= 1.0
    assert forward == backward


@settings(max_examples=100, deadline=None)
@given(text=_TOKEN_TEXT.filter(bool))
def test_token_f1_identity_property(text):
    assert token_f1(text, [text]) == 1.0


# --- aggregation ---------------------------------------------------------------


class TestAggregateReport:
    def test_macro_average_and_gq(self):
        mcq = replace(mcq_instance(options=("LOC", "NUM")), references=("NUM",))
        rows = [
            ScoredRow(mcq, "NUM", Verdict.ok()),
            ScoredRow(mcq, "maybe", _fail()),
        ]
        report = aggregate_report(rows)
        assert report.tasks["MCQ"].n == 2
        assert report.tasks["MCQ"].ffr == 0.5
        assert report.tasks["MCQ"].gq == 0.5
        assert report.tasks["MCQ"].gq_metric == "accuracy"
        assert report.overall_ffr == 0.5

    def test_structure_zero_rule(self):
        inst = replace(
            ner_instance(),
            references=("<PER>Sarah</PER> baked delicious cookies yesterday.",),
        )
        perfect = "<PER>Sarah</PER> baked delicious cookies yesterday."
        broken = "<PER>Sarah</ORG> baked delicious cookies yesterday."
        rows = [
            ScoredRow(inst, perfect, Verdict.ok()),
            ScoredRow(inst, broken, _fail()),
        ]
        report = aggregate_report(rows)
        assert report.tasks["NER"].gq == 0.5  # (1.0 + 0.0) / 2

    def test_macro_mean_over_tasks(self):
        mcq = mcq_instance(options=("A", "B"))
        cap = capseg_instance(text="hello there")
        rows = [
            ScoredRow(mcq, "A", Verdict.ok()),
            ScoredRow(cap, "nope", _fail()),
            ScoredRow(cap, "hello there", Verdict.ok()),
        ]
        report = aggregate_report(rows)
        assert report.tasks["MCQ"].ffr == 1.0
        assert report.tasks["CapSeg"].ffr == 0.5
        assert report.overall_ffr == 0.75

    def test_empty_report(self):
        report = aggregate_report([])
        assert report.tasks == {} and report.overall_ffr is None

    def test_mtt_uses_corpus_bleu(self):
        inst = replace(
            mtt_instance(),
            references=("The rash of Still's disease is a symptom of high sensitivity.",),
        )
        rows = [
            ScoredRow(
                inst,
                "The rash of Still's disease is a symptom of high sensitivity.",
                Verdict.ok(),
            )
        ]
        report = aggregate_report(rows)
        assert report.tasks["MTT"].gq == pytest.approx(1.0)
        assert report.tasks["MTT"].gq_metric == "corpus_bleu4"
