import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from a3.errors import EmptyInput, LengthMismatch, ValidationError
from a3.metrics import accuracy, macro_f1, render4, rouge_l, rouge_n

tokens = st.lists(st.sampled_from("abcdefgh"), min_size=0, max_size=12)


class TestAccuracy:
    def test_all_correct(self):
        assert accuracy(["A", "B"], ["A", "B"]) == 1

    def test_half(self):
        assert accuracy(["A", "B"], ["A", "A"]) == Fraction(1, 2)

    def test_random_fixture_against_recount(self):
        rng = random.Random(42)
        golds = [rng.choice("ABC") for _ in range(1000)]
        preds = [rng.choice("ABC") for _ in range(1000)]
        matches = 0
        for i in range(1000):
            if preds[i] == golds[i]:
                matches += 1
        assert accuracy(preds, golds) == Fraction(matches, 1000)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            accuracy(["A"], ["A", "B"])

    def test_empty(self):
        with pytest.raises(EmptyInput):
            accuracy([], [])


class TestMacroF1:
    def test_perfect(self):
        assert macro_f1(["A", "B"], ["A", "B"], ["A", "B"]) == 1

    def test_absent_class_contributes_zero(self):
        # C never appears at all: F1(A)=F1(B)=1, F1(C)=0
        assert macro_f1(["A", "B"], ["A", "B"], ["A", "B", "C"]) == Fraction(2, 3)

    def test_hand_confusion_matrix(self):
        # golds A,A,A,B,B vs preds A,B,A,B,B:
        # A: tp=2 fp=0 fn=1 -> P=1, R=2/3, F=4/5
        # B: tp=2 fp=1 fn=0 -> P=2/3, R=1, F=4/5
        golds = ["A", "A", "A", "B", "B"]
        preds = ["A", "B", "A", "B", "B"]
        assert macro_f1(preds, golds, ["A", "B"]) == Fraction(4, 5)
        assert accuracy(preds, golds) == Fraction(4, 5)

    def test_label_outside_classes_rejected(self):
        with pytest.raises(ValidationError):
            macro_f1(["A"], ["Z"], ["A", "B"])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            macro_f1(["A"], ["A", "B"], ["A", "B"])


def test_render4():
    assert render4(Fraction(1, 2)) == "0.5000"
    assert render4(Fraction(2717, 3364)) == "0.8077"
    assert render4(Fraction(1)) == "1.0000"


class TestRougeN:
    def test_identity(self):
        score = rouge_n(list("abcd"), list("abcd"), 1)
        assert (score.precision, score.recall, score.f1) == (1.0, 1.0, 1.0)

    def test_disjoint(self):
        score = rouge_n(["a", "b"], ["c", "d"], 1)
        assert (score.precision, score.recall, score.f1) == (0.0, 0.0, 0.0)

    def test_abc_abd_unigrams(self):
        score = rouge_n(["a", "b", "c"], ["a", "b", "d"], 1)
        assert score.precision == pytest.approx(2 / 3)
        assert score.recall == pytest.approx(2 / 3)
        assert score.f1 == pytest.approx(2 / 3)

    def test_abc_abd_bigrams(self):
        score = rouge_n(["a", "b", "c"], ["a", "b", "d"], 2)
        assert (score.precision, score.recall, score.f1) == (0.5, 0.5, 0.5)

    def test_clipped_counts(self):
        # "a a a" vs "a": overlap clipped to 1
        score = rouge_n(["a", "a", "a"], ["a"], 1)
        assert score.precision == pytest.approx(1 / 3)
        assert score.recall == 1.0

    def test_too_short_side_contributes_zero(self):
        score = rouge_n(["a"], ["a", "b"], 2)
        assert score.precision == 0.0 and score.recall == 0.0 and score.f1 == 0.0

    def test_n_must_be_positive(self):
        with pytest.raises(ValidationError):
            rouge_n(["a"], ["a"], 0)


class TestRougeL:
    def test_hand_lcs(self):
        score = rouge_l(["a", "b", "c", "d"], ["a", "c", "d"])
        assert score.precision == pytest.approx(3 / 4)
        assert score.recall == pytest.approx(1.0)
        assert score.f1 == pytest.approx(6 / 7)

    def test_empty_candidate(self):
        score = rouge_l([], ["a", "b"])
        assert (score.precision, score.recall, score.f1) == (0.0, 0.0, 0.0)

    def test_reversal_of_distinct_tokens(self):
        score = rouge_l(["d", "c", "b", "a"], ["a", "b", "c", "d"])
        assert score.precision == pytest.approx(1 / 4)  # LCS length 1


class TestRougeProperties:
    @given(tokens, tokens)
    def test_swap_symmetry(self, a, b):
        fwd = rouge_n(a, b, 1)
        rev = rouge_n(b, a, 1)
        assert fwd.precision == pytest.approx(rev.recall)
        assert fwd.recall == pytest.approx(rev.precision)

    @given(tokens, tokens)
    def test_appending_reference_never_hurts_recall(self, a, b):
        base = rouge_n(a, b, 1).recall
        extended = rouge_n(a + b, b, 1).recall
        assert extended >= base - 1e-12

    @given(tokens, tokens)
    def test_bounds_and_f_below_max(self, a, b):
        for score in (rouge_n(a, b, 1), rouge_n(a, b, 2), rouge_l(a, b)):
            for value in (score.precision, score.recall, score.f1):
                assert 0.0 <= value <= 1.0
            assert score.f1 <= max(score.precision, score.recall) + 1e-12
