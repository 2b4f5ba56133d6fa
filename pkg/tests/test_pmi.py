import json
import math

import pytest

from a3.errors import DegenerateClasses, UnknownClass, ValidationError
from a3.pmi import compute_pmi, format_score, tokenize, top_keywords, write_pmi_csv
from a3.synth import SynthSpec, generate_corpus

from conftest import FIXTURES

# the four-document hand corpus: "tariff" marks the Release class
HAND_DOCS = [
    ("tariff shock hits the exporters", "Release"),
    ("tariff relief the rally", "Release"),
    ("quiet the session today", "NotRelease"),
    ("earnings the flat", "NotRelease"),
]


def _hand_table(alpha):
    return compute_pmi(
        [d for d, _ in HAND_DOCS],
        class_of=dict(HAND_DOCS).__getitem__,
        smoothing=alpha,
    )


class TestTokenize:
    def test_whitespace_segmentation(self):
        assert tokenize("Lift Rates today") == ["lift", "rates", "today"]

    def test_empty(self):
        assert tokenize("") == []

    def test_no_deduplication(self):
        assert tokenize("up up up") == ["up", "up", "up"]

    def test_golden_corpus(self):
        cases = json.loads((FIXTURES / "tokenize_golden.json").read_text("utf-8"))
        assert len(cases) == 20
        for case in cases:
            assert tokenize(case["text"]) == case["tokens"], case["text"]

    def test_phrase_lexicon(self):
        assert tokenize("They Lift Rates today", lexicon=["lift rates"]) == [
            "they",
            "lift rates",
            "today",
        ]

    def test_longest_phrase_wins(self):
        tokens = tokenize(
            "seasoned equity offering announced",
            lexicon=["equity offering", "seasoned equity offering"],
        )
        assert tokens == ["seasoned equity offering", "announced"]


class TestComputePmi:
    def test_hand_corpus_release_score(self):
        table = _hand_table(alpha=0.0)
        assert table.score("tariff", "Release") == pytest.approx(1.0, abs=1e-12)

    def test_hand_corpus_absent_class_is_neg_inf_at_zero_alpha(self):
        table = _hand_table(alpha=0.0)
        assert table.score("tariff", "NotRelease") == float("-inf")

    def test_hand_corpus_finite_at_jeffreys_alpha(self):
        table = _hand_table(alpha=0.5)
        assert table.score("tariff", "NotRelease") == pytest.approx(
            math.log2(1 / 3), abs=1e-12
        )

    def test_uniform_word_scores_zero(self):
        table = _hand_table(alpha=0.0)
        for cls in table.classes:
            assert table.score("the", cls) == pytest.approx(0.0, abs=1e-12)

    def test_class_sizes_partition_docs(self):
        table = _hand_table(alpha=0.5)
        assert sum(table.class_sizes.values()) == table.n_docs == 4

    def test_min_df_filters_vocabulary(self):
        table = compute_pmi(
            [d for d, _ in HAND_DOCS],
            class_of=dict(HAND_DOCS).__getitem__,
            min_df=2,
        )
        assert "tariff" in table.vocabulary
        assert "earnings" not in table.vocabulary

    def test_permutation_invariance(self):
        fwd = _hand_table(alpha=0.5)
        rev = compute_pmi(
            [d for d, _ in reversed(HAND_DOCS)],
            class_of=dict(HAND_DOCS).__getitem__,
            smoothing=0.5,
        )
        assert fwd.scores == rev.scores
        assert fwd.vocabulary == rev.vocabulary

    def test_single_class_degenerate(self):
        with pytest.raises(DegenerateClasses):
            compute_pmi(["a b", "c d"], class_of=lambda d: "only")

    def test_smoothing_must_be_non_negative(self):
        with pytest.raises(ValidationError):
            _hand_table(alpha=-0.1)

    def test_all_scores_finite_with_positive_alpha(self):
        table = _hand_table(alpha=0.5)
        assert all(math.isfinite(s) for s in table.scores.values())


class TestTopKeywords:
    def _table(self):
        docs = [
            ("b g", "c1"),
            ("c g", "c1"),
            ("d", "c2"),
            ("e", "c2"),
        ]
        return compute_pmi(
            [d for d, _ in docs], class_of=dict(docs).__getitem__, smoothing=0.0
        )

    def test_k_beyond_vocabulary_returns_full_list(self):
        table = self._table()
        ranked = top_keywords(table, "c1", k=100)
        assert len(ranked) == len(table.vocabulary)

    def test_tie_breaks_doc_freq_then_term(self):
        table = self._table()
        # b, c, g are all c1-exclusive, hence equal scores; g has df=2
        assert [t for t, _ in top_keywords(table, "c1", k=3)] == ["g", "b", "c"]

    def test_direction_lowest(self):
        table = self._table()
        terms = [t for t, _ in top_keywords(table, "c2", k=3, direction="lowest")]
        assert terms == ["g", "b", "c"]  # most negative first

    def test_unknown_class(self):
        with pytest.raises(UnknownClass):
            top_keywords(self._table(), "nope", k=1)

    def test_bad_direction(self):
        with pytest.raises(ValidationError):
            top_keywords(self._table(), "c1", k=1, direction="sideways")


class TestPlantedMarkers:
    def test_markers_rank_first_for_their_class(self, tmp_path):
        spec = SynthSpec(
            n_stocks=20,
            n_days=120,
            seed=13,
            min_gap_days=6,  # windows never overlap older news
            report_prob_cued=1.0,
            report_prob_base=0.0,
            noise_report_rate=0.0,
        )
        out = tmp_path / "corpus"
        generate_corpus(spec, out)
        truth = [
            json.loads(line)
            for line in (out / "ground_truth.jsonl").read_text("utf-8").splitlines()
        ]
        news_by_key = {}
        for line in (out / "news.jsonl").read_text("utf-8").splitlines():
            row = json.loads(line)
            news_by_key.setdefault((row["stock"], row["date"]), []).append(
                row["headline"] + "\n" + row["body"]
            )

        for task in ("timing", "view", "trading"):
            docs = [
                ("\n".join(news_by_key[(r["stock"], r["date"])]), r["labels"][task])
                for r in truth
                if task in r["labels"]
            ]
            table = compute_pmi(
                docs,
                class_of=lambda pair: pair[1],
                text_of=lambda pair: pair[0],
                smoothing=0.5,
            )
            for cls, markers in spec.cues[task].items():
                top_term, _ = top_keywords(table, cls, k=1)[0]
                assert top_term in markers, (task, cls, top_term)


def test_csv_output(tmp_path):
    table = _hand_table(alpha=0.0)
    out = tmp_path / "pmi.csv"
    write_pmi_csv(table, out)
    lines = out.read_text("utf-8").splitlines()
    assert lines[0] == "term,class,score,doc_freq"
    assert any(",1.000," in line for line in lines)
    assert any(",-inf," in line for line in lines)


def test_format_score():
    assert format_score(1.933) == "1.933"
    assert format_score(float("-inf")) == "-inf"
