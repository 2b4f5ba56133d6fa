"""Acceptance suite: one test per release criterion, one PASS line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines as they
pass. Tolerances are pinned here and nowhere else.
"""

import json
import random
import time
from fractions import Fraction

import pytest

from a3.cli import main
from a3.cod import ComposeMode, ExperimentConfig, run_experiment
from a3.domain import LabeledDataset, Task, WindowConfig
from a3.ingestion import load_corpus
from a3.labeler import (
    build_instances,
    label_corpus,
    label_timing,
    label_trading,
    label_view_change,
)
from a3.metrics import rouge_l, rouge_n
from a3.pmi import compute_pmi, top_keywords
from a3.synth import SynthSpec, generate_corpus
from oracle import brute_force_labels


def announce(name: str) -> None:
    print(f"PASS: {name}")


def _label_all(corpus):
    """(stock, date) -> labels/exclusions as produced by the labeler ops."""
    out = {}
    for inst in build_instances(corpus, WindowConfig(5)):
        labels, exclusions = {}, {}
        if Task.TIMING in inst.exclusions:
            exclusions = {t.value: inst.exclusions[t].value for t in Task}
        else:
            labels["timing"] = label_timing(inst, corpus).label.value
            view = label_view_change(inst, corpus)
            if view.label:
                labels["view"] = view.label.value
            else:
                exclusions["view"] = view.exclusion.value
            trading = label_trading(inst, corpus)
            if trading.label:
                labels["trading"] = trading.label.value
            else:
                exclusions["trading"] = trading.exclusion.value
        out[(inst.stock.code, inst.anchor_day.date.isoformat())] = {
            "labels": labels,
            "exclusions": exclusions,
        }
    return out


def test_labeling_oracle_equivalence(tmp_path):
    """Three seeded 50x250 corpora: labeler == ground truth == brute force,
    100% of instances, all three tasks, under 10 s of labeling per corpus."""
    for seed in (7, 101, 202):
        out = tmp_path / f"corpus-{seed}"
        generate_corpus(SynthSpec(seed=seed), out)
        corpus, report = load_corpus(out)
        assert report.ok

        start = time.monotonic()
        got = _label_all(corpus)
        elapsed = time.monotonic() - start
        assert elapsed < 10.0, f"labeling took {elapsed:.1f}s"
        assert len(got) >= 1000

        truth = {}
        for line in (out / "ground_truth.jsonl").read_text("utf-8").splitlines():
            rec = json.loads(line)
            labels = {k: v for k, v in rec["labels"].items() if k != "trading_alias"}
            truth[(rec["stock"], rec["date"])] = {
                "labels": labels,
                "exclusions": rec["exclusions"],
            }
        assert got == truth, f"seed {seed}: labeler disagrees with ground truth"

        oracle = brute_force_labels(out, T=5)
        oracle_view = {
            key: {"labels": val["labels"], "exclusions": val["exclusions"]}
            for key, val in oracle.items()
        }
        assert got == oracle_view, f"seed {seed}: labeler disagrees with brute force"
    announce("labeling oracle equivalence (3 corpora, 100% match, <10s each)")


def test_table_structure_balance(synth_corpus):
    """Ratio-1.0 sampling + 0.8/0.1/0.1 stratified splits: timing classes
    exactly balanced in every split, sizes within 1 of the exact ratio."""
    run = label_corpus(synth_corpus, seed=7)
    assert run.counters["positives"] == run.counters["negatives_sampled"]
    per_class_total = run.counters["positives"]
    for split_name, idxs in run.splits["timing"].items():
        tally = {}
        for i in idxs:
            label = run.instances[i].timing_label.value
            tally[label] = tally.get(label, 0) + 1
        assert tally["ReleaseReport"] == tally["NotReleaseReport"], split_name
        ratio = {"train": Fraction(8, 10), "dev": Fraction(1, 10), "test": Fraction(1, 10)}[
            split_name
        ]
        exact = ratio * per_class_total
        assert abs(tally["ReleaseReport"] - exact) < 1
    announce("dataset structure: exact class balance, split sizes within 1 of ratio")


def test_exclusion_accounting(synth_corpus):
    """labeled + excluded totals are identical across tasks over the shared
    instance set, with missing price targets and trade ties injected."""
    run = label_corpus(synth_corpus, seed=7)
    n = len(run.instances)
    totals = {}
    excluded_counts = {}
    for task in Task:
        labeled = sum(1 for i in run.instances if i.label_for(task) is not None)
        excluded = sum(1 for i in run.instances if task in i.exclusions)
        totals[task.value] = labeled + excluded
        excluded_counts[task.value] = excluded
    assert totals == {"timing": n, "view": n, "trading": n}
    assert excluded_counts["view"] > 0, "fixture must inject missing price targets"
    assert excluded_counts["trading"] > 0, "fixture must inject trade ties"
    announce("exclusion accounting: labeled+excluded equal across tasks")


def test_pmi_correctness(tmp_path):
    """Hand corpus score exact within 1e-9; planted markers rank first for
    every class of every task."""
    docs = [
        ("tariff shock hits the exporters", "Release"),
        ("tariff relief the rally", "Release"),
        ("quiet the session today", "NotRelease"),
        ("earnings the flat", "NotRelease"),
    ]
    table = compute_pmi(
        docs, class_of=lambda p: p[1], text_of=lambda p: p[0], smoothing=0.0
    )
    assert abs(table.score("tariff", "Release") - 1.0) <= 1e-9

    spec = SynthSpec(
        seed=31,
        min_gap_days=6,
        report_prob_cued=1.0,
        report_prob_base=0.0,
        noise_report_rate=0.0,
    )
    out = tmp_path / "markers"
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
        labeled_docs = [
            ("\n".join(news_by_key[(r["stock"], r["date"])]), r["labels"][task])
            for r in truth
            if task in r["labels"]
        ]
        task_table = compute_pmi(
            labeled_docs,
            class_of=lambda p: p[1],
            text_of=lambda p: p[0],
            smoothing=0.5,
        )
        for cls, markers in spec.cues[task].items():
            top_term, _ = top_keywords(task_table, cls, k=1)[0]
            assert top_term in markers, (task, cls, top_term)
    announce("PMI: hand-corpus score exact (1e-9), planted markers top-1 everywhere")


def test_rouge_correctness():
    """Hand fixtures within 1e-6; symmetry and monotonicity over 10,000
    random token pairs."""
    identity = rouge_n(list("abcd"), list("abcd"), 1)
    assert abs(identity.f1 - 1.0) <= 1e-6

    disjoint = rouge_n(["a", "b"], ["c", "d"], 1)
    assert abs(disjoint.precision) <= 1e-6 and abs(disjoint.f1) <= 1e-6

    near = rouge_n(["a", "b", "c"], ["a", "b", "d"], 1)
    for value in (near.precision, near.recall, near.f1):
        assert abs(value - 2 / 3) <= 1e-6
    near2 = rouge_n(["a", "b", "c"], ["a", "b", "d"], 2)
    for value in (near2.precision, near2.recall, near2.f1):
        assert abs(value - 1 / 2) <= 1e-6

    rng = random.Random(0)
    for _ in range(10_000):
        a = [rng.choice("abcdefgh") for _ in range(rng.randint(0, 12))]
        b = [rng.choice("abcdefgh") for _ in range(rng.randint(0, 12))]
        fwd, rev = rouge_n(a, b, 1), rouge_n(b, a, 1)
        assert abs(fwd.precision - rev.recall) <= 1e-12
        assert abs(fwd.recall - rev.precision) <= 1e-12
        assert rouge_n(a + b, b, 1).recall >= fwd.recall - 1e-12
        lcs = rouge_l(a, b)
        for value in (lcs.precision, lcs.recall, lcs.f1):
            assert -1e-12 <= value <= 1 + 1e-12
    announce("ROUGE: hand fixtures (1e-6) + 10,000-sample symmetry/monotonicity")


def _cod_dataset(tmp_path):
    spec = SynthSpec(
        seed=17,
        cue_in="headline",
        min_gap_days=6,
        cue_rate=0.5,
        report_prob_cued=1.0,
        report_prob_base=0.0,
        noise_report_rate=0.0,
        cues={
            "timing": {
                "ReleaseReport": ("trig-release",),
                "NotReleaseReport": ("trig-quiet",),
            },
            "view": {"Upgrade": ("vu",), "Downgrade": ("vd",), "Keep": ("vk",)},
            "trading": {"Overweight": ("tw",), "Underweight": ("tu",), "NoAction": ("tn",)},
        },
    )
    out = tmp_path / "cod-corpus"
    generate_corpus(spec, out)
    corpus, report = load_corpus(out)
    assert report.ok
    run = label_corpus(corpus, seed=0)
    return LabeledDataset(
        instances=run.instances,
        splits=run.splits["timing"],
        seed=0,
        config={"task": "timing"},
    )


def test_cod_beats_news_only_baseline(tmp_path):
    """The planted signal lives in headlines (visible to the generator) and
    opinions, never in composed news text: the opinion-in-the-loop pipeline
    must beat news-only by at least 20 accuracy points, under 60 s."""
    start = time.monotonic()
    dataset = _cod_dataset(tmp_path)

    news_only = run_experiment(
        dataset,
        ExperimentConfig(task=Task.TIMING, generator=None, mode=ComposeMode.NEWS_ONLY, seed=0),
    )
    cod = run_experiment(
        dataset,
        ExperimentConfig(
            task=Task.TIMING,
            generator="stub:cue",
            mode=ComposeMode.NEWS_THEN_OPINION,
            seed=0,
            cache_dir=str(tmp_path / "cache"),
        ),
    )
    elapsed = time.monotonic() - start
    baseline_acc = float(news_only.metrics["test"]["accuracy"])
    cod_acc = float(cod.metrics["test"]["accuracy"])
    assert cod_acc - baseline_acc >= 0.20, (cod_acc, baseline_acc)
    assert elapsed < 60.0, f"CoD check took {elapsed:.1f}s"
    announce(
        f"CoD direction: {cod_acc:.4f} vs news-only {baseline_acc:.4f} "
        f"(margin {cod_acc - baseline_acc:+.4f} >= 0.20, {elapsed:.1f}s)"
    )


def test_determinism_across_runs_and_jobs(tmp_path):
    """Identical config+seed: byte-identical dataset.jsonl, identical metric
    payloads, regardless of --jobs and cache state."""
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"n_stocks": 10, "n_days": 80, "seed": 3}))
    corpus_dir = tmp_path / "corpus"
    assert main(["synth", "--spec", str(spec), "--out", str(corpus_dir)]) == 0

    datasets = []
    for name in ("d1.jsonl", "d2.jsonl"):
        out = tmp_path / name
        assert main(
            ["label", "--corpus", str(corpus_dir), "--seed", "5", "--out", str(out)]
        ) == 0
        datasets.append(out.read_bytes())
    assert datasets[0] == datasets[1]

    payloads = []
    for i, jobs in enumerate(("1", "8", "8")):
        report_path = tmp_path / f"report{i}.json"
        cache = tmp_path / ("warm-cache" if i else "cold-cache")
        assert main(
            ["run", "--dataset", str(tmp_path / "d1.jsonl"), "--task", "timing",
             "--generator", "stub:cue", "--mode", "news_then_opinion",
             "--seed", "0", "--jobs", jobs, "--out", str(report_path),
             "--cache-dir", str(cache)]
        ) == 0
        report = json.loads(report_path.read_text("utf-8"))
        payloads.append(json.dumps(report["metrics"], sort_keys=True))
    assert payloads[0] == payloads[1] == payloads[2]
    announce("determinism: dataset bytes and metric payloads stable across runs/--jobs")


def test_fault_tolerant_resume(tmp_path):
    """Generator killed after half the items: the rerun finishes from the
    cache with zero duplicate protocol requests."""
    import shlex
    import sys

    from a3.cod import OpinionCache, PluginClient, PromptTemplate, generate_opinions
    from a3.errors import GeneratorUnavailable
    from conftest import STUB_PLUGIN
    from test_plugin import make_items

    items = make_items(20)
    cache = OpinionCache(tmp_path / "cache")
    template = PromptTemplate("headline-only", "{headline}")
    t1, t2 = tmp_path / "t1.log", tmp_path / "t2.log"

    dying = PluginClient(
        shlex.join([sys.executable, str(STUB_PLUGIN), "--die-after", "10",
                    "--transcript", str(t1)])
    )
    with pytest.raises(GeneratorUnavailable):
        try:
            generate_opinions(items, dying, template, cache, concurrency=1)
        finally:
            dying.close()
    assert len(t1.read_text().splitlines()) == 10  # half completed and cached

    healthy = PluginClient(
        shlex.join([sys.executable, str(STUB_PLUGIN), "--transcript", str(t2)])
    )
    try:
        opinions, stats = generate_opinions(items, healthy, template, cache, concurrency=1)
    finally:
        healthy.close()
    assert len(opinions) == 20
    assert all(op.error is None for op in opinions.values())
    assert stats.hits == 10 and stats.misses == 10
    first, second = t1.read_text().splitlines(), t2.read_text().splitlines()
    assert len(second) == 10
    assert not set(first) & set(second)
    announce("fault tolerance: resumed from cache, zero duplicate requests")
