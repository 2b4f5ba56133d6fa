"""Candidate-instance construction and the three task labeling rules.

One candidate exists per (stock, anchor day t) with at least one news item
on day t; its window holds all news for the stock in [t-T, t]. Outcomes
are read on the next trading day t+1:

  timing   ReleaseReport iff at least one report exists for (stock, t+1);
  view     sign of the averaged-price-target change from t to t+1, Keep
           within epsilon, excluded when either snapshot is missing;
  trading  compare summed institutional buy vs sell amounts on t+1,
           NoAction when no record exists, excluded on a nonzero tie.

Candidates whose t+1 falls off the calendar are excluded from every task.
Negative sampling balances the timing classes by drawing seeded uniform
negatives whose stocks appear among the positives. Splitting is a seeded
stratified shuffle; per-class split sizes are largest-remainder rounded,
so they differ from the exact ratio by less than one instance.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from decimal import Decimal
from fractions import Fraction
from typing import Optional, Sequence

from .domain import (
    ExclusionReason,
    Instance,
    LabeledDataset,
    Task,
    TimingLabel,
    TradingLabel,
    ViewLabel,
    WindowConfig,
    money,
)
from .errors import EmptyPositives, TooFewInstances, ValidationError
from .ingestion import Corpus

SPLIT_NAMES = ("train", "dev", "test")


@dataclass(frozen=True)
class LabelProvenance:
    """Which rule fired for one (instance, task) and the events behind it."""

    instance_key: str
    task: Task
    rule: str
    events: tuple[str, ...]


@dataclass(frozen=True)
class TaskDecision:
    """Outcome of one labeling rule: a label or an exclusion, plus provenance."""

    label: Optional[object]
    exclusion: Optional[ExclusionReason]
    provenance: LabelProvenance


@dataclass(frozen=True)
class SplitRatios:
    """Train/dev/test fractions; exact rationals summing to 1."""

    train: Fraction = Fraction(8, 10)
    dev: Fraction = Fraction(1, 10)
    test: Fraction = Fraction(1, 10)

    def __post_init__(self):
        for name, frac in zip(SPLIT_NAMES, self.as_tuple()):
            if not 0 < frac < 1:
                raise ValidationError(f"split ratio {name}={frac} outside (0,1)")
        if sum(self.as_tuple()) != 1:
            raise ValidationError(f"split ratios must sum to 1, got {self.as_tuple()}")

    def as_tuple(self) -> tuple[Fraction, Fraction, Fraction]:
        return (self.train, self.dev, self.test)

    @classmethod
    def parse(cls, text: str) -> "SplitRatios":
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise ValidationError(f"ratios must be three comma-separated numbers: {text!r}")
        try:
            fracs = [Fraction(Decimal(p)) for p in parts]
        except Exception as exc:
            raise ValidationError(f"bad ratio in {text!r}") from exc
        return cls(*fracs)

    def __str__(self) -> str:
        return ",".join(str(float(f)) for f in self.as_tuple())


def build_instances(corpus: Corpus, config: WindowConfig) -> list[Instance]:
    """One unlabeled candidate per (stock, t) with news on day t.

    Candidates on the final calendar day have no t+1 outcome and come back
    excluded (NO_NEXT_DAY) for all three tasks. Output is ordered by
    (stock, t).
    """
    last_ordinal = len(corpus.calendar) - 1
    instances: list[Instance] = []
    for stock in sorted(corpus.stock_pool):
        days = corpus.news_days_for(stock)
        ordinals = sorted(days)
        for t in ordinals:
            window: list = []
            for o in range(max(0, t - config.T), t + 1):
                window.extend(days.get(o, ()))
            window.sort(key=lambda item: (item.day.ordinal, item.id))
            exclusions = {}
            if t == last_ordinal:
                exclusions = {
                    Task.TIMING: ExclusionReason.NO_NEXT_DAY,
                    Task.VIEW: ExclusionReason.NO_NEXT_DAY,
                    Task.TRADING: ExclusionReason.NO_NEXT_DAY,
                }
            instances.append(
                Instance(
                    stock=stock,
                    anchor_day=corpus.calendar.by_ordinal(t),
                    window=tuple(window),
                    exclusions=exclusions,
                )
            )
    return instances


def label_timing(instance: Instance, corpus: Corpus) -> TaskDecision:
    """ReleaseReport iff at least one report exists for (stock, t+1)."""
    nxt = instance.anchor_day.ordinal + 1
    reports = corpus.reports_at(instance.stock, nxt)
    if reports:
        events = tuple(
            f"report:{r.stock}:{r.day.date.isoformat()}:{r.analyst_id}" for r in reports
        )
        prov = LabelProvenance(instance.key(), Task.TIMING, "REPORT_ON_NEXT_DAY", events)
        return TaskDecision(TimingLabel.RELEASE_REPORT, None, prov)
    prov = LabelProvenance(instance.key(), Task.TIMING, "NO_REPORT_ON_NEXT_DAY", ())
    return TaskDecision(TimingLabel.NOT_RELEASE_REPORT, None, prov)


def label_view_change(
    instance: Instance, corpus: Corpus, epsilon: Decimal = Decimal("0")
) -> TaskDecision:
    """Compare the averaged price target at t against t+1.

    Upgrade / Downgrade when the move exceeds epsilon, Keep within it,
    excluded (MISSING_PT) when either snapshot is absent.
    """
    epsilon = money(epsilon)
    t = instance.anchor_day.ordinal
    p_t = corpus.price_target_at(instance.stock, t)
    p_next = corpus.price_target_at(instance.stock, t + 1)
    if p_t is None or p_next is None:
        prov = LabelProvenance(instance.key(), Task.VIEW, "PT_MISSING", ())
        return TaskDecision(None, ExclusionReason.MISSING_PT, prov)
    events = (
        f"pt:{p_t.stock}:{p_t.day.date.isoformat()}",
        f"pt:{p_next.stock}:{p_next.day.date.isoformat()}",
    )
    delta = p_next.avg_price_target - p_t.avg_price_target
    if delta > epsilon:
        return TaskDecision(
            ViewLabel.UPGRADE, None,
            LabelProvenance(instance.key(), Task.VIEW, "PT_UP", events),
        )
    if -delta > epsilon:
        return TaskDecision(
            ViewLabel.DOWNGRADE, None,
            LabelProvenance(instance.key(), Task.VIEW, "PT_DOWN", events),
        )
    return TaskDecision(
        ViewLabel.KEEP, None,
        LabelProvenance(instance.key(), Task.VIEW, "PT_SAME", events),
    )


def label_trading(instance: Instance, corpus: Corpus) -> TaskDecision:
    """Aggregate institutional buy vs sell amounts on t+1.

    NoAction when no record exists; a nonzero exact tie is excluded (the
    label set does not cover it).
    """
    nxt = instance.anchor_day.ordinal + 1
    records = corpus.trades_at(instance.stock, nxt)
    if not records:
        prov = LabelProvenance(instance.key(), Task.TRADING, "NO_TRADES", ())
        return TaskDecision(TradingLabel.NO_ACTION, None, prov)
    buys = sum((r.buy_amount for r in records), Decimal(0))
    sells = sum((r.sell_amount for r in records), Decimal(0))
    events = tuple(
        f"trade:{r.stock}:{r.day.date.isoformat()}:{r.institution_id}" for r in records
    )
    if buys > sells:
        rule, label = "BUY_EXCEEDS_SELL", TradingLabel.OVERWEIGHT
    elif sells > buys:
        rule, label = "SELL_EXCEEDS_BUY", TradingLabel.UNDERWEIGHT
    else:
        prov = LabelProvenance(instance.key(), Task.TRADING, "VOLUME_TIE", events)
        return TaskDecision(None, ExclusionReason.TIE, prov)
    return TaskDecision(label, None, LabelProvenance(instance.key(), Task.TRADING, rule, events))


def sample_negatives(
    positives: Sequence[Instance],
    candidates: Sequence[Instance],
    ratio: float = 1.0,
    seed: int = 0,
) -> tuple[list[Instance], Optional[str]]:
    """Seeded uniform draw of floor(ratio * |positives|) negatives.

    Only candidates whose stock appears among the positives are eligible.
    Returns (selection sorted by (stock, t), warning or None); the warning
    fires when eligible candidates run short and everything is returned.
    """
    if not positives:
        raise EmptyPositives("no positive instances to balance against")
    pool = {p.stock for p in positives}
    eligible = sorted(
        (c for c in candidates if c.stock in pool),
        key=lambda c: (c.stock, c.anchor_day.ordinal),
    )
    want = int(Fraction(str(ratio)) * len(positives))
    if len(eligible) < want:
        return eligible, (
            f"only {len(eligible)} eligible negatives for {want} requested; using all"
        )
    rng = random.Random(seed)
    chosen = rng.sample(eligible, want)
    chosen.sort(key=lambda c: (c.stock, c.anchor_day.ordinal))
    return chosen, None


def _allocate(n: int, fracs: Sequence[Fraction]) -> list[int]:
    # largest-remainder rounding: every share is floor or ceil of the exact value
    exact = [f * n for f in fracs]
    shares = [int(e) for e in exact]
    leftover = n - sum(shares)
    order = sorted(range(len(fracs)), key=lambda i: (shares[i] - exact[i], i))
    for i in order[:leftover]:
        shares[i] += 1
    return shares


def stratified_split(
    labeled: Sequence[tuple[int, str]], ratios: SplitRatios, seed: int
) -> dict[str, tuple[int, ...]]:
    """Split (index, class) pairs into train/dev/test, stratified by class.

    Seeded shuffle within each class; any class with fewer than three
    members raises TooFewInstances. Returned index tuples are sorted.
    """
    by_class: dict[str, list[int]] = {}
    for idx, cls in labeled:
        by_class.setdefault(cls, []).append(idx)
    for cls, members in sorted(by_class.items()):
        if len(members) < 3:
            raise TooFewInstances(f"class {cls} has only {len(members)} instances")
    rng = random.Random(seed)
    out: dict[str, list[int]] = {name: [] for name in SPLIT_NAMES}
    for cls in sorted(by_class):
        members = sorted(by_class[cls])
        rng.shuffle(members)
        shares = _allocate(len(members), ratios.as_tuple())
        start = 0
        for name, share in zip(SPLIT_NAMES, shares):
            out[name].extend(members[start : start + share])
            start += share
    return {name: tuple(sorted(idxs)) for name, idxs in out.items()}


def split_dataset(
    instances: Sequence[Instance],
    ratios: SplitRatios,
    seed: int,
    stratify_by: Task,
) -> LabeledDataset:
    """Stratified shuffle split of instances labeled for one task."""
    labeled = []
    for i, inst in enumerate(instances):
        label = inst.label_for(stratify_by)
        if label is None:
            raise ValidationError(
                f"instance {inst.key()} is not labeled for {stratify_by.value}"
            )
        labeled.append((i, label.value))
    splits = stratified_split(labeled, ratios, seed)
    return LabeledDataset(
        instances=tuple(instances),
        splits=splits,
        seed=seed,
        config={"task": stratify_by.value, "ratios": str(ratios)},
    )


@dataclass(frozen=True)
class LabelingRun:
    """Full pipeline output: the shared balanced instance set, per-task
    provenance and splits, and audit counters."""

    instances: tuple[Instance, ...]
    provenance: dict[str, dict[str, LabelProvenance]]  # instance key -> task -> record
    splits: dict[str, dict[str, tuple[int, ...]]]  # task -> split name -> indices
    counters: dict[str, int]
    warnings: tuple[str, ...]
    config: dict

    def dataset_for(self, task: Task, seed: int) -> LabeledDataset:
        return LabeledDataset(
            instances=self.instances,
            splits=self.splits[task.value],
            seed=seed,
            config={"task": task.value, **self.config},
        )


def label_corpus(
    corpus: Corpus,
    window: WindowConfig = WindowConfig(),
    ratios: SplitRatios = SplitRatios(),
    seed: int = 0,
    epsilon: Decimal = Decimal("0"),
    negative_ratio: float = 1.0,
) -> LabelingRun:
    """Run the whole dataset-construction pipeline on one corpus.

    Builds candidates, labels timing, balances classes by negative
    sampling, carries the balanced set through the view and trading rules,
    and splits each task view. Deterministic for a given seed.
    """
    candidates = build_instances(corpus, window)
    usable = [c for c in candidates if Task.TIMING not in c.exclusions]
    no_next_day = len(candidates) - len(usable)

    positives: list[Instance] = []
    negatives: list[Instance] = []
    prov_by_key: dict[str, dict[str, LabelProvenance]] = {}
    for cand in usable:
        decision = label_timing(cand, corpus)
        inst = replace(cand, timing_label=decision.label)
        prov_by_key[inst.key()] = {Task.TIMING.value: decision.provenance}
        if decision.label is TimingLabel.RELEASE_REPORT:
            positives.append(inst)
        else:
            negatives.append(inst)

    warnings: list[str] = []
    sampled, warning = sample_negatives(positives, negatives, negative_ratio, seed)
    if warning:
        warnings.append(warning)

    shared = sorted(positives + sampled, key=lambda c: (c.stock, c.anchor_day.ordinal))
    final: list[Instance] = []
    for inst in shared:
        view = label_view_change(inst, corpus, epsilon)
        trading = label_trading(inst, corpus)
        exclusions = dict(inst.exclusions)
        if view.exclusion is not None:
            exclusions[Task.VIEW] = view.exclusion
        if trading.exclusion is not None:
            exclusions[Task.TRADING] = trading.exclusion
        inst = replace(
            inst,
            view_label=view.label,
            trading_label=trading.label,
            exclusions=exclusions,
        )
        prov = prov_by_key[inst.key()]
        prov[Task.VIEW.value] = view.provenance
        prov[Task.TRADING.value] = trading.provenance
        final.append(inst)

    splits: dict[str, dict[str, tuple[int, ...]]] = {}
    for task in Task:
        labeled = [
            (i, inst.label_for(task).value)
            for i, inst in enumerate(final)
            if inst.label_for(task) is not None
        ]
        splits[task.value] = stratified_split(labeled, ratios, seed)

    counters = {
        "candidates": len(candidates),
        "no_next_day": no_next_day,
        "positives": len(positives),
        "negatives_eligible": len(negatives),
        "negatives_sampled": len(sampled),
        "shared_instances": len(final),
    }
    config = {
        "T": window.T,
        "seed": seed,
        "ratios": str(ratios),
        "epsilon": str(money(epsilon)),
        "negative_ratio": negative_ratio,
    }
    return LabelingRun(
        instances=tuple(final),
        provenance=prov_by_key,
        splits=splits,
        counters=counters,
        warnings=tuple(warnings),
        config=config,
    )
