"""Seeded synthetic event corpora with known-by-construction labels.

Generation is candidate-driven: for every planned news day the generator
draws the intended outcome of each task, plants that class's cue word in
the day's news, and then emits the raw events that realize the outcome
(reports on t+1, a bounded price-target walk, institutional trade rows).
Ground truth is then derived by re-reading the emitted events with code
independent of the labeler, so a labeler/ground-truth comparison is a
genuine two-implementation cross-check.

Outcome events on a day u are only ever driven by the candidate at u-1,
and ambient noise events are emitted only where no candidate reads them,
so intents can never collide. The price-target walk is bounded by
construction (pt_start > n_days * pt_step), which keeps every intended
move realizable and every target positive.

Everything is driven by one seeded RNG in a fixed iteration order: the
same seed yields byte-identical files.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field, replace
from decimal import Decimal
from pathlib import Path
from random import Random
from typing import Mapping, Sequence

from . import __version__
from .domain import money, money_str
from .errors import ValidationError

FILLER = (
    "market", "shares", "volume", "sector", "supply", "demand", "margin",
    "outlook", "quarter", "results", "orders", "capacity", "pricing",
    "clients", "contract", "plant", "exports", "revenue", "costs", "guidance",
)

# cue words are single alphanumeric tokens so they survive tokenization
DEFAULT_CUES: dict[str, dict[str, tuple[str, ...]]] = {
    "timing": {
        "ReleaseReport": ("macroshock",),
        "NotReleaseReport": ("quietsession",),
    },
    "view": {
        "Upgrade": ("upgradewave",),
        "Downgrade": ("downgradewave",),
        "Keep": ("steadyview",),
    },
    "trading": {
        "Overweight": ("inflowburst",),
        "Underweight": ("outflowburst",),
        "NoAction": ("noflow",),
    },
}

_ANALYSTS = tuple(f"AN{i:02d}" for i in range(8))
_INSTITUTIONS = tuple(f"IN{i:02d}" for i in range(8))


@dataclass(frozen=True)
class SynthSpec:
    n_stocks: int = 50
    n_days: int = 250
    seed: int = 7
    news_rate: float = 0.35
    max_news_per_day: int = 2
    min_gap_days: int = 0  # required gap between news days of one stock
    cue_in: str = "body"  # "body" | "headline"
    cue_rate: float = 0.45
    report_prob_cued: float = 0.75
    report_prob_base: float = 0.08
    noise_report_rate: float = 0.05
    pt_missing_rate: float = 0.03
    pt_start: Decimal = Decimal("1000.0000")
    pt_step: Decimal = Decimal("2.5000")
    view_priors: Mapping[str, float] = field(
        default_factory=lambda: {"Upgrade": 0.3, "Downgrade": 0.3, "Keep": 0.4}
    )
    trading_priors: Mapping[str, float] = field(
        default_factory=lambda: {
            "Overweight": 0.4,
            "Underweight": 0.35,
            "NoAction": 0.15,
            "TIE": 0.1,
        }
    )
    trade_unit: Decimal = Decimal("10.0000")
    cues: Mapping[str, Mapping[str, Sequence[str]]] = field(
        default_factory=lambda: DEFAULT_CUES
    )

    def __post_init__(self):
        if self.n_stocks < 1 or self.n_days < 2:
            raise ValidationError("need n_stocks >= 1 and n_days >= 2")
        if self.max_news_per_day < 1:
            raise ValidationError("max_news_per_day must be >= 1")
        if self.cue_in not in ("body", "headline"):
            raise ValidationError(f"cue_in must be body|headline, got {self.cue_in!r}")
        for name in (
            "news_rate", "cue_rate", "report_prob_cued", "report_prob_base",
            "noise_report_rate", "pt_missing_rate",
        ):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"{name} must be in [0,1], got {value}")
        for name in ("view_priors", "trading_priors"):
            priors = getattr(self, name)
            if abs(sum(priors.values()) - 1.0) > 1e-9:
                raise ValidationError(f"{name} must sum to 1")
            if any(p < 0 for p in priors.values()):
                raise ValidationError(f"{name} must be non-negative")
        object.__setattr__(self, "pt_start", money(self.pt_start))
        object.__setattr__(self, "pt_step", money(self.pt_step))
        object.__setattr__(self, "trade_unit", money(self.trade_unit))
        if self.pt_step <= 0 or self.trade_unit <= 0:
            raise ValidationError("pt_step and trade_unit must be positive")
        if self.pt_start <= self.pt_step * self.n_days:
            raise ValidationError(
                "pt_start must exceed n_days * pt_step so the walk stays positive"
            )
        seen: set[str] = set(FILLER)
        for task, per_class in self.cues.items():
            for cls, words in per_class.items():
                for word in words:
                    if word in seen:
                        raise ValidationError(
                            f"cue {word!r} ({task}/{cls}) reused; lexicons must be disjoint"
                        )
                    seen.add(word)

    @classmethod
    def from_json(cls, path) -> "SynthSpec":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        spec = cls()
        fields = {}
        for key, value in data.items():
            if not hasattr(spec, key):
                raise ValidationError(f"unknown synth spec key {key!r}")
            if key in ("pt_start", "pt_step", "trade_unit"):
                value = money(value)
            if key == "cues":
                value = {
                    task: {c: tuple(words) for c, words in per.items()}
                    for task, per in value.items()
                }
            fields[key] = value
        return replace(spec, **fields)

    def snapshot(self) -> dict:
        return {
            "n_stocks": self.n_stocks,
            "n_days": self.n_days,
            "seed": self.seed,
            "news_rate": self.news_rate,
            "max_news_per_day": self.max_news_per_day,
            "min_gap_days": self.min_gap_days,
            "cue_in": self.cue_in,
            "cue_rate": self.cue_rate,
            "report_prob_cued": self.report_prob_cued,
            "report_prob_base": self.report_prob_base,
            "noise_report_rate": self.noise_report_rate,
            "pt_missing_rate": self.pt_missing_rate,
            "pt_start": money_str(self.pt_start),
            "pt_step": money_str(self.pt_step),
            "view_priors": dict(self.view_priors),
            "trading_priors": dict(self.trading_priors),
            "trade_unit": money_str(self.trade_unit),
            "cues": {t: {c: list(w) for c, w in per.items()} for t, per in self.cues.items()},
        }


def _business_days(n: int, start: dt.date = dt.date(2020, 1, 2)) -> list[dt.date]:
    days: list[dt.date] = []
    current = start
    while len(days) < n:
        if current.weekday() < 5:
            days.append(current)
        current += dt.timedelta(days=1)
    return days


def _weighted_choice(rng: Random, priors: Mapping[str, float]) -> str:
    roll = rng.random()
    acc = 0.0
    names = sorted(priors)
    for name in names:
        acc += priors[name]
        if roll < acc:
            return name
    return names[-1]


def _pick(rng: Random, words: Sequence[str]) -> str:
    return words[rng.randrange(len(words))]


def _dumps(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def generate_corpus(spec: SynthSpec, out_dir) -> dict:
    """Emit the five ingestion files plus ground_truth.jsonl into out_dir.

    Returns a summary with per-task ground-truth class counts.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = Random(spec.seed)
    dates = _business_days(spec.n_days)
    stocks = [f"S{i:03d}" for i in range(spec.n_stocks)]
    last_ordinal = spec.n_days - 1

    news_rows: list[dict] = []
    report_rows: list[tuple[str, int, str]] = []
    pt_rows: list[tuple[str, int, Decimal]] = []
    trade_rows: list[tuple[str, int, str, Decimal, Decimal]] = []
    candidates: list[tuple[str, int]] = []

    zero = Decimal("0.0000")

    for stock in stocks:
        # plan news days under the gap constraint
        news_days: list[int] = []
        last_news = None
        for d in range(spec.n_days):
            if last_news is not None and d - last_news <= spec.min_gap_days:
                continue
            if rng.random() < spec.news_rate:
                news_days.append(d)
                last_news = d
        news_day_set = set(news_days)

        # price-target availability is decided up front; intents below only
        # steer the walk's per-day delta
        pt_missing = [rng.random() < spec.pt_missing_rate for _ in range(spec.n_days)]
        pt_delta: dict[int, Decimal] = {}

        for t in news_days:
            candidates.append((stock, t))
            planted: list[str] = []

            cued = rng.random() < spec.cue_rate
            if cued:
                planted.append(_pick(rng, spec.cues["timing"]["ReleaseReport"]))
                p_report = spec.report_prob_cued
            else:
                planted.append(_pick(rng, spec.cues["timing"]["NotReleaseReport"]))
                p_report = spec.report_prob_base

            view_intent = _weighted_choice(rng, spec.view_priors)
            planted.append(_pick(rng, spec.cues["view"][view_intent]))

            trading_intent = _weighted_choice(rng, spec.trading_priors)
            if trading_intent in spec.cues["trading"]:
                planted.append(_pick(rng, spec.cues["trading"][trading_intent]))

            # news items for day t; the first item carries the cue words
            n_items = rng.randint(1, spec.max_news_per_day)
            for k in range(n_items):
                fillers = [_pick(rng, FILLER) for _ in range(rng.randint(6, 12))]
                cue_tokens = planted if k == 0 else []
                headline_extra = ""
                body_tokens = list(fillers)
                if cue_tokens:
                    if spec.cue_in == "headline":
                        headline_extra = " " + " ".join(cue_tokens)
                    else:
                        for word in cue_tokens:
                            body_tokens.insert(rng.randrange(len(body_tokens) + 1), word)
                news_rows.append(
                    {
                        "id": f"{stock}-{dates[t].isoformat()}-{k}",
                        "stock": stock,
                        "date": dates[t].isoformat(),
                        "headline": f"{stock} session update{headline_extra}",
                        "body": " ".join(body_tokens),
                    }
                )

            if t == last_ordinal:
                continue  # no t+1: intents have nothing to realize

            if rng.random() < p_report:
                for analyst in rng.sample(_ANALYSTS, rng.randint(1, 2)):
                    report_rows.append((stock, t + 1, analyst))

            if view_intent == "Upgrade":
                pt_delta[t] = spec.pt_step
            elif view_intent == "Downgrade":
                pt_delta[t] = -spec.pt_step
            else:
                pt_delta[t] = zero

            unit = spec.trade_unit
            if trading_intent == "NoAction":
                pass  # no record on t+1 by construction
            elif trading_intent == "TIE":
                amount = unit * rng.randint(1, 5)
                inst_a, inst_b = rng.sample(_INSTITUTIONS, 2)
                trade_rows.append((stock, t + 1, inst_a, amount, zero))
                trade_rows.append((stock, t + 1, inst_b, zero, amount))
            else:
                rows = []
                for inst in rng.sample(_INSTITUTIONS, rng.randint(1, 3)):
                    rows.append(
                        [inst, unit * rng.randint(0, 5), unit * rng.randint(0, 5)]
                    )
                buys = sum(r[1] for r in rows)
                sells = sum(r[2] for r in rows)
                if trading_intent == "Overweight" and buys <= sells:
                    rows[0][1] += sells - buys + unit
                elif trading_intent == "Underweight" and sells <= buys:
                    rows[0][2] += buys - sells + unit
                for inst, buy, sell in rows:
                    trade_rows.append((stock, t + 1, inst, buy, sell))

        # ambient noise reports land only where no candidate reads them
        for d in range(1, spec.n_days):
            if d - 1 not in news_day_set and rng.random() < spec.noise_report_rate:
                report_rows.append((stock, d, _pick(rng, _ANALYSTS)))

        # bounded price-target walk; candidate days dictate their delta
        value = spec.pt_start
        for d in range(spec.n_days):
            if not pt_missing[d]:
                pt_rows.append((stock, d, value))
            if d in pt_delta:
                value += pt_delta[d]
            else:
                value += spec.pt_step * (rng.randint(-1, 1))

    # ground truth from the emitted events, independent of the labeler
    report_days = {(stock, d) for stock, d, _ in report_rows}
    pt_values = {(stock, d): v for stock, d, v in pt_rows}
    trade_sums: dict[tuple[str, int], list[Decimal]] = {}
    for stock, d, _, buy, sell in trade_rows:
        sums = trade_sums.setdefault((stock, d), [zero, zero])
        sums[0] += buy
        sums[1] += sell

    truth_rows: list[dict] = []
    counts: dict[str, dict[str, int]] = {"timing": {}, "view": {}, "trading": {}}

    def bump(task: str, cls: str) -> None:
        counts[task][cls] = counts[task].get(cls, 0) + 1

    for stock, t in sorted(candidates):
        labels: dict[str, str] = {}
        exclusions: dict[str, str] = {}
        if t == last_ordinal:
            exclusions = {
                "timing": "NO_NEXT_DAY",
                "view": "NO_NEXT_DAY",
                "trading": "NO_NEXT_DAY",
            }
        else:
            labels["timing"] = (
                "ReleaseReport" if (stock, t + 1) in report_days else "NotReleaseReport"
            )
            p_t = pt_values.get((stock, t))
            p_next = pt_values.get((stock, t + 1))
            if p_t is None or p_next is None:
                exclusions["view"] = "MISSING_PT"
            elif p_next > p_t:
                labels["view"] = "Upgrade"
            elif p_next < p_t:
                labels["view"] = "Downgrade"
            else:
                labels["view"] = "Keep"
            sums = trade_sums.get((stock, t + 1))
            if sums is None:
                labels["trading"] = "NoAction"
            elif sums[0] > sums[1]:
                labels["trading"] = "Overweight"
            elif sums[1] > sums[0]:
                labels["trading"] = "Underweight"
            else:
                exclusions["trading"] = "TIE"
        if "trading" in labels:
            labels["trading_alias"] = {
                "Overweight": "Overbuy",
                "Underweight": "Oversell",
                "NoAction": "NoAction",
            }[labels["trading"]]
        for task in ("timing", "view", "trading"):
            if task in labels:
                bump(task, labels[task])
            else:
                bump(task, f"EXCLUDED:{exclusions[task]}")
        truth_rows.append(
            {
                "stock": stock,
                "date": dates[t].isoformat(),
                "labels": labels,
                "exclusions": exclusions,
            }
        )

    (out_dir / "calendar.txt").write_text(
        "".join(d.isoformat() + "\n" for d in dates), encoding="utf-8"
    )
    (out_dir / "news.jsonl").write_text(
        "".join(_dumps(row) + "\n" for row in news_rows), encoding="utf-8"
    )
    report_rows.sort()
    (out_dir / "reports.jsonl").write_text(
        "".join(
            _dumps(
                {"stock": s, "date": dates[d].isoformat(), "analyst_id": a}
            )
            + "\n"
            for s, d, a in report_rows
        ),
        encoding="utf-8",
    )
    (out_dir / "price_targets.jsonl").write_text(
        "".join(
            _dumps(
                {
                    "stock": s,
                    "date": dates[d].isoformat(),
                    "avg_price_target": money_str(v),
                }
            )
            + "\n"
            for s, d, v in pt_rows
        ),
        encoding="utf-8",
    )
    (out_dir / "trades.jsonl").write_text(
        "".join(
            _dumps(
                {
                    "stock": s,
                    "date": dates[d].isoformat(),
                    "institution_id": inst,
                    "buy_amount": money_str(b),
                    "sell_amount": money_str(sl),
                }
            )
            + "\n"
            for s, d, inst, b, sl in trade_rows
        ),
        encoding="utf-8",
    )
    (out_dir / "ground_truth.jsonl").write_text(
        "".join(_dumps(row) + "\n" for row in truth_rows), encoding="utf-8"
    )
    summary = {
        "version": __version__,
        "spec": spec.snapshot(),
        "candidates": len(candidates),
        "counts": {task: dict(sorted(per.items())) for task, per in counts.items()},
    }
    (out_dir / "synth_config.json").write_text(
        json.dumps(summary, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    return summary
