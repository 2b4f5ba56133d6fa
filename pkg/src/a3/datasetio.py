"""Reading and writing dataset.jsonl + manifest.json.

dataset.jsonl carries one instance per line with its window items inlined
(id, date, headline, body), so downstream stages never need the raw
corpus again. manifest.json records the resolved run configuration, the
seed, audit counters, and per-task per-split class counts.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional

from . import __version__
from .domain import (
    TRADING_ALIAS,
    ExclusionReason,
    Instance,
    NewsItem,
    StockId,
    Task,
    TimingLabel,
    TradingCalendar,
    TradingLabel,
    ViewLabel,
)
from .errors import ParseError
from .labeler import SPLIT_NAMES, LabelingRun, SplitRatios, stratified_split

_LABEL_PARSERS = {
    Task.TIMING: TimingLabel,
    Task.VIEW: ViewLabel,
    Task.TRADING: TradingLabel,
}


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def _instance_line(
    inst: Instance,
    provenance: Mapping[str, object],
    split_of: Mapping[str, str],
) -> dict:
    labels: dict[str, str] = {}
    for task in Task:
        label = inst.label_for(task)
        if label is not None:
            labels[task.value] = label.value
    if inst.trading_label is not None:
        labels["trading_alias"] = TRADING_ALIAS[inst.trading_label]
    exclusions = {
        task.value: reason.value for task, reason in sorted(
            inst.exclusions.items(), key=lambda kv: kv[0].value
        )
    }
    prov_json = {
        task: {"rule": p.rule, "events": list(p.events)}
        for task, p in sorted(provenance.items())
    }
    return {
        "stock": inst.stock.code,
        "date": inst.anchor_day.date.isoformat(),
        "window": [
            {
                "id": item.id,
                "date": item.day.date.isoformat(),
                "headline": item.headline,
                "body": item.body,
            }
            for item in inst.window
        ],
        "labels": labels,
        "exclusions": exclusions,
        "provenance": prov_json,
        "splits": {t: s for t, s in sorted(split_of.items())},
    }


def write_dataset(run: LabelingRun, out_path, extra_config: Optional[dict] = None) -> Path:
    """Write dataset.jsonl and its manifest.json sibling; returns the
    manifest path."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)

    split_of: list[dict[str, str]] = [{} for _ in run.instances]
    for task_name, splits in run.splits.items():
        for split_name, idxs in splits.items():
            for i in idxs:
                split_of[i][task_name] = split_name

    lines = []
    for i, inst in enumerate(run.instances):
        prov = run.provenance.get(inst.key(), {})
        lines.append(_dumps(_instance_line(inst, prov, split_of[i])))
    out_path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")

    counts: dict[str, dict[str, dict[str, int]]] = {}
    totals: dict[str, dict[str, int]] = {}
    for task in Task:
        per_split: dict[str, dict[str, int]] = {}
        for split_name in SPLIT_NAMES:
            tally: dict[str, int] = {}
            for i in run.splits[task.value][split_name]:
                label = run.instances[i].label_for(task)
                tally[label.value] = tally.get(label.value, 0) + 1
            per_split[split_name] = dict(sorted(tally.items()))
        counts[task.value] = per_split
        labeled = sum(
            1 for inst in run.instances if inst.label_for(task) is not None
        )
        totals[task.value] = {
            "labeled": labeled,
            "excluded": len(run.instances) - labeled,
        }

    manifest = {
        "version": __version__,
        "config": {**run.config, **(extra_config or {})},
        "seed": run.config.get("seed"),
        "counters": run.counters,
        "warnings": list(run.warnings),
        "counts": counts,
        "totals": totals,
        "class_aliases": {k.value: v for k, v in TRADING_ALIAS.items()},
    }
    manifest_path = out_path.with_name("manifest.json")
    manifest_path.write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    return manifest_path


@dataclass(frozen=True)
class DatasetBundle:
    """A dataset.jsonl loaded back into domain objects."""

    instances: tuple[Instance, ...]
    splits: dict[str, dict[str, tuple[int, ...]]]  # task -> split -> indices
    records: tuple[dict, ...]  # raw per-line JSON, same order as instances

    def has_task(self, task: Task) -> bool:
        return any(self.splits.get(task.value, {}).values())


def read_dataset(path) -> DatasetBundle:
    """Load dataset.jsonl; rebuilds instances against a calendar derived
    from the dates present in the file."""
    path = Path(path)
    records: list[dict] = []
    dates: set[dt.date] = set()
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path.name}:{lineno}: bad JSON") from exc
        records.append(rec)
        dates.add(dt.date.fromisoformat(rec["date"]))
        for item in rec["window"]:
            dates.add(dt.date.fromisoformat(item["date"]))
    if not records:
        raise ParseError(f"{path.name}: dataset is empty")
    calendar = TradingCalendar(sorted(dates))

    instances: list[Instance] = []
    splits: dict[str, dict[str, list[int]]] = {
        task.value: {name: [] for name in SPLIT_NAMES} for task in Task
    }
    for i, rec in enumerate(records):
        stock = StockId(rec["stock"])
        window = tuple(
            NewsItem(
                id=item["id"],
                stock=stock,
                day=calendar.day(dt.date.fromisoformat(item["date"])),
                headline=item["headline"],
                body=item["body"],
            )
            for item in rec["window"]
        )
        labels = rec.get("labels", {})
        exclusions = {
            Task(t): ExclusionReason(r) for t, r in rec.get("exclusions", {}).items()
        }
        instances.append(
            Instance(
                stock=stock,
                anchor_day=calendar.day(dt.date.fromisoformat(rec["date"])),
                window=window,
                timing_label=(
                    TimingLabel(labels["timing"]) if "timing" in labels else None
                ),
                view_label=ViewLabel(labels["view"]) if "view" in labels else None,
                trading_label=(
                    TradingLabel(labels["trading"]) if "trading" in labels else None
                ),
                exclusions=exclusions,
            )
        )
        for task_name, split_name in rec.get("splits", {}).items():
            splits.setdefault(task_name, {}).setdefault(split_name, [])
            splits[task_name][split_name].append(i)

    frozen = {
        task: {name: tuple(idxs) for name, idxs in per.items()}
        for task, per in splits.items()
    }
    return DatasetBundle(tuple(instances), frozen, tuple(records))


def rewrite_splits(
    bundle: DatasetBundle,
    ratios: SplitRatios,
    seed: int,
    out_path,
    config_snapshot: Optional[dict] = None,
) -> Path:
    """Recompute every task's splits on an existing dataset and write it
    back out (labels, provenance, and window content are untouched)."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)

    new_splits: dict[str, dict[str, tuple[int, ...]]] = {}
    for task in Task:
        labeled = [
            (i, inst.label_for(task).value)
            for i, inst in enumerate(bundle.instances)
            if inst.label_for(task) is not None
        ]
        new_splits[task.value] = stratified_split(labeled, ratios, seed)

    split_of: list[dict[str, str]] = [{} for _ in bundle.instances]
    for task_name, splits in new_splits.items():
        for split_name, idxs in splits.items():
            for i in idxs:
                split_of[i][task_name] = split_name

    lines = []
    for i, rec in enumerate(bundle.records):
        rec = dict(rec)
        rec["splits"] = {t: s for t, s in sorted(split_of[i].items())}
        lines.append(_dumps(rec))
    out_path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")

    counts: dict[str, dict[str, dict[str, int]]] = {}
    for task in Task:
        per_split: dict[str, dict[str, int]] = {}
        for split_name in SPLIT_NAMES:
            tally: dict[str, int] = {}
            for i in new_splits[task.value][split_name]:
                label = bundle.instances[i].label_for(task)
                tally[label.value] = tally.get(label.value, 0) + 1
            per_split[split_name] = dict(sorted(tally.items()))
        counts[task.value] = per_split

    manifest = {
        "version": __version__,
        "config": config_snapshot or {},
        "seed": seed,
        "counts": counts,
        "class_aliases": {k.value: v for k, v in TRADING_ALIAS.items()},
    }
    manifest_path = out_path.with_name("manifest.json")
    manifest_path.write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    return manifest_path
