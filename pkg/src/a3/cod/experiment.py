"""End-to-end experiment runner: stage 1 + stage 2 on one task view.

Trains on train, evaluates dev (reported only, never used for selection:
the baseline has nothing to tune) and test. The report carries accuracy,
macro-F1, per-class counts, the resolved configuration, and cache
statistics; metric payloads are deterministic for a fixed config and
seed, regardless of concurrency.
"""

from __future__ import annotations

import datetime as dt
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .. import __version__
from ..domain import LabeledDataset, Task
from ..errors import PluginProtocolError, ValidationError
from ..metrics import accuracy, macro_f1, render4
from .baseline import predict, train_baseline
from .compose import ComposedInput, ComposeMode, compose_input
from .opinions import DEFAULT_CACHE_DIR, CacheStats, OpinionCache, generate_opinions
from .plugin import PluginClient
from .prompts import load_template
from .stubs import resolve_generator

SPLITS = ("train", "dev", "test")


@dataclass(frozen=True)
class ExperimentConfig:
    task: Task
    generator: Optional[str] = None  # None | "stub:echo" | "stub:cue" | plugin cmdline
    prompt: str = "plain"
    mode: ComposeMode = ComposeMode.NEWS_ONLY
    classifier: str = "baseline"  # "baseline" | plugin cmdline
    seed: int = 0
    max_len: Optional[int] = 512
    concurrency: int = 8
    retries: int = 2
    backoff: tuple[float, ...] = (0.25, 1.0)
    cache_dir: Optional[str] = None

    def __post_init__(self):
        if self.generator is None and self.mode is not ComposeMode.NEWS_ONLY:
            raise ValidationError(
                f"compose mode {self.mode.value} requires a generator"
            )
        if self.concurrency < 1:
            raise ValidationError(f"concurrency must be >= 1, got {self.concurrency}")

    def snapshot(self) -> dict:
        return {
            "task": self.task.value,
            "generator": self.generator,
            "prompt": self.prompt,
            "mode": self.mode.value,
            "classifier": self.classifier,
            "seed": self.seed,
            "max_len": self.max_len,
            "concurrency": self.concurrency,
            "retries": self.retries,
            "backoff": list(self.backoff),
            "cache_dir": self.cache_dir,
        }


@dataclass(frozen=True)
class ExperimentReport:
    task: str
    config: dict
    generator_name: Optional[str]
    metrics: dict  # split -> {"accuracy", "macro_f1", "n", "per_class", "confusion"}
    cache: dict
    version: str = __version__
    created_at: str = field(default_factory=lambda: dt.datetime.now(dt.timezone.utc).isoformat())

    def to_json(self) -> str:
        payload = {
            "task": self.task,
            "config": self.config,
            "generator_name": self.generator_name,
            "metrics": self.metrics,
            "cache": self.cache,
            "version": self.version,
            "created_at": self.created_at,
        }
        return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"

    def metrics_payload(self) -> str:
        """Canonical bytes of the deterministic part of the report."""
        return json.dumps(self.metrics, ensure_ascii=False, sort_keys=True)

    def write(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(self.to_json())
            os.replace(tmp, path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)


def _evaluate(
    golds: Sequence[str], preds: Sequence[str], classes: Sequence[str]
) -> dict:
    per_class = {}
    for cls in classes:
        per_class[cls] = {
            "support": sum(1 for g in golds if g == cls),
            "predicted": sum(1 for p in preds if p == cls),
            "correct": sum(1 for g, p in zip(golds, preds) if g == p == cls),
        }
    confusion: dict[str, dict[str, int]] = {}
    for g, p in zip(golds, preds):
        confusion.setdefault(g, {}).setdefault(p, 0)
        confusion[g][p] += 1
    return {
        "n": len(golds),
        "accuracy": render4(accuracy(preds, golds)),
        "macro_f1": render4(macro_f1(preds, golds, classes)),
        "per_class": per_class,
        "confusion": {g: dict(sorted(row.items())) for g, row in sorted(confusion.items())},
    }


def run_experiment(dataset: LabeledDataset, config: ExperimentConfig) -> ExperimentReport:
    """Run one (generator, composer, classifier) configuration end to end."""
    task = config.task
    for split in SPLITS:
        if split not in dataset.splits or not dataset.splits[split]:
            raise ValidationError(f"dataset has no {split} split for {task.value}")

    split_members = {
        split: [dataset.instances[i] for i in dataset.splits[split]] for split in SPLITS
    }
    needed = [inst for split in SPLITS for inst in split_members[split]]

    generator = resolve_generator(config.generator, max_in_flight=config.concurrency)
    generator_name: Optional[str] = None
    opinions = None
    stats = CacheStats()
    if config.mode is not ComposeMode.NEWS_ONLY:
        template = load_template(config.prompt)
        cache = OpinionCache(config.cache_dir or DEFAULT_CACHE_DIR)
        items = [item for inst in needed for item in inst.window]
        try:
            opinions, stats = generate_opinions(
                items,
                generator,
                template,
                cache,
                concurrency=config.concurrency,
                retries=config.retries,
                backoff=config.backoff,
            )
        finally:
            if isinstance(generator, PluginClient) and generator.started:
                generator.close()
        generator_name = next(iter(opinions.values())).generator_name if opinions else None
    elif generator is not None:
        generator_name = getattr(generator, "name", None)

    composed: dict[str, ComposedInput] = {}
    for inst in needed:
        if inst.key() not in composed:
            composed[inst.key()] = compose_input(inst, opinions, config.mode, config.max_len)

    def gold(inst) -> str:
        label = inst.label_for(task)
        if label is None:
            raise ValidationError(f"instance {inst.key()} unlabeled for {task.value}")
        return label.value

    train_pairs = [(composed[i.key()], gold(i)) for i in split_members["train"]]
    classes = sorted({gold(i) for insts in split_members.values() for i in insts})

    classifier = None
    plugin_classifier: Optional[PluginClient] = None
    try:
        if config.classifier == "baseline":
            classifier = train_baseline(train_pairs, seed=config.seed)
        else:
            plugin_classifier = PluginClient(
                config.classifier, max_in_flight=config.concurrency
            ).start()
            if "classify" not in plugin_classifier.methods:
                raise PluginProtocolError(
                    f"plugin {plugin_classifier.name!r} does not support classify"
                )
            classifier = plugin_classifier

        metrics = {}
        for split in SPLITS:
            golds = [gold(i) for i in split_members[split]]
            preds = [
                predict(classifier, composed[i.key()], classes)[0]
                for i in split_members[split]
            ]
            metrics[split] = _evaluate(golds, preds, classes)
    finally:
        if plugin_classifier is not None:
            plugin_classifier.close()

    return ExperimentReport(
        task=task.value,
        config=config.snapshot(),
        generator_name=generator_name,
        metrics=metrics,
        cache=stats.as_dict(),
    )
