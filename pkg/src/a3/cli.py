"""Single entry point: every pipeline stage as a subcommand.

Runs are reproducible and scriptable: no prompts, diagnostics on stderr,
data on stdout or in files, and every artifact embeds the resolved
configuration and tool version. A TOML config file can pre-set any flag
(one table per subcommand, keys mirror flag names); explicit flags win.

Exit codes: 0 success, 1 validation failure, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from decimal import Decimal
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .cod import (
    ComposeMode,
    ExperimentConfig,
    OpinionCache,
    generate_opinions,
    load_template,
    resolve_generator,
    run_experiment,
)
from .cod.opinions import DEFAULT_CACHE_DIR
from .cod.plugin import PluginClient
from .datasetio import read_dataset, rewrite_splits, write_dataset
from .domain import LabeledDataset, Task, WindowConfig, money, money_str
from .errors import (
    LengthMismatch,
    RuntimeFailure,
    ValidationError,
)
from .ingestion import load_corpus, write_corpus
from .labeler import SplitRatios, label_corpus
from .metrics import accuracy, macro_f1, render4, rouge_l, rouge_n
from .pmi import compute_pmi, format_score, top_keywords, write_pmi_csv
from .synth import SynthSpec, generate_corpus

CACHE_ENV = "A3_CACHE_DIR"


def _err(message: str) -> None:
    print(message, file=sys.stderr)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(message)


def _load_config(path):
    if not path:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _resolve(args, config: dict, command: str, defaults: dict) -> dict:
    """defaults < config-file section < explicit flags."""
    section = config.get(command, {})
    resolved = {}
    for key, default in defaults.items():
        value = getattr(args, key, None)
        if value is None:
            value = section.get(key, default)
        resolved[key] = value
    return resolved


def _config_snapshot(command: str, resolved: dict) -> dict:
    snap = {"command": command, "tool_version": __version__}
    for key, value in sorted(resolved.items()):
        if isinstance(value, Decimal):
            value = money_str(value)
        elif isinstance(value, Path):
            value = str(value)
        snap[key] = value
    return snap


def _cache_dir(explicit) -> str:
    return explicit or os.environ.get(CACHE_ENV) or DEFAULT_CACHE_DIR


# ---------------------------------------------------------------- commands


def _cmd_ingest(args, config) -> int:
    opts = _resolve(args, config, "ingest", {"corpus": None, "calendar": None, "out": None})
    if not opts["corpus"]:
        raise ValidationError("--corpus is required")
    corpus, report = load_corpus(opts["corpus"], opts["calendar"])
    for file, line, code, message in report.warnings:
        _err(f"warning: {file}:{line}: {code}: {message}")
    for file, line, code, message in report.errors:
        _err(f"error: {file}:{line}: {code}: {message}")
    _err(report.summary())
    if corpus is None:
        raise ValidationError(f"corpus rejected with {len(report.errors)} errors")
    if opts["out"]:
        write_corpus(corpus, opts["out"])
        meta = Path(opts["out"]) / "ingest_config.json"
        meta.write_text(
            json.dumps(_config_snapshot("ingest", opts), ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )
        _err(f"canonical corpus written to {opts['out']}")
    return 0


_LABEL_DEFAULTS = {
    "corpus": None,
    "calendar": None,
    "T": 5,
    "seed": 7,
    "ratios": "0.8,0.1,0.1",
    "epsilon": "0",
    "negative_ratio": 1.0,
    "out": "dataset.jsonl",
}


def _cmd_label(args, config) -> int:
    opts = _resolve(args, config, "label", _LABEL_DEFAULTS)
    if not opts["corpus"]:
        raise ValidationError("--corpus is required")
    if int(opts["T"]) < 0:
        raise ValidationError(f"--T must be >= 0, got {opts['T']}")
    if float(opts["negative_ratio"]) <= 0:
        raise ValidationError(f"--negative-ratio must be > 0, got {opts['negative_ratio']}")
    corpus, report = load_corpus(opts["corpus"], opts["calendar"])
    for file, line, code, message in report.errors:
        _err(f"error: {file}:{line}: {code}: {message}")
    if corpus is None:
        raise ValidationError(f"corpus rejected with {len(report.errors)} errors")
    run = label_corpus(
        corpus,
        window=WindowConfig(int(opts["T"])),
        ratios=SplitRatios.parse(str(opts["ratios"])),
        seed=int(opts["seed"]),
        epsilon=money(opts["epsilon"]),
        negative_ratio=float(opts["negative_ratio"]),
    )
    for warning in run.warnings:
        _err(f"warning: {warning}")
    manifest = write_dataset(run, opts["out"], _config_snapshot("label", opts))
    _err(
        f"dataset written to {opts['out']} "
        f"({run.counters['shared_instances']} instances; manifest {manifest})"
    )
    return 0


def _cmd_split(args, config) -> int:
    defaults = {"dataset": None, "ratios": "0.8,0.1,0.1", "seed": 7, "out": None}
    opts = _resolve(args, config, "split", defaults)
    if not opts["dataset"] or not opts["out"]:
        raise ValidationError("--dataset and --out are required")
    bundle = read_dataset(opts["dataset"])
    rewrite_splits(
        bundle,
        SplitRatios.parse(str(opts["ratios"])),
        int(opts["seed"]),
        opts["out"],
        _config_snapshot("split", opts),
    )
    _err(f"re-split dataset written to {opts['out']}")
    return 0


_PMI_DEFAULTS = {
    "dataset": "dataset.jsonl",
    "task": None,
    "cls": None,
    "k": 5,
    "direction": "highest",
    "alpha": 0.5,
    "min_df": 1,
    "log_base": 2.0,
    "lexicon": None,
    "out": None,
}


def _cmd_pmi(args, config) -> int:
    opts = _resolve(args, config, "pmi", _PMI_DEFAULTS)
    if not opts["task"]:
        raise ValidationError("--task is required")
    task = Task(opts["task"])
    bundle = read_dataset(opts["dataset"])
    labeled = [inst for inst in bundle.instances if inst.label_for(task) is not None]
    lexicon = None
    if opts["lexicon"]:
        lexicon = [
            line.strip()
            for line in Path(opts["lexicon"]).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
    table = compute_pmi(
        labeled,
        class_of=lambda inst: inst.label_for(task).value,
        min_df=int(opts["min_df"]),
        smoothing=float(opts["alpha"]),
        lexicon=lexicon,
        log_base=float(opts["log_base"]),
    )
    classes = [opts["cls"]] if opts["cls"] else list(table.classes)
    for cls in classes:
        for term, score in top_keywords(table, cls, int(opts["k"]), opts["direction"]):
            print(f"{cls}\t{term}\t{format_score(score)}\t{table.doc_freq[term]}")
    if opts["out"]:
        write_pmi_csv(table, opts["out"])
        meta = Path(opts["out"]).with_suffix(".meta.json")
        meta.write_text(
            json.dumps(_config_snapshot("pmi", opts), ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )
        _err(f"PMI table written to {opts['out']}")
    return 0


def _cmd_synth(args, config) -> int:
    opts = _resolve(args, config, "synth", {"spec": None, "out": None, "seed": None})
    if not opts["out"]:
        raise ValidationError("--out is required")
    spec = SynthSpec.from_json(opts["spec"]) if opts["spec"] else SynthSpec()
    if opts["seed"] is not None:
        from dataclasses import replace

        spec = replace(spec, seed=int(opts["seed"]))
    summary = generate_corpus(spec, opts["out"])
    _err(
        f"synthetic corpus written to {opts['out']} "
        f"({summary['candidates']} candidates)"
    )
    return 0


_GENERATE_DEFAULTS = {
    "dataset": "dataset.jsonl",
    "generator": None,
    "prompt": "plain",
    "jobs": 8,
    "retries": 2,
    "cache_dir": None,
    "out": None,
}


def _cmd_generate(args, config) -> int:
    opts = _resolve(args, config, "generate", _GENERATE_DEFAULTS)
    if not opts["generator"]:
        raise ValidationError("--generator is required")
    bundle = read_dataset(opts["dataset"])
    items = [item for inst in bundle.instances for item in inst.window]
    generator = resolve_generator(opts["generator"], max_in_flight=int(opts["jobs"]))
    template = load_template(opts["prompt"])
    cache = OpinionCache(_cache_dir(opts["cache_dir"]))
    try:
        opinions, stats = generate_opinions(
            items,
            generator,
            template,
            cache,
            concurrency=int(opts["jobs"]),
            retries=int(opts["retries"]),
        )
    finally:
        if isinstance(generator, PluginClient) and generator.started:
            generator.close()
    _err(
        f"opinions: {len(opinions)} total, {stats.hits} cached, "
        f"{stats.misses} generated, {stats.errors} errored"
    )
    if opts["out"]:
        rows = []
        for news_id in sorted(opinions):
            op = opinions[news_id]
            rows.append(
                json.dumps(
                    {
                        "news_id": op.news_id,
                        "text": op.text,
                        "generator_name": op.generator_name,
                        "latency_ms": op.latency_ms,
                        "error": op.error,
                    },
                    ensure_ascii=False,
                    separators=(",", ":"),
                )
            )
        Path(opts["out"]).write_text("".join(r + "\n" for r in rows), encoding="utf-8")
        meta = Path(opts["out"]).with_suffix(".meta.json")
        meta.write_text(
            json.dumps(_config_snapshot("generate", opts), ensure_ascii=False, indent=2)
            + "\n",
            encoding="utf-8",
        )
        _err(f"opinions written to {opts['out']}")
    return 0


_RUN_DEFAULTS = {
    "dataset": "dataset.jsonl",
    "task": None,
    "generator": None,
    "prompt": "plain",
    "mode": None,
    "classifier": "baseline",
    "max_len": 512,
    "seed": 0,
    "jobs": 8,
    "retries": 2,
    "cache_dir": None,
    "out": "report.json",
}


def _cmd_run(args, config) -> int:
    opts = _resolve(args, config, "run", _RUN_DEFAULTS)
    if not opts["task"]:
        raise ValidationError("--task is required")
    task = Task(opts["task"])
    bundle = read_dataset(opts["dataset"])
    if not bundle.has_task(task):
        raise ValidationError(f"dataset has no splits for task {task.value}")
    dataset = LabeledDataset(
        instances=bundle.instances,
        splits=bundle.splits[task.value],
        seed=int(opts["seed"]),
        config={"task": task.value},
    )
    mode = opts["mode"]
    if mode is None:
        mode = "news_only" if not opts["generator"] else "news_then_opinion"
    experiment = ExperimentConfig(
        task=task,
        generator=opts["generator"],
        prompt=str(opts["prompt"]),
        mode=ComposeMode(mode),
        classifier=str(opts["classifier"]),
        seed=int(opts["seed"]),
        max_len=int(opts["max_len"]) if opts["max_len"] else None,
        concurrency=int(opts["jobs"]),
        retries=int(opts["retries"]),
        cache_dir=_cache_dir(opts["cache_dir"]),
    )
    report = run_experiment(dataset, experiment)
    report.write(opts["out"])
    test = report.metrics["test"]
    _err(
        f"report written to {opts['out']} "
        f"(test accuracy {test['accuracy']}, macro-F1 {test['macro_f1']})"
    )
    return 0


def _read_eval_records(path) -> list[dict]:
    rows = []
    for lineno, raw in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not raw.strip():
            continue
        try:
            rows.append(json.loads(raw))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}:{lineno}: bad JSON") from exc
    return rows


def _cmd_eval(args, config) -> int:
    opts = _resolve(args, config, "eval", {"pred": None, "gold": None, "out": None})
    if not opts["pred"] or not opts["gold"]:
        raise ValidationError("--pred and --gold are required")
    preds = _read_eval_records(opts["pred"])
    golds = _read_eval_records(opts["gold"])
    if len(preds) != len(golds):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(golds)} golds")
    if preds and all("id" in r for r in preds) and all("id" in r for r in golds):
        gold_by_id = {r["id"]: r for r in golds}
        missing = [r["id"] for r in preds if r["id"] not in gold_by_id]
        if missing:
            raise ValidationError(f"gold records missing ids: {missing[:5]}")
        golds = [gold_by_id[r["id"]] for r in preds]

    results: dict[str, object] = {}
    if all("label" in r for r in preds) and all("label" in r for r in golds):
        p_labels = [str(r["label"]) for r in preds]
        g_labels = [str(r["label"]) for r in golds]
        classes = sorted(set(p_labels) | set(g_labels))
        results["accuracy"] = render4(accuracy(p_labels, g_labels))
        results["macro_f1"] = render4(macro_f1(p_labels, g_labels, classes))
        results["n"] = len(g_labels)
    if all("text" in r for r in preds) and all("text" in r for r in golds):
        from .pmi import tokenize

        sums = {"rouge_1": 0.0, "rouge_2": 0.0, "rouge_l": 0.0}
        for p, g in zip(preds, golds):
            cand, ref = tokenize(str(p["text"])), tokenize(str(g["text"]))
            sums["rouge_1"] += rouge_n(cand, ref, 1).f1
            sums["rouge_2"] += rouge_n(cand, ref, 2).f1
            sums["rouge_l"] += rouge_l(cand, ref).f1
        for key, total in sums.items():
            results[key] = f"{total / len(preds):.4f}"
    if not results:
        raise ValidationError("records carry neither 'label' nor 'text' fields")

    width = max(len(k) for k in results)
    for key, value in results.items():
        print(f"{key.ljust(width)}  {value}")
    out = opts["out"] or "metrics.json"
    payload = {"config": _config_snapshot("eval", opts), "metrics": results}
    Path(out).write_text(
        json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    _err(f"metrics written to {out}")
    return 0


# ---------------------------------------------------------------- parser


def _build_parser() -> _Parser:
    parser = _Parser(prog="a3", description=__doc__)
    parser.add_argument("--version", action="version", version=f"a3 {__version__}")
    parser.add_argument("--config", help="TOML config file; flags override it")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("ingest", help="validate a corpus directory")
    p.add_argument("--corpus")
    p.add_argument("--calendar")
    p.add_argument("--out")

    p = sub.add_parser("label", help="build the labeled dataset from a corpus")
    p.add_argument("--corpus")
    p.add_argument("--calendar")
    p.add_argument("--T", type=int, dest="T")
    p.add_argument("--seed", type=int)
    p.add_argument("--ratios")
    p.add_argument("--epsilon")
    p.add_argument("--negative-ratio", type=float, dest="negative_ratio")
    p.add_argument("--out")

    p = sub.add_parser("split", help="re-split an existing dataset")
    p.add_argument("--dataset")
    p.add_argument("--ratios")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = sub.add_parser("pmi", help="rank trigger keywords by PMI")
    p.add_argument("--dataset")
    p.add_argument("--task", choices=[t.value for t in Task])
    p.add_argument("--class", dest="cls")
    p.add_argument("--k", type=int)
    p.add_argument("--direction", choices=["highest", "lowest"])
    p.add_argument("--alpha", type=float)
    p.add_argument("--min-df", type=int, dest="min_df")
    p.add_argument("--log-base", type=float, dest="log_base")
    p.add_argument("--lexicon")
    p.add_argument("--out")

    p = sub.add_parser("synth", help="generate a synthetic corpus + ground truth")
    p.add_argument("--spec")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = sub.add_parser("generate", help="stage 1 only: opinions for a dataset")
    p.add_argument("--dataset")
    p.add_argument("--generator")
    p.add_argument("--prompt")
    p.add_argument("--jobs", type=int)
    p.add_argument("--retries", type=int)
    p.add_argument("--cache-dir", dest="cache_dir")
    p.add_argument("--out")

    p = sub.add_parser("run", help="full experiment on one task")
    p.add_argument("--dataset")
    p.add_argument("--task", choices=[t.value for t in Task])
    p.add_argument("--generator")
    p.add_argument("--prompt")
    p.add_argument("--mode", choices=[m.value for m in ComposeMode])
    p.add_argument("--classifier")
    p.add_argument("--max-len", type=int, dest="max_len")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--retries", type=int)
    p.add_argument("--cache-dir", dest="cache_dir")
    p.add_argument("--out")

    p = sub.add_parser("eval", help="score predictions against golds")
    p.add_argument("--pred")
    p.add_argument("--gold")
    p.add_argument("--out")

    return parser


_COMMANDS = {
    "ingest": _cmd_ingest,
    "label": _cmd_label,
    "split": _cmd_split,
    "pmi": _cmd_pmi,
    "synth": _cmd_synth,
    "generate": _cmd_generate,
    "run": _cmd_run,
    "eval": _cmd_eval,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_usage(sys.stderr)
            _err("a3: a subcommand is required")
            return 1
        config = _load_config(args.config)
        return _COMMANDS[args.command](args, config)
    except ValidationError as exc:
        _err(f"a3: error: {exc}")
        return 1
    except RuntimeFailure as exc:
        _err(f"a3: runtime failure: {exc}")
        return 2
    except OSError as exc:
        _err(f"a3: i/o error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
