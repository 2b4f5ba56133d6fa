"""Built-in classifier: multinomial naive Bayes with add-one smoothing.

Deliberately simple and fully deterministic; it makes the pipeline
self-sufficient without any neural dependency. Fine-tuned classifiers
attach through the plugin protocol's "classify" method instead, and
predict() dispatches on which classifier it is given.

Scores are exp-normalized posteriors summing to 1; exact ties resolve to
the lexicographically first class name.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from ..errors import PluginProtocolError, SingleClass, ValidationError
from ..pmi import tokenize
from .compose import ComposedInput
from .plugin import PluginClient


@dataclass(frozen=True)
class BaselineModel:
    classes: tuple[str, ...]
    vocabulary: tuple[str, ...]
    token_counts: Mapping[str, Mapping[str, int]]  # class -> term -> count
    total_tokens: Mapping[str, int]  # class -> token total
    doc_counts: Mapping[str, int]  # class -> training docs
    n_docs: int

    def log_posteriors(self, tokens: Sequence[str]) -> dict[str, float]:
        vocab = set(self.vocabulary)
        known = [t for t in tokens if t in vocab]
        out: dict[str, float] = {}
        v = len(self.vocabulary)
        for cls in self.classes:
            logp = math.log(self.doc_counts[cls] / self.n_docs)
            counts = self.token_counts[cls]
            denom = self.total_tokens[cls] + v
            for tok in known:
                logp += math.log((counts.get(tok, 0) + 1) / denom)
            out[cls] = logp
        return out

    def to_json(self) -> str:
        return json.dumps(
            {
                "classes": list(self.classes),
                "vocabulary": list(self.vocabulary),
                "token_counts": {c: dict(sorted(self.token_counts[c].items())) for c in self.classes},
                "total_tokens": {c: self.total_tokens[c] for c in self.classes},
                "doc_counts": {c: self.doc_counts[c] for c in self.classes},
                "n_docs": self.n_docs,
            },
            ensure_ascii=False,
            sort_keys=True,
            separators=(",", ":"),
        )


def train_baseline(
    train_inputs: Sequence[tuple[ComposedInput, str]], seed: int = 0
) -> BaselineModel:
    """Fit the naive-Bayes baseline on (composed input, label) pairs.

    `seed` is accepted for interface parity; training itself is a
    deterministic counting pass.
    """
    del seed
    if not train_inputs:
        raise ValidationError("empty training set")
    labels = sorted({label for _, label in train_inputs})
    if len(labels) < 2:
        raise SingleClass(f"need >= 2 classes, got {labels}")

    token_counts: dict[str, dict[str, int]] = {c: {} for c in labels}
    total_tokens: dict[str, int] = {c: 0 for c in labels}
    doc_counts: dict[str, int] = {c: 0 for c in labels}
    vocab: set[str] = set()
    for composed, label in train_inputs:
        doc_counts[label] += 1
        for tok in tokenize(composed.text):
            vocab.add(tok)
            counts = token_counts[label]
            counts[tok] = counts.get(tok, 0) + 1
            total_tokens[label] += 1

    return BaselineModel(
        classes=tuple(labels),
        vocabulary=tuple(sorted(vocab)),
        token_counts=token_counts,
        total_tokens=total_tokens,
        doc_counts=doc_counts,
        n_docs=len(train_inputs),
    )


def _normalize(log_scores: Mapping[str, float]) -> dict[str, float]:
    peak = max(log_scores.values())
    exp = {c: math.exp(s - peak) for c, s in log_scores.items()}
    total = sum(exp.values())
    return {c: v / total for c, v in exp.items()}


def _argmax(scores: Mapping[str, float]) -> str:
    return min(scores, key=lambda c: (-scores[c], c))


def predict(
    classifier,
    composed: ComposedInput,
    labels: Optional[Sequence[str]] = None,
) -> tuple[str, dict[str, float]]:
    """Classify one composed input with a BaselineModel or a plugin.

    Returns (label, per-class scores); scores sum to 1. A document with no
    in-vocabulary tokens falls back to the class priors.
    """
    if isinstance(classifier, BaselineModel):
        scores = _normalize(classifier.log_posteriors(tokenize(composed.text)))
        return _argmax(scores), scores

    if isinstance(classifier, PluginClient):
        if labels is None:
            raise ValidationError("plugin classification requires the label set")
        resp = classifier.classify(composed.text, labels)
        if resp.get("ok") is not True or not isinstance(resp.get("scores"), dict):
            raise PluginProtocolError(f"malformed classify response: {resp!r}")
        raw = resp["scores"]
        missing = [lab for lab in labels if lab not in raw]
        if missing:
            raise PluginProtocolError(f"classify response missing labels {missing}")
        scores = {lab: float(raw[lab]) for lab in labels}
        return _argmax(scores), scores

    raise ValidationError(f"unsupported classifier {type(classifier).__name__}")
