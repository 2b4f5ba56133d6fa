"""Classification and generation-quality metrics.

accuracy and macro_f1 are computed in exact rational arithmetic and
rendered to four decimals only at the edge. ROUGE-N uses clipped n-gram
counts; ROUGE-L uses LCS length with a beta=1 F-measure by default. The
same tokenizer as the PMI analyzer should be used upstream; these
functions take token sequences and apply no normalization of their own.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction
from typing import Sequence

from .errors import EmptyInput, LengthMismatch, ValidationError


def render4(value: Fraction) -> str:
    """Render an exact rational to four decimals (banker's rounding)."""
    return str(
        (Decimal(value.numerator) / Decimal(value.denominator)).quantize(
            Decimal("0.0001"), rounding=ROUND_HALF_EVEN
        )
    )


def accuracy(predictions: Sequence[str], golds: Sequence[str]) -> Fraction:
    """Fraction of exact matches."""
    if len(predictions) != len(golds):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(golds)} golds")
    if not golds:
        raise EmptyInput("cannot score an empty prediction list")
    matches = sum(1 for p, g in zip(predictions, golds) if p == g)
    return Fraction(matches, len(golds))


def macro_f1(
    predictions: Sequence[str], golds: Sequence[str], classes: Sequence[str]
) -> Fraction:
    """Unweighted mean of per-class F1; a class that never occurs
    contributes F1 = 0."""
    if len(predictions) != len(golds):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(golds)} golds")
    if not classes:
        raise ValidationError("classes must be non-empty")
    known = set(classes)
    for value in predictions:
        if value not in known:
            raise ValidationError(f"prediction {value!r} outside classes")
    for value in golds:
        if value not in known:
            raise ValidationError(f"gold {value!r} outside classes")

    total = Fraction(0)
    for cls in classes:
        tp = sum(1 for p, g in zip(predictions, golds) if p == cls and g == cls)
        fp = sum(1 for p, g in zip(predictions, golds) if p == cls and g != cls)
        fn = sum(1 for p, g in zip(predictions, golds) if p != cls and g == cls)
        precision = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
        recall = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
        if precision + recall:
            total += 2 * precision * recall / (precision + recall)
    return total / len(classes)


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float


def _fmeasure(precision: float, recall: float, beta: float = 1.0) -> float:
    denom = recall + beta * beta * precision
    if denom == 0:
        return 0.0
    return (1 + beta * beta) * precision * recall / denom


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(
    candidate: Sequence[str], reference: Sequence[str], n: int, beta: float = 1.0
) -> RougeScore:
    """N-gram overlap with clipped counts.

    Precision divides by the candidate's n-gram count, recall by the
    reference's; a side with fewer than n tokens contributes 0.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    cand = _ngrams(candidate, n)
    ref = _ngrams(reference, n)
    overlap = sum((cand & ref).values())
    cand_total = sum(cand.values())
    ref_total = sum(ref.values())
    precision = overlap / cand_total if cand_total else 0.0
    recall = overlap / ref_total if ref_total else 0.0
    return RougeScore(precision, recall, _fmeasure(precision, recall, beta))


def _lcs_length(xs: Sequence[str], ys: Sequence[str]) -> int:
    if not xs or not ys:
        return 0
    prev = [0] * (len(ys) + 1)
    for x in xs:
        cur = [0]
        for j, y in enumerate(ys, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(
    candidate: Sequence[str], reference: Sequence[str], beta: float = 1.0
) -> RougeScore:
    """Longest-common-subsequence ROUGE."""
    lcs = _lcs_length(candidate, reference)
    precision = lcs / len(candidate) if candidate else 0.0
    recall = lcs / len(reference) if reference else 0.0
    return RougeScore(precision, recall, _fmeasure(precision, recall, beta))
