"""Class-conditional pointwise mutual information over instance windows.

Counting is document-frequency (presence) based: df(w) is the number of
instances whose window text contains w at least once. With N instances,
N_c per class, and additive smoothing a,

    P(w)   = (df(w) + a) / (N + 2a)
    P(w|c) = (df_c(w) + a) / (N_c + 2a)
    score(w, c) = log_b(P(w|c) / P(w))

The default a = 0.5 keeps every score finite; a = 0 reproduces the
textbook estimator (class-absent words score -inf). Default log base 2.

Tokenization is language-neutral: an optional phrase lexicon is matched
first (longest phrase wins), remaining text splits on Unicode word
characters and is lowercased. No stemming, no stopwords.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

from .errors import DegenerateClasses, UnknownClass, ValidationError

_WORD_RE = re.compile(r"\w+", re.UNICODE)


def tokenize(text: str, lexicon: Optional[Sequence[str]] = None) -> list[str]:
    """Split text into lowercased word tokens; no deduplication.

    Phrases from `lexicon` are kept together as single multiword tokens
    ("lift rates"), matched case-insensitively, longest first.
    """
    if not text:
        return []
    if not lexicon:
        return [m.group(0).lower() for m in _WORD_RE.finditer(text)]
    phrases = sorted({p.strip().lower() for p in lexicon if p.strip()}, key=len, reverse=True)
    pattern = re.compile(
        r"\b(?:" + "|".join(re.escape(p) for p in phrases) + r")\b",
        re.IGNORECASE | re.UNICODE,
    )
    tokens: list[str] = []
    pos = 0
    for match in pattern.finditer(text):
        tokens.extend(m.group(0).lower() for m in _WORD_RE.finditer(text, pos, match.start()))
        tokens.append(match.group(0).lower())
        pos = match.end()
    tokens.extend(m.group(0).lower() for m in _WORD_RE.finditer(text, pos))
    return tokens


@dataclass(frozen=True)
class PmiTable:
    """Scores plus the counts they were estimated from."""

    vocabulary: tuple[str, ...]
    classes: tuple[str, ...]
    scores: Mapping[tuple[str, str], float]  # (term, class) -> score
    doc_freq: Mapping[str, int]
    class_doc_freq: Mapping[tuple[str, str], int]
    n_docs: int
    class_sizes: Mapping[str, int]
    smoothing: float
    log_base: float = 2.0

    def score(self, term: str, cls: str) -> float:
        return self.scores[(term, cls)]


def _default_text(doc) -> str:
    text_fn = getattr(doc, "window_text", None)
    return text_fn() if callable(text_fn) else str(doc)


def compute_pmi(
    instances: Sequence,
    class_of: Callable[[object], str],
    min_df: int = 1,
    smoothing: float = 0.5,
    text_of: Callable[[object], str] = _default_text,
    lexicon: Optional[Sequence[str]] = None,
    log_base: float = 2.0,
) -> PmiTable:
    """Build the PMI table for a labeled instance collection.

    Requires at least two classes, each non-empty; instance order never
    affects the result.
    """
    if min_df < 1:
        raise ValidationError(f"min_df must be >= 1, got {min_df}")
    if smoothing < 0:
        raise ValidationError(f"smoothing must be >= 0, got {smoothing}")

    df: dict[str, int] = {}
    df_c: dict[tuple[str, str], int] = {}
    sizes: dict[str, int] = {}
    for doc in instances:
        cls = class_of(doc)
        sizes[cls] = sizes.get(cls, 0) + 1
        for term in set(tokenize(text_of(doc), lexicon)):
            df[term] = df.get(term, 0) + 1
            df_c[(term, cls)] = df_c.get((term, cls), 0) + 1

    if len(sizes) < 2:
        raise DegenerateClasses(f"need >= 2 classes, got {sorted(sizes)}")
    for cls, n in sizes.items():
        if n == 0:
            raise DegenerateClasses(f"class {cls} is empty")

    n_docs = sum(sizes.values())
    classes = tuple(sorted(sizes))
    vocabulary = tuple(sorted(t for t, n in df.items() if n >= min_df))
    a = float(smoothing)
    log_b = math.log(log_base)

    scores: dict[tuple[str, str], float] = {}
    for term in vocabulary:
        p_w_num = df[term] + a
        for cls in classes:
            num = (df_c.get((term, cls), 0) + a) * (n_docs + 2 * a)
            den = (sizes[cls] + 2 * a) * p_w_num
            if num == 0:
                scores[(term, cls)] = float("-inf")
            else:
                scores[(term, cls)] = math.log(num / den) / log_b

    return PmiTable(
        vocabulary=vocabulary,
        classes=classes,
        scores=scores,
        doc_freq={t: df[t] for t in vocabulary},
        class_doc_freq={
            (t, c): df_c.get((t, c), 0) for t in vocabulary for c in classes
        },
        n_docs=n_docs,
        class_sizes=sizes,
        smoothing=a,
        log_base=log_base,
    )


def top_keywords(
    table: PmiTable, cls: str, k: int, direction: str = "highest"
) -> list[tuple[str, float]]:
    """Top-k terms for a class by score; `lowest` ranks from the bottom
    (useful for classes whose triggers score negative).

    Ties break toward higher document frequency, then lexicographic term.
    """
    if cls not in table.classes:
        raise UnknownClass(f"class {cls!r} not in table (have {list(table.classes)})")
    if direction not in ("highest", "lowest"):
        raise ValidationError(f"direction must be highest|lowest, got {direction!r}")
    sign = -1.0 if direction == "highest" else 1.0

    def key(term: str):
        score = table.scores[(term, cls)]
        return (sign * score, -table.doc_freq[term], term)

    ranked = sorted(table.vocabulary, key=key)
    return [(t, table.scores[(t, cls)]) for t in ranked[: max(k, 0)]]


def format_score(score: float) -> str:
    """Scores render with three decimals; infinities stay symbolic."""
    if math.isinf(score):
        return "-inf" if score < 0 else "inf"
    return f"{score:.3f}"


def write_pmi_csv(table: PmiTable, path) -> None:
    """term,class,score,doc_freq rows, every class ranked highest-first."""
    import csv
    from pathlib import Path

    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["term", "class", "score", "doc_freq"])
        for cls in table.classes:
            for term, score in top_keywords(table, cls, len(table.vocabulary)):
                writer.writerow([term, cls, format_score(score), table.doc_freq[term]])
