"""Stage 2 input composition: news window plus generated opinions.

Window items are joined oldest-first (newest last). In the concatenated
modes each news body is paired with its opinion around a sentinel
separator; errored generations contribute an empty opinion. Length is
bounded in whitespace tokens: whole window items are dropped oldest-first
until the text fits, and only when a single remaining pair is still too
long is it cut tail-first.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional

from ..domain import Instance
from ..errors import ValidationError
from .opinions import Opinion

SEPARATOR = "⟦OP⟧"


class ComposeMode(Enum):
    NEWS_ONLY = "news_only"
    NEWS_THEN_OPINION = "news_then_opinion"
    OPINION_THEN_NEWS = "opinion_then_news"


def count_tokens(text: str) -> int:
    return len(text.split())


@dataclass(frozen=True)
class ComposedInput:
    instance_key: str
    text: str
    mode: ComposeMode
    truncation: bool


def compose_input(
    instance: Instance,
    opinions: Optional[Mapping[str, Opinion]],
    mode: ComposeMode,
    max_len: Optional[int] = None,
) -> ComposedInput:
    if max_len is not None and max_len < 1:
        raise ValidationError(f"max_len must be >= 1, got {max_len}")

    segments: list[str] = []
    for item in instance.window:
        if mode is ComposeMode.NEWS_ONLY:
            segments.append(item.body)
            continue
        if opinions is None or item.id not in opinions:
            raise ValidationError(f"no opinion for news {item.id}")
        opinion_text = opinions[item.id].text
        if mode is ComposeMode.NEWS_THEN_OPINION:
            segments.append(f"{item.body} {SEPARATOR} {opinion_text}")
        else:
            segments.append(f"{opinion_text} {SEPARATOR} {item.body}")

    truncated = False
    if max_len is not None:
        while len(segments) > 1 and count_tokens("\n".join(segments)) > max_len:
            segments.pop(0)
            truncated = True
        text = "\n".join(segments)
        if count_tokens(text) > max_len:
            text = " ".join(text.split()[:max_len])
            truncated = True
    else:
        text = "\n".join(segments)

    return ComposedInput(instance.key(), text, mode, truncated)
