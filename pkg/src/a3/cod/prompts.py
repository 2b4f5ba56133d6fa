"""Prompt templates for the opinion generator.

A template is plain text with {headline} and {body} placeholders.
Substitution is literal: news text goes in as-is, braces and all, and is
never rescanned for placeholders. Two templates ship as package assets:
"plain" and "dan" (the Do-Anything-Now jailbreak preamble followed by the
opinion instruction).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from ..domain import NewsItem
from ..errors import UnboundPlaceholder, ValidationError

_PLACEHOLDER_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")
_KNOWN = ("headline", "body")


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    text: str
    system_preamble: Optional[str] = None


def render_prompt(template: PromptTemplate, item: NewsItem) -> str:
    """Substitute {headline} and {body} with the item's fields."""
    bindings = {"headline": item.headline, "body": item.body}

    def sub(match: re.Match) -> str:
        key = match.group(1)
        if key not in bindings:
            raise UnboundPlaceholder(
                f"template {template.name!r}: unbound placeholder {{{key}}}"
            )
        return bindings[key]

    rendered = _PLACEHOLDER_RE.sub(sub, template.text)
    if template.system_preamble:
        return template.system_preamble + "\n" + rendered
    return rendered


def load_template(name_or_path: str) -> PromptTemplate:
    """Load a bundled template by name ("plain", "dan") or any file path."""
    bundled = resources.files("a3").joinpath(f"prompts/{name_or_path}.txt")
    if bundled.is_file():
        return PromptTemplate(name=name_or_path, text=bundled.read_text(encoding="utf-8"))
    path = Path(name_or_path)
    if path.is_file():
        return PromptTemplate(name=path.stem, text=path.read_text(encoding="utf-8"))
    raise ValidationError(f"no bundled template or file named {name_or_path!r}")
