"""In-process stub generators.

These cover every protocol-independent code path without spawning a
plugin, and they define the stub behavior contract that out-of-process
reference plugins reproduce:

  stub-echo  returns the last non-empty line of the prompt;
  stub-cue   scans the prompt for trigger tokens of the form trig-<tag>
             and returns "cue-<tag> view confirmed" for each distinct tag
             in order of first appearance, joined by "; ", or
             "no cue observed" when there is none.
"""

from __future__ import annotations

import re

from ..errors import ValidationError
from .plugin import PluginClient

_TRIGGER_RE = re.compile(r"\btrig-([A-Za-z0-9_]+)\b")


class EchoStub:
    name = "stub-echo"
    methods = ("generate",)

    def generate(self, prompt: str) -> str:
        lines = [line for line in prompt.splitlines() if line.strip()]
        return lines[-1] if lines else ""


class CueStub:
    name = "stub-cue"
    methods = ("generate",)

    def generate(self, prompt: str) -> str:
        seen: set[str] = set()
        phrases: list[str] = []
        for match in _TRIGGER_RE.finditer(prompt):
            tag = match.group(1)
            if tag not in seen:
                seen.add(tag)
                phrases.append(f"cue-{tag} view confirmed")
        return "; ".join(phrases) if phrases else "no cue observed"


def resolve_generator(spec, max_in_flight: int = 8):
    """Map a generator spec string to a generator object.

    None stays None (news-only runs); "stub:echo" and "stub:cue" become
    in-process stubs; anything else is a plugin command line (returned
    unstarted; the caller spawns it on first use).
    """
    if spec is None:
        return None
    if spec == "stub:echo":
        return EchoStub()
    if spec == "stub:cue":
        return CueStub()
    if spec.startswith("stub:"):
        raise ValidationError(f"unknown stub generator {spec!r}")
    return PluginClient(spec, max_in_flight=max_in_flight)
