"""Stage 1: one opinion per distinct news item, with a disk cache.

Opinions are cached content-addressed under SHA-256 of (generator name,
template name, news id), so reruns are free and a run killed halfway
resumes without repeating any request. Only successful generations are
cached; failed items are retried with backoff and then recorded as
errored with empty text, never cached, never fatal to the run.

Plugin processes are spawned lazily on the first cache miss: a fully warm
rerun performs no protocol traffic at all. Plugin names come from the
hello handshake, so the cache directory keeps a small generators.json map
from command line to plugin name; it lets warm reruns resolve cache keys
without spawning anything.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from ..domain import NewsItem
from ..errors import PluginProtocolError, ValidationError
from .plugin import PluginClient
from .prompts import PromptTemplate, render_prompt

DEFAULT_CACHE_DIR = "opinions.cache"


@dataclass(frozen=True)
class Opinion:
    news_id: str
    text: str
    generator_name: str
    latency_ms: int
    error: Optional[str] = None

    def __post_init__(self):
        if not self.text and self.error is None:
            raise ValidationError("opinion without text requires a recorded error")


class _ItemFailed(Exception):
    """One generation attempt failed with a plugin-reported error."""


@dataclass
class CacheStats:
    hits: int = 0
    misses: int = 0
    requests: int = 0  # generation attempts, retries included
    errors: int = 0  # items that exhausted their retries

    def as_dict(self) -> dict:
        return {
            "hits": self.hits,
            "misses": self.misses,
            "requests": self.requests,
            "errors": self.errors,
        }


class OpinionCache:
    """Content-addressed opinion store on disk."""

    def __init__(self, directory=DEFAULT_CACHE_DIR):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._names_path = self.directory / "generators.json"

    @staticmethod
    def key(generator_name: str, template_name: str, news_id: str) -> str:
        payload = json.dumps(
            [generator_name, template_name, news_id],
            ensure_ascii=False,
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, generator_name: str, template_name: str, news_id: str) -> Optional[Opinion]:
        path = self._path(self.key(generator_name, template_name, news_id))
        if not path.exists():
            return None
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
            return Opinion(
                news_id=data["news_id"],
                text=data["text"],
                generator_name=data["generator_name"],
                latency_ms=int(data["latency_ms"]),
            )
        except (json.JSONDecodeError, KeyError, ValueError):
            return None  # corrupt entry: treat as a miss, it will be rewritten

    def put(self, opinion: Opinion, template_name: str) -> None:
        if opinion.error is not None:
            raise ValidationError("errored opinions are never cached")
        path = self._path(self.key(opinion.generator_name, template_name, opinion.news_id))
        payload = json.dumps(
            {
                "news_id": opinion.news_id,
                "generator_name": opinion.generator_name,
                "template": template_name,
                "text": opinion.text,
                "latency_ms": opinion.latency_ms,
            },
            ensure_ascii=False,
            separators=(",", ":"),
        )
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(payload)
            os.replace(tmp, path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)

    def lookup_name(self, spec_key: str) -> Optional[str]:
        try:
            names = json.loads(self._names_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            return None
        return names.get(spec_key)

    def remember_name(self, spec_key: str, name: str) -> None:
        try:
            names = json.loads(self._names_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            names = {}
        if names.get(spec_key) == name:
            return
        names[spec_key] = name
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(json.dumps(names, ensure_ascii=False, sort_keys=True))
            os.replace(tmp, self._names_path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)


def _spec_key(generator) -> str:
    if isinstance(generator, PluginClient):
        return "cmd:" + hashlib.sha256(generator.cmdline.encode("utf-8")).hexdigest()
    return "stub:" + generator.name


def _generator_name(generator, cache: OpinionCache) -> str:
    """Resolve the generator's name without spawning it when possible."""
    if not isinstance(generator, PluginClient):
        return generator.name
    if generator.name:
        return generator.name
    known = cache.lookup_name(_spec_key(generator))
    if known:
        return known
    generator.start()
    cache.remember_name(_spec_key(generator), generator.name)
    return generator.name


def _call(generator, prompt: str) -> tuple[str, int]:
    """One generation attempt; returns (text, latency_ms)."""
    if isinstance(generator, PluginClient):
        if not generator.started:
            generator.start()
        t0 = time.monotonic()
        resp = generator.generate(prompt)
        latency = int((time.monotonic() - t0) * 1000)
        if resp.get("ok") is True and isinstance(resp.get("text"), str):
            return resp["text"], latency
        if resp.get("ok") is False:
            raise _ItemFailed(str(resp.get("error", "unknown error")))
        raise PluginProtocolError(f"malformed generate response: {resp!r}")
    return generator.generate(prompt), 0


def generate_opinions(
    items: Sequence[NewsItem],
    generator,
    template: PromptTemplate,
    cache: OpinionCache,
    concurrency: int = 8,
    retries: int = 2,
    backoff: Sequence[float] = (0.25, 1.0),
) -> tuple[dict[str, Opinion], CacheStats]:
    """Produce exactly one Opinion per distinct news id in `items`.

    Cache hits are served from disk; misses run through the generator with
    up to `concurrency` requests in flight. A plugin that dies mid-run
    aborts with GeneratorUnavailable, leaving completed items cached so a
    rerun finishes the remainder without duplicate requests.
    """
    if generator is None:
        raise ValidationError("generate_opinions requires a generator")
    if concurrency < 1:
        raise ValidationError(f"concurrency must be >= 1, got {concurrency}")

    distinct: dict[str, NewsItem] = {}
    for item in items:
        distinct.setdefault(item.id, item)
    ordered = [distinct[k] for k in sorted(distinct)]

    gen_name = _generator_name(generator, cache)
    stats = CacheStats()
    opinions: dict[str, Opinion] = {}
    missing: list[NewsItem] = []
    for item in ordered:
        cached = cache.get(gen_name, template.name, item.id)
        if cached is not None:
            opinions[item.id] = cached
            stats.hits += 1
        else:
            missing.append(item)
    stats.misses = len(missing)
    if not missing:
        return opinions, stats

    lock = threading.Lock()

    def produce(item: NewsItem) -> Opinion:
        prompt = render_prompt(template, item)
        last_error = "generation failed"
        for attempt in range(retries + 1):
            if attempt:
                delay = backoff[min(attempt - 1, len(backoff) - 1)] if backoff else 0
                time.sleep(delay)
            with lock:
                stats.requests += 1
            try:
                text, latency = _call(generator, prompt)
            except _ItemFailed as exc:
                last_error = str(exc)
                continue
            if not text:
                last_error = "generator returned empty text"
                continue
            opinion = Opinion(item.id, text, gen_name, latency)
            cache.put(opinion, template.name)
            return opinion
        with lock:
            stats.errors += 1
        return Opinion(item.id, "", gen_name, 0, error=last_error)

    with ThreadPoolExecutor(max_workers=min(concurrency, len(missing))) as pool:
        futures = [(item.id, pool.submit(produce, item)) for item in missing]
        for news_id, future in futures:
            opinions[news_id] = future.result()

    return opinions, stats
