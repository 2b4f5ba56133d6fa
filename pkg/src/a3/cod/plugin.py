"""Client side of the generator/classifier plugin wire protocol.

Plugins are child processes speaking newline-delimited JSON over
stdin/stdout (UTF-8, no BOM, one object per line). The engine opens with
{"method":"hello","version":1}; the plugin answers {"ok":true,"name":...,
"methods":[...]}. After the handshake, requests carry an id and are
matched to responses by that id, so a plugin may answer out of order.
Up to `max_in_flight` requests may be outstanding at once.

Process death surfaces as GeneratorUnavailable; a line that breaks the
protocol (unparsable, unknown id, wrong shape) as PluginProtocolError.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import threading
from typing import Optional, Sequence

from ..errors import GeneratorUnavailable, PluginProtocolError


def _dumps(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


class PluginClient:
    """One running plugin process plus the request plumbing around it."""

    def __init__(self, cmdline, max_in_flight: int = 8):
        self.cmdline = cmdline if isinstance(cmdline, str) else shlex.join(cmdline)
        self._argv = shlex.split(cmdline) if isinstance(cmdline, str) else list(cmdline)
        if max_in_flight < 1:
            raise PluginProtocolError(f"max_in_flight must be >= 1, got {max_in_flight}")
        self._sem = threading.BoundedSemaphore(max_in_flight)
        self._lock = threading.Lock()  # pending/stats state
        self._write_lock = threading.Lock()  # stdin writes; never nested with _lock
        self._pending: dict[str, list] = {}  # id -> [event, response|None]
        self._dead: Optional[tuple[type, str]] = None
        self._closed = False
        self._next_id = 0
        self._in_flight = 0
        self._reader: Optional[threading.Thread] = None
        self._proc: Optional[subprocess.Popen] = None
        self.name: Optional[str] = None
        self.methods: tuple[str, ...] = ()
        self.requests_sent = 0
        self.max_in_flight_seen = 0

    @property
    def started(self) -> bool:
        return self._proc is not None

    def start(self) -> "PluginClient":
        """Spawn the process and perform the hello handshake."""
        try:
            self._proc = subprocess.Popen(
                self._argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise GeneratorUnavailable(f"cannot launch plugin {self._argv[0]!r}: {exc}") from exc
        try:
            self._proc.stdin.write(_dumps({"method": "hello", "version": 1}) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise GeneratorUnavailable(f"plugin died during handshake: {exc}") from exc
        line = self._proc.stdout.readline()
        if not line:
            raise GeneratorUnavailable("plugin produced no handshake reply")
        try:
            hello = json.loads(line)
        except json.JSONDecodeError as exc:
            raise PluginProtocolError(f"bad handshake line: {line.strip()!r}") from exc
        if not (
            isinstance(hello, dict)
            and hello.get("ok") is True
            and isinstance(hello.get("name"), str)
            and isinstance(hello.get("methods"), list)
        ):
            raise PluginProtocolError(f"bad handshake payload: {hello!r}")
        self.name = hello["name"]
        self.methods = tuple(str(m) for m in hello["methods"])
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()
        return self

    def _read_loop(self) -> None:
        error: tuple[type, str] = (GeneratorUnavailable, "plugin closed its output")
        stream = self._proc.stdout
        while True:
            raw = stream.readline()
            if not raw:
                break
            raw = raw.strip()
            if not raw:
                continue
            try:
                msg = json.loads(raw)
            except json.JSONDecodeError:
                error = (PluginProtocolError, f"unparsable plugin line: {raw[:120]!r}")
                break
            rid = msg.get("id") if isinstance(msg, dict) else None
            delivered = False
            with self._lock:
                slot = self._pending.pop(rid, None)
                if slot is not None:
                    self._in_flight -= 1
                    slot[1] = msg
                    slot[0].set()
                    delivered = True
            if not delivered:
                error = (PluginProtocolError, f"response with unknown id {rid!r}")
                break
        with self._lock:
            if not self._closed:
                self._dead = error
            for ev, _ in self._pending.values():
                ev.set()
            self._pending.clear()

    def request(self, method: str, payload: dict) -> dict:
        """Send one request and block for its response (thread-safe)."""
        if not self.started:
            raise GeneratorUnavailable("plugin not started")
        with self._sem:
            with self._lock:
                if self._dead:
                    raise self._dead[0](self._dead[1])
                if self._closed:
                    raise GeneratorUnavailable("plugin already closed")
                self._next_id += 1
                rid = f"r{self._next_id}"
                event = threading.Event()
                slot = [event, None]
                self._pending[rid] = slot
                self._in_flight += 1
                self.max_in_flight_seen = max(self.max_in_flight_seen, self._in_flight)
            line = _dumps({"id": rid, "method": method, **payload})
            try:
                with self._write_lock:
                    self._proc.stdin.write(line + "\n")
                    self._proc.stdin.flush()
            except (BrokenPipeError, OSError, ValueError) as exc:
                with self._lock:
                    if self._pending.pop(rid, None) is not None:
                        self._in_flight -= 1
                    self._dead = (GeneratorUnavailable, f"plugin stdin closed: {exc}")
                raise GeneratorUnavailable(f"plugin stdin closed: {exc}") from exc
            with self._lock:
                self.requests_sent += 1
            event.wait()
            with self._lock:
                if slot[1] is None:
                    kind, reason = self._dead or (GeneratorUnavailable, "plugin died")
                    raise kind(reason)
                return slot[1]

    def generate(self, prompt: str) -> dict:
        return self.request("generate", {"prompt": prompt})

    def classify(self, text: str, labels: Sequence[str]) -> dict:
        return self.request("classify", {"text": text, "labels": list(labels)})

    def close(self) -> None:
        with self._lock:
            self._closed = True
        if self._proc is None:
            return
        try:
            self._proc.stdin.close()
        except OSError:
            pass
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()

    def __enter__(self) -> "PluginClient":
        if not self.started:
            self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.close()
