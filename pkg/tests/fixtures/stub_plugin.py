#!/usr/bin/env python3
"""Scriptable plugin for protocol tests.

Speaks the newline-delimited JSON protocol on stdin/stdout. Flags make it
misbehave on purpose: --die-after N exits right after the Nth generate
response, --fail-times N fails the first N attempts for every distinct
prompt, --reorder K buffers K requests and answers them in reverse,
--bad-id answers one request with a bogus id, --garbage emits one
unparsable line. --transcript logs each prompt when (and only when) its
response is sent.
"""

import argparse
import json
import re
import sys
import time


def emit(obj):
    sys.stdout.write(json.dumps(obj, ensure_ascii=False) + "\n")
    sys.stdout.flush()


def opinion_for(prompt, mode):
    if mode == "echo":
        lines = [l for l in prompt.splitlines() if l.strip()]
        return lines[-1] if lines else ""
    phrases, seen = [], set()
    for m in re.finditer(r"\btrig-([A-Za-z0-9_]+)\b", prompt):
        if m.group(1) not in seen:
            seen.add(m.group(1))
            phrases.append("cue-%s view confirmed" % m.group(1))
    return "; ".join(phrases) if phrases else "no cue observed"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--mode", default="echo", choices=["echo", "cue"])
    ap.add_argument("--die-after", type=int, default=0)
    ap.add_argument("--fail-times", type=int, default=0)
    ap.add_argument("--delay-ms", type=int, default=0)
    ap.add_argument("--reorder", type=int, default=0)
    ap.add_argument("--bad-id", action="store_true")
    ap.add_argument("--garbage", action="store_true")
    ap.add_argument("--transcript")
    args = ap.parse_args()

    answered = 0
    attempts = {}
    buffered = []
    sent_bad_id = False
    sent_garbage = False

    def log(prompt):
        if args.transcript:
            with open(args.transcript, "a", encoding="utf-8") as fh:
                fh.write(prompt.replace("\n", "\\n") + "\n")

    def respond(req):
        nonlocal answered, sent_bad_id, sent_garbage
        prompt = req.get("prompt", "")
        if args.delay_ms:
            time.sleep(args.delay_ms / 1000.0)
        if args.garbage and not sent_garbage:
            sent_garbage = True
            sys.stdout.write("this is not json\n")
            sys.stdout.flush()
            return
        if args.bad_id and not sent_bad_id:
            sent_bad_id = True
            emit({"id": "bogus-id", "ok": True, "text": "misrouted"})
            return
        attempts[prompt] = attempts.get(prompt, 0) + 1
        if attempts[prompt] <= args.fail_times:
            emit({"id": req["id"], "ok": False, "error": "scripted failure"})
            return
        log(prompt)
        emit({"id": req["id"], "ok": True, "text": opinion_for(prompt, args.mode)})
        answered += 1
        if args.die_after and answered >= args.die_after:
            sys.exit(0)

    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
        except ValueError:
            emit({"id": "?", "ok": False, "error": "parse"})
            continue
        method = req.get("method")
        if method == "hello":
            emit({"ok": True, "name": "stub-plugin", "methods": ["generate", "classify"]})
        elif method == "generate":
            if args.reorder > 1:
                buffered.append(req)
                if len(buffered) >= args.reorder:
                    for pending in reversed(buffered):
                        respond(pending)
                    buffered = []
            else:
                respond(req)
        elif method == "classify":
            text = req.get("text", "")
            scores = {}
            for label in req.get("labels", []):
                scores[label] = 1.0 if label.lower() in text.lower() else 0.0
            emit({"id": req["id"], "ok": True, "scores": scores})
        else:
            emit({"id": req.get("id", "?"), "ok": False, "error": "unknown method"})

    for pending in reversed(buffered):
        respond(pending)


if __name__ == "__main__":
    main()
