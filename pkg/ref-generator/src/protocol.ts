/**
 * Newline-delimited JSON request loop over stdin/stdout.
 *
 * One object per line, UTF-8, no BOM. The engine opens with
 * {"method":"hello","version":1}; we answer with our name and method
 * list. Every request gets exactly one response carrying the same id;
 * requests are served strictly in arrival order (the engine's bounded
 * in-flight window tolerates serial processing). A line that is not
 * JSON gets {"id":"?","ok":false,"error":"parse"} and the loop goes on.
 */

import { createInterface } from "node:readline";
import type { Generator } from "./modes";

export function emit(obj: Record<string, unknown>): void {
  process.stdout.write(JSON.stringify(obj) + "\n");
}

export async function serve(generator: Generator): Promise<void> {
  const rl = createInterface({ input: process.stdin, crlfDelay: Infinity });
  for await (const raw of rl) {
    const line = raw.trim();
    if (line.length === 0) {
      continue;
    }
    let msg: Record<string, unknown>;
    try {
      const parsed = JSON.parse(line);
      if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
        throw new Error("not an object");
      }
      msg = parsed as Record<string, unknown>;
    } catch {
      emit({ id: "?", ok: false, error: "parse" });
      continue;
    }

    if (msg.method === "hello") {
      emit({ ok: true, name: generator.name, methods: generator.methods });
      continue;
    }

    const id = typeof msg.id === "string" ? msg.id : "?";
    if (msg.method === "generate" && typeof msg.prompt === "string") {
      try {
        const text = await generator.generate(msg.prompt);
        emit({ id, ok: true, text });
      } catch (err) {
        emit({ id, ok: false, error: err instanceof Error ? err.message : String(err) });
      }
    } else {
      emit({ id, ok: false, error: `unsupported method ${String(msg.method)}` });
    }
  }
}
