#!/usr/bin/env node
import { parseArgs } from "node:util";
import { makeGenerator, Mode, PluginConfig } from "./modes";
import { serve } from "./protocol";

const MODES: Mode[] = ["stub-echo", "stub-cue", "external"];

function parseConfig(argv: string[]): PluginConfig {
  const { values } = parseArgs({
    args: argv,
    options: {
      mode: { type: "string", default: "stub-echo" },
      model: { type: "string", default: "gpt-3.5-turbo" },
      timeout: { type: "string", default: "30" },
    },
  });
  const mode = values.mode as string;
  if (!MODES.includes(mode as Mode)) {
    throw new Error(`--mode must be one of ${MODES.join("|")}, got ${mode}`);
  }
  const timeoutSeconds = Number(values.timeout);
  if (!Number.isFinite(timeoutSeconds) || timeoutSeconds <= 0) {
    throw new Error(`--timeout must be a positive number of seconds, got ${values.timeout}`);
  }
  return { mode: mode as Mode, model: values.model as string, timeoutSeconds };
}

async function main(): Promise<void> {
  let generator;
  try {
    generator = makeGenerator(parseConfig(process.argv.slice(2)));
  } catch (err) {
    console.error(`ref-gen: ${err instanceof Error ? err.message : String(err)}`);
    process.exit(1);
  }
  await serve(generator);
}

main().catch((err) => {
  console.error(`ref-gen: fatal: ${err instanceof Error ? err.message : String(err)}`);
  process.exit(1);
});
