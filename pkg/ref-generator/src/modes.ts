/**
 * Generation backends.
 *
 * Stub modes are bit-deterministic and need no credentials:
 *   stub-echo  returns the last non-empty line of the prompt;
 *   stub-cue   maps trig-<tag> tokens to "cue-<tag> view confirmed",
 *              joined by "; ", or "no cue observed" when none appear.
 *
 * External mode forwards the prompt to a hosted model over HTTP. The
 * endpoint and key come from the environment only (A3_GEN_ENDPOINT,
 * A3_GEN_API_KEY): credentials never travel through flags or config
 * files, so they cannot leak into artifacts.
 */

export type Mode = "stub-echo" | "stub-cue" | "external";

export interface PluginConfig {
  mode: Mode;
  model: string;
  timeoutSeconds: number;
}

export interface Generator {
  name: string;
  methods: string[];
  generate(prompt: string): Promise<string>;
}

export function stubEcho(prompt: string): string {
  const lines = prompt.split("\n").filter((line) => line.trim().length > 0);
  return lines.length > 0 ? lines[lines.length - 1] : "";
}

const TRIGGER = /\btrig-([A-Za-z0-9_]+)\b/g;

export function stubCue(prompt: string): string {
  const seen = new Set<string>();
  const phrases: string[] = [];
  for (const match of prompt.matchAll(TRIGGER)) {
    const tag = match[1];
    if (!seen.has(tag)) {
      seen.add(tag);
      phrases.push(`cue-${tag} view confirmed`);
    }
  }
  return phrases.length > 0 ? phrases.join("; ") : "no cue observed";
}

interface ExternalEnv {
  endpoint: string;
  apiKey: string;
}

export function externalEnv(): ExternalEnv | null {
  const endpoint = process.env.A3_GEN_ENDPOINT;
  const apiKey = process.env.A3_GEN_API_KEY;
  if (!endpoint || !apiKey) {
    return null;
  }
  return { endpoint, apiKey };
}

async function externalGenerate(
  prompt: string,
  config: PluginConfig,
  env: ExternalEnv
): Promise<string> {
  const controller = new AbortController();
  const timer = setTimeout(() => controller.abort(), config.timeoutSeconds * 1000);
  try {
    const response = await fetch(env.endpoint, {
      method: "POST",
      headers: {
        "content-type": "application/json",
        authorization: `Bearer ${env.apiKey}`,
      },
      body: JSON.stringify({ model: config.model, prompt }),
      signal: controller.signal,
    });
    if (!response.ok) {
      throw new Error(`upstream status ${response.status}`);
    }
    const payload = (await response.json()) as { text?: unknown };
    if (typeof payload.text !== "string") {
      throw new Error("upstream payload missing text");
    }
    return payload.text;
  } catch (err) {
    if (err instanceof Error && err.name === "AbortError") {
      throw new Error("timeout");
    }
    throw err;
  } finally {
    clearTimeout(timer);
  }
}

export function makeGenerator(config: PluginConfig): Generator {
  if (config.mode === "stub-echo") {
    return { name: "ref-gen", methods: ["generate"], generate: async (p) => stubEcho(p) };
  }
  if (config.mode === "stub-cue") {
    return { name: "ref-gen", methods: ["generate"], generate: async (p) => stubCue(p) };
  }
  const env = externalEnv();
  if (!env) {
    throw new Error(
      "external mode requires A3_GEN_ENDPOINT and A3_GEN_API_KEY in the environment"
    );
  }
  return {
    name: "ref-gen",
    methods: ["generate"],
    generate: (p) => externalGenerate(p, config, env),
  };
}
