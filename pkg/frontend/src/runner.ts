/**
 * Process boundary to the engine CLI. Nothing but command-line flags goes
 * in; nothing but files in the run's output directory comes back.
 */

import { execFile } from "node:child_process";
import { promisify } from "node:util";

import { BridgeError } from "./flatbatch.js";

const execFileAsync = promisify(execFile);

/** Override with e.g. TGKIT_CMD="python3 -m tgkit" (whitespace-split). */
function engineCommand(): string[] {
  const raw = process.env.TGKIT_CMD ?? "python3 -m tgkit";
  return raw.split(/\s+/).filter(Boolean);
}

export type FlagValue = string | number | boolean;

export async function runCli(
  command: string,
  flags: Record<string, FlagValue>,
): Promise<void> {
  const [exe, ...prefix] = engineCommand();
  const args = [...prefix, command];
  for (const [key, value] of Object.entries(flags)) {
    args.push(`--${key}=${value}`);
  }
  try {
    await execFileAsync(exe, args, { maxBuffer: 1 << 24 });
  } catch (err) {
    const stderr = (err as { stderr?: string }).stderr ?? "";
    const code = (err as { code?: number | string }).code;
    throw new BridgeError(
      `engine ${command} failed (exit ${code}): ${stderr.trim() || String(err)}`);
  }
}
