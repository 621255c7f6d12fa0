/**
 * Array-only boundary to the temporal graph engine.
 *
 * A dataset handle points at an event CSV or binary cache; sampling and
 * negative generation run in the engine process and come back as flat
 * numeric arrays decoded from batch-sized files. The event store itself
 * never crosses the boundary.
 */

import { promises as fs } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { BridgeError, FlatBatch, decodeFlatBatch, emptyFlatBatch } from "./flatbatch.js";
import { FlagValue, runCli } from "./runner.js";

export interface DatasetHandle {
  readonly path: string;
  readonly workDir: string;
}

export interface Seed {
  node: number;
  time: number;
}

export interface SamplerOptions {
  fanouts: number[];
  strategy?: "recent" | "uniform";
  /** uniform strategy only; omitted means the whole past */
  window?: number;
  timeBound?: "seed" | "edge";
  directed?: boolean;
  seed?: number;
}

export interface NegativeOptions {
  strategy?: "random" | "historical";
  perPositive?: number;
  fallback?: "to-random" | "strict";
  directed?: boolean;
  seed?: number;
}

export interface NegativePairs {
  src: Float64Array;
  dst: Float64Array;
  saturated: boolean;
  shortfall: boolean;
}

export interface Positives {
  src: Float64Array;
  dst: Float64Array;
  t: Float64Array;
  eventId: Float64Array;
}

export interface LoaderStep {
  window: [number, number];
  positives: Positives;
  batch: FlatBatch;
  negatives: NegativePairs | null;
}

export async function openDataset(path: string): Promise<DatasetHandle> {
  try {
    const stat = await fs.stat(path);
    if (!stat.isFile() || stat.size === 0) {
      throw new BridgeError(`dataset ${path} is empty or not a file`);
    }
  } catch (err) {
    if (err instanceof BridgeError) throw err;
    throw new BridgeError(`cannot open dataset ${path}: ${String(err)}`);
  }
  const workDir = await fs.mkdtemp(join(tmpdir(), "tgkit-bridge-"));
  return { path, workDir };
}

export async function closeDataset(handle: DatasetHandle): Promise<void> {
  await fs.rm(handle.workDir, { recursive: true, force: true });
}

function checkHandle(handle: DatasetHandle): void {
  if (!handle || typeof handle.path !== "string" || typeof handle.workDir !== "string") {
    throw new BridgeError("invalid dataset handle");
  }
}

let runCounter = 0;

async function freshRunDir(handle: DatasetHandle): Promise<string> {
  const dir = join(handle.workDir, `run-${process.pid}-${runCounter++}`);
  await fs.mkdir(dir, { recursive: true });
  return dir;
}

function samplerFlags(opts: SamplerOptions): Record<string, FlagValue> {
  if (!opts.fanouts?.length) {
    throw new BridgeError("fanouts must be a non-empty list");
  }
  const flags: Record<string, FlagValue> = {
    "sampler.fanouts": opts.fanouts.join(","),
    "sampler.strategy": opts.strategy ?? "recent",
    "sampler.time_bound": opts.timeBound ?? "seed",
    "index.mode": opts.directed ? "directed" : "symmetrized",
    seed: opts.seed ?? 0,
  };
  if (opts.window !== undefined) flags["sampler.window"] = opts.window;
  return flags;
}

/** k-hop temporal sampling for explicit (node, time) seeds. */
export async function sample(
  handle: DatasetHandle,
  seeds: Seed[],
  opts: SamplerOptions,
): Promise<FlatBatch> {
  checkHandle(handle);
  if (seeds.length === 0) {
    return emptyFlatBatch();
  }
  const out = await freshRunDir(handle);
  await runCli("sample", {
    dataset: handle.path,
    out,
    "sampler.seeds": seeds.map((s) => `${s.node}:${s.time}`).join(","),
    ...samplerFlags(opts),
  });
  const batch = decodeFlatBatch(await fs.readFile(join(out, "batch_00000.bin")));
  await fs.rm(out, { recursive: true, force: true });
  return batch;
}

function parseNegativesCsv(text: string): Array<{ src: number; dst: number; windowStart: number }> {
  const lines = text.trim().split("\n");
  const rows = [];
  for (const line of lines.slice(1)) {
    if (!line) continue;
    const [src, dst, windowStart] = line.split(",");
    rows.push({ src: Number(src), dst: Number(dst), windowStart: Number(windowStart) });
  }
  return rows;
}

/** Negative pairs for one half-open evaluation window [start, end). */
export async function negatives(
  handle: DatasetHandle,
  window: [number, number],
  opts: NegativeOptions = {},
): Promise<NegativePairs> {
  checkHandle(handle);
  const out = await freshRunDir(handle);
  await runCli("negatives", {
    dataset: handle.path,
    out,
    "negatives.window": `${window[0]}:${window[1]}`,
    "negatives.strategy": opts.strategy ?? "random",
    "negatives.per_positive": opts.perPositive ?? 1,
    "negatives.fallback": opts.fallback ?? "to-random",
    "index.mode": opts.directed ? "directed" : "symmetrized",
    seed: opts.seed ?? 0,
  });
  const rows = parseNegativesCsv(
    await fs.readFile(join(out, "negatives.csv"), "utf-8"));
  const manifest = JSON.parse(await fs.readFile(join(out, "manifest.json"), "utf-8"));
  await fs.rm(out, { recursive: true, force: true });
  return {
    src: Float64Array.from(rows, (r) => r.src),
    dst: Float64Array.from(rows, (r) => r.dst),
    saturated: Boolean(manifest.flags?.saturated),
    shortfall: Boolean(manifest.flags?.shortfall),
  };
}

function parsePositivesCsv(text: string): Positives {
  const lines = text.trim().split("\n").slice(1).filter(Boolean);
  const src = new Float64Array(lines.length);
  const dst = new Float64Array(lines.length);
  const t = new Float64Array(lines.length);
  const eventId = new Float64Array(lines.length);
  lines.forEach((line, i) => {
    const cells = line.split(",");
    src[i] = Number(cells[0]);
    dst[i] = Number(cells[1]);
    t[i] = Number(cells[2]);
    eventId[i] = Number(cells[3]);
  });
  return { src, dst, t, eventId };
}

export interface LoaderOptions {
  batchSize: number;
  sampler: SamplerOptions;
  /** omit to skip negative sampling entirely */
  negatives?: NegativeOptions;
  /** stop after this many windows; 0 or omitted = all */
  limit?: number;
}

/**
 * Chronological dataloader: yields one step per link window, in stream
 * order, pairing the window's positives with a k-hop batch over their
 * endpoints (seeded at each event's own timestamp) and, optionally,
 * negatives for the window.
 */
export async function* dataloader(
  handle: DatasetHandle,
  opts: LoaderOptions,
): AsyncGenerator<LoaderStep> {
  checkHandle(handle);
  if (!(opts.batchSize >= 1)) {
    throw new BridgeError(`batchSize must be >= 1, got ${opts.batchSize}`);
  }
  const out = await freshRunDir(handle);
  await runCli("sample", {
    dataset: handle.path,
    out,
    "sampler.link_batches": true,
    "sampler.batch_size": opts.batchSize,
    "sampler.limit": opts.limit ?? 0,
    ...samplerFlags(opts.sampler),
  });
  const manifest = JSON.parse(await fs.readFile(join(out, "manifest.json"), "utf-8"));
  const numBatches: number = manifest.batches;

  for (let b = 0; b < numBatches; b++) {
    const tag = String(b).padStart(5, "0");
    const positives = parsePositivesCsv(
      await fs.readFile(join(out, `positives_${tag}.csv`), "utf-8"));
    const batch = decodeFlatBatch(
      await fs.readFile(join(out, `batch_${tag}.bin`)));
    const tStart = positives.t[0];
    const last = positives.t[positives.t.length - 1];
    // Mirror of the engine's half-open window: nextafter(last, +inf).
    const tEnd = nextAfter(last);
    let negs: NegativePairs | null = null;
    if (opts.negatives) {
      negs = await negatives(handle, [tStart, tEnd], {
        ...opts.negatives,
        seed: (opts.negatives.seed ?? 0) + b,
      });
    }
    yield { window: [tStart, tEnd], positives, batch, negatives: negs };
  }
  await fs.rm(out, { recursive: true, force: true });
}

const nextAfterScratch = new DataView(new ArrayBuffer(8));

/** Smallest double strictly greater than x (x finite, non-negative here). */
export function nextAfter(x: number): number {
  nextAfterScratch.setFloat64(0, x, true);
  let bits = nextAfterScratch.getBigUint64(0, true);
  bits = x >= 0 ? bits + 1n : bits - 1n;
  nextAfterScratch.setBigUint64(0, bits, true);
  return nextAfterScratch.getFloat64(0, true);
}
