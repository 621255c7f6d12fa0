import { promises as fs } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { expect } from "vitest";

import type { FlatBatch } from "../src/flatbatch.js";

/** Deterministic 32-bit PRNG so datasets are stable across runs. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export async function makeDatasetCsv(
  name: string, seed: number, nodes: number, events: number, span = 1000,
): Promise<string> {
  const rand = mulberry32(seed);
  const times = Array.from({ length: events }, () => rand() * span).sort((a, b) => a - b);
  const lines = ["src,dst,t"];
  for (const t of times) {
    const u = Math.floor(rand() * nodes);
    const v = Math.floor(rand() * nodes);
    lines.push(`${u},${v},${t}`);
  }
  const dir = await fs.mkdtemp(join(tmpdir(), "tgkit-data-"));
  const path = join(dir, name);
  await fs.writeFile(path, lines.join("\n") + "\n");
  return path;
}

export interface BatchDump {
  seed_nodes: number[];
  seed_times: number[];
  seed_locals: number[];
  node_map: number[];
  fanouts: number[];
  hops: Array<{ src: number[]; dst: number[]; t: number[]; eid: number[] }>;
}

/** Element-for-element comparison of a decoded batch with the CLI's
 *  readable JSON dump of the same batch. */
export function expectBatchMatchesDump(batch: FlatBatch, dump: BatchDump): void {
  expect(Array.from(batch.seedNodes)).toEqual(dump.seed_nodes);
  expect(Array.from(batch.seedTimes)).toEqual(dump.seed_times);
  expect(Array.from(batch.seedLocals)).toEqual(dump.seed_locals);
  expect(Array.from(batch.nodeMap)).toEqual(dump.node_map);
  expect(batch.hops).toHaveLength(dump.hops.length);
  dump.hops.forEach((hop, i) => {
    expect(Array.from(batch.hops[i].src)).toEqual(hop.src);
    expect(Array.from(batch.hops[i].dst)).toEqual(hop.dst);
    expect(Array.from(batch.hops[i].t)).toEqual(hop.t);
    expect(Array.from(batch.hops[i].eid)).toEqual(hop.eid);
  });
}

export function expectBatchesEqual(a: FlatBatch, b: FlatBatch): void {
  expect(Array.from(a.seedNodes)).toEqual(Array.from(b.seedNodes));
  expect(Array.from(a.seedTimes)).toEqual(Array.from(b.seedTimes));
  expect(Array.from(a.seedLocals)).toEqual(Array.from(b.seedLocals));
  expect(Array.from(a.nodeMap)).toEqual(Array.from(b.nodeMap));
  expect(a.hops.length).toBe(b.hops.length);
  a.hops.forEach((hop, i) => {
    expect(Array.from(hop.src)).toEqual(Array.from(b.hops[i].src));
    expect(Array.from(hop.dst)).toEqual(Array.from(b.hops[i].dst));
    expect(Array.from(hop.t)).toEqual(Array.from(b.hops[i].t));
    expect(Array.from(hop.eid)).toEqual(Array.from(b.hops[i].eid));
  });
}
