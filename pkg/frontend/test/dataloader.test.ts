import { promises as fs } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import {
  type DatasetHandle,
  type LoaderStep,
  closeDataset,
  dataloader,
  openDataset,
  runCli,
} from "../src/index.js";
import { makeDatasetCsv } from "./helpers.js";

let small: DatasetHandle;
let large: DatasetHandle;

beforeAll(async () => {
  small = await openDataset(await makeDatasetCsv("small.csv", 7, 50, 3000));
  large = await openDataset(await makeDatasetCsv("large.csv", 8, 50, 30000));
}, 60_000);

afterAll(async () => {
  await closeDataset(small);
  await closeDataset(large);
});

describe("dataloader", () => {
  it("yields chronological windows with aligned positives, batch, negatives", async () => {
    const steps: LoaderStep[] = [];
    for await (const step of dataloader(small, {
      batchSize: 100,
      limit: 3,
      sampler: { fanouts: [3, 3], seed: 11 },
      negatives: { strategy: "random", perPositive: 2, seed: 11 },
    })) {
      steps.push(step);
    }
    expect(steps).toHaveLength(3);
    let prevEnd = -Infinity;
    for (const step of steps) {
      expect(step.positives.src).toHaveLength(100);
      expect(step.window[0]).toBeGreaterThanOrEqual(prevEnd);
      prevEnd = step.window[1];
      // Two seeds per positive, at the event's own timestamp.
      expect(step.batch.seedNodes).toHaveLength(200);
      for (let i = 0; i < 100; i++) {
        expect(step.batch.seedTimes[2 * i]).toBe(step.positives.t[i]);
        expect(step.batch.seedNodes[2 * i]).toBe(step.positives.src[i]);
        expect(step.batch.seedNodes[2 * i + 1]).toBe(step.positives.dst[i]);
      }
      // Leakage guard seen from this side of the boundary.
      for (const hop of step.batch.hops) {
        for (const t of hop.t) expect(t).toBeLessThan(step.window[1]);
        for (const local of hop.dst) {
          expect(local).toBeLessThan(step.batch.nodeMap.length);
        }
      }
      expect(step.negatives).not.toBeNull();
      expect(step.negatives!.src.length).toBe(200);
    }
  }, 120_000);

  it("moves only batch-sized buffers, not the event store", async () => {
    // The same window shape must produce comparably sized batch files
    // whether the dataset has 3k or 30k events.
    async function firstBatchBytes(handle: DatasetHandle): Promise<number> {
      const out = await fs.mkdtemp(join(tmpdir(), "tgkit-size-"));
      await runCli("sample", {
        dataset: handle.path,
        out,
        "sampler.link_batches": true,
        "sampler.batch_size": 100,
        "sampler.limit": 1,
        "sampler.fanouts": "3,3",
        seed: 0,
      });
      const size = (await fs.stat(join(out, "batch_00000.bin"))).size;
      await fs.rm(out, { recursive: true, force: true });
      return size;
    }
    const smallBytes = await firstBatchBytes(small);
    const largeBytes = await firstBatchBytes(large);
    const datasetRatio =
      (await fs.stat(large.path)).size / (await fs.stat(small.path)).size;
    expect(datasetRatio).toBeGreaterThan(5);
    expect(largeBytes / smallBytes).toBeLessThan(2);
  }, 120_000);

  it("validates batchSize", async () => {
    const it_ = dataloader(small, { batchSize: 0, sampler: { fanouts: [2] } });
    await expect(it_.next()).rejects.toThrow(/batchSize/);
  });
});
