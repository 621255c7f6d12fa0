export {
  BridgeError,
  decodeFlatBatch,
  emptyFlatBatch,
  type EdgeBlock,
  type FlatBatch,
} from "./flatbatch.js";
export {
  closeDataset,
  dataloader,
  negatives,
  nextAfter,
  openDataset,
  sample,
  type DatasetHandle,
  type LoaderOptions,
  type LoaderStep,
  type NegativeOptions,
  type NegativePairs,
  type Positives,
  type SamplerOptions,
  type Seed,
} from "./bridge.js";
export { runCli, type FlagValue } from "./runner.js";
