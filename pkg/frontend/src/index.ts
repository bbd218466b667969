export {
  DEFAULTS,
  ExporterError,
  MODEL_REGISTRY,
  makeConfig,
  validateConfig,
} from "./config.js";
export type { ExportConfig, ModelSpec, Pooling } from "./config.js";
export { FrozenEncoder } from "./encoder.js";
export type { EncodeResult } from "./encoder.js";
export { parseBundles, readBundles } from "./jsonl.js";
export type { Bundle } from "./jsonl.js";
export { decodeSemb, encodeSemb, FORMAT_VERSION, MAGIC } from "./semb.js";
export type { SembRecord } from "./semb.js";
export { exportBundles, exportFile } from "./export.js";
export type { ExportSummary } from "./export.js";
export { tokenize, tokenIds } from "./tokenizer.js";
