/** End-to-end export: bundles JSONL in, SEMB file out. */

import { mkdirSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";

import { ExporterError, validateConfig, type ExportConfig } from "./config.js";
import { FrozenEncoder } from "./encoder.js";
import { readBundles, type Bundle } from "./jsonl.js";
import { encodeSemb, type SembRecord } from "./semb.js";

export interface ExportSummary {
  readonly records: number;
  readonly truncated: number;
  readonly dim: number;
  readonly outputPath: string;
}

export function exportBundles(bundles: readonly Bundle[], config: ExportConfig): ExportSummary {
  validateConfig(config);
  const encoder = new FrozenEncoder(config.modelId);
  const records: SembRecord[] = [];
  const seen = new Set<string>();
  let truncated = 0;

  // Batching only groups the work; the encoder is stateless across texts,
  // so the batch size never changes the output bytes.
  for (let start = 0; start < bundles.length; start += config.batchSize) {
    const batch = bundles.slice(start, start + config.batchSize);
    for (const b of batch) {
      const key = `${b.reportId}|${b.segment}`;
      if (seen.has(key)) {
        throw new ExporterError(`duplicate bundle key '${key}'`);
      }
      seen.add(key);
      const res = encoder.encode(b.text, config.maxLength, config.pooling);
      if (res.truncated) truncated++;
      records.push({ key, vector: res.vector });
    }
  }

  const payload = encodeSemb(encoder.hiddenSize, records);
  mkdirSync(dirname(config.outputPath) || ".", { recursive: true });
  writeFileSync(config.outputPath, payload);
  return {
    records: records.length,
    truncated,
    dim: encoder.hiddenSize,
    outputPath: config.outputPath,
  };
}

export function exportFile(bundlesPath: string, config: ExportConfig): ExportSummary {
  return exportBundles(readBundles(bundlesPath), config);
}
