/** Export configuration and the frozen model registry. */

export type Pooling = "first-token" | "mean";

export interface ModelSpec {
  readonly hiddenSize: number;
  readonly mixRank: number;
}

/** Models are frozen hash encoders: no weight files, no network, the model
 * id fully determines every parameter. */
export const MODEL_REGISTRY: Record<string, ModelSpec> = {
  "frozen-mini": { hiddenSize: 256, mixRank: 32 },
  "frozen-small": { hiddenSize: 384, mixRank: 48 },
  "frozen-base": { hiddenSize: 768, mixRank: 64 },
};

export class ExporterError extends Error {
  override name = "ExporterError";
}

export interface ExportConfig {
  readonly modelId: string;
  readonly pooling: Pooling;
  readonly maxLength: number;
  readonly batchSize: number;
  readonly outputPath: string;
}

export const DEFAULTS = {
  modelId: "frozen-base",
  pooling: "mean" as Pooling,
  maxLength: 512,
  batchSize: 32,
};

export function makeConfig(partial: Partial<ExportConfig> & { outputPath: string }): ExportConfig {
  const config: ExportConfig = {
    modelId: partial.modelId ?? DEFAULTS.modelId,
    pooling: partial.pooling ?? DEFAULTS.pooling,
    maxLength: partial.maxLength ?? DEFAULTS.maxLength,
    batchSize: partial.batchSize ?? DEFAULTS.batchSize,
    outputPath: partial.outputPath,
  };
  validateConfig(config);
  return config;
}

export function validateConfig(config: ExportConfig): void {
  if (!(config.modelId in MODEL_REGISTRY)) {
    const known = Object.keys(MODEL_REGISTRY).join(", ");
    throw new ExporterError(`cannot load model '${config.modelId}'; available: ${known}`);
  }
  if (config.pooling !== "first-token" && config.pooling !== "mean") {
    throw new ExporterError(`pooling must be 'first-token' or 'mean', got '${config.pooling}'`);
  }
  if (!Number.isInteger(config.maxLength) || config.maxLength < 8) {
    throw new ExporterError(`maxLength must be an integer >= 8, got ${config.maxLength}`);
  }
  if (!Number.isInteger(config.batchSize) || config.batchSize < 1) {
    throw new ExporterError(`batchSize must be a positive integer, got ${config.batchSize}`);
  }
  if (!config.outputPath) {
    throw new ExporterError("outputPath is required");
  }
}
