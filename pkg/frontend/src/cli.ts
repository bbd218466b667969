#!/usr/bin/env node
/** spinemtl-export: encode segment bundles into a SEMB embedding file.
 *
 * Usage:
 *   spinemtl-export --bundles bundles.jsonl --out embeddings.semb \
 *       [--model frozen-base] [--pooling mean|first-token] \
 *       [--max-length 512] [--batch-size 32] [--json]
 */

import {
  DEFAULTS,
  ExporterError,
  MODEL_REGISTRY,
  makeConfig,
  type ExportConfig,
  type Pooling,
} from "./config.js";
import { exportFile } from "./export.js";

interface CliArgs {
  bundles?: string;
  out?: string;
  model: string;
  pooling: Pooling;
  maxLength: number;
  batchSize: number;
  json: boolean;
}

function usage(): string {
  const models = Object.keys(MODEL_REGISTRY).join(", ");
  return [
    "usage: spinemtl-export --bundles FILE --out FILE [options]",
    "",
    "options:",
    `  --model ID         encoder to use (${models}); default ${DEFAULTS.modelId}`,
    `  --pooling MODE     mean | first-token; default ${DEFAULTS.pooling}`,
    `  --max-length N     token budget per text incl. CLS; default ${DEFAULTS.maxLength}`,
    `  --batch-size N     texts per batch; default ${DEFAULTS.batchSize}`,
    "  --json             print the summary as JSON",
    "  --help             show this message",
  ].join("\n");
}

function parseArgs(argv: string[]): CliArgs | "help" {
  const args: CliArgs = {
    model: DEFAULTS.modelId,
    pooling: DEFAULTS.pooling,
    maxLength: DEFAULTS.maxLength,
    batchSize: DEFAULTS.batchSize,
    json: false,
  };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i]!;
    const next = (): string => {
      const v = argv[++i];
      if (v === undefined) throw new ExporterError(`${flag} requires a value`);
      return v;
    };
    switch (flag) {
      case "--bundles":
        args.bundles = next();
        break;
      case "--out":
        args.out = next();
        break;
      case "--model":
        args.model = next();
        break;
      case "--pooling": {
        const v = next();
        if (v !== "mean" && v !== "first-token") {
          throw new ExporterError(`--pooling must be 'mean' or 'first-token', got '${v}'`);
        }
        args.pooling = v;
        break;
      }
      case "--max-length":
        args.maxLength = Number(next());
        break;
      case "--batch-size":
        args.batchSize = Number(next());
        break;
      case "--json":
        args.json = true;
        break;
      case "--help":
      case "-h":
        return "help";
      default:
        throw new ExporterError(`unknown flag '${flag}'`);
    }
  }
  return args;
}

export function main(argv: string[]): number {
  let args: CliArgs | "help";
  try {
    args = parseArgs(argv);
  } catch (err) {
    if (err instanceof ExporterError) {
      process.stderr.write(`error: ${err.message}\n${usage()}\n`);
      return 2;
    }
    throw err;
  }
  if (args === "help") {
    process.stdout.write(usage() + "\n");
    return 0;
  }
  if (!args.bundles || !args.out) {
    process.stderr.write(`error: --bundles and --out are required\n${usage()}\n`);
    return 2;
  }

  let config: ExportConfig;
  try {
    config = makeConfig({
      modelId: args.model,
      pooling: args.pooling,
      maxLength: args.maxLength,
      batchSize: args.batchSize,
      outputPath: args.out,
    });
  } catch (err) {
    if (err instanceof ExporterError) {
      process.stderr.write(`error: ${err.message}\n${usage()}\n`);
      return 2;
    }
    throw err;
  }

  try {
    const summary = exportFile(args.bundles, config);
    if (args.json) {
      process.stdout.write(JSON.stringify(summary) + "\n");
    } else {
      process.stdout.write(
        `wrote ${summary.records} vectors (dim ${summary.dim}, ` +
          `${summary.truncated} truncated) to ${summary.outputPath}\n`,
      );
    }
    return 0;
  } catch (err) {
    if (err instanceof ExporterError) {
      process.stderr.write(`error: ${err.message}\n`);
      return 1;
    }
    throw err;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  (import.meta.url.endsWith("/cli.js") || import.meta.url.endsWith("/cli.ts")) &&
  (process.argv[1].endsWith("/cli.js") ||
    process.argv[1].endsWith("/cli.ts") ||
    process.argv[1].endsWith("spinemtl-export"));
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
