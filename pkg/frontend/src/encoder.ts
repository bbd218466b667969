/** Frozen deterministic text encoder.
 *
 * Architecture: hashed token embeddings plus sinusoidal positions, a GELU
 * nonlinearity, one low-rank global context mix, and a layer norm. All
 * weights are pure functions of the model id; two runs anywhere produce
 * bit-identical vectors. A leading CLS slot carries the first-token pooling
 * target and guarantees a nonempty sequence for empty input text.
 */

import { ExporterError, MODEL_REGISTRY, type ModelSpec, type Pooling } from "./config.js";
import { hashString, uniformAt } from "./hash.js";
import { CLS_SENTINEL, tokenIds, tokenize } from "./tokenizer.js";

function gelu(x: number): number {
  return 0.5 * x * (1 + Math.tanh(Math.sqrt(2 / Math.PI) * (x + 0.044715 * x ** 3)));
}

function layerNorm(v: Float64Array): Float64Array {
  const n = v.length;
  let mean = 0;
  for (let i = 0; i < n; i++) mean += v[i]!;
  mean /= n;
  let variance = 0;
  for (let i = 0; i < n; i++) variance += (v[i]! - mean) ** 2;
  variance /= n;
  const inv = 1 / Math.sqrt(variance + 1e-5);
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) out[i] = (v[i]! - mean) * inv;
  return out;
}

export interface EncodeResult {
  readonly vector: Float64Array;
  readonly tokenCount: number;
  readonly truncated: boolean;
}

export class FrozenEncoder {
  readonly modelId: string;
  readonly spec: ModelSpec;
  private readonly seed: bigint;
  private readonly down: Float64Array; // mixRank x hidden
  private readonly up: Float64Array; // hidden x mixRank
  private readonly embedCache = new Map<bigint, Float64Array>();

  constructor(modelId: string) {
    const spec = MODEL_REGISTRY[modelId];
    if (!spec) {
      const known = Object.keys(MODEL_REGISTRY).join(", ");
      throw new ExporterError(`cannot load model '${modelId}'; available: ${known}`);
    }
    this.modelId = modelId;
    this.spec = spec;
    this.seed = hashString(`model:${modelId}`);
    this.down = this.frozenMatrix("down", spec.mixRank, spec.hiddenSize);
    this.up = this.frozenMatrix("up", spec.hiddenSize, spec.mixRank);
  }

  get hiddenSize(): number {
    return this.spec.hiddenSize;
  }

  private frozenMatrix(tag: string, rows: number, cols: number): Float64Array {
    const base = hashString(tag, this.seed);
    const scale = 1 / Math.sqrt(cols);
    const m = new Float64Array(rows * cols);
    for (let i = 0; i < m.length; i++) {
      m[i] = uniformAt(base, BigInt(i)) * scale;
    }
    return m;
  }

  private tokenEmbedding(id: bigint): Float64Array {
    const cached = this.embedCache.get(id);
    if (cached) return cached;
    const d = this.spec.hiddenSize;
    const e = new Float64Array(d);
    const scale = 1 / Math.sqrt(d);
    for (let j = 0; j < d; j++) {
      e[j] = uniformAt(id, BigInt(j)) * scale;
    }
    this.embedCache.set(id, e);
    return e;
  }

  /** Encode one text. maxLength counts the CLS slot, so at most
   * maxLength - 1 word tokens survive. */
  encode(text: string, maxLength: number, pooling: Pooling): EncodeResult {
    const d = this.spec.hiddenSize;
    const r = this.spec.mixRank;
    const words = tokenize(text);
    const keep = maxLength - 1;
    const truncated = words.length > keep;
    const ids = tokenIds(words.slice(0, keep), this.seed);
    ids.unshift(hashString(CLS_SENTINEL, this.seed));
    const n = ids.length;

    // Embeddings + sinusoidal positions, then GELU.
    const states: Float64Array[] = [];
    for (let i = 0; i < n; i++) {
      const e = this.tokenEmbedding(ids[i]!);
      const h = new Float64Array(d);
      for (let j = 0; j < d; j++) {
        const angle = i / Math.pow(10000, (2 * Math.floor(j / 2)) / d);
        const pos = j % 2 === 0 ? Math.sin(angle) : Math.cos(angle);
        h[j] = gelu(e[j]! + 0.05 * pos);
      }
      states.push(h);
    }

    // Low-rank global mix: every position sees the mean state.
    const context = new Float64Array(d);
    for (const h of states) {
      for (let j = 0; j < d; j++) context[j] = context[j]! + h[j]! / n;
    }
    const squeezed = new Float64Array(r);
    for (let a = 0; a < r; a++) {
      let acc = 0;
      for (let j = 0; j < d; j++) acc += this.down[a * d + j]! * context[j]!;
      squeezed[a] = gelu(acc);
    }
    const broadcast = new Float64Array(d);
    for (let j = 0; j < d; j++) {
      let acc = 0;
      for (let a = 0; a < r; a++) acc += this.up[j * r + a]! * squeezed[a]!;
      broadcast[j] = acc;
    }

    let pooled: Float64Array;
    if (pooling === "first-token") {
      pooled = new Float64Array(d);
      for (let j = 0; j < d; j++) pooled[j] = states[0]![j]! + broadcast[j]!;
    } else {
      pooled = new Float64Array(d);
      for (let j = 0; j < d; j++) pooled[j] = context[j]! + broadcast[j]!;
    }
    const normed = layerNorm(pooled);

    // Unit norm, matching the usual embedding convention.
    let norm = 0;
    for (let j = 0; j < d; j++) norm += normed[j]! ** 2;
    norm = Math.sqrt(norm);
    const out = new Float64Array(d);
    if (norm > 0) {
      for (let j = 0; j < d; j++) out[j] = normed[j]! / norm;
    }
    return { vector: out, tokenCount: words.length, truncated };
  }
}
