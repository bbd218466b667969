import { describe, expect, it } from "vitest";

import { ExporterError, MODEL_REGISTRY } from "../src/config.js";
import { FrozenEncoder } from "../src/encoder.js";

const SAMPLE = "At C5-C6 there is moderate canal stenosis with a broad disc protrusion.";

function norm(v: Float64Array): number {
  let s = 0;
  for (const x of v) s += x * x;
  return Math.sqrt(s);
}

describe("FrozenEncoder", () => {
  it("rejects unknown model ids", () => {
    expect(() => new FrozenEncoder("gpt-9")).toThrow(ExporterError);
    expect(() => new FrozenEncoder("gpt-9")).toThrow(/cannot load model 'gpt-9'/);
  });

  it("emits vectors of the registered hidden size", () => {
    for (const [id, spec] of Object.entries(MODEL_REGISTRY)) {
      const enc = new FrozenEncoder(id);
      const res = enc.encode(SAMPLE, 64, "mean");
      expect(res.vector.length).toBe(spec.hiddenSize);
    }
  });

  it("is bit-identical across instances", () => {
    const a = new FrozenEncoder("frozen-mini").encode(SAMPLE, 64, "mean");
    const b = new FrozenEncoder("frozen-mini").encode(SAMPLE, 64, "mean");
    expect(Array.from(a.vector)).toEqual(Array.from(b.vector));
  });

  it("produces unit-norm, finite vectors", () => {
    const enc = new FrozenEncoder("frozen-small");
    for (const text of [SAMPLE, "short", "a b c d e f g"]) {
      const res = enc.encode(text, 32, "mean");
      expect(res.vector.every(Number.isFinite)).toBe(true);
      expect(norm(res.vector)).toBeCloseTo(1, 9);
    }
  });

  it("handles empty text via the CLS slot", () => {
    const res = new FrozenEncoder("frozen-mini").encode("", 16, "first-token");
    expect(res.tokenCount).toBe(0);
    expect(res.truncated).toBe(false);
    expect(res.vector.every(Number.isFinite)).toBe(true);
    expect(norm(res.vector)).toBeCloseTo(1, 9);
  });

  it("differs between pooling modes on multi-token text", () => {
    const enc = new FrozenEncoder("frozen-mini");
    const mean = enc.encode(SAMPLE, 64, "mean");
    const first = enc.encode(SAMPLE, 64, "first-token");
    const delta = Math.max(...mean.vector.map((v, i) => Math.abs(v - first.vector[i]!)));
    expect(delta).toBeGreaterThan(1e-6);
  });

  it("differs between models on the same text", () => {
    const a = new FrozenEncoder("frozen-mini").encode(SAMPLE, 64, "mean");
    const b = new FrozenEncoder("frozen-small").encode(SAMPLE, 64, "mean");
    expect(a.vector.length).not.toBe(b.vector.length);
    const mini2 = new FrozenEncoder("frozen-mini");
    const c = mini2.encode("different words entirely", 64, "mean");
    const delta = Math.max(...a.vector.map((v, i) => Math.abs(v - c.vector[i]!)));
    expect(delta).toBeGreaterThan(1e-6);
  });

  it("flags truncation when tokens exceed the budget", () => {
    const enc = new FrozenEncoder("frozen-mini");
    const words = Array.from({ length: 20 }, (_, i) => `tok${i}`).join(" ");
    const kept = enc.encode(words, 8, "mean");
    expect(kept.truncated).toBe(true);
    expect(kept.tokenCount).toBe(20);
    const loose = enc.encode(words, 64, "mean");
    expect(loose.truncated).toBe(false);
  });

  it("ignores tokens past the budget", () => {
    const enc = new FrozenEncoder("frozen-mini");
    // Budget of 8 keeps CLS + 7 word tokens; the tail must not matter.
    const a = enc.encode("w1 w2 w3 w4 w5 w6 w7 tail tail tail", 8, "mean");
    const b = enc.encode("w1 w2 w3 w4 w5 w6 w7 other words here entirely", 8, "mean");
    expect(Array.from(a.vector)).toEqual(Array.from(b.vector));
  });

  it("is position sensitive", () => {
    const enc = new FrozenEncoder("frozen-mini");
    const a = enc.encode("mild stenosis severe disc", 16, "mean");
    const b = enc.encode("severe disc mild stenosis", 16, "mean");
    const delta = Math.max(...a.vector.map((v, i) => Math.abs(v - b.vector[i]!)));
    expect(delta).toBeGreaterThan(1e-9);
  });
});
