import { describe, expect, it } from "vitest";

import { fnv1a64, hashString, splitmix64, uniformAt } from "../src/hash.js";

describe("fnv1a64", () => {
  it("matches reference digests", () => {
    // Reference values for the classic 64-bit FNV-1a parameters.
    expect(fnv1a64(new Uint8Array(0))).toBe(0xcbf29ce484222325n);
    expect(fnv1a64(new TextEncoder().encode("a"))).toBe(0xaf63dc4c8601ec8cn);
    expect(fnv1a64(new TextEncoder().encode("foobar"))).toBe(0x85944171f73967e8n);
  });

  it("is sensitive to every byte", () => {
    const a = hashString("report one");
    const b = hashString("report two");
    const c = hashString("report one ");
    expect(a).not.toBe(b);
    expect(a).not.toBe(c);
  });

  it("stays within 64 bits", () => {
    const h = hashString("x".repeat(10_000));
    expect(h).toBeLessThan(1n << 64n);
    expect(h).toBeGreaterThanOrEqual(0n);
  });
});

describe("splitmix64", () => {
  it("is deterministic and 64-bit", () => {
    const x = splitmix64(12345n);
    expect(splitmix64(12345n)).toBe(x);
    expect(x).toBeLessThan(1n << 64n);
  });

  it("separates consecutive seeds", () => {
    expect(splitmix64(1n)).not.toBe(splitmix64(2n));
  });
});

describe("uniformAt", () => {
  it("produces values in [-1, 1)", () => {
    const seed = hashString("stream");
    for (let i = 0; i < 2_000; i++) {
      const u = uniformAt(seed, BigInt(i));
      expect(u).toBeGreaterThanOrEqual(-1);
      expect(u).toBeLessThan(1);
    }
  });

  it("is mean-centered over a long stream", () => {
    const seed = hashString("moments");
    let sum = 0;
    const n = 20_000;
    for (let i = 0; i < n; i++) sum += uniformAt(seed, BigInt(i));
    // Mean of U(-1,1) is 0 with sd 1/sqrt(3n); allow six sigma.
    expect(Math.abs(sum / n)).toBeLessThan((6 * 1) / Math.sqrt(3 * n));
  });

  it("indexes independently", () => {
    const seed = hashString("indexed");
    expect(uniformAt(seed, 7n)).toBe(uniformAt(seed, 7n));
    expect(uniformAt(seed, 7n)).not.toBe(uniformAt(seed, 8n));
  });
});
