/** Deterministic 64-bit hashing and a seeded uniform stream.
 *
 * Everything downstream (token ids, frozen weights) is derived from these
 * two primitives, so an export is a pure function of (model id, input text).
 */

const FNV_OFFSET = 0xcbf29ce484222325n;
const FNV_PRIME = 0x100000001b3n;
const MASK64 = 0xffffffffffffffffn;

export function fnv1a64(data: Uint8Array, seed: bigint = FNV_OFFSET): bigint {
  let h = seed & MASK64;
  for (const byte of data) {
    h = ((h ^ BigInt(byte)) * FNV_PRIME) & MASK64;
  }
  return h;
}

export function hashString(s: string, seed: bigint = FNV_OFFSET): bigint {
  return fnv1a64(new TextEncoder().encode(s), seed);
}

export function splitmix64(state: bigint): bigint {
  let z = (state + 0x9e3779b97f4a7c15n) & MASK64;
  z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
  z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
  return (z ^ (z >> 31n)) & MASK64;
}

/** Uniform float in [-1, 1), exactly reproducible for a given (seed, index). */
export function uniformAt(seed: bigint, index: bigint): number {
  const bits = splitmix64((seed ^ (index * 0x9e3779b97f4a7c15n)) & MASK64);
  // Top 53 bits give a float64-exact mantissa.
  return Number(bits >> 11n) / 2 ** 52 - 1.0;
}
