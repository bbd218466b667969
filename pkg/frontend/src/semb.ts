/** SEMB embedding file format.
 *
 * Layout, all little-endian:
 *   bytes 0..4    magic "SEMB"
 *   bytes 4..8    u32 format version (currently 1)
 *   bytes 8..12   u32 vector dimension
 *   bytes 12..20  u64 record count
 *   per record:   u32 key byte length, UTF-8 key, dim float64 values
 */

import { ExporterError } from "./config.js";

export const MAGIC = "SEMB";
export const FORMAT_VERSION = 1;

export interface SembRecord {
  readonly key: string;
  readonly vector: Float64Array;
}

export function encodeSemb(dim: number, records: readonly SembRecord[]): Uint8Array {
  const encoder = new TextEncoder();
  const keyBytes: Uint8Array[] = [];
  let total = 20;
  for (const rec of records) {
    if (rec.vector.length !== dim) {
      throw new ExporterError(
        `record '${rec.key}' has dimension ${rec.vector.length}, expected ${dim}`,
      );
    }
    for (const v of rec.vector) {
      if (!Number.isFinite(v)) {
        throw new ExporterError(`record '${rec.key}' contains a non-finite value`);
      }
    }
    const kb = encoder.encode(rec.key);
    keyBytes.push(kb);
    total += 4 + kb.length + 8 * dim;
  }

  const buf = new ArrayBuffer(total);
  const view = new DataView(buf);
  const bytes = new Uint8Array(buf);
  bytes.set(encoder.encode(MAGIC), 0);
  view.setUint32(4, FORMAT_VERSION, true);
  view.setUint32(8, dim, true);
  view.setBigUint64(12, BigInt(records.length), true);

  let off = 20;
  for (let i = 0; i < records.length; i++) {
    const kb = keyBytes[i]!;
    view.setUint32(off, kb.length, true);
    off += 4;
    bytes.set(kb, off);
    off += kb.length;
    const vec = records[i]!.vector;
    for (let j = 0; j < dim; j++) {
      view.setFloat64(off, vec[j]!, true);
      off += 8;
    }
  }
  return bytes;
}

/** Parse a SEMB buffer back into records. Used by the test suite to close
 * the write/read loop without shelling out. */
export function decodeSemb(data: Uint8Array): { dim: number; records: SembRecord[] } {
  if (data.length < 20) throw new ExporterError("truncated header");
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  const magic = new TextDecoder().decode(data.subarray(0, 4));
  if (magic !== MAGIC) throw new ExporterError(`bad magic ${JSON.stringify(magic)}`);
  const version = view.getUint32(4, true);
  if (version !== FORMAT_VERSION) throw new ExporterError(`unsupported version ${version}`);
  const dim = view.getUint32(8, true);
  const count = Number(view.getBigUint64(12, true));

  const decoder = new TextDecoder();
  const records: SembRecord[] = [];
  let off = 20;
  for (let i = 0; i < count; i++) {
    if (off + 4 > data.length) throw new ExporterError("truncated record header");
    const klen = view.getUint32(off, true);
    off += 4;
    if (off + klen + 8 * dim > data.length) throw new ExporterError("truncated record");
    const key = decoder.decode(data.subarray(off, off + klen));
    off += klen;
    const vector = new Float64Array(dim);
    for (let j = 0; j < dim; j++) {
      vector[j] = view.getFloat64(off, true);
      off += 8;
    }
    for (const v of vector) {
      if (!Number.isFinite(v)) throw new ExporterError(`record '${key}' has a non-finite value`);
    }
    records.push({ key, vector });
  }
  if (off !== data.length) throw new ExporterError(`${data.length - off} trailing bytes`);
  return { dim, records };
}
