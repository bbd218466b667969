import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, describe, expect, it } from "vitest";

import { makeConfig } from "../src/config.js";
import { exportBundles, exportFile } from "../src/export.js";
import { parseBundles } from "../src/jsonl.js";
import { decodeSemb } from "../src/semb.js";

const dir = mkdtempSync(join(tmpdir(), "semb-export-"));
afterAll(() => rmSync(dir, { recursive: true, force: true }));

const JSONL = [
  JSON.stringify({ report_id: "R1", segment: "C2-C3", text: "mild stenosis", labels: {} }),
  JSON.stringify({ report_id: "R1", segment: "C3-C4", text: "moderate disc bulge", labels: {} }),
  JSON.stringify({ report_id: "R2", segment: "C2-C3", text: "unremarkable", labels: {} }),
  "",
].join("\n");

describe("parseBundles", () => {
  it("reads rows and skips blank lines", () => {
    const bundles = parseBundles(JSONL);
    expect(bundles.length).toBe(3);
    expect(bundles[0]).toEqual({ reportId: "R1", segment: "C2-C3", text: "mild stenosis" });
  });

  it("reports the offending line on bad input", () => {
    expect(() => parseBundles('{"report_id": "R1"}', "f.jsonl")).toThrow(
      /f\.jsonl:1: missing string field 'segment'/,
    );
    expect(() => parseBundles("not json", "f.jsonl")).toThrow(/f\.jsonl:1: not valid JSON/);
    expect(() => parseBundles("[1,2]", "f.jsonl")).toThrow(/expected an object/);
  });
});

describe("exportBundles", () => {
  const bundles = parseBundles(JSONL);

  it("writes one keyed record per bundle", () => {
    const out = join(dir, "a.semb");
    const summary = exportBundles(bundles, makeConfig({ outputPath: out, modelId: "frozen-mini" }));
    expect(summary.records).toBe(3);
    expect(summary.dim).toBe(256);
    expect(summary.truncated).toBe(0);
    const parsed = decodeSemb(readFileSync(out));
    expect(parsed.records.map((r) => r.key)).toEqual(["R1|C2-C3", "R1|C3-C4", "R2|C2-C3"]);
  });

  it("is byte-identical across runs and batch sizes", () => {
    const out1 = join(dir, "b1.semb");
    const out2 = join(dir, "b2.semb");
    exportBundles(bundles, makeConfig({ outputPath: out1, modelId: "frozen-mini", batchSize: 1 }));
    exportBundles(bundles, makeConfig({ outputPath: out2, modelId: "frozen-mini", batchSize: 64 }));
    expect(Buffer.compare(readFileSync(out1), readFileSync(out2))).toBe(0);
  });

  it("counts truncated texts", () => {
    const long = {
      reportId: "R9",
      segment: "C2-C3",
      text: Array.from({ length: 40 }, (_, i) => `w${i}`).join(" "),
    };
    const out = join(dir, "c.semb");
    const summary = exportBundles(
      [long],
      makeConfig({ outputPath: out, modelId: "frozen-mini", maxLength: 8 }),
    );
    expect(summary.truncated).toBe(1);
  });

  it("rejects duplicate keys", () => {
    const dup = [bundles[0]!, bundles[0]!];
    const out = join(dir, "d.semb");
    expect(() => exportBundles(dup, makeConfig({ outputPath: out }))).toThrow(
      /duplicate bundle key 'R1\|C2-C3'/,
    );
  });
});

describe("exportFile", () => {
  it("reads a JSONL file from disk", () => {
    const src = join(dir, "in.jsonl");
    writeFileSync(src, JSONL);
    const out = join(dir, "e.semb");
    const summary = exportFile(src, makeConfig({ outputPath: out, modelId: "frozen-small" }));
    expect(summary.records).toBe(3);
    expect(summary.dim).toBe(384);
    expect(decodeSemb(readFileSync(out)).dim).toBe(384);
  });

  it("raises a clean error for a missing file", () => {
    expect(() =>
      exportFile(join(dir, "nope.jsonl"), makeConfig({ outputPath: join(dir, "f.semb") })),
    ).toThrow(/bundle file not found/);
  });
});
