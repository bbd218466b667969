/** Segment-bundle JSONL input. One object per line with at least
 * report_id, segment, and text fields; anything else is ignored. */

import { readFileSync } from "node:fs";

import { ExporterError } from "./config.js";

export interface Bundle {
  readonly reportId: string;
  readonly segment: string;
  readonly text: string;
}

export function parseBundles(content: string, source = "<input>"): Bundle[] {
  const bundles: Bundle[] = [];
  const lines = content.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i]!.trim();
    if (!line) continue;
    let row: unknown;
    try {
      row = JSON.parse(line);
    } catch {
      throw new ExporterError(`${source}:${i + 1}: not valid JSON`);
    }
    if (typeof row !== "object" || row === null || Array.isArray(row)) {
      throw new ExporterError(`${source}:${i + 1}: expected an object`);
    }
    const obj = row as Record<string, unknown>;
    for (const field of ["report_id", "segment", "text"]) {
      if (typeof obj[field] !== "string") {
        throw new ExporterError(`${source}:${i + 1}: missing string field '${field}'`);
      }
    }
    bundles.push({
      reportId: obj["report_id"] as string,
      segment: obj["segment"] as string,
      text: obj["text"] as string,
    });
  }
  return bundles;
}

export function readBundles(path: string): Bundle[] {
  let content: string;
  try {
    content = readFileSync(path, "utf-8");
  } catch (err) {
    const code = (err as NodeJS.ErrnoException).code;
    if (code === "ENOENT") throw new ExporterError(`bundle file not found: ${path}`);
    throw err;
  }
  return parseBundles(content, path);
}
