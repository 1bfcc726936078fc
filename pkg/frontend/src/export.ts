// export.ts
//
// Read newline-delimited UTF-8 text, encode each line, L2-normalize, and
// write the IEMB payload plus its sidecar. The payload lands via a temp
// file and atomic rename; the sidecar is written the same way afterwards,
// so a crash never leaves a torn table behind.

import { createHash } from "node:crypto";
import { readFileSync, renameSync, writeFileSync } from "node:fs";
import { basename } from "node:path";

import { DEFAULT_ENCODER, getEncoder } from "./encoders.js";
import { encodeTable, normalizeRows } from "./iemb.js";

export class EmptyInputError extends Error {}

export interface ExportResult {
  count: number;
  dim: number;
  outputPath: string;
  sidecarPath: string;
}

export function readInputLines(inputPath: string): { lines: string[]; sha256: string } {
  const raw = readFileSync(inputPath);
  const text = raw.toString("utf-8");
  const lines = text.split("\n");
  if (lines.length > 0 && lines[lines.length - 1] === "") {
    lines.pop(); // trailing newline does not add a row
  }
  if (lines.length === 0) {
    throw new EmptyInputError(`input file ${inputPath} has no lines to embed`);
  }
  return { lines, sha256: createHash("sha256").update(raw).digest("hex") };
}

function writeAtomic(path: string, data: Buffer | string): void {
  const tmp = `${path}.tmp-${process.pid}`;
  writeFileSync(tmp, data);
  renameSync(tmp, path);
}

export async function exportEmbeddings(
  inputPath: string,
  outputPath: string,
  encoderName: string = DEFAULT_ENCODER,
): Promise<ExportResult> {
  const { lines, sha256 } = readInputLines(inputPath);
  const encoder = await getEncoder(encoderName);
  const vectors = await encoder(lines);
  const rows = normalizeRows(vectors);
  const dim = vectors[0].length;
  const payload = encodeTable({ count: lines.length, dim, rows });
  writeAtomic(outputPath, payload);

  const sidecarPath = `${outputPath}.meta.json`;
  const sidecar = {
    format: "IEMB",
    version: 1,
    encoder: encoderName,
    input: basename(inputPath),
    input_sha256: sha256,
    count: lines.length,
    dim,
  };
  writeAtomic(sidecarPath, JSON.stringify(sidecar, null, 2) + "\n");
  return { count: lines.length, dim, outputPath, sidecarPath };
}
