import assert from "node:assert/strict";
import { spawnSync } from "node:child_process";
import { createHash } from "node:crypto";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { test } from "node:test";
import { fileURLToPath } from "node:url";

import { EncoderLoadError, getEncoder } from "../src/encoders.js";
import { EmptyInputError, exportEmbeddings } from "../src/export.js";
import { cosine, decodeTable } from "../src/iemb.js";

const CLI = fileURLToPath(new URL("../src/cli.js", import.meta.url));

const FIXTURE_SENTENCES = [
  "great phone and fast shipping",
  "the battery lasts all day",
  "great phone and fast shipping",
  "terrible service and cold food",
  "great phone and fast shipping",
];

function tempDir(): string {
  return mkdtempSync(join(tmpdir(), "embexport-"));
}

function writeFixture(dir: string): string {
  const path = join(dir, "texts.txt");
  writeFileSync(path, FIXTURE_SENTENCES.join("\n") + "\n");
  return path;
}

test("export writes a table the local decoder accepts", async () => {
  const dir = tempDir();
  const input = writeFixture(dir);
  const out = join(dir, "texts.iemb");
  const result = await exportEmbeddings(input, out, "hash-256");
  assert.equal(result.count, 5);
  const table = decodeTable(readFileSync(out));
  assert.equal(table.count, 5);
  assert.equal(table.dim, result.dim);
  // rows for identical sentences are identical; cosine exactly 1
  assert.ok(Math.abs(cosine(table, 0, 2) - 1) < 1e-6);
  assert.ok(Math.abs(cosine(table, 0, 4) - 1) < 1e-6);
  // different sentences are not parallel
  assert.ok(cosine(table, 0, 1) < 1 - 1e-3);
});

test("sidecar records encoder, row shape, and input hash", async () => {
  const dir = tempDir();
  const input = writeFixture(dir);
  const out = join(dir, "texts.iemb");
  const result = await exportEmbeddings(input, out, "hash-256");
  const sidecar = JSON.parse(readFileSync(result.sidecarPath, "utf-8"));
  assert.equal(sidecar.encoder, "hash-256");
  assert.equal(sidecar.count, 5);
  assert.equal(sidecar.dim, result.dim);
  const expectedHash = createHash("sha256").update(readFileSync(input)).digest("hex");
  assert.equal(sidecar.input_sha256, expectedHash);
});

test("re-export of the same input is byte-identical", async () => {
  const dir = tempDir();
  const input = writeFixture(dir);
  const a = join(dir, "a.iemb");
  const b = join(dir, "b.iemb");
  await exportEmbeddings(input, a, "hash-256");
  await exportEmbeddings(input, b, "hash-256");
  assert.deepEqual(readFileSync(a), readFileSync(b));
});

test("header arithmetic matches payload length", async () => {
  const dir = tempDir();
  const input = writeFixture(dir);
  const out = join(dir, "texts.iemb");
  const { count, dim } = await exportEmbeddings(input, out, "hash-256");
  assert.equal(readFileSync(out).length, 16 + 4 * count * dim);
});

test("empty input is rejected", async () => {
  const dir = tempDir();
  const input = join(dir, "empty.txt");
  writeFileSync(input, "");
  await assert.rejects(
    exportEmbeddings(input, join(dir, "out.iemb"), "hash-256"),
    EmptyInputError,
  );
});

test("default transformer encoder fails with a remediation hint when absent", async () => {
  await assert.rejects(getEncoder("all-MiniLM-L6-v2"), (err: Error) => {
    assert.ok(err instanceof EncoderLoadError);
    assert.match(err.message, /npm install @xenova\/transformers|pre-download/);
    return true;
  });
});

test("cli exports and reports shape", () => {
  const dir = tempDir();
  const input = writeFixture(dir);
  const out = join(dir, "cli.iemb");
  const run = spawnSync(
    process.execPath,
    [CLI, "--in", input, "--out", out, "--model", "hash-256"],
    { encoding: "utf-8" },
  );
  assert.equal(run.status, 0, run.stderr);
  assert.match(run.stdout, /wrote 5 x \d+ embeddings/);
});

test("cli exits 2 on bad usage", () => {
  const run = spawnSync(process.execPath, [CLI, "--bogus"], { encoding: "utf-8" });
  assert.equal(run.status, 2);
});

test("cli exits 3 on a missing input file", () => {
  const dir = tempDir();
  const run = spawnSync(
    process.execPath,
    [CLI, "--in", join(dir, "absent.txt"), "--out", join(dir, "o.iemb"), "--model", "hash-256"],
    { encoding: "utf-8" },
  );
  assert.equal(run.status, 3);
});

test("cli exits 2 when the default encoder cannot load", () => {
  const dir = tempDir();
  const input = writeFixture(dir);
  const run = spawnSync(
    process.execPath,
    [CLI, "--in", input, "--out", join(dir, "o.iemb")],
    { encoding: "utf-8" },
  );
  assert.equal(run.status, 2);
  assert.match(run.stderr, /encoder error/);
});

// Cross-component contract: the Python workbench loader must parse every
// file this package writes, and must reject the three corruption cases
// with its designated error types.

const PY_PROBE = `
import json, sys
from hallusim.measures import (EmbFileBadMagic, EmbFileBadVersion,
                               EmbFileTruncated, load_embedding_table)
import numpy as np
path = sys.argv[1]
mode = sys.argv[2]
if mode == "load":
    t = load_embedding_table(path)
    sims = t.rows @ t.rows.T
    print(json.dumps({"count": t.count, "dim": t.dim,
                      "cos_0_2": float(sims[0, 2]), "cos_0_4": float(sims[0, 4])}))
else:
    expected = {"magic": EmbFileBadMagic, "version": EmbFileBadVersion,
                "truncated": EmbFileTruncated}[mode]
    try:
        load_embedding_table(path)
    except expected:
        print(json.dumps({"raised": mode}))
    else:
        print(json.dumps({"raised": None}))
`;

function pythonProbe(path: string, mode: string): Record<string, unknown> {
  const run = spawnSync("python3", ["-c", PY_PROBE, path, mode], { encoding: "utf-8" });
  assert.equal(run.status, 0, run.stderr);
  return JSON.parse(run.stdout.trim());
}

test("python loader parses an exported table and sees duplicate rows as cosine 1", async () => {
  const dir = tempDir();
  const input = writeFixture(dir);
  const out = join(dir, "xlang.iemb");
  await exportEmbeddings(input, out, "hash-256");
  const probe = pythonProbe(out, "load") as { count: number; cos_0_2: number; cos_0_4: number };
  assert.equal(probe.count, 5);
  assert.ok(Math.abs(probe.cos_0_2 - 1) < 1e-6);
  assert.ok(Math.abs(probe.cos_0_4 - 1) < 1e-6);
});

test("python loader rejects corrupted magic, version, and truncation", async () => {
  const dir = tempDir();
  const input = writeFixture(dir);
  const out = join(dir, "good.iemb");
  await exportEmbeddings(input, out, "hash-256");
  const good = readFileSync(out);

  const badMagic = Buffer.from(good);
  badMagic.write("XEMB", 0, "ascii");
  const magicPath = join(dir, "magic.iemb");
  writeFileSync(magicPath, badMagic);
  assert.deepEqual(pythonProbe(magicPath, "magic"), { raised: "magic" });

  const badVersion = Buffer.from(good);
  badVersion.writeUInt32LE(9, 4);
  const versionPath = join(dir, "version.iemb");
  writeFileSync(versionPath, badVersion);
  assert.deepEqual(pythonProbe(versionPath, "version"), { raised: "version" });

  const truncatedPath = join(dir, "short.iemb");
  writeFileSync(truncatedPath, good.subarray(0, good.length - 7));
  assert.deepEqual(pythonProbe(truncatedPath, "truncated"), { raised: "truncated" });
});
