// iemb.ts
//
// The binary embedding-table format shared with the Python workbench:
//   bytes 0..3   magic "IEMB"
//   bytes 4..7   u32 LE version (currently 1)
//   bytes 8..11  u32 LE row count
//   bytes 12..15 u32 LE dimension
//   bytes 16..   count*dim float32 LE, row-major, rows L2-normalized
// Total length must be exactly 16 + 4*count*dim bytes.

export const IEMB_MAGIC = "IEMB";
export const IEMB_VERSION = 1;
export const HEADER_BYTES = 16;
export const ROW_NORM_TOL = 1e-4;

export class EmbFileError extends Error {}

export class EmbFileBadMagicError extends EmbFileError {}

export class EmbFileBadVersionError extends EmbFileError {}

export class EmbFileTruncatedError extends EmbFileError {}

export interface EmbTable {
  count: number;
  dim: number;
  rows: Float32Array; // row-major, count*dim entries
}

export function normalizeRows(rows: number[][]): Float32Array {
  const count = rows.length;
  const dim = rows[0]?.length ?? 0;
  const out = new Float32Array(count * dim);
  for (let i = 0; i < count; i++) {
    if (rows[i].length !== dim) {
      throw new EmbFileError(`row ${i} has dimension ${rows[i].length}, expected ${dim}`);
    }
    let sq = 0;
    for (const v of rows[i]) sq += v * v;
    const norm = Math.sqrt(sq);
    if (norm === 0) {
      throw new EmbFileError(`row ${i} is the zero vector and cannot be normalized`);
    }
    for (let j = 0; j < dim; j++) {
      out[i * dim + j] = rows[i][j] / norm;
    }
  }
  return out;
}

export function encodeTable(table: EmbTable): Buffer {
  const { count, dim, rows } = table;
  if (rows.length !== count * dim) {
    throw new EmbFileError(`payload has ${rows.length} floats, expected ${count * dim}`);
  }
  const buf = Buffer.alloc(HEADER_BYTES + 4 * count * dim);
  buf.write(IEMB_MAGIC, 0, "ascii");
  buf.writeUInt32LE(IEMB_VERSION, 4);
  buf.writeUInt32LE(count, 8);
  buf.writeUInt32LE(dim, 12);
  for (let i = 0; i < rows.length; i++) {
    buf.writeFloatLE(rows[i], HEADER_BYTES + 4 * i);
  }
  return buf;
}

export function decodeTable(data: Buffer): EmbTable {
  if (data.length < HEADER_BYTES) {
    throw new EmbFileTruncatedError(
      `header needs ${HEADER_BYTES} bytes, file has ${data.length}`,
    );
  }
  const magic = data.toString("ascii", 0, 4);
  if (magic !== IEMB_MAGIC) {
    throw new EmbFileBadMagicError(`bad magic ${JSON.stringify(magic)}, expected "${IEMB_MAGIC}"`);
  }
  const version = data.readUInt32LE(4);
  if (version !== IEMB_VERSION) {
    throw new EmbFileBadVersionError(`unsupported version ${version}, expected ${IEMB_VERSION}`);
  }
  const count = data.readUInt32LE(8);
  const dim = data.readUInt32LE(12);
  const expected = HEADER_BYTES + 4 * count * dim;
  if (data.length !== expected) {
    throw new EmbFileTruncatedError(`payload length ${data.length} != expected ${expected}`);
  }
  const rows = new Float32Array(count * dim);
  for (let i = 0; i < rows.length; i++) {
    rows[i] = data.readFloatLE(HEADER_BYTES + 4 * i);
  }
  for (let i = 0; i < count; i++) {
    let sq = 0;
    for (let j = 0; j < dim; j++) sq += rows[i * dim + j] ** 2;
    const norm = Math.sqrt(sq);
    if (Math.abs(norm - 1) > ROW_NORM_TOL) {
      throw new EmbFileError(`row ${i} has norm ${norm}, expected 1 within ${ROW_NORM_TOL}`);
    }
  }
  return { count, dim, rows };
}

export function cosine(table: EmbTable, i: number, j: number): number {
  const { dim, rows } = table;
  let dot = 0;
  for (let k = 0; k < dim; k++) {
    dot += rows[i * dim + k] * rows[j * dim + k];
  }
  return dot;
}
