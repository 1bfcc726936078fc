// encoders.ts
//
// Sentence encoders behind a single async interface. The default wraps the
// all-MiniLM-L6-v2 sentence transformer via @xenova/transformers when that
// package is installed; "hash-256" is a fully offline deterministic
// fallback used for format round-trips and tests.

export const DEFAULT_ENCODER = "all-MiniLM-L6-v2";
export const HASH_ENCODER = "hash-256";
const HASH_DIM = 256;

export class EncoderLoadError extends Error {}

export type Encoder = (texts: string[]) => Promise<number[][]>;

function fnv1a(token: string): number {
  let h = 0x811c9dc5;
  for (const byte of Buffer.from(token, "utf-8")) {
    h ^= byte;
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h >>> 0;
}

async function hashEncode(texts: string[]): Promise<number[][]> {
  return texts.map((text) => {
    const vec = new Array<number>(HASH_DIM).fill(0);
    const tokens = text.toLowerCase().split(/\s+/).filter((t) => t.length > 0);
    for (const token of tokens) {
      const h = fnv1a(token);
      vec[h % HASH_DIM] += 1 + (h >>> 16) / 65536;
    }
    if (tokens.length === 0) {
      vec[0] = 1; // reserve a fixed direction for blank lines
    }
    return vec;
  });
}

async function transformerEncoder(modelName: string): Promise<Encoder> {
  let pipelineFactory: any;
  // resolved at runtime only; the package is an optional install
  const specifier = "@xenova/transformers";
  try {
    const mod: any = await import(specifier);
    pipelineFactory = mod.pipeline;
  } catch (err) {
    throw new EncoderLoadError(
      `encoder "${modelName}" needs the @xenova/transformers package; ` +
        `install it with "npm install @xenova/transformers" (requires network ` +
        `access to download model weights), or use --model ${HASH_ENCODER} ` +
        `for a deterministic offline encoder. (${err})`,
    );
  }
  const repo = modelName.includes("/") ? modelName : `Xenova/${modelName}`;
  let extractor: any;
  try {
    extractor = await pipelineFactory("feature-extraction", repo);
  } catch (err) {
    throw new EncoderLoadError(
      `failed to load encoder model "${repo}": ${err}. If you are offline, ` +
        `pre-download the model into the transformers cache or use ` +
        `--model ${HASH_ENCODER}.`,
    );
  }
  return async (texts: string[]) => {
    const out: number[][] = [];
    for (const text of texts) {
      const result = await extractor(text, { pooling: "mean", normalize: true });
      out.push(Array.from(result.data as Float32Array));
    }
    return out;
  };
}

export async function getEncoder(name: string): Promise<Encoder> {
  if (name === HASH_ENCODER) {
    return hashEncode;
  }
  return transformerEncoder(name);
}
