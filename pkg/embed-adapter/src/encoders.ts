/**
 * Text encoders behind one interface. Two backends:
 *
 * - `feature-hash-<dim>`: characters trigrams hashed into a fixed-width
 *   space (FNV-1a, signed buckets). Pure arithmetic, no weights to load,
 *   byte-deterministic everywhere, and each text encodes independently,
 *   so batch size cannot change the output. The built-in default.
 * - anything else is treated as a transformers.js feature-extraction
 *   model id (mean pooling, normalized), loaded lazily; if the package
 *   or the weights are unavailable that surfaces as ModelLoadError.
 */

export interface Encoder {
  readonly name: string;
  encode(texts: string[]): Promise<Float32Array[]>;
}

export class ModelLoadError extends Error {
  constructor(modelName: string, cause: unknown) {
    super(`cannot load model ${JSON.stringify(modelName)}: ${String(cause)}`);
  }
}

const FNV_OFFSET = 0x811c9dc5;
const FNV_PRIME = 0x01000193;

function fnv1a(text: string): number {
  let hash = FNV_OFFSET;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, FNV_PRIME) >>> 0;
  }
  return hash;
}

function hashOneText(text: string, dimension: number): Float32Array {
  const counts = new Float64Array(dimension);
  const padded = `${text}`; // boundary marks so short texts still differ
  for (let i = 0; i + 3 <= padded.length; i++) {
    const hash = fnv1a(padded.slice(i, i + 3));
    const bucket = hash % dimension;
    const sign = (hash & 0x80000000) === 0 ? 1 : -1;
    counts[bucket] += sign;
  }
  let sumSquares = 0;
  for (let k = 0; k < dimension; k++) sumSquares += counts[k] * counts[k];
  const vector = new Float32Array(dimension);
  if (sumSquares === 0) return vector; // caller rejects zero vectors with context
  const inverseNorm = 1 / Math.sqrt(sumSquares);
  for (let k = 0; k < dimension; k++) vector[k] = counts[k] * inverseNorm;
  return vector;
}

export function featureHashEncoder(dimension: number): Encoder {
  if (!Number.isInteger(dimension) || dimension < 8) {
    throw new Error(`feature-hash dimension must be an integer >= 8, got ${dimension}`);
  }
  return {
    name: `feature-hash-${dimension}`,
    encode: async (texts) => texts.map((text) => hashOneText(text, dimension)),
  };
}

async function transformersEncoder(modelName: string): Promise<Encoder> {
  const specifier = "@xenova/transformers";
  let extractor: (texts: string[], opts: object) => Promise<{ data: Float32Array; dims: number[] }>;
  try {
    const transformers = await import(specifier);
    extractor = await transformers.pipeline("feature-extraction", modelName);
  } catch (cause) {
    throw new ModelLoadError(modelName, cause);
  }
  return {
    name: modelName,
    encode: async (texts) => {
      const out = await extractor(texts, { pooling: "mean", normalize: true });
      const [batch, dim] = out.dims;
      const vectors: Float32Array[] = [];
      for (let i = 0; i < batch; i++) {
        vectors.push(Float32Array.from(out.data.slice(i * dim, (i + 1) * dim)));
      }
      return vectors;
    },
  };
}

export async function loadEncoder(modelName: string): Promise<Encoder> {
  const hashed = /^feature-hash-(\d+)$/.exec(modelName);
  if (hashed) return featureHashEncoder(Number(hashed[1]));
  return transformersEncoder(modelName);
}
