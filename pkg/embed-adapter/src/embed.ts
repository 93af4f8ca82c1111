/**
 * Turn resolved (query, document) pairs into a QDV1 file plus a JSON
 * sidecar recording how the vectors were produced.
 */

import { createHash } from "node:crypto";
import { writeFile } from "node:fs/promises";

import type { ResolvedPair } from "./collection.js";
import { loadEncoder } from "./encoders.js";
import { encodeQdv, type QdvRecord } from "./qdv.js";

export const DEFAULT_INSTRUCTION =
  "Judge the document's relevance to the query for ad-hoc retrieval";

/** Recorded verbatim in the sidecar; substituted by pairText below. */
export const PAIR_TEMPLATE = "Query: {query_text} Document: {doc_text}";

export const DEFAULT_MODEL = "feature-hash-256";

export interface EmbedJob {
  pairs: ResolvedPair[];
  instruction: string;
  modelName: string;
  batchSize: number;
  outputPath: string;
}

export interface EmbedSummary {
  dimension: number;
  count: number;
  outputPath: string;
  sidecarPath: string;
  sha256: string;
}

export function pairText(pair: ResolvedPair): string {
  return `Query: ${pair.queryText} Document: ${pair.docText}`;
}

function encoderInput(instruction: string, pair: ResolvedPair): string {
  return instruction === "" ? pairText(pair) : `${instruction} ${pairText(pair)}`;
}

function normalized(vector: Float32Array, pair: ResolvedPair): Float32Array {
  let sumSquares = 0;
  for (const component of vector) sumSquares += component * component;
  if (sumSquares === 0) {
    throw new Error(`zero-norm vector for (${pair.queryId}, ${pair.docId})`);
  }
  const inverseNorm = 1 / Math.sqrt(sumSquares);
  const out = new Float32Array(vector.length);
  for (let k = 0; k < vector.length; k++) out[k] = vector[k] * inverseNorm;
  return out;
}

function validateJob(job: EmbedJob): void {
  if (job.pairs.length === 0) {
    throw new Error("job has no pairs; refusing to write an empty embedding file");
  }
  if (!Number.isInteger(job.batchSize) || job.batchSize < 1) {
    throw new Error(`batch size must be a positive integer, got ${job.batchSize}`);
  }
  for (const pair of job.pairs) {
    if (pair.queryText.trim() === "" || pair.docText.trim() === "") {
      throw new Error(`empty text for (${pair.queryId}, ${pair.docId})`);
    }
  }
}

/**
 * Encode every pair and write the QDV1 file and its `<out>.meta.json`
 * sidecar. Vectors are L2-normalized here, whatever the backend did, so
 * downstream euclidean-on-normalized distances are cosine-equivalent.
 */
export async function embedPairs(job: EmbedJob): Promise<EmbedSummary> {
  validateJob(job);
  const encoder = await loadEncoder(job.modelName);

  const vectors: Float32Array[] = [];
  for (let start = 0; start < job.pairs.length; start += job.batchSize) {
    const batch = job.pairs.slice(start, start + job.batchSize);
    const encoded = await encoder.encode(batch.map((pair) => encoderInput(job.instruction, pair)));
    if (encoded.length !== batch.length) {
      throw new Error(`encoder returned ${encoded.length} vectors for ${batch.length} texts`);
    }
    vectors.push(...encoded);
  }

  const dimension = vectors[0].length;
  const records: QdvRecord[] = job.pairs.map((pair, i) => {
    if (vectors[i].length !== dimension) {
      throw new Error(
        `encoder changed dimension mid-job: ${vectors[i].length} vs ${dimension} at (${pair.queryId}, ${pair.docId})`,
      );
    }
    return { queryId: pair.queryId, docId: pair.docId, vector: normalized(vectors[i], pair) };
  });

  const payload = encodeQdv(dimension, records);
  const sha256 = createHash("sha256").update(payload).digest("hex");
  const sidecarPath = `${job.outputPath}.meta.json`;
  const sidecar = {
    format: "QDV1",
    model: encoder.name,
    dimension,
    count: records.length,
    instruction: job.instruction,
    pair_template: PAIR_TEMPLATE,
    sha256,
  };
  await writeFile(job.outputPath, payload);
  await writeFile(sidecarPath, `${JSON.stringify(sidecar, null, 2)}\n`);
  return { dimension, count: records.length, outputPath: job.outputPath, sidecarPath, sha256 };
}
