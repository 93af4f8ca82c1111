#!/usr/bin/env node
/**
 * embed-adapter CLI: resolve qrels pairs to texts, embed them, and write
 * QDV1 + sidecar for the analysis pipeline.
 *
 *   embed-adapter embed --qrels pairs.qrels --queries queries.tsv \
 *     --collection collection.tsv --out pairs.qdv [--instruction S] \
 *     [--model feature-hash-256] [--batch 32]
 */

import { readFile } from "node:fs/promises";
import { parseArgs } from "node:util";

import { MissingTextError, parseIdTextTable, resolvePairTexts } from "./collection.js";
import { DEFAULT_INSTRUCTION, DEFAULT_MODEL, embedPairs } from "./embed.js";
import { ModelLoadError } from "./encoders.js";
import { parseQrelsKeys } from "./qrels.js";

const USAGE =
  "usage: embed-adapter embed --qrels P --queries P --collection P --out P" +
  " [--instruction S] [--model S] [--batch N]";

export async function main(argv: string[]): Promise<number> {
  if (argv[0] !== "embed") {
    console.error(USAGE);
    return 2;
  }
  let values;
  try {
    ({ values } = parseArgs({
      args: argv.slice(1),
      options: {
        qrels: { type: "string" },
        queries: { type: "string" },
        collection: { type: "string" },
        instruction: { type: "string", default: DEFAULT_INSTRUCTION },
        model: { type: "string", default: DEFAULT_MODEL },
        batch: { type: "string", default: "32" },
        out: { type: "string" },
      },
    }));
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    console.error(USAGE);
    return 2;
  }
  const missing = ["qrels", "queries", "collection", "out"].filter(
    (name) => values[name as "qrels"] === undefined,
  );
  if (missing.length > 0) {
    console.error(`missing required option(s): ${missing.map((m) => `--${m}`).join(", ")}`);
    console.error(USAGE);
    return 2;
  }
  const batchSize = Number(values.batch);
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    console.error(`--batch must be a positive integer, got ${values.batch}`);
    return 2;
  }

  try {
    const keys = parseQrelsKeys(await readFile(values.qrels!, "utf8"));
    if (keys.length === 0) {
      console.log("qrels has no pairs; nothing to write");
      return 0;
    }
    const queries = parseIdTextTable(await readFile(values.queries!, "utf8"));
    const collection = parseIdTextTable(await readFile(values.collection!, "utf8"));
    const pairs = resolvePairTexts(keys, queries, collection);
    const summary = await embedPairs({
      pairs,
      instruction: values.instruction!,
      modelName: values.model!,
      batchSize,
      outputPath: values.out!,
    });
    console.log(`embedded ${summary.count} pairs at dimension ${summary.dimension}`);
    console.log(`wrote ${summary.outputPath} (sha256 ${summary.sha256.slice(0, 12)}…)`);
    console.log(`wrote ${summary.sidecarPath}`);
    return 0;
  } catch (err) {
    if (err instanceof MissingTextError || err instanceof ModelLoadError) {
      console.error(err.message);
    } else {
      console.error(String(err instanceof Error ? err.message : err));
    }
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
