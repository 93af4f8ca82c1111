/**
 * Text resolution: map the (queryId, docId) keys of a qrels file to
 * (query text, passage text) using MS MARCO style TSV lookups
 * (`id<TAB>text` per line, as in queries.tsv / collection.tsv).
 */

import type { QrelsKey } from "./qrels.js";

export interface ResolvedPair {
  queryId: string;
  queryText: string;
  docId: string;
  docText: string;
}

export class MissingTextError extends Error {
  constructor(
    readonly missingQueryIds: string[],
    readonly missingDocIds: string[],
  ) {
    const parts: string[] = [];
    if (missingQueryIds.length > 0) {
      parts.push(`${missingQueryIds.length} query ids: ${missingQueryIds.join(", ")}`);
    }
    if (missingDocIds.length > 0) {
      parts.push(`${missingDocIds.length} doc ids: ${missingDocIds.join(", ")}`);
    }
    super(`unresolved ids: ${parts.join("; ")}`);
  }
}

/** Parse an `id<TAB>text` table; later lines win on duplicate ids. */
export function parseIdTextTable(text: string): Map<string, string> {
  const table = new Map<string, string>();
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i];
    if (line.trim() === "") continue;
    const tab = line.indexOf("\t");
    if (tab <= 0) {
      throw new Error(`line ${i + 1}: expected id<TAB>text`);
    }
    const body = line.slice(tab + 1).replace(/\r$/, "");
    if (body.trim() === "") {
      throw new Error(`line ${i + 1}: empty text for id ${JSON.stringify(line.slice(0, tab))}`);
    }
    table.set(line.slice(0, tab), body);
  }
  return table;
}

/**
 * Resolve every qrels key to its texts, in key order. Fails with the full
 * list of unresolved ids rather than the first one, so a bad collection
 * dump surfaces in a single round trip.
 */
export function resolvePairTexts(
  keys: QrelsKey[],
  queries: Map<string, string>,
  collection: Map<string, string>,
): ResolvedPair[] {
  const missingQueries = new Set<string>();
  const missingDocs = new Set<string>();
  const pairs: ResolvedPair[] = [];
  for (const key of keys) {
    const queryText = queries.get(key.queryId);
    const docText = collection.get(key.docId);
    if (queryText === undefined) missingQueries.add(key.queryId);
    if (docText === undefined) missingDocs.add(key.docId);
    if (queryText !== undefined && docText !== undefined) {
      pairs.push({ queryId: key.queryId, queryText, docId: key.docId, docText });
    }
  }
  if (missingQueries.size > 0 || missingDocs.size > 0) {
    throw new MissingTextError([...missingQueries].sort(), [...missingDocs].sort());
  }
  return pairs;
}
