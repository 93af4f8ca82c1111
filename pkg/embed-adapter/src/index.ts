export {
  MissingTextError,
  parseIdTextTable,
  resolvePairTexts,
  type ResolvedPair,
} from "./collection.js";
export {
  DEFAULT_INSTRUCTION,
  DEFAULT_MODEL,
  PAIR_TEMPLATE,
  embedPairs,
  pairText,
  type EmbedJob,
  type EmbedSummary,
} from "./embed.js";
export { ModelLoadError, featureHashEncoder, loadEncoder, type Encoder } from "./encoders.js";
export { QdvError, decodeQdv, encodeQdv, type QdvRecord } from "./qdv.js";
export { parseQrelsKeys, type QrelsKey } from "./qrels.js";
