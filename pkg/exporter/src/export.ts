/**
 * Export job: pick the texts for one kind, encode them in batches, and
 * write the EMB1 file the analysis pipeline loads.
 *
 * Id spaces per kind: situation and fulltext rows are keyed by post id;
 * verdict_input rows are keyed by the mined verdict's comment id and encode
 * the classifier input text (situation + " " + scrubbed comment).
 */

import { readFileSync, writeFileSync } from "node:fs";

import { CorpusPost, DEFAULT_PREFIXES, VerdictRow, parseCorpusJsonl, parseVerdictTsv } from "./corpus.js";
import { encodeEmb1 } from "./emb1.js";
import { SentenceEncoder } from "./encoder.js";

export type TextKind = "situation" | "fulltext" | "verdict_input";

export interface ExportJob {
  corpusPath: string;
  kind: TextKind;
  encoder: SentenceEncoder;
  outPath: string;
  verdictsPath?: string;
  batchSize?: number;
  prefixes?: string[];
  log?: (message: string) => void;
}

export interface ExportResult {
  count: number;
  dim: number;
  truncated: number;
}

export function collectTexts(
  kind: TextKind,
  posts: CorpusPost[],
  verdicts: VerdictRow[] | undefined,
): Array<{ id: string; text: string }> {
  if (kind === "situation") {
    return posts.map((p) => ({ id: p.id, text: p.situation }));
  }
  if (kind === "fulltext") {
    return posts.map((p) => ({ id: p.id, text: p.body }));
  }
  if (!verdicts) {
    throw new Error("kind=verdict_input needs the mined-verdict table (--verdicts)");
  }
  const situationOf = new Map(posts.map((p) => [p.id, p.situation]));
  return verdicts.map((v) => {
    const situation = situationOf.get(v.postId);
    if (situation === undefined) {
      throw new Error(`verdict ${v.commentId} references unknown post ${v.postId}`);
    }
    return { id: v.commentId, text: `${situation} ${v.scrubbedText}`.trim() };
  });
}

export async function runExport(job: ExportJob): Promise<ExportResult> {
  const log = job.log ?? ((m: string) => console.error(m));
  const batchSize = job.batchSize ?? 32;
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    throw new Error(`batch size must be a positive integer, got ${batchSize}`);
  }
  const posts = parseCorpusJsonl(
    readFileSync(job.corpusPath, "utf-8"),
    job.prefixes ?? DEFAULT_PREFIXES,
    log,
  );
  const verdicts = job.verdictsPath
    ? parseVerdictTsv(readFileSync(job.verdictsPath, "utf-8"))
    : undefined;
  const items = collectTexts(job.kind, posts, verdicts);

  let truncated = 0;
  const texts = items.map(({ id, text }) => {
    if (text.length > job.encoder.maxChars) {
      truncated += 1;
      return text.slice(0, job.encoder.maxChars);
    }
    return text;
  });
  if (truncated > 0) {
    log(`${truncated} of ${texts.length} texts exceeded the encoder window and were truncated`);
  }

  const rows: Float32Array[] = [];
  for (let start = 0; start < texts.length; start += batchSize) {
    const batchIds = items.slice(start, start + batchSize).map((i) => i.id);
    let encoded: Float32Array[];
    try {
      encoded = await job.encoder.encode(texts.slice(start, start + batchSize));
    } catch (err) {
      throw new Error(
        `encoding failed for ids [${batchIds.join(", ")}]: ${(err as Error).message}`,
      );
    }
    if (encoded.length !== batchIds.length) {
      throw new Error(
        `encoder returned ${encoded.length} rows for ${batchIds.length} texts`,
      );
    }
    for (let k = 0; k < encoded.length; k++) {
      for (const value of encoded[k]) {
        if (!Number.isFinite(value)) {
          throw new Error(`encoder produced a non-finite value for id ${batchIds[k]}`);
        }
      }
    }
    rows.push(...encoded);
  }

  const buf = encodeEmb1(items.map((i) => i.id), rows);
  writeFileSync(job.outPath, buf);
  return { count: rows.length, dim: rows.length ? rows[0].length : 0, truncated };
}
