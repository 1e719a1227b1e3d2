/**
 * Readers for the two text interfaces the exporter consumes: the corpus
 * JSONL (one post per line) and the mined-verdict TSV produced by the
 * pipeline's ingest step.
 */

export interface CorpusComment {
  id: string;
  body: string;
}

export interface CorpusPost {
  id: string;
  title: string;
  situation: string;
  body: string;
  comments: CorpusComment[];
}

export interface VerdictRow {
  commentId: string;
  postId: string;
  verdict: "YTA" | "NTA";
  scrubbedText: string;
}

export const DEFAULT_PREFIXES = ["AITA for"];

/** Strip the leading verdict-question prefix until none remains. */
export function extractSituation(title: string, prefixes: string[] = DEFAULT_PREFIXES): string {
  let text = title.trim();
  let stripped = true;
  while (stripped) {
    stripped = false;
    for (const prefix of prefixes) {
      if (text.toLowerCase().startsWith(prefix.toLowerCase())) {
        text = text.slice(prefix.length).trim();
        stripped = true;
      }
    }
  }
  return text;
}

export function parseCorpusJsonl(
  content: string,
  prefixes: string[] = DEFAULT_PREFIXES,
  warn: (message: string) => void = (m) => console.error(m),
): CorpusPost[] {
  const posts: CorpusPost[] = [];
  const seen = new Set<string>();
  const lines = content.split("\n");
  for (let lineNo = 1; lineNo <= lines.length; lineNo++) {
    const line = lines[lineNo - 1];
    if (!line.trim()) {
      continue;
    }
    let raw: unknown;
    try {
      raw = JSON.parse(line);
    } catch {
      warn(`line ${lineNo}: invalid JSON, skipped`);
      continue;
    }
    const post = postFromRecord(raw, prefixes);
    if (typeof post === "string") {
      warn(`line ${lineNo}: ${post}, skipped`);
      continue;
    }
    if (seen.has(post.id)) {
      throw new Error(`duplicate post id ${post.id} at line ${lineNo}`);
    }
    seen.add(post.id);
    posts.push(post);
  }
  return posts;
}

function postFromRecord(raw: unknown, prefixes: string[]): CorpusPost | string {
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    return "record is not an object";
  }
  const rec = raw as Record<string, unknown>;
  if (typeof rec.id !== "string" || rec.id.length === 0) {
    return "post id must be a non-empty string";
  }
  if (typeof rec.title !== "string" || typeof rec.body !== "string") {
    return "title and body must be strings";
  }
  if (!Array.isArray(rec.comments)) {
    return "comments must be an array";
  }
  const comments: CorpusComment[] = [];
  const commentIds = new Set<string>();
  for (const entry of rec.comments) {
    const c = entry as Record<string, unknown>;
    if (typeof c?.id !== "string" || typeof c?.body !== "string") {
      return "every comment needs string id and body";
    }
    if (commentIds.has(c.id)) {
      return `duplicate comment id ${c.id}`;
    }
    commentIds.add(c.id);
    comments.push({ id: c.id, body: c.body });
  }
  return {
    id: rec.id,
    title: rec.title,
    situation: extractSituation(rec.title, prefixes),
    body: rec.body,
    comments,
  };
}

const VERDICT_HEADER = "comment_id\tpost_id\tverdict\tscrubbed_text";

export function parseVerdictTsv(content: string): VerdictRow[] {
  const lines = content
    .split("\n")
    .map((l) => l.replace(/\r$/, ""))
    .filter((l) => l.trim().length > 0 && !l.startsWith("#"));
  if (lines.length === 0 || lines[0] !== VERDICT_HEADER) {
    throw new Error("verdict table must start with its four-column header");
  }
  const rows: VerdictRow[] = [];
  for (const line of lines.slice(1)) {
    const parts = line.split("\t");
    if (parts.length !== 4) {
      throw new Error(`verdict row has ${parts.length} columns, expected 4`);
    }
    const [commentId, postId, verdict, scrubbedText] = parts;
    if (verdict !== "YTA" && verdict !== "NTA") {
      throw new Error(`unknown verdict ${verdict}`);
    }
    rows.push({ commentId, postId, verdict, scrubbedText });
  }
  return rows;
}
