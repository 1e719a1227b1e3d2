/**
 * EMB1 binary vector file format (little-endian, no padding):
 *   magic "EMB1" (4 ASCII bytes), u32 count, u32 dim,
 *   then per row: u32 id byte-length, UTF-8 id bytes, dim x float32.
 */

const MAGIC = Buffer.from("EMB1", "ascii");

export interface EmbeddingFile {
  ids: string[];
  dim: number;
  rows: Float32Array[];
}

export function encodeEmb1(ids: string[], rows: Float32Array[]): Buffer {
  if (ids.length !== rows.length) {
    throw new Error(`id count ${ids.length} does not match row count ${rows.length}`);
  }
  if (new Set(ids).size !== ids.length) {
    throw new Error("ids must be unique");
  }
  const dim = rows.length > 0 ? rows[0].length : 0;
  if (rows.length > 0 && dim === 0) {
    throw new Error("dimension must be positive");
  }
  const parts: Buffer[] = [];
  const header = Buffer.alloc(12);
  MAGIC.copy(header, 0);
  header.writeUInt32LE(ids.length, 4);
  header.writeUInt32LE(dim, 8);
  parts.push(header);
  for (let r = 0; r < rows.length; r++) {
    const row = rows[r];
    if (row.length !== dim) {
      throw new Error(`row ${r} has dim ${row.length}, expected ${dim}`);
    }
    for (const value of row) {
      if (!Number.isFinite(value)) {
        throw new Error(`non-finite value in row for id ${ids[r]}`);
      }
    }
    const idBytes = Buffer.from(ids[r], "utf-8");
    const rowBuf = Buffer.alloc(4 + idBytes.length + 4 * dim);
    rowBuf.writeUInt32LE(idBytes.length, 0);
    idBytes.copy(rowBuf, 4);
    for (let k = 0; k < dim; k++) {
      rowBuf.writeFloatLE(row[k], 4 + idBytes.length + 4 * k);
    }
    parts.push(rowBuf);
  }
  return Buffer.concat(parts);
}

export function decodeEmb1(buf: Buffer): EmbeddingFile {
  let offset = 0;
  const take = (n: number, what: string): Buffer => {
    if (offset + n > buf.length) {
      throw new Error(`truncated file while reading ${what} (byte offset ${offset})`);
    }
    const out = buf.subarray(offset, offset + n);
    offset += n;
    return out;
  };
  if (!take(4, "magic").equals(MAGIC)) {
    throw new Error("bad magic (byte offset 0)");
  }
  const count = take(4, "count").readUInt32LE(0);
  const dim = take(4, "dim").readUInt32LE(0);
  const ids: string[] = [];
  const rows: Float32Array[] = [];
  for (let r = 0; r < count; r++) {
    const idLen = take(4, `id length of row ${r}`).readUInt32LE(0);
    ids.push(take(idLen, `id of row ${r}`).toString("utf-8"));
    const vecOffset = offset;
    const raw = take(4 * dim, `vector of row ${r}`);
    const row = new Float32Array(dim);
    for (let k = 0; k < dim; k++) {
      row[k] = raw.readFloatLE(4 * k);
      if (!Number.isFinite(row[k])) {
        throw new Error(`non-finite value in row ${r} (byte offset ${vecOffset})`);
      }
    }
    rows.push(row);
  }
  if (offset !== buf.length) {
    throw new Error(`trailing bytes after last row (byte offset ${offset})`);
  }
  return { ids, dim, rows };
}

/** Cosine similarity mapped to [0, 1]; used to validate written rows. */
export function normalizedCosine(u: Float32Array, v: Float32Array): number {
  if (u.length !== v.length) {
    throw new Error("vector size mismatch");
  }
  let dot = 0;
  let nu = 0;
  let nv = 0;
  for (let k = 0; k < u.length; k++) {
    dot += u[k] * v[k];
    nu += u[k] * u[k];
    nv += v[k] * v[k];
  }
  if (nu === 0 || nv === 0) {
    throw new Error("zero-norm vector has no cosine similarity");
  }
  const cos = dot / (Math.sqrt(nu) * Math.sqrt(nv));
  return Math.min(1, Math.max(0, (cos + 1) / 2));
}
