/**
 * Sentence encoders behind one interface. The model identifier picks the
 * implementation:
 *
 *   "hash:<dim>"   deterministic offline encoder (token + bigram feature
 *                  hashing, L2-normalized); meant for tests and dry runs
 *   anything else  a sentence-transformer checkpoint loaded through
 *                  @huggingface/transformers (mean pooling, normalized)
 */

export interface SentenceEncoder {
  readonly modelId: string;
  readonly maxChars: number;
  encode(texts: string[]): Promise<Float32Array[]>;
}

/** FNV-1a 32-bit hash; stable across platforms. */
function fnv1a(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193);
  }
  return hash >>> 0;
}

export class HashEncoder implements SentenceEncoder {
  readonly modelId: string;
  readonly dim: number;
  readonly maxChars = 8192;

  constructor(dim: number) {
    if (!Number.isInteger(dim) || dim < 8) {
      throw new Error(`hash encoder dimension must be an integer >= 8, got ${dim}`);
    }
    this.dim = dim;
    this.modelId = `hash:${dim}`;
  }

  private addFeature(row: Float32Array, feature: string): void {
    const h = fnv1a(feature);
    const sign = (h & 1) === 0 ? 1 : -1;
    row[(h >>> 1) % this.dim] += sign;
  }

  async encode(texts: string[]): Promise<Float32Array[]> {
    return texts.map((text) => {
      const row = new Float32Array(this.dim);
      const tokens = text.toLowerCase().split(/[^\p{L}\p{N}']+/u).filter(Boolean);
      for (let k = 0; k < tokens.length; k++) {
        this.addFeature(row, tokens[k]);
        if (k + 1 < tokens.length) {
          this.addFeature(row, tokens[k] + " " + tokens[k + 1]);
        }
      }
      if (tokens.length === 0) {
        this.addFeature(row, "<empty>");
      }
      let norm = 0;
      for (const v of row) {
        norm += v * v;
      }
      norm = Math.sqrt(norm);
      if (norm > 0) {
        for (let k = 0; k < this.dim; k++) {
          row[k] /= norm;
        }
      } else {
        row[0] = 1;
      }
      return row;
    });
  }
}

class TransformersEncoder implements SentenceEncoder {
  readonly modelId: string;
  readonly maxChars = 4096;
  private extractor: any;

  private constructor(modelId: string, extractor: any) {
    this.modelId = modelId;
    this.extractor = extractor;
  }

  static async load(modelId: string): Promise<TransformersEncoder> {
    let mod: any;
    // computed specifier: the package is optional and may not be installed
    const packageName: string = "@huggingface/transformers";
    try {
      mod = await import(packageName);
    } catch {
      throw new Error(
        `model ${modelId} needs the optional @huggingface/transformers package; ` +
          `install it or use a "hash:<dim>" model id for offline runs`,
      );
    }
    const extractor = await mod.pipeline("feature-extraction", modelId);
    return new TransformersEncoder(modelId, extractor);
  }

  async encode(texts: string[]): Promise<Float32Array[]> {
    const output = await this.extractor(texts, { pooling: "mean", normalize: true });
    const [n, dim] = output.dims.slice(-2);
    const flat: Float32Array = output.data;
    const rows: Float32Array[] = [];
    for (let r = 0; r < n; r++) {
      rows.push(flat.slice(r * dim, (r + 1) * dim));
    }
    return rows;
  }
}

export async function resolveEncoder(modelId: string): Promise<SentenceEncoder> {
  const hashMatch = /^hash:(\d+)$/.exec(modelId);
  if (hashMatch) {
    return new HashEncoder(Number(hashMatch[1]));
  }
  return TransformersEncoder.load(modelId);
}
