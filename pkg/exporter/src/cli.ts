#!/usr/bin/env node
/**
 * export_embeddings --corpus <jsonl> --kind <situation|fulltext|verdict_input>
 *                   --model <id> --out <emb1> [--verdicts <tsv>]
 *                   [--batch-size <n>] [--prefix <p>]...
 *
 * The model id has no default on purpose: the experiment record must name
 * the checkpoint. Use "hash:<dim>" for the deterministic offline encoder.
 */

import { DEFAULT_PREFIXES } from "./corpus.js";
import { resolveEncoder } from "./encoder.js";
import { TextKind, runExport } from "./export.js";

const KINDS: TextKind[] = ["situation", "fulltext", "verdict_input"];

interface CliArgs {
  corpus: string;
  kind: TextKind;
  model: string;
  out: string;
  verdicts?: string;
  batchSize: number;
  prefixes: string[];
}

export function parseArgs(argv: string[]): CliArgs {
  const values: Record<string, string> = {};
  const prefixes: string[] = [];
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (!flag.startsWith("--") || value === undefined) {
      throw new Error(`expected --flag value pairs, got ${flag}`);
    }
    if (flag === "--prefix") {
      prefixes.push(value);
    } else {
      values[flag.slice(2)] = value;
    }
  }
  for (const required of ["corpus", "kind", "model", "out"]) {
    if (!(required in values)) {
      throw new Error(`missing required flag --${required}`);
    }
  }
  if (!KINDS.includes(values.kind as TextKind)) {
    throw new Error(`--kind must be one of ${KINDS.join("|")}, got ${values.kind}`);
  }
  const batchSize = values["batch-size"] ? Number(values["batch-size"]) : 32;
  return {
    corpus: values.corpus,
    kind: values.kind as TextKind,
    model: values.model,
    out: values.out,
    verdicts: values.verdicts,
    batchSize,
    prefixes: prefixes.length ? prefixes : [...DEFAULT_PREFIXES],
  };
}

export async function main(argv: string[]): Promise<number> {
  let args: CliArgs;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
  try {
    const encoder = await resolveEncoder(args.model);
    const result = await runExport({
      corpusPath: args.corpus,
      kind: args.kind,
      encoder,
      outPath: args.out,
      verdictsPath: args.verdicts,
      batchSize: args.batchSize,
      prefixes: args.prefixes,
    });
    console.error(
      `wrote ${result.count} x ${result.dim} vectors (${args.kind}, model ${args.model})` +
        (result.truncated ? `, ${result.truncated} truncated` : ""),
    );
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

const isDirectRun = process.argv[1] !== undefined && import.meta.url.endsWith(
  process.argv[1].split("/").pop() ?? "",
);
if (isDirectRun) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
