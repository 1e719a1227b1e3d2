"""conflictctl: configuration-driven driver for the analysis pipeline.

Every subcommand reads one config file (plus ``--set section.key=value``
overrides), writes its artifacts under ``<output_dir>/<subcommand>/`` and
records a manifest of input and output hashes. Reruns with unchanged inputs
and seeds produce byte-identical files.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .annotation import (
    agreement_report,
    consolidate,
    label_distribution,
    read_annotations_csv,
    read_gold_tsv,
    write_agreement_tsv,
    write_distribution_tsv,
    write_gold_tsv,
)
from .classifier import (
    build_examples,
    load_probe,
    save_probe,
    train_probe,
)
from .cluster import (
    drop_small_clusters,
    read_partition_tsv,
    stability_sweep,
    write_partition_tsv,
    write_sweep_tsv,
)
from .config import ConfigError, PipelineConfig, load_config
from .corpus import (
    corpus_stats,
    format_stats,
    mine_verdicts,
    parse_corpus,
    read_verdict_table,
    write_verdict_table,
)
from .embeddings import load_embeddings, pairwise_similarity
from .metrics import evaluate, write_metrics_markdown, write_metrics_tsv
from .model_selection import read_split_tsv, stratified_split, write_split_tsv
from .stats import fisher_exact, permutation_test, verdict_ratio_difference
from .annotation import ASPECTS, MERGED_LABELS

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2

KINDS = ("situation", "fulltext")


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _require_paths(paths: dict[str, Path]) -> None:
    missing = {name: str(p) for name, p in paths.items() if not p.exists()}
    if missing:
        raise CliError(
            "missing-input",
            "; ".join(f"{name} not found at {p}" for name, p in sorted(missing.items())),
        )


class Workspace:
    """Output directory for one subcommand run, with manifest bookkeeping."""

    def __init__(self, config: PipelineConfig, subcommand: str):
        self.config = config
        self.config_hash = config.hash()
        self.dir = config.output_dir / subcommand
        self.dir.mkdir(parents=True, exist_ok=True)
        self.inputs: dict[str, Path] = {}
        self.outputs: list[Path] = []

    def track_inputs(self, paths: dict[str, Path]) -> None:
        _require_paths(paths)
        self.inputs.update(paths)

    def write_text(self, name: str, body: str, stamp: bool = True) -> Path:
        path = self.dir / name
        header = f"# config_hash={self.config_hash}\n" if stamp else ""
        path.write_text(header + body, encoding="utf-8")
        self.outputs.append(path)
        return path

    def write_bytes(self, name: str, body: bytes) -> Path:
        path = self.dir / name
        path.write_bytes(body)
        self.outputs.append(path)
        return path

    def finalize(self) -> None:
        manifest = {
            "config_hash": self.config_hash,
            "inputs": {name: _sha256(p) for name, p in sorted(self.inputs.items())},
            "outputs": {p.name: _sha256(p) for p in sorted(self.outputs)},
        }
        path = self.dir / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _render(writer, *args) -> str:
    buf = io.StringIO()
    writer(*args, buf)
    return buf.getvalue()


def cmd_ingest(config: PipelineConfig) -> int:
    ws = Workspace(config, "ingest")
    corpus_path = config.path("corpus")
    ws.track_inputs({"corpus": corpus_path})
    lexicon = config.lexicon()
    with open(corpus_path, encoding="utf-8") as fh:
        posts = parse_corpus(fh, prefix=config.situation_prefixes())
    stats = corpus_stats(posts, lexicon)
    verdicts = mine_verdicts(posts, lexicon)
    ws.write_text("stats.txt", format_stats(stats))
    ws.write_text("verdicts.tsv", _render(write_verdict_table, verdicts))
    ws.finalize()
    print(format_stats(stats), end="")
    return EXIT_OK


def cmd_cluster(config: PipelineConfig) -> int:
    ws = Workspace(config, "cluster")
    inputs = {}
    for kind in KINDS:
        inputs[f"{kind}_embeddings"] = config.path(f"{kind}_embeddings")
    ws.track_inputs(inputs)
    min_size = config.get_int("cluster", "min_cluster_size")
    resolution = config.get_float("cluster", "resolution")
    seed = config.get_int("seeds", "louvain")
    for kind in KINDS:
        with open(inputs[f"{kind}_embeddings"], "rb") as fh:
            emb = load_embeddings(fh)
        sim = pairwise_similarity(emb)
        report = stability_sweep(
            sim, cutoffs=config.cutoffs(), seed=seed, resolution=resolution
        )
        chosen = config.get_optional_float("cluster", f"chosen_cutoff_{kind}")
        if chosen is None:
            chosen = report.chosen_cutoff
        if chosen not in report.partitions:
            raise CliError(
                "bad-cutoff", f"chosen cutoff {chosen:g} for {kind} is not in the sweep"
            )
        partition, removed = drop_small_clusters(report.partitions[chosen], min_size)
        ws.write_text(f"{kind}_sweep.tsv", _render(write_sweep_tsv, report))
        body = _render(write_partition_tsv, partition)
        body += f"# cutoff={chosen:g}\n"
        if removed:
            body += f"# unclustered={','.join(removed)}\n"
        ws.write_text(f"{kind}_partition.tsv", body)
        print(
            f"{kind}: chosen cutoff {chosen:g}, {partition.n_communities} clusters, "
            f"{len(removed)} unclustered"
        )
    ws.finalize()
    return EXIT_OK


def cmd_agree(config: PipelineConfig) -> int:
    ws = Workspace(config, "agree")
    annotations_path = config.path("annotations")
    ws.track_inputs({"annotations": annotations_path})
    with open(annotations_path, encoding="utf-8", newline="") as fh:
        records = read_annotations_csv(fh)
    report = agreement_report(records)
    gold = consolidate(records)
    dist = label_distribution(gold.values())
    ws.write_text("agreement.tsv", _render(write_agreement_tsv, report))
    ws.write_text("distribution.tsv", _render(write_distribution_tsv, dist))
    ws.write_text("gold.tsv", _render(write_gold_tsv, gold))
    ws.finalize()
    print(f"agreement over {report.n_posts} doubly annotated posts; {len(gold)} gold posts")
    return EXIT_OK


def cmd_split(config: PipelineConfig) -> int:
    ws = Workspace(config, "split")
    corpus_path = config.path("corpus")
    inputs = {"corpus": corpus_path}
    for kind in KINDS:
        inputs[f"{kind}_partition"] = config.output_dir / "cluster" / f"{kind}_partition.tsv"
    ws.track_inputs(inputs)
    with open(corpus_path, encoding="utf-8") as fh:
        posts = parse_corpus(fh, prefix=config.situation_prefixes())
    post_ids = [p.id for p in posts]
    seed = config.get_int("seeds", "split")
    for kind in KINDS:
        with open(inputs[f"{kind}_partition"], encoding="utf-8") as fh:
            partition = read_partition_tsv(fh)
        spec = stratified_split(
            post_ids,
            partition.assignment,
            ratios=config.split_ratios(),
            seed=seed,
            stratify_by=kind,
        )
        ws.write_text(f"split_{kind}.tsv", _render(write_split_tsv, spec))
        print(
            f"{kind}: train {len(spec.train)}, val {len(spec.val)}, test {len(spec.test)}"
        )
    ws.finalize()
    return EXIT_OK


def _load_examples(config: PipelineConfig):
    corpus_path = config.path("corpus")
    verdicts_path = config.output_dir / "ingest" / "verdicts.tsv"
    emb_path = config.path("verdict_embeddings")
    inputs = {
        "corpus": corpus_path,
        "verdicts": verdicts_path,
        "verdict_embeddings": emb_path,
    }
    _require_paths(inputs)
    with open(corpus_path, encoding="utf-8") as fh:
        posts = parse_corpus(fh, prefix=config.situation_prefixes())
    with open(verdicts_path, encoding="utf-8") as fh:
        verdicts = read_verdict_table(fh)
    with open(emb_path, "rb") as fh:
        embeddings = load_embeddings(fh)
    examples = build_examples(posts, verdicts, embeddings, config.lexicon())
    return inputs, examples


def _split_examples(examples, spec):
    by_name = {"train": [], "val": [], "test": []}
    for example in examples:
        by_name[spec.split_of(example.post_id)].append(example)
    return by_name


def cmd_train(config: PipelineConfig) -> int:
    ws = Workspace(config, "train")
    kind = config.get("train", "stratify_by")
    if kind not in KINDS:
        raise CliError("bad-config", f"train.stratify_by must be one of {KINDS}")
    inputs, examples = _load_examples(config)
    split_path = config.output_dir / "split" / f"split_{kind}.tsv"
    inputs["split"] = split_path
    ws.track_inputs(inputs)
    with open(split_path, encoding="utf-8") as fh:
        spec = read_split_tsv(fh)
    parts = _split_examples(examples, spec)
    if not parts["train"]:
        raise CliError("empty-split", "no training examples after splitting")
    model, history = train_probe(parts["train"], parts["val"], config.train_config())
    buf = io.BytesIO()
    save_probe(model, buf)
    ws.write_bytes(f"model_{kind}.prb1", buf.getvalue())
    lines = ["epoch\ttrain_loss\tval_macro_f1\n"]
    for entry in history:
        val = entry.get("val_macro_f1")
        lines.append(
            f"{entry['epoch']}\t{entry['train_loss']:.8f}\t"
            f"{'-' if val is None else f'{val:.6f}'}\n"
        )
    ws.write_text(f"history_{kind}.tsv", "".join(lines))
    ws.finalize()
    print(
        f"trained on {len(parts['train'])} examples ({kind} split), "
        f"validated on {len(parts['val'])}"
    )
    return EXIT_OK


def _test_predictions(config: PipelineConfig, kind: str):
    inputs, examples = _load_examples(config)
    split_path = config.output_dir / "split" / f"split_{kind}.tsv"
    model_path = config.output_dir / "train" / f"model_{kind}.prb1"
    inputs["split"] = split_path
    inputs["model"] = model_path
    _require_paths(inputs)
    with open(split_path, encoding="utf-8") as fh:
        spec = read_split_tsv(fh)
    with open(model_path, "rb") as fh:
        model = load_probe(fh)
    test_examples = _split_examples(examples, spec)["test"]
    if not test_examples:
        raise CliError("empty-split", "no test examples after splitting")
    X = np.stack([e.embedding for e in test_examples]).astype(np.float64)
    golds = np.array([e.label for e in test_examples], dtype=np.int64)
    preds = model.predict(X)
    return inputs, test_examples, golds, preds


def cmd_evaluate(config: PipelineConfig) -> int:
    ws = Workspace(config, "evaluate")
    kind = config.get("train", "stratify_by")
    if kind not in KINDS:
        raise CliError("bad-config", f"train.stratify_by must be one of {KINDS}")
    inputs, test_examples, golds, preds = _test_predictions(config, kind)
    partition_path = config.output_dir / "cluster" / f"{kind}_partition.tsv"
    inputs["partition"] = partition_path
    ws.track_inputs(inputs)
    with open(partition_path, encoding="utf-8") as fh:
        assignment = read_partition_tsv(fh).assignment
    groups = [
        f"cluster_{assignment[e.post_id]}" if e.post_id in assignment else "unclustered"
        for e in test_examples
    ]
    post_ids = [e.post_id for e in test_examples]
    reports = evaluate(golds, preds, groups=groups, post_ids=post_ids)
    body = f"# split={kind}\n" + _render(write_metrics_tsv, reports)
    ws.write_text("metrics.tsv", body)
    ws.write_text("metrics.md", _render(write_metrics_markdown, reports), stamp=False)
    ws.finalize()
    for r in reports:
        print(f"{r.group}: acc {100 * r.accuracy:.1f}%, macro F1 {100 * r.macro_f1:.1f}%")
    return EXIT_OK


def _aspect_markdown(columns: list[dict]) -> str:
    """Aspect-dyad table: one column per merged value, significance row on top."""
    headers = ["Metric"] + [f"{c['aspect']} {c['value']}" for c in columns]
    rows = [
        ["p (dyad)"] + [c["p"] for c in columns],
        ["Acc%"] + [c["acc"] for c in columns],
        ["Micro F1%"] + [c["micro"] for c in columns],
        ["Macro F1%"] + [c["macro"] for c in columns],
    ]
    widths = [
        max([len(headers[k])] + [len(r[k]) for r in rows]) for k in range(len(headers))
    ]
    def line(cells: list[str]) -> str:
        return "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |\n"
    out = line(headers)
    out += "|" + "|".join("-" * (w + 2) for w in widths) + "|\n"
    for r in rows:
        out += line(r)
    return out


def cmd_analyze(config: PipelineConfig) -> int:
    ws = Workspace(config, "analyze")
    kind = config.get("train", "stratify_by")
    inputs, test_examples, golds, preds = _test_predictions(config, kind)
    gold_path = config.output_dir / "agree" / "gold.tsv"
    inputs["gold_labels"] = gold_path
    ws.track_inputs(inputs)
    with open(gold_path, encoding="utf-8") as fh:
        gold_labels = read_gold_tsv(fh)

    resamples = config.get_int("stats", "permutation_resamples")
    seed = config.get_int("seeds", "permutation")
    correct = (golds == preds).astype(np.int64)

    metric_lines = ["aspect\tvalue\tn\tacc_pct\tmicro_f1_pct\tmacro_f1_pct\n"]
    sig_lines = ["aspect\tvalue_low\tvalue_high\tpermutation_p\tfisher_p\tyta_nta_ratio_diff_pct\n"]
    md_columns: list[dict] = []
    for aspect in ASPECTS:
        value_rows: dict[str, list[int]] = {v: [] for v in MERGED_LABELS[aspect]}
        for idx, example in enumerate(test_examples):
            labels = gold_labels.get(example.post_id)
            if labels is None:
                continue
            value = labels.get(aspect)
            if value is None:
                continue
            value_rows[value].append(idx)
        v1, v2 = MERGED_LABELS[aspect]
        if not value_rows[v1] or not value_rows[v2]:
            sig_lines.append(f"{aspect.value}\t{v1}\t{v2}\t-\t-\t-\n")
            for value in (v1, v2):
                md_columns.append(
                    {"aspect": aspect.value, "value": value, "p": "-",
                     "acc": "-", "micro": "-", "macro": "-"}
                )
            continue
        per_value = {}
        for value in (v1, v2):
            rows = np.array(value_rows[value])
            report = evaluate(golds[rows], preds[rows])[0]
            per_value[value] = report
            metric_lines.append(
                f"{aspect.value}\t{value}\t{report.n}\t{100 * report.accuracy:.1f}"
                f"\t{100 * report.micro_f1:.1f}\t{100 * report.macro_f1:.1f}\n"
            )
        # one-sided test that the observed-better side really is easier
        better, worse = sorted(
            (v1, v2), key=lambda v: per_value[v].accuracy, reverse=True
        )
        p_perm = permutation_test(
            correct[value_rows[better]],
            correct[value_rows[worse]],
            resamples=resamples,
            seed=seed,
        )
        counts = {
            value: (
                int(golds[value_rows[value]].sum()),
                int(len(value_rows[value]) - golds[value_rows[value]].sum()),
            )
            for value in (v1, v2)
        }
        table = [
            [counts[v1][1], counts[v2][1]],
            [counts[v1][0], counts[v2][0]],
        ]
        try:
            p_fisher = fisher_exact(table)
        except ValueError:
            p_fisher = float("nan")
        ratio = verdict_ratio_difference(counts[v1], counts[v2])
        sig_lines.append(
            f"{aspect.value}\t{worse}\t{better}\t{p_perm:.6g}"
            f"\t{p_fisher:.6g}\t{'-' if ratio is None else f'{ratio:.1f}'}\n"
        )
        for value in (v1, v2):
            report = per_value[value]
            md_columns.append(
                {
                    "aspect": aspect.value,
                    "value": value,
                    "p": f"{p_perm:.3g}",
                    "acc": f"{100 * report.accuracy:.1f}",
                    "micro": f"{100 * report.micro_f1:.1f}",
                    "macro": f"{100 * report.macro_f1:.1f}",
                }
            )
    ws.write_text("aspect_metrics.tsv", "".join(metric_lines))
    ws.write_text("significance.tsv", "".join(sig_lines))
    ws.write_text("aspect_metrics.md", _aspect_markdown(md_columns), stamp=False)
    ws.finalize()
    print("".join(sig_lines), end="")
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "cluster": cmd_cluster,
    "agree": cmd_agree,
    "split": cmd_split,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "analyze": cmd_analyze,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conflictctl",
        description="Run the conflict-perception analysis pipeline.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the INI config file")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="SECTION.KEY=VALUE",
            help="override one config value (repeatable; flags win over the file)",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, args.overrides)
        return COMMANDS[args.subcommand](config)
    except (CliError, ConfigError, ValueError, OSError) as exc:
        code = exc.code if isinstance(exc, CliError) else "invalid-input"
        print(json.dumps({"error": code, "message": str(exc)}), file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
