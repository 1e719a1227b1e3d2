"""Six-aspect conflict annotations: label merging, agreement, gold labels.

Raw labels come from a CSV export with the header
    post_id,annotator_id,disagreement,emotion,interference,duration,manifestation,num_people,attn1,attn2
where the six aspect columns carry the canonical label spellings below and
the attention-check columns are "pass" or "fail". Records failing either
attention check never influence any downstream statistic.
"""

from __future__ import annotations

import csv
import logging
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .metrics import matthews_correlation

logger = logging.getLogger(__name__)


class Aspect(str, Enum):
    DISAGREEMENT = "disagreement"
    EMOTION = "emotion"
    INTERFERENCE = "interference"
    DURATION = "duration"
    MANIFESTATION = "manifestation"
    NUM_PEOPLE = "num_people"


ASPECTS: tuple[Aspect, ...] = tuple(Aspect)

RAW_LABELS: dict[Aspect, tuple[str, ...]] = {
    Aspect.DISAGREEMENT: ("Mild", "Strong", "Intense"),
    Aspect.EMOTION: ("Mild", "Strong", "Intense"),
    Aspect.INTERFERENCE: ("None", "Somewhat", "Strongly"),
    Aspect.DURATION: ("Once", "Longer"),
    Aspect.MANIFESTATION: ("Manifest", "Perceived"),
    Aspect.NUM_PEOPLE: ("One", "Multiple"),
}

# binary label domains after merging; index 1 is the "positive" side used
# when binarizing for MCC
MERGED_LABELS: dict[Aspect, tuple[str, str]] = {
    Aspect.DISAGREEMENT: ("Mild", "Strong"),
    Aspect.EMOTION: ("Mild", "Strong"),
    Aspect.INTERFERENCE: ("Mild", "Strong"),
    Aspect.DURATION: ("Once", "Longer"),
    Aspect.MANIFESTATION: ("Manifest", "Perceived"),
    Aspect.NUM_PEOPLE: ("One", "Multiple"),
}

_MERGE_MAP: dict[Aspect, dict[str, str]] = {
    Aspect.DISAGREEMENT: {"Mild": "Mild", "Strong": "Strong", "Intense": "Strong"},
    Aspect.EMOTION: {"Mild": "Mild", "Strong": "Strong", "Intense": "Strong"},
    Aspect.INTERFERENCE: {
        "None": "Mild",
        "Somewhat": "Mild",
        "Strongly": "Strong",
        "Mild": "Mild",
        "Strong": "Strong",
    },
}


def merge_label(aspect: Aspect, raw: str) -> str:
    """Collapse a raw label to its binary form; idempotent on merged labels."""
    mapping = _MERGE_MAP.get(aspect)
    if mapping is not None:
        if raw not in mapping:
            raise ValueError(f"illegal label {raw!r} for aspect {aspect.value}")
        return mapping[raw]
    if raw not in RAW_LABELS[aspect]:
        raise ValueError(f"illegal label {raw!r} for aspect {aspect.value}")
    return raw


@dataclass(frozen=True)
class AnnotationRecord:
    post_id: str
    annotator_id: str
    labels: Mapping[Aspect, str]
    attention_check_1_pass: bool
    attention_check_2_pass: bool

    def __post_init__(self):
        missing = [a.value for a in ASPECTS if a not in self.labels]
        if missing:
            raise ValueError(f"record is missing aspects: {missing}")
        for aspect in ASPECTS:
            label = self.labels[aspect]
            if label not in RAW_LABELS[aspect]:
                raise ValueError(
                    f"illegal label {label!r} for aspect {aspect.value}"
                )
        object.__setattr__(self, "labels", dict(self.labels))

    @property
    def passed_attention_checks(self) -> bool:
        return self.attention_check_1_pass and self.attention_check_2_pass

    def merged(self) -> dict[Aspect, str]:
        return {a: merge_label(a, self.labels[a]) for a in ASPECTS}


CSV_HEADER = [
    "post_id", "annotator_id",
    "disagreement", "emotion", "interference", "duration", "manifestation",
    "num_people", "attn1", "attn2",
]


def read_annotations_csv(stream: IO[str]) -> list[AnnotationRecord]:
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("annotations CSV is empty") from None
    if header != CSV_HEADER:
        raise ValueError(f"unexpected header {header}, expected {CSV_HEADER}")
    records = []
    for row_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise ValueError(f"row {row_no} has {len(row)} fields")
        attn = []
        for value in row[8:10]:
            if value not in ("pass", "fail"):
                raise ValueError(f"row {row_no}: attention field must be pass|fail")
            attn.append(value == "pass")
        try:
            records.append(
                AnnotationRecord(
                    post_id=row[0],
                    annotator_id=row[1],
                    labels={a: row[2 + k] for k, a in enumerate(ASPECTS)},
                    attention_check_1_pass=attn[0],
                    attention_check_2_pass=attn[1],
                )
            )
        except ValueError as exc:
            raise ValueError(f"row {row_no}: {exc}") from None
    return records


def write_annotations_csv(records: Iterable[AnnotationRecord], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow(
            [r.post_id, r.annotator_id]
            + [r.labels[a] for a in ASPECTS]
            + ["pass" if r.attention_check_1_pass else "fail",
               "pass" if r.attention_check_2_pass else "fail"]
        )


def _valid_records(records: Iterable[AnnotationRecord]) -> list[AnnotationRecord]:
    return [r for r in records if r.passed_attention_checks]


def _binarize_merged(aspect: Aspect, labels: Sequence[str]) -> np.ndarray:
    positive = MERGED_LABELS[aspect][1]
    return np.array([1 if x == positive else 0 for x in labels], dtype=np.int64)


@dataclass(frozen=True)
class AgreementReport:
    """Per-aspect annotator agreement (MCC) before and after label merging."""

    n_posts: int
    raw_mcc: dict[Aspect, float]
    merged_mcc: dict[Aspect, float]


def agreement_report(records: Sequence[AnnotationRecord]) -> AgreementReport:
    """MCC agreement over posts annotated by exactly two annotators.

    Three-way aspects are scored one-vs-rest per raw label and averaged for
    the pre-merge value; the post-merge value is plain binary MCC. Posts
    without exactly two attention-passing annotators are excluded with a
    warning.
    """
    by_post: dict[str, list[AnnotationRecord]] = {}
    for record in _valid_records(records):
        by_post.setdefault(record.post_id, []).append(record)

    pairs: list[tuple[AnnotationRecord, AnnotationRecord]] = []
    for post_id in sorted(by_post):
        group = sorted(by_post[post_id], key=lambda r: r.annotator_id)
        if len(group) != 2:
            logger.warning(
                "post %s has %d annotators (need exactly 2); excluded",
                post_id, len(group),
            )
            continue
        pairs.append((group[0], group[1]))
    if not pairs:
        raise ValueError("no doubly annotated posts after filtering")

    raw_mcc: dict[Aspect, float] = {}
    merged_mcc: dict[Aspect, float] = {}
    for aspect in ASPECTS:
        first = [p[0].labels[aspect] for p in pairs]
        second = [p[1].labels[aspect] for p in pairs]
        domain = RAW_LABELS[aspect]
        if len(domain) == 2:
            positive = domain[1]
            raw_mcc[aspect] = matthews_correlation(
                [1 if x == positive else 0 for x in first],
                [1 if x == positive else 0 for x in second],
            )
        else:
            per_label = [
                matthews_correlation(
                    [1 if x == label else 0 for x in first],
                    [1 if x == label else 0 for x in second],
                )
                for label in domain
            ]
            raw_mcc[aspect] = float(np.mean(per_label))
        first_m = [merge_label(aspect, x) for x in first]
        second_m = [merge_label(aspect, x) for x in second]
        merged_mcc[aspect] = matthews_correlation(
            _binarize_merged(aspect, first_m), _binarize_merged(aspect, second_m)
        )
    return AgreementReport(n_posts=len(pairs), raw_mcc=raw_mcc, merged_mcc=merged_mcc)


def write_agreement_tsv(report: AgreementReport, stream: IO[str]) -> None:
    stream.write("aspect\traw_mcc\tmerged_mcc\n")
    for aspect in ASPECTS:
        stream.write(
            f"{aspect.value}\t{report.raw_mcc[aspect]:.6f}"
            f"\t{report.merged_mcc[aspect]:.6f}\n"
        )
    stream.write(f"# doubly_annotated_posts={report.n_posts}\n")


def label_distribution(
    labelings: Iterable[Mapping[Aspect, str | None]],
) -> dict[Aspect, dict[str, float]]:
    """Percentage of each merged label per aspect (entries with None skipped)."""
    counts: dict[Aspect, Counter] = {a: Counter() for a in ASPECTS}
    for labeling in labelings:
        for aspect in ASPECTS:
            label = labeling.get(aspect)
            if label is None:
                continue
            counts[aspect][merge_label(aspect, label)] += 1
    out: dict[Aspect, dict[str, float]] = {}
    for aspect in ASPECTS:
        total = sum(counts[aspect].values())
        if total == 0:
            raise ValueError(f"no labels for aspect {aspect.value}")
        out[aspect] = {
            label: 100.0 * counts[aspect][label] / total
            for label in MERGED_LABELS[aspect]
        }
    return out


def write_distribution_tsv(
    dist: Mapping[Aspect, Mapping[str, float]], stream: IO[str]
) -> None:
    stream.write("aspect\tlabel\tpercent\n")
    for aspect in ASPECTS:
        for label, pct in dist[aspect].items():
            stream.write(f"{aspect.value}\t{label}\t{pct:.1f}\n")


def consolidate(
    records: Sequence[AnnotationRecord],
) -> dict[str, dict[Aspect, str | None]]:
    """Majority-vote gold merged labels per post; exact ties become None.

    Ties are excluded from aspect-conditioned analyses rather than broken at
    random, which keeps gold labels deterministic. Posts with no
    attention-passing record are dropped with a warning.
    """
    by_post: dict[str, list[AnnotationRecord]] = {}
    all_posts: set[str] = set()
    for record in records:
        all_posts.add(record.post_id)
        if record.passed_attention_checks:
            by_post.setdefault(record.post_id, []).append(record)
    for post_id in sorted(all_posts - set(by_post)):
        logger.warning("post %s has no attention-passing records; excluded", post_id)

    gold: dict[str, dict[Aspect, str | None]] = {}
    for post_id in sorted(by_post):
        merged = [r.merged() for r in by_post[post_id]]
        labels: dict[Aspect, str | None] = {}
        for aspect in ASPECTS:
            votes = Counter(m[aspect] for m in merged)
            ranked = votes.most_common()
            if len(ranked) > 1 and ranked[0][1] == ranked[1][1]:
                labels[aspect] = None
            else:
                labels[aspect] = ranked[0][0]
        gold[post_id] = labels
    return gold


def write_gold_tsv(gold: Mapping[str, Mapping[Aspect, str | None]], stream: IO[str]) -> None:
    stream.write("post_id\t" + "\t".join(a.value for a in ASPECTS) + "\n")
    for post_id in sorted(gold):
        row = [gold[post_id][a] if gold[post_id][a] is not None else "" for a in ASPECTS]
        stream.write(post_id + "\t" + "\t".join(row) + "\n")


def read_gold_tsv(stream: IO[str]) -> dict[str, dict[Aspect, str | None]]:
    lines = [ln.rstrip("\r\n") for ln in stream if ln.strip() and not ln.startswith("#")]
    expected = "post_id\t" + "\t".join(a.value for a in ASPECTS)
    if not lines or lines[0] != expected:
        raise ValueError("gold label TSV has an unexpected header")
    gold: dict[str, dict[Aspect, str | None]] = {}
    for ln in lines[1:]:
        parts = ln.split("\t")
        if len(parts) != 1 + len(ASPECTS):
            raise ValueError(f"gold row has {len(parts)} columns")
        gold[parts[0]] = {
            a: (parts[1 + k] or None) for k, a in enumerate(ASPECTS)
        }
    return gold
