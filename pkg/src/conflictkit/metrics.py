"""Agreement and classification metrics.

Functions take plain label arrays so they compose with the usual
scikit-learn tooling; report dataclasses carry the grouped results the
pipeline writes out.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from .validation import check_binary_labels, check_consistent_length

logger = logging.getLogger(__name__)


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Chance-corrected pair-counting agreement between two partitions.

    Uses the permutation-model expectation; both degenerate cases where the
    index is undefined (single cluster or all singletons on both sides)
    return 1.0 for identical groupings.
    """
    a = np.asarray(labels_a).ravel()
    b = np.asarray(labels_b).ravel()
    n = check_consistent_length(a, b)
    if n == 0:
        raise ValueError("partitions must be non-empty")

    contingency: Counter = Counter(zip(a.tolist(), b.tolist()))
    rows: Counter = Counter(a.tolist())
    cols: Counter = Counter(b.tolist())

    sum_cells = sum(math.comb(c, 2) for c in contingency.values())
    sum_rows = sum(math.comb(c, 2) for c in rows.values())
    sum_cols = sum(math.comb(c, 2) for c in cols.values())
    total = math.comb(n, 2)

    expected = sum_rows * sum_cols / total if total else 0.0
    max_index = (sum_rows + sum_cols) / 2.0
    if max_index == expected:
        # both sides fully agree by construction (all-singletons or one cluster)
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))


def matthews_correlation(a, b) -> float:
    """MCC between two binary vectors; 0.0 when any marginal count is zero."""
    a = check_binary_labels(a, "a")
    b = check_binary_labels(b, "b")
    check_consistent_length(a, b)
    tp = int(np.sum((a == 1) & (b == 1)))
    tn = int(np.sum((a == 0) & (b == 0)))
    fp = int(np.sum((a == 0) & (b == 1)))
    fn = int(np.sum((a == 1) & (b == 0)))
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom == 0:
        return 0.0
    return float((tp * tn - fp * fn) / math.sqrt(denom))


@dataclass(frozen=True)
class ConfusionCounts:
    """Binary confusion with class 1 (YTA) as the positive class."""

    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion_counts(golds, predictions) -> ConfusionCounts:
    y = check_binary_labels(golds, "golds")
    p = check_binary_labels(predictions, "predictions")
    check_consistent_length(y, p)
    return ConfusionCounts(
        tp=int(np.sum((y == 1) & (p == 1))),
        fp=int(np.sum((y == 0) & (p == 1))),
        fn=int(np.sum((y == 1) & (p == 0))),
        tn=int(np.sum((y == 0) & (p == 0))),
    )


def _f1(tp: int, fp: int, fn: int) -> float:
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def accuracy(counts: ConfusionCounts) -> float:
    return (counts.tp + counts.tn) / counts.total if counts.total else 0.0


def micro_f1(counts: ConfusionCounts) -> float:
    # pooled over both classes; single-label binary pooling equals accuracy
    tp_pool = counts.tp + counts.tn
    fp_pool = counts.fp + counts.fn
    fn_pool = counts.fn + counts.fp
    return _f1(tp_pool, fp_pool, fn_pool)


def macro_f1(counts: ConfusionCounts) -> float:
    """Unweighted mean of per-class F1; zero-support classes contribute 0."""
    pos = _f1(counts.tp, counts.fp, counts.fn)
    neg = _f1(counts.tn, counts.fn, counts.fp)
    return (pos + neg) / 2.0


@dataclass(frozen=True)
class MetricsReport:
    group: str
    n: int
    accuracy: float
    micro_f1: float
    macro_f1: float
    macro_f1_post_avg: float | None = None


def _post_averaged_macro_f1(golds, predictions, post_ids) -> float:
    by_post: dict[str, list[int]] = {}
    for idx, post in enumerate(post_ids):
        by_post.setdefault(str(post), []).append(idx)
    golds = np.asarray(golds)
    predictions = np.asarray(predictions)
    scores = []
    for post in sorted(by_post):
        rows = by_post[post]
        scores.append(macro_f1(confusion_counts(golds[rows], predictions[rows])))
    return float(np.mean(scores))


def evaluate(
    golds,
    predictions,
    groups: Sequence[str] | None = None,
    post_ids: Sequence[str] | None = None,
) -> list[MetricsReport]:
    """Accuracy, micro F1 and macro F1 overall and per group.

    ``groups`` assigns every example to one group (cluster name or aspect
    value); the overall row is reported under group "All". When ``post_ids``
    are given, a per-post macro F1 variant (mean of per-post macro F1) is
    reported alongside the per-verdict macro F1.
    """
    y = check_binary_labels(golds, "golds")
    p = check_binary_labels(predictions, "predictions")
    check_consistent_length(y, p)
    if groups is not None:
        check_consistent_length(y, groups)
    if post_ids is not None:
        check_consistent_length(y, post_ids)

    def build(name: str, rows: np.ndarray) -> MetricsReport:
        counts = confusion_counts(y[rows], p[rows])
        post_avg = None
        if post_ids is not None:
            post_avg = _post_averaged_macro_f1(
                y[rows], p[rows], [post_ids[r] for r in rows.tolist()]
            )
        return MetricsReport(
            group=name,
            n=counts.total,
            accuracy=accuracy(counts),
            micro_f1=micro_f1(counts),
            macro_f1=macro_f1(counts),
            macro_f1_post_avg=post_avg,
        )

    reports = [build("All", np.arange(len(y)))]
    if groups is not None:
        names = [str(g) for g in groups]
        for name in sorted(set(names)):
            rows = np.flatnonzero(np.asarray(names) == name)
            if rows.size == 0:
                logger.warning("group %r is empty; report omitted", name)
                continue
            reports.append(build(name, rows))
    return reports


def _pct(value: float | None) -> str:
    return "-" if value is None else f"{100.0 * value:.1f}"


def write_metrics_tsv(reports: Sequence[MetricsReport], stream: IO[str]) -> None:
    stream.write("group\tn\tacc_pct\tmicro_f1_pct\tmacro_f1_pct\tmacro_f1_post_avg_pct\n")
    for r in reports:
        stream.write(
            f"{r.group}\t{r.n}\t{_pct(r.accuracy)}\t{_pct(r.micro_f1)}"
            f"\t{_pct(r.macro_f1)}\t{_pct(r.macro_f1_post_avg)}\n"
        )


def write_metrics_markdown(reports: Sequence[MetricsReport], stream: IO[str]) -> None:
    headers = ["Group", "N", "Acc%", "Micro F1%", "Macro F1%", "Macro F1% (post avg)"]
    rows = [
        [r.group, str(r.n), _pct(r.accuracy), _pct(r.micro_f1), _pct(r.macro_f1),
         _pct(r.macro_f1_post_avg)]
        for r in reports
    ]
    widths = [
        max([len(h)] + [len(row[k]) for row in rows]) for k, h in enumerate(headers)
    ]
    def line(cells: list[str]) -> str:
        return "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |\n"
    stream.write(line(headers))
    stream.write("|" + "|".join("-" * (w + 2) for w in widths) + "|\n")
    for row in rows:
        stream.write(line(row))
