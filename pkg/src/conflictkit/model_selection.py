"""Leakage-free train/validation/test splits stratified by cluster."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import IO, Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)

SPLIT_NAMES = ("train", "val", "test")
UNCLUSTERED = "unclustered"


@dataclass(frozen=True)
class SplitSpec:
    train: frozenset[str]
    val: frozenset[str]
    test: frozenset[str]
    stratify_by: str

    def __post_init__(self):
        sets = (self.train, self.val, self.test)
        total = sum(len(s) for s in sets)
        if len(self.train | self.val | self.test) != total:
            raise ValueError("splits must be disjoint")

    @property
    def all_posts(self) -> frozenset[str]:
        return self.train | self.val | self.test

    def split_of(self, post_id: str) -> str:
        for name in SPLIT_NAMES:
            if post_id in getattr(self, name):
                return name
        raise KeyError(post_id)


def _apportion(n: int, ratios: Sequence[float]) -> list[int]:
    """Largest-remainder allocation; every count is within 1 of n * ratio."""
    base = [int(n * r) for r in ratios]
    remainders = [n * r - b for r, b in zip(ratios, base)]
    leftover = n - sum(base)
    # ties go to the earlier split (train before val before test)
    order = sorted(range(len(ratios)), key=lambda k: (-remainders[k], k))
    for k in order[:leftover]:
        base[k] += 1
    return base


def stratified_split(
    post_ids: Sequence[str],
    cluster_labels: Mapping[str, object],
    ratios: tuple[float, float, float] = (0.7, 0.2, 0.1),
    seed: int = 0,
    stratify_by: str = "cluster",
) -> SplitSpec:
    """Split posts 70/20/10 within each cluster stratum, at the post level.

    All verdicts of a post inherit its split, so no text leaks across
    boundaries. Posts missing from ``cluster_labels`` form their own
    "unclustered" stratum. Per-stratum proportions hold to within one post;
    the shuffle is seeded, so identical inputs give identical splits.
    """
    if len(ratios) != 3:
        raise ValueError("ratios must have three entries (train, val, test)")
    if any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("ratios must be non-negative and sum to 1")
    ids = [str(p) for p in post_ids]
    if len(set(ids)) != len(ids):
        raise ValueError("post ids must be unique")

    strata: dict[str, list[str]] = {}
    for post_id in ids:
        label = cluster_labels.get(post_id, UNCLUSTERED)
        strata.setdefault(str(label), []).append(post_id)

    rng = np.random.default_rng(seed)
    buckets: dict[str, list[str]] = {name: [] for name in SPLIT_NAMES}
    for label in sorted(strata):
        members = sorted(strata[label])
        if not members:
            logger.warning("stratum %r is empty; assigning it wholly to train", label)
            continue
        rng.shuffle(members)
        n_train, n_val, _ = _apportion(len(members), ratios)
        buckets["train"].extend(members[:n_train])
        buckets["val"].extend(members[n_train : n_train + n_val])
        buckets["test"].extend(members[n_train + n_val :])

    return SplitSpec(
        train=frozenset(buckets["train"]),
        val=frozenset(buckets["val"]),
        test=frozenset(buckets["test"]),
        stratify_by=stratify_by,
    )


def write_split_tsv(spec: SplitSpec, stream: IO[str]) -> None:
    stream.write("post_id\tsplit\n")
    for name in SPLIT_NAMES:
        for post_id in sorted(getattr(spec, name)):
            stream.write(f"{post_id}\t{name}\n")
    stream.write(f"# stratify_by={spec.stratify_by}\n")


def read_split_tsv(stream: IO[str]) -> SplitSpec:
    stratify_by = "cluster"
    data_lines: list[str] = []
    for raw in stream:
        ln = raw.rstrip("\r\n")
        if not ln.strip():
            continue
        if ln.startswith("#"):
            if ln.startswith("# stratify_by="):
                stratify_by = ln.split("=", 1)[1]
            continue
        data_lines.append(ln)
    if not data_lines or data_lines[0] != "post_id\tsplit":
        raise ValueError("split TSV must start with 'post_id<TAB>split'")
    buckets: dict[str, set[str]] = {name: set() for name in SPLIT_NAMES}
    for ln in data_lines[1:]:
        post_id, name = ln.split("\t")
        if name not in buckets:
            raise ValueError(f"unknown split name {name!r}")
        buckets[name].add(post_id)
    return SplitSpec(
        train=frozenset(buckets["train"]),
        val=frozenset(buckets["val"]),
        test=frozenset(buckets["test"]),
        stratify_by=stratify_by,
    )
