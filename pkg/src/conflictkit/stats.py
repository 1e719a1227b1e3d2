"""Significance tests for grouped correctness indicators and verdict counts."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .validation import check_binary_labels

EXACT_ENUMERATION_LIMIT = 200_000


def permutation_test(
    correct_a,
    correct_b,
    resamples: int = 100_000,
    seed: int = 0,
    method: str = "auto",
) -> float:
    """One-sided unpaired permutation test of H1: mean(a) > mean(b).

    Group labels are shuffled over the pooled 0/1 vector. When the number of
    distinct assignments C(n_a + n_b, n_a) is at most 200000 (or
    ``method="exact"``), the p-value is computed exactly over every
    assignment; otherwise ``resamples`` Monte-Carlo draws are used with
    add-one smoothing, p = (1 + hits) / (1 + resamples). Exact mode ignores
    the seed.
    """
    a = check_binary_labels(correct_a, "correct_a")
    b = check_binary_labels(correct_b, "correct_b")
    if a.size == 0 or b.size == 0:
        raise ValueError("both groups must be non-empty")
    if resamples < 1:
        raise ValueError("resamples must be >= 1")
    if method not in ("auto", "exact", "monte-carlo"):
        raise ValueError(f"unknown method {method!r}")

    n_a, n_b = a.size, b.size
    total = n_a + n_b
    ones = int(a.sum() + b.sum())
    k_obs = int(a.sum())
    # with 0/1 data the group-mean difference increases strictly with the
    # number of ones assigned to group a, so "diff >= observed" is "k >= k_obs"

    if method == "auto":
        method = "exact" if math.comb(total, n_a) <= EXACT_ENUMERATION_LIMIT else "monte-carlo"

    if method == "exact":
        k_lo = max(0, n_a - (total - ones))
        k_hi = min(n_a, ones)
        hits = sum(
            math.comb(ones, k) * math.comb(total - ones, n_a - k)
            for k in range(max(k_lo, k_obs), k_hi + 1)
        )
        return float(Fraction(hits, math.comb(total, n_a)))

    rng = np.random.default_rng(seed)
    draws = rng.hypergeometric(ones, total - ones, n_a, size=resamples)
    hits = int(np.count_nonzero(draws >= k_obs))
    return (1 + hits) / (1 + resamples)


@dataclass(frozen=True)
class ContingencyTable2x2:
    """Counts of (NTA, YTA) x (aspect value 1, aspect value 2)."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        cells = (self.a, self.b, self.c, self.d)
        if any(not isinstance(v, int) or v < 0 for v in cells):
            raise ValueError("cells must be non-negative integers")
        if sum(cells) == 0:
            raise ValueError("table must have at least one nonzero cell")

    @property
    def rows(self) -> tuple[int, int]:
        return (self.a + self.b, self.c + self.d)

    @property
    def cols(self) -> tuple[int, int]:
        return (self.a + self.c, self.b + self.d)


def fisher_exact(table) -> float:
    """Two-sided Fisher exact p-value by the minimum-likelihood rule.

    Sums the hypergeometric probabilities of every table with the observed
    margins whose probability does not exceed the observed table's. The
    probabilities are computed with exact rational arithmetic, so ties are
    matched exactly rather than within a float tolerance. Degenerate margins
    (an all-zero row or column) return 1.0 with a warning.
    """
    if not isinstance(table, ContingencyTable2x2):
        (a, b), (c, d) = table
        table = ContingencyTable2x2(int(a), int(b), int(c), int(d))
    r1, r2 = table.rows
    c1, c2 = table.cols
    if 0 in (r1, r2, c1, c2):
        warnings.warn("degenerate margins: association is undefined, p = 1.0")
        return 1.0
    n = r1 + r2

    denom = math.comb(n, c1)
    def pmf(k: int) -> Fraction:
        return Fraction(math.comb(r1, k) * math.comb(r2, c1 - k), denom)

    k_lo = max(0, c1 - r2)
    k_hi = min(r1, c1)
    p_obs = pmf(table.a)
    total = sum((p for k in range(k_lo, k_hi + 1) if (p := pmf(k)) <= p_obs), Fraction(0))
    return float(min(total, Fraction(1)))


def verdict_ratio_difference(
    counts_a: tuple[int, int], counts_b: tuple[int, int]
) -> float | None:
    """Absolute difference of YTA/NTA ratios between two groups, in percent.

    Each group is (yta_count, nta_count). Returns None when either group has
    no NTA verdicts, since its ratio is undefined.
    """
    yta_a, nta_a = counts_a
    yta_b, nta_b = counts_b
    if min(yta_a, nta_a, yta_b, nta_b) < 0:
        raise ValueError("counts must be non-negative")
    if nta_a == 0 or nta_b == 0:
        warnings.warn("a group has zero NTA verdicts; ratio difference is undefined")
        return None
    return abs(yta_a / nta_a - yta_b / nta_b) * 100.0
