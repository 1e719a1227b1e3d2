import itertools
import math
from fractions import Fraction

import pytest
import scipy.stats

from conflictkit.stats import (
    ContingencyTable2x2,
    fisher_exact,
    permutation_test,
    verdict_ratio_difference,
)


def permutation_oracle(a, b) -> float:
    """Literal enumeration over every assignment of pooled values to group a."""
    pooled = list(a) + list(b)
    n_a = len(a)
    observed = sum(a) / len(a) - sum(b) / len(b)
    hits = total = 0
    for chosen in itertools.combinations(range(len(pooled)), n_a):
        chosen_set = set(chosen)
        ga = [pooled[i] for i in chosen]
        gb = [pooled[i] for i in range(len(pooled)) if i not in chosen_set]
        diff = sum(ga) / len(ga) - sum(gb) / len(gb)
        total += 1
        if diff >= observed - 1e-12:
            hits += 1
    return hits / total


def fisher_oracle(a, b, c, d) -> float:
    """Independent enumeration of all same-margin tables with exact pmfs."""
    r1, r2 = a + b, c + d
    c1 = a + c
    n = r1 + r2
    denom = math.comb(n, c1)
    def pmf(k):
        return Fraction(math.comb(r1, k) * math.comb(r2, c1 - k), denom)
    p_obs = pmf(a)
    total = Fraction(0)
    for k in range(max(0, c1 - r2), min(r1, c1) + 1):
        if pmf(k) <= p_obs:
            total += pmf(k)
    return float(total)


def test_permutation_exact_small_cases_match_enumeration(rng):
    for _ in range(20):
        n_a = int(rng.integers(2, 7))
        n_b = int(rng.integers(2, 7))
        a = rng.integers(0, 2, size=n_a)
        b = rng.integers(0, 2, size=n_b)
        p = permutation_test(a, b, method="exact")
        assert p == pytest.approx(permutation_oracle(a.tolist(), b.tolist()), abs=1e-12)


def test_permutation_all_correct_vs_all_wrong_minimal_p():
    a = [1] * 10
    b = [0] * 10
    p = permutation_test(a, b)  # auto mode: C(20, 10) = 184756 <= 200000 -> exact
    assert p == pytest.approx(1 / math.comb(20, 10), abs=1e-15)
    assert p == pytest.approx(permutation_oracle(a, b), abs=1e-15)


def test_permutation_identical_groups_p_at_least_half():
    a = [1, 0, 1, 1, 0, 1]
    assert permutation_test(a, a) >= 0.5


def test_permutation_exact_mode_ignores_seed():
    a = [1, 1, 0, 1]
    b = [0, 1, 0, 0]
    assert permutation_test(a, b, seed=1) == permutation_test(a, b, seed=99)


def test_permutation_monte_carlo_close_to_exact():
    a = [1, 1, 1, 1, 0, 1]
    b = [0, 1, 0, 0, 1, 0]
    exact = permutation_test(a, b, method="exact")
    mc = permutation_test(a, b, method="monte-carlo", resamples=100_000, seed=0)
    assert mc == pytest.approx(exact, abs=0.01)


def test_permutation_monte_carlo_deterministic_for_seed():
    a = [1] * 30 + [0] * 10
    b = [1] * 15 + [0] * 25
    p1 = permutation_test(a, b, method="monte-carlo", resamples=5000, seed=3)
    p2 = permutation_test(a, b, method="monte-carlo", resamples=5000, seed=3)
    assert p1 == p2


def test_permutation_rejects_empty_group():
    with pytest.raises(ValueError):
        permutation_test([], [0, 1])


def test_fisher_symmetric_diagonal_table():
    assert fisher_exact([[5, 0], [0, 5]]) == pytest.approx(2 / 252, abs=1e-15)


def test_fisher_uniform_table_is_one():
    assert fisher_exact([[2, 2], [2, 2]]) == 1.0


def test_fisher_degenerate_margins_warn_and_return_one():
    with pytest.warns(UserWarning):
        assert fisher_exact([[0, 0], [3, 4]]) == 1.0
    with pytest.warns(UserWarning):
        assert fisher_exact([[0, 2], [0, 4]]) == 1.0


def test_fisher_all_tables_with_small_margins_match_enumeration():
    checked = 0
    for a in range(0, 13):
        for b in range(0, 13 - a):
            for c in range(0, 13 - a):
                for d in range(0, 13 - max(b, c)):
                    if a + b > 12 or c + d > 12 or a + c > 12 or b + d > 12:
                        continue
                    if min(a + b, c + d, a + c, b + d) == 0 or a + b + c + d == 0:
                        continue
                    p = fisher_exact([[a, b], [c, d]])
                    assert p == pytest.approx(fisher_oracle(a, b, c, d), abs=1e-10), (
                        a, b, c, d,
                    )
                    checked += 1
    assert checked > 1000


def test_fisher_matches_scipy_on_sampled_tables(rng):
    for _ in range(50):
        a, b, c, d = (int(x) for x in rng.integers(0, 13, size=4))
        if min(a + b, c + d, a + c, b + d) == 0:
            continue
        ours = fisher_exact([[a, b], [c, d]])
        _, scipy_p = scipy.stats.fisher_exact([[a, b], [c, d]], alternative="two-sided")
        assert ours == pytest.approx(scipy_p, abs=1e-9)


def test_fisher_pmf_sums_to_one():
    # same-margin table probabilities form a distribution
    r1, r2, c1 = 7, 5, 6
    n = r1 + r2
    total = sum(
        math.comb(r1, k) * math.comb(r2, c1 - k) for k in range(max(0, c1 - r2), min(r1, c1) + 1)
    )
    assert total == math.comb(n, c1)
    # p-values stay in (0, 1]
    for table in ([[1, 5], [7, 2]], [[6, 0], [1, 5]], [[3, 3], [3, 3]]):
        p = fisher_exact(table)
        assert 0.0 < p <= 1.0


def test_contingency_table_validation():
    with pytest.raises(ValueError):
        ContingencyTable2x2(-1, 2, 3, 4)
    with pytest.raises(ValueError):
        ContingencyTable2x2(0, 0, 0, 0)


def test_ratio_difference_paper_style_values():
    # ratios 0.50 vs 0.39 differ by 11 percentage points of YTA/NTA
    assert verdict_ratio_difference((50, 100), (39, 100)) == pytest.approx(11.0)


def test_ratio_difference_identical_groups():
    assert verdict_ratio_difference((10, 20), (5, 10)) == pytest.approx(0.0)


def test_ratio_difference_constructed_counts():
    assert verdict_ratio_difference((10, 20), (3, 30)) == pytest.approx(40.0)


def test_ratio_difference_zero_nta_undefined():
    with pytest.warns(UserWarning):
        assert verdict_ratio_difference((5, 0), (3, 10)) is None
