import numpy as np
import pytest
import sklearn.metrics

from conflictkit.metrics import (
    ConfusionCounts,
    accuracy,
    adjusted_rand_index,
    confusion_counts,
    evaluate,
    macro_f1,
    matthews_correlation,
    micro_f1,
    write_metrics_markdown,
    write_metrics_tsv,
)


def ari_pair_counting_oracle(a, b) -> float:
    """Brute force over all node pairs, agreeing/disagreeing counts."""
    n = len(a)
    both = same_a_only = same_b_only = 0
    total = 0
    for i in range(n):
        for j in range(i + 1, n):
            total += 1
            same_a = a[i] == a[j]
            same_b = b[i] == b[j]
            if same_a and same_b:
                both += 1
            elif same_a:
                same_a_only += 1
            elif same_b:
                same_b_only += 1
    pairs_a = both + same_a_only
    pairs_b = both + same_b_only
    expected = pairs_a * pairs_b / total
    maximum = (pairs_a + pairs_b) / 2
    if maximum == expected:
        return 1.0
    return (both - expected) / (maximum - expected)


def test_ari_identity():
    labels = [0, 0, 1, 2, 2, 1]
    assert adjusted_rand_index(labels, labels) == 1.0


def test_ari_relabeling_invariance(rng):
    labels = rng.integers(0, 4, size=30)
    relabeled = (labels + 7) * 3
    assert adjusted_rand_index(labels, relabeled) == 1.0


def test_ari_crossed_pairs_matches_oracle():
    p = [0, 0, 1, 1]
    q = [0, 1, 0, 1]
    assert adjusted_rand_index(p, q) == pytest.approx(ari_pair_counting_oracle(p, q), abs=1e-12)
    assert adjusted_rand_index(p, q) == pytest.approx(-0.5, abs=1e-12)


def test_ari_random_pairs_match_oracle_and_sklearn(rng):
    for _ in range(200):
        n = int(rng.integers(2, 13))
        a = rng.integers(0, int(rng.integers(1, 5)) + 1, size=n)
        b = rng.integers(0, int(rng.integers(1, 5)) + 1, size=n)
        ours = adjusted_rand_index(a, b)
        assert ours == pytest.approx(ari_pair_counting_oracle(a, b), abs=1e-12)
        assert ours == pytest.approx(sklearn.metrics.adjusted_rand_score(a, b), abs=1e-10)


def test_ari_symmetry(rng):
    for _ in range(50):
        a = rng.integers(0, 3, size=20)
        b = rng.integers(0, 3, size=20)
        assert adjusted_rand_index(a, b) == pytest.approx(
            adjusted_rand_index(b, a), abs=1e-12
        )


def test_ari_rejects_mismatched_lengths():
    with pytest.raises(ValueError):
        adjusted_rand_index([0, 1], [0, 1, 2])


def test_mcc_perfect_agreement():
    a = [0, 1, 0, 1, 1]
    assert matthews_correlation(a, a) == 1.0


def test_mcc_complement_disagreement():
    a = np.array([0, 1, 0, 1, 1])
    assert matthews_correlation(a, 1 - a) == -1.0


def test_mcc_equals_pearson_on_random_vectors(rng):
    for _ in range(100):
        a = rng.integers(0, 2, size=50)
        b = rng.integers(0, 2, size=50)
        if len(set(a.tolist())) < 2 or len(set(b.tolist())) < 2:
            continue
        pearson = np.corrcoef(a, b)[0, 1]
        assert matthews_correlation(a, b) == pytest.approx(pearson, abs=1e-12)


def test_mcc_known_confusion_matches_pearson():
    # TP=45, TN=25, FP=15, FN=15
    a = [1] * 45 + [0] * 25 + [0] * 15 + [1] * 15
    b = [1] * 45 + [0] * 25 + [1] * 15 + [0] * 15
    assert matthews_correlation(a, b) == pytest.approx(np.corrcoef(a, b)[0, 1], abs=1e-12)


def test_mcc_zero_marginal_returns_zero():
    assert matthews_correlation([1, 1, 1], [1, 0, 1]) == 0.0
    assert matthews_correlation([1, 0, 1], [0, 0, 0]) == 0.0


def test_mcc_symmetry_and_flip_invariance(rng):
    a = rng.integers(0, 2, size=40)
    b = rng.integers(0, 2, size=40)
    assert matthews_correlation(a, b) == pytest.approx(matthews_correlation(b, a), abs=1e-15)
    assert matthews_correlation(a, b) == pytest.approx(
        matthews_correlation(1 - a, 1 - b), abs=1e-15
    )


def test_mcc_length_mismatch():
    with pytest.raises(ValueError):
        matthews_correlation([0, 1], [0, 1, 1])


def confusion_oracle(golds, preds):
    tp = sum(1 for g, p in zip(golds, preds) if g == 1 and p == 1)
    fp = sum(1 for g, p in zip(golds, preds) if g == 0 and p == 1)
    fn = sum(1 for g, p in zip(golds, preds) if g == 1 and p == 0)
    tn = sum(1 for g, p in zip(golds, preds) if g == 0 and p == 0)
    return tp, fp, fn, tn


def per_class_f1_oracle(golds, preds, cls):
    tp = sum(1 for g, p in zip(golds, preds) if g == cls and p == cls)
    fp = sum(1 for g, p in zip(golds, preds) if g != cls and p == cls)
    fn = sum(1 for g, p in zip(golds, preds) if g == cls and p != cls)
    return 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0


def test_evaluate_all_correct():
    golds = [0, 1, 0, 1]
    reports = evaluate(golds, golds)
    assert reports[0].accuracy == 1.0
    assert reports[0].macro_f1 == 1.0
    assert reports[0].micro_f1 == 1.0


def test_evaluate_matches_counting_oracle(rng):
    golds = rng.integers(0, 2, size=200)
    preds = rng.integers(0, 2, size=200)
    report = evaluate(golds, preds)[0]
    tp, fp, fn, tn = confusion_oracle(golds, preds)
    assert confusion_counts(golds, preds) == ConfusionCounts(tp, fp, fn, tn)
    assert report.accuracy == pytest.approx((tp + tn) / 200, abs=1e-10)
    expected_macro = (
        per_class_f1_oracle(golds, preds, 1) + per_class_f1_oracle(golds, preds, 0)
    ) / 2
    assert report.macro_f1 == pytest.approx(expected_macro, abs=1e-10)
    assert report.macro_f1 == pytest.approx(
        sklearn.metrics.f1_score(golds, preds, average="macro"), abs=1e-10
    )


def test_micro_f1_equals_accuracy_property(rng):
    for _ in range(25):
        n = int(rng.integers(1, 100))
        golds = rng.integers(0, 2, size=n)
        preds = rng.integers(0, 2, size=n)
        counts = confusion_counts(golds, preds)
        assert micro_f1(counts) == pytest.approx(accuracy(counts), abs=1e-12)


def test_evaluate_zero_support_class_contributes_zero():
    report = evaluate([0, 0, 0], [0, 0, 0])[0]
    assert report.accuracy == 1.0
    # class 1 has no support and no predictions: F1 contribution 0
    assert report.macro_f1 == pytest.approx(0.5)


def test_evaluate_groups_and_post_average():
    golds = [1, 0, 1, 0]
    preds = [1, 0, 0, 0]
    groups = ["g1", "g1", "g2", "g2"]
    posts = ["p1", "p1", "p2", "p2"]
    reports = evaluate(golds, preds, groups=groups, post_ids=posts)
    assert [r.group for r in reports] == ["All", "g1", "g2"]
    g1 = next(r for r in reports if r.group == "g1")
    assert g1.accuracy == 1.0
    per_post = [1.0, per_class_f1_oracle([1, 0], [0, 0], 1) * 0 + macro_f1(
        confusion_counts([1, 0], [0, 0])
    )]
    assert reports[0].macro_f1_post_avg == pytest.approx(sum(per_post) / 2)


def test_metrics_rendering_one_decimal_percent():
    import io

    reports = evaluate([1, 0, 1, 0], [1, 0, 0, 0])
    buf = io.StringIO()
    write_metrics_tsv(reports, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].startswith("group\tn\t")
    assert "75.0" in lines[1]
    md = io.StringIO()
    write_metrics_markdown(reports, md)
    assert md.getvalue().startswith("| Group")
