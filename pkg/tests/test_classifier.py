import io
import math
import time

import numpy as np
import pytest

from conflictkit.classifier import (
    FocalProbeClassifier,
    ProbeModel,
    TrainConfig,
    TrainingExample,
    build_examples,
    focal_loss,
    load_probe,
    predict,
    save_probe,
    train_probe,
)
from conflictkit.corpus import CorpusError, mine_verdicts, parse_corpus
from conflictkit.embeddings import EmbeddingMatrix
from conflictkit.metrics import confusion_counts, macro_f1
from tests.conftest import make_post_record


def test_focal_loss_reduces_to_cross_entropy_at_gamma_zero():
    loss, _ = focal_loss(0.5, alpha=1.0, gamma=0.0)
    assert loss == pytest.approx(math.log(2), abs=1e-12)


def test_focal_loss_vanishes_at_perfect_confidence():
    loss, _ = focal_loss(1.0 - 1e-7, alpha=1.0, gamma=2.0)
    assert loss == pytest.approx(0.0, abs=1e-12)
    loss_clamped, _ = focal_loss(1.0, alpha=1.0, gamma=2.0)
    assert loss_clamped < 1e-12


def test_focal_loss_closed_form_value():
    loss, _ = focal_loss(0.9, alpha=1.0, gamma=2.0)
    assert loss == pytest.approx(0.01 * -math.log(0.9), abs=1e-12)
    assert loss == pytest.approx(1.0536e-3, rel=1e-3)


def test_focal_loss_equals_bce_for_gamma_zero_alpha_one():
    for p in np.linspace(1e-7, 1 - 1e-7, 101):
        loss, _ = focal_loss(float(p), alpha=1.0, gamma=0.0)
        assert loss == pytest.approx(-math.log(p), abs=1e-12)


def test_focal_loss_gradient_matches_finite_differences():
    h = 1e-5
    p_grid = [0.02, 0.1, 0.3, 0.5, 0.7, 0.9, 0.98]
    for gamma in (0.0, 0.5, 2.0):
        for alpha in (0.25, 0.5, 1.0):
            for p in p_grid:
                z = math.log(p / (1 - p))
                def loss_at(score):
                    prob = 1 / (1 + math.exp(-score))
                    return focal_loss(prob, alpha=alpha, gamma=gamma)[0]
                numeric = (loss_at(z + h) - loss_at(z - h)) / (2 * h)
                _, analytic = focal_loss(p, alpha=alpha, gamma=gamma)
                rel = abs(analytic - numeric) / max(abs(numeric), 1e-12)
                assert rel <= 1e-5, (p, gamma, alpha, analytic, numeric)


def test_focal_loss_rejects_negative_gamma():
    with pytest.raises(ValueError):
        focal_loss(0.5, gamma=-1.0)


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        TrainConfig(focal_alpha="bogus")
    with pytest.raises(ValueError):
        TrainConfig(focal_alpha=1.5)


def separable_data(seed=7, n=1000, d=16, pos_rate=0.10):
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < pos_rate).astype(int)
    mu = np.full(d, 0.5)
    X = rng.normal(0, 0.25, size=(n, d)) + np.where(y[:, None] == 1, mu, -mu)
    return X, y


def test_probe_reaches_high_f1_on_separable_data():
    X, y = separable_data()
    rng = np.random.default_rng(99)
    idx = rng.permutation(len(y))
    train, test = idx[:700], idx[700:]
    clf = FocalProbeClassifier(random_state=0)
    start = time.time()
    clf.fit(X[train], y[train])
    assert time.time() - start < 10.0
    score = macro_f1(confusion_counts(y[test], clf.predict(X[test])))
    assert score >= 0.95
    majority = macro_f1(confusion_counts(y[test], np.zeros(len(test), dtype=int)))
    assert majority == pytest.approx(0.47, abs=0.02)


def test_training_is_reproducible():
    X, y = separable_data(seed=3, n=200)
    a = FocalProbeClassifier(random_state=11).fit(X, y)
    b = FocalProbeClassifier(random_state=11).fit(X, y)
    assert np.array_equal(a.coef_, b.coef_)
    assert a.intercept_ == b.intercept_
    c = FocalProbeClassifier(random_state=12).fit(X, y)
    assert not np.array_equal(a.coef_, c.coef_)


def test_constant_label_train_predicts_that_label():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(100, 8))
    y = np.zeros(100, dtype=int)
    clf = FocalProbeClassifier(random_state=0).fit(X, y)
    preds = clf.predict(rng.normal(size=(50, 8)))
    assert (preds == 0).all()
    # majority-baseline macro F1 on an all-negative evaluation set
    assert macro_f1(confusion_counts(np.zeros(50, dtype=int), preds)) == pytest.approx(0.5)


def test_validation_selects_best_epoch():
    X, y = separable_data(seed=5, n=400)
    X_val, y_val = separable_data(seed=6, n=200)
    clf = FocalProbeClassifier(random_state=0, epochs=5)
    clf.fit(X, y, X_val=X_val, y_val=y_val)
    scores = [entry["val_macro_f1"] for entry in clf.history_]
    assert clf.best_epoch_ == int(np.argmax(scores)) + 1
    assert len(clf.history_) == 5


def test_probe_predict_matches_manual_dot_product(rng):
    model = ProbeModel(weights=rng.normal(size=6), bias=0.3)
    for _ in range(10):
        x = rng.normal(size=6)
        expected = 1 / (1 + math.exp(-(float(model.weights @ x) + 0.3)))
        assert predict(model, x) == pytest.approx(expected, abs=1e-12)


def test_probe_zero_parameters_give_half():
    model = ProbeModel(weights=np.zeros(4), bias=0.0)
    assert predict(model, np.ones(4)) == 0.5


def test_probe_saturates_for_large_scores():
    model = ProbeModel(weights=np.array([100.0]), bias=0.0)
    assert predict(model, np.array([5.0])) == pytest.approx(1.0, abs=1e-12)


def test_probe_dim_mismatch_is_error():
    model = ProbeModel(weights=np.zeros(4), bias=0.0)
    with pytest.raises(ValueError):
        predict(model, np.ones(5))


def test_probe_file_round_trip(rng):
    model = ProbeModel(weights=rng.normal(size=9), bias=-1.25)
    buf = io.BytesIO()
    save_probe(model, buf)
    buf.seek(0)
    back = load_probe(buf)
    assert np.array_equal(back.weights, model.weights)
    assert back.bias == model.bias


def test_probe_file_bad_magic():
    with pytest.raises(ValueError):
        load_probe(io.BytesIO(b"XXXX" + b"\x00" * 12))


def make_corpus_examples():
    lines = [
        make_post_record("p1", "AITA for leaving low tips", [("c1", "NTA obviously"), ("c2", "YTA bro")]),
        make_post_record("p2", "AITA for shouting", [("c3", "you are the asshole")]),
    ]
    posts = parse_corpus(lines)
    verdicts = mine_verdicts(posts)
    rng = np.random.default_rng(0)
    embeddings = EmbeddingMatrix(
        tuple(v.comment_id for v in verdicts),
        rng.normal(size=(len(verdicts), 4)).astype(np.float32),
    )
    return posts, verdicts, embeddings


def test_build_examples_one_per_verdict_with_labels():
    posts, verdicts, embeddings = make_corpus_examples()
    examples = build_examples(posts, verdicts, embeddings)
    assert len(examples) == 3
    by_id = {e.verdict_record_id: e for e in examples}
    assert by_id["c1"].label == 0
    assert by_id["c2"].label == 1
    assert by_id["c3"].label == 1
    assert by_id["c1"].input_text.startswith("leaving low tips")


def test_build_examples_shares_situation_across_verdicts():
    lines = [
        make_post_record("p1", "AITA for a thing", [("c1", "NTA"), ("c2", "NTA"), ("c3", "YTA")]),
    ]
    posts = parse_corpus(lines)
    verdicts = mine_verdicts(posts)
    rng = np.random.default_rng(1)
    embeddings = EmbeddingMatrix(
        tuple(v.comment_id for v in verdicts),
        rng.normal(size=(3, 4)).astype(np.float32),
    )
    examples = build_examples(posts, verdicts, embeddings)
    assert len(examples) == 3
    assert len({e.input_text.split(" ")[0] for e in examples}) == 1


def test_build_examples_scrubs_lexicon_tokens_from_situation():
    lines = [make_post_record("p1", "AITA for telling him YTA", [("c1", "NTA friend")])]
    posts = parse_corpus(lines)
    verdicts = mine_verdicts(posts)
    embeddings = EmbeddingMatrix(("c1",), np.ones((1, 4), dtype=np.float32))
    from conflictkit.corpus import DEFAULT_LEXICON

    examples = build_examples(posts, verdicts, embeddings)
    assert not DEFAULT_LEXICON.matches_any(examples[0].input_text)


def test_build_examples_missing_embedding_is_fatal():
    posts, verdicts, _ = make_corpus_examples()
    embeddings = EmbeddingMatrix(("c1",), np.ones((1, 4), dtype=np.float32))
    with pytest.raises(CorpusError, match="c2"):
        build_examples(posts, verdicts, embeddings)


def test_train_probe_on_examples():
    X, y = separable_data(seed=2, n=300, d=8)
    examples = [
        TrainingExample(f"c{k}", f"p{k}", "text", X[k], int(y[k])) for k in range(300)
    ]
    model, history = train_probe(examples[:200], examples[200:250], TrainConfig(epochs=3))
    assert model.dim == 8
    assert len(history) == 3
    assert all("val_macro_f1" in entry for entry in history)
    with pytest.raises(ValueError):
        train_probe([], None)
