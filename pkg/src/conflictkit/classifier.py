"""Verdict-perception classification head over frozen sentence embeddings.

The trainable model is a single logistic unit optimized with Adam on the
focal loss FL(p_t) = -alpha * (1 - p_t)^gamma * log(p_t), which down-weights
easy examples under class imbalance. YTA is class 1, NTA class 0.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .corpus import CorpusError, Post, Verdict, VerdictLexicon, VerdictRecord, DEFAULT_LEXICON
from .embeddings import EmbeddingMatrix
from .metrics import confusion_counts, macro_f1
from .validation import check_binary_labels, check_consistent_length

PROBE_MAGIC = b"PRB1"
PROB_CLAMP = 1e-7


def focal_loss(p_true, alpha=1.0, gamma: float = 2.0):
    """Focal loss of the true-class probability and its score gradient.

    ``p_true`` is the predicted probability of the example's true class,
    clamped to [1e-7, 1 - 1e-7] before the log. Returns ``(loss, grad)``
    where ``grad`` is the derivative with respect to the pre-sigmoid score of
    the true class; where the clamp is active the (clamped) loss is locally
    constant, so the gradient there is 0.
    """
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    p = np.asarray(p_true, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    clamped = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    one_minus = 1.0 - clamped
    log_p = np.log(clamped)
    loss = -alpha * one_minus**gamma * log_p
    grad = alpha * one_minus**gamma * (gamma * clamped * log_p - one_minus)
    grad = np.where(p == clamped, grad, 0.0)
    if np.isscalar(p_true):
        return float(loss), float(grad)
    return loss, grad


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    focal_gamma: float = 2.0
    focal_alpha: float | str = "balanced"
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.focal_gamma < 0:
            raise ValueError("focal_gamma must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if isinstance(self.focal_alpha, str):
            if self.focal_alpha != "balanced":
                raise ValueError("focal_alpha must be a number or 'balanced'")
        elif not 0.0 < float(self.focal_alpha) <= 1.0:
            raise ValueError("a numeric focal_alpha must lie in (0, 1]")


@dataclass(frozen=True)
class ProbeModel:
    """Logistic probe: P(YTA) = sigmoid(weights . x + bias)."""

    weights: np.ndarray
    bias: float

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        if weights.ndim != 1:
            raise ValueError("weights must be a vector")
        if not np.isfinite(weights).all() or not np.isfinite(self.bias):
            raise ValueError("parameters must be finite")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "bias", float(self.bias))

    @property
    def dim(self) -> int:
        return int(self.weights.size)

    def decision_scores(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dim:
            raise ValueError(f"expected dim {self.dim}, got {X.shape[1]}")
        return X @ self.weights + self.bias

    def predict_proba(self, X) -> np.ndarray:
        return _sigmoid(self.decision_scores(X))

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.int64)


def predict(model: ProbeModel, embedding) -> float:
    """Probability that a single embedded input receives a YTA verdict."""
    return float(model.predict_proba(np.asarray(embedding)[None, :])[0])


def save_probe(model: ProbeModel, stream: BinaryIO) -> None:
    stream.write(PROBE_MAGIC)
    stream.write(struct.pack("<I", model.dim))
    params = np.concatenate([model.weights, [model.bias]]).astype("<f8")
    stream.write(params.tobytes())


def load_probe(stream: BinaryIO) -> ProbeModel:
    magic = stream.read(4)
    if magic != PROBE_MAGIC:
        raise ValueError(f"bad probe magic {magic!r}")
    (dim,) = struct.unpack("<I", stream.read(4))
    raw = stream.read(8 * (dim + 1))
    if len(raw) != 8 * (dim + 1):
        raise ValueError("truncated probe file")
    params = np.frombuffer(raw, dtype="<f8")
    return ProbeModel(weights=params[:dim].copy(), bias=float(params[dim]))


def _class_alphas(y: np.ndarray, focal_alpha) -> tuple[float, float]:
    """Per-class weights (alpha_neg, alpha_pos)."""
    if focal_alpha == "balanced":
        n = y.size
        n_pos = int(y.sum())
        n_neg = n - n_pos
        return (
            n / (2.0 * n_neg) if n_neg else 0.0,
            n / (2.0 * n_pos) if n_pos else 0.0,
        )
    a = float(focal_alpha)
    return 1.0 - a, a


class FocalProbeClassifier(BaseEstimator, ClassifierMixin):
    """Binary linear classifier trained with mini-batch Adam on focal loss.

    With a validation set supplied to :meth:`fit`, the parameters from the
    epoch with the best validation macro F1 are kept (earliest epoch on
    ties); otherwise the final-epoch parameters are used. Training is
    deterministic for a fixed ``random_state``.
    """

    def __init__(
        self,
        epochs: int = 10,
        learning_rate: float = 1e-4,
        focal_gamma: float = 2.0,
        focal_alpha: float | str = "balanced",
        batch_size: int = 32,
        beta1: float = 0.9,
        beta2: float = 0.999,
        adam_eps: float = 1e-8,
        random_state: int = 0,
    ):
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.focal_gamma = focal_gamma
        self.focal_alpha = focal_alpha
        self.batch_size = batch_size
        self.beta1 = beta1
        self.beta2 = beta2
        self.adam_eps = adam_eps
        self.random_state = random_state

    def _config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            beta1=self.beta1,
            beta2=self.beta2,
            adam_eps=self.adam_eps,
            focal_gamma=self.focal_gamma,
            focal_alpha=self.focal_alpha,
            batch_size=self.batch_size,
            seed=self.random_state,
        )

    def fit(self, X, y, X_val=None, y_val=None):
        cfg = self._config()
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("X must be a non-empty 2-d array")
        y = check_binary_labels(y, "y")
        check_consistent_length(X, y)
        if (X_val is None) != (y_val is None):
            raise ValueError("X_val and y_val must be given together")
        if X_val is not None:
            X_val = np.asarray(X_val, dtype=np.float64)
            y_val = check_binary_labels(y_val, "y_val")
            check_consistent_length(X_val, y_val)

        n, dim = X.shape
        if len(set(y.tolist())) == 1:
            return self._fit_constant(X, y, X_val, y_val, cfg)
        rng = np.random.default_rng(cfg.seed)
        # zero init: any random init noise is comparable to what a few hundred
        # Adam steps at the default rate can accumulate, and would linger
        w = np.zeros(dim)
        b = 0.0
        m = np.zeros(dim + 1)
        v = np.zeros(dim + 1)
        step = 0
        alpha_neg, alpha_pos = _class_alphas(y, cfg.focal_alpha)
        alpha_vec = np.where(y == 1, alpha_pos, alpha_neg)
        sign = np.where(y == 1, 1.0, -1.0)

        history: list[dict] = []
        best: tuple[float, int, np.ndarray, float] | None = None
        for epoch in range(1, cfg.epochs + 1):
            order = rng.permutation(n)
            for start in range(0, n, cfg.batch_size):
                rows = order[start : start + cfg.batch_size]
                Xb = X[rows]
                zb = Xb @ w + b
                pb = _sigmoid(zb)
                p_true = np.where(y[rows] == 1, pb, 1.0 - pb)
                _, grad_true = focal_loss(p_true, alpha_vec[rows], cfg.focal_gamma)
                dz = grad_true * sign[rows] / rows.size
                grad = np.concatenate([Xb.T @ dz, [dz.sum()]])
                step += 1
                m = cfg.beta1 * m + (1 - cfg.beta1) * grad
                v = cfg.beta2 * v + (1 - cfg.beta2) * grad**2
                m_hat = m / (1 - cfg.beta1**step)
                v_hat = v / (1 - cfg.beta2**step)
                update = cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
                w = w - update[:dim]
                b = b - update[dim]

            p_all = _sigmoid(X @ w + b)
            p_true_all = np.where(y == 1, p_all, 1.0 - p_all)
            losses, _ = focal_loss(p_true_all, alpha_vec, cfg.focal_gamma)
            train_loss = float(np.mean(losses))
            if not np.isfinite(train_loss):
                raise RuntimeError(
                    f"non-finite training loss at epoch {epoch} "
                    f"(|w| max {np.abs(w).max():.3g}, bias {b:.3g})"
                )
            entry = {"epoch": epoch, "train_loss": train_loss}
            if X_val is not None:
                preds = (_sigmoid(X_val @ w + b) >= 0.5).astype(np.int64)
                val_f1 = macro_f1(confusion_counts(y_val, preds))
                entry["val_macro_f1"] = val_f1
                if best is None or val_f1 > best[0]:
                    best = (val_f1, epoch, w.copy(), b)
            history.append(entry)

        if best is not None:
            _, best_epoch, w, b = best
            self.best_epoch_ = best_epoch
        else:
            self.best_epoch_ = cfg.epochs
        self.coef_ = w[None, :]
        self.intercept_ = np.array([b])
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = dim
        self.history_ = history
        return self

    def _fit_constant(self, X, y, X_val, y_val, cfg: TrainConfig):
        # single-class training data: gradient steps only accumulate noise
        # (and the missing class has no balanced weight), so fit the constant
        # predictor for that class directly
        label = int(y[0])
        p = np.clip(float(np.mean(y)), PROB_CLAMP, 1.0 - PROB_CLAMP)
        bias = float(np.log(p / (1.0 - p)))
        loss, _ = focal_loss(
            1.0 - PROB_CLAMP, 1.0 if cfg.focal_alpha == "balanced" else cfg.focal_alpha,
            cfg.focal_gamma,
        )
        history = [{"epoch": e, "train_loss": float(loss)} for e in range(1, cfg.epochs + 1)]
        if X_val is not None:
            preds = np.full(len(y_val), label, dtype=np.int64)
            val_f1 = macro_f1(confusion_counts(y_val, preds))
            for entry in history:
                entry["val_macro_f1"] = val_f1
        self.best_epoch_ = 1
        self.coef_ = np.zeros((1, X.shape[1]))
        self.intercept_ = np.array([bias])
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1]
        self.history_ = history
        return self

    def _model(self) -> ProbeModel:
        if not hasattr(self, "coef_"):
            raise NotFittedError("fit the classifier before predicting")
        return ProbeModel(weights=self.coef_[0], bias=float(self.intercept_[0]))

    def decision_function(self, X) -> np.ndarray:
        return self._model().decision_scores(X)

    def predict_proba(self, X) -> np.ndarray:
        p = self._model().predict_proba(X)
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        return self._model().predict(X)

    def to_probe_model(self) -> ProbeModel:
        return self._model()

    @classmethod
    def from_probe_model(cls, model: ProbeModel) -> "FocalProbeClassifier":
        clf = cls()
        clf.coef_ = model.weights[None, :]
        clf.intercept_ = np.array([model.bias])
        clf.classes_ = np.array([0, 1])
        clf.n_features_in_ = model.dim
        clf.history_ = []
        clf.best_epoch_ = 0
        return clf


@dataclass(frozen=True)
class TrainingExample:
    verdict_record_id: str
    post_id: str
    input_text: str
    embedding: np.ndarray
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError("label must be 0 (NTA) or 1 (YTA)")
        object.__setattr__(
            self, "embedding", np.asarray(self.embedding, dtype=np.float32)
        )


def build_examples(
    posts: Sequence[Post],
    verdicts: Sequence[VerdictRecord],
    embeddings: EmbeddingMatrix,
    lexicon: VerdictLexicon = DEFAULT_LEXICON,
) -> list[TrainingExample]:
    """One training example per verdict: situation + scrubbed comment text.

    The concatenated text is scrubbed once more because a situation taken
    from the post title can itself contain a verdict token. Any verdict id
    missing from the embedding matrix is fatal.
    """
    situations = {p.id: p.situation for p in posts}
    known_ids = set(embeddings.ids)
    missing = [v.comment_id for v in verdicts if v.comment_id not in known_ids]
    if missing:
        raise CorpusError(
            f"{len(missing)} verdict ids have no embedding row, e.g. {missing[:5]}"
        )
    examples = []
    for record in verdicts:
        if record.post_id not in situations:
            raise CorpusError(f"verdict {record.comment_id} references unknown post")
        text = lexicon.scrub(
            f"{situations[record.post_id]} {record.scrubbed_text}".strip()
        )
        if lexicon.matches_any(text):
            raise CorpusError(
                f"lexicon token survived scrubbing for verdict {record.comment_id}"
            )
        examples.append(
            TrainingExample(
                verdict_record_id=record.comment_id,
                post_id=record.post_id,
                input_text=text,
                embedding=embeddings.row(record.comment_id),
                label=1 if record.verdict is Verdict.YTA else 0,
            )
        )
    return examples


def _examples_to_arrays(examples: Sequence[TrainingExample]) -> tuple[np.ndarray, np.ndarray]:
    X = np.stack([e.embedding for e in examples]).astype(np.float64)
    y = np.array([e.label for e in examples], dtype=np.int64)
    return X, y


def train_probe(
    train_examples: Sequence[TrainingExample],
    val_examples: Sequence[TrainingExample] | None,
    config: TrainConfig = TrainConfig(),
) -> tuple[ProbeModel, list[dict]]:
    """Train the probe on example lists; returns the model and epoch history."""
    if not train_examples:
        raise ValueError("training set is empty")
    X, y = _examples_to_arrays(train_examples)
    X_val = y_val = None
    if val_examples:
        X_val, y_val = _examples_to_arrays(val_examples)
    clf = FocalProbeClassifier(
        epochs=config.epochs,
        learning_rate=config.learning_rate,
        focal_gamma=config.focal_gamma,
        focal_alpha=config.focal_alpha,
        batch_size=config.batch_size,
        beta1=config.beta1,
        beta2=config.beta2,
        adam_eps=config.adam_eps,
        random_state=config.seed,
    )
    clf.fit(X, y, X_val=X_val, y_val=y_val)
    return clf.to_probe_model(), clf.history_
