"""The cascade's final and strictest gate: a 1-5 ordinal rater with a
high-confidence acceptance policy, plus a remote-inference adapter so an
external rating server can stand in for the built-in model.

Everything here fails closed: argmax ties resolve to the lower rating,
and any remote failure rejects the whole batch.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import httpx
import numpy as np

from .errors import DegenerateData, ShapeError, StageFailure
from .features import FeatureVector
from .optim import AdamState, EarlyStopping, TrainConfig, adam_step, validation_split

N_RATINGS = 5


@dataclass
class OrdinalModel:
    """Multinomial logistic rater over the five rating classes."""

    W: np.ndarray  # [5, dimension]
    b: np.ndarray  # [5]


@dataclass
class StrictPolicy:
    """Accept only high ratings backed by concentrated probability mass."""

    min_rating: int = 4
    min_mass: float = 0.8

    def __post_init__(self):
        if not 1 <= self.min_rating <= 5:
            raise ValueError("min_rating must lie in [1,5]")
        if not 0.0 <= self.min_mass <= 1.0:
            raise ValueError("min_mass must lie in [0,1]")


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def rate(model: OrdinalModel, x: FeatureVector) -> tuple[int, np.ndarray]:
    """Rating 1..5 plus the full probability vector; ties go to the lower
    rating."""
    if x.dimension != model.W.shape[1]:
        raise ShapeError(f"input dim {x.dimension} != model dim {model.W.shape[1]}")
    logits = model.W[:, x.indices] @ x.values + model.b
    probs = _softmax(logits)
    # argmax returns the first maximal index, i.e. the lowest tied rating.
    return int(np.argmax(probs)) + 1, probs


def positive_mass(probs: np.ndarray, policy: StrictPolicy) -> float:
    """Probability mass on ratings >= the policy's minimum."""
    return float(probs[policy.min_rating - 1:].sum())


def accept(rating: int, probs: np.ndarray, policy: StrictPolicy) -> bool:
    return rating >= policy.min_rating and positive_mass(probs, policy) >= policy.min_mass


def _dense_matrix(examples: list[tuple[FeatureVector, int]]):
    dim = examples[0][0].dimension
    X = np.zeros((len(examples), dim))
    y = np.zeros(len(examples), dtype=np.int64)
    for row, (vec, rating) in enumerate(examples):
        if vec.dimension != dim:
            raise ShapeError("inconsistent feature dimensions in training set")
        if not 1 <= rating <= 5:
            raise DegenerateData(f"ordinal label out of range: {rating}")
        X[row, vec.indices] = vec.values
        y[row] = rating - 1
    return X, y


def cross_entropy(model: OrdinalModel, X: np.ndarray, y: np.ndarray) -> float:
    probs = _softmax(X @ model.W.T + model.b)
    p = np.clip(probs[np.arange(len(y)), y], 1e-12, None)
    return float(np.mean(-np.log(p)))


def ce_gradients(model: OrdinalModel, X: np.ndarray, y: np.ndarray) -> list[np.ndarray]:
    """Gradients of mean softmax cross entropy: [dW, db]."""
    probs = _softmax(X @ model.W.T + model.b)
    probs[np.arange(len(y)), y] -= 1.0
    probs /= len(y)
    return [probs.T @ X, probs.sum(axis=0)]


def predict_ratings(model: OrdinalModel, X: np.ndarray) -> np.ndarray:
    probs = _softmax(X @ model.W.T + model.b)
    return np.argmax(probs, axis=1) + 1


def train_ordinal(examples: list[tuple[FeatureVector, int]], cfg: TrainConfig):
    """Full softmax cross entropy minimized with Adam; deterministic given
    the seed. Needs at least two distinct rating classes."""
    if len(examples) < 2 or len({r for _, r in examples}) < 2:
        raise DegenerateData("need at least two distinct rating classes")
    X, y = _dense_matrix(examples)
    rng = np.random.default_rng(cfg.seed)
    model = OrdinalModel(W=np.zeros((N_RATINGS, X.shape[1])), b=np.zeros(N_RATINGS))
    train_idx, val_idx = validation_split(len(y), cfg.validation_fraction, rng)
    if len(train_idx) == 0:
        raise DegenerateData("validation split left no training examples")
    state = AdamState.for_params([model.W, model.b], alpha=cfg.learning_rate)
    stopper = EarlyStopping(patience=cfg.early_stop_patience)
    best = [model.W.copy(), model.b.copy()]
    best_epoch = 0
    epochs_run = 0

    for epoch in range(1, cfg.max_epochs + 1):
        epochs_run = epoch
        order = rng.permutation(train_idx)
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            grads = ce_gradients(model, X[batch], y[batch])
            model.W, model.b = adam_step([model.W, model.b], grads, state)
        monitor_idx = val_idx if len(val_idx) else train_idx
        loss = cross_entropy(model, X[monitor_idx], y[monitor_idx])
        if stopper.update(loss):
            best = [model.W.copy(), model.b.copy()]
            best_epoch = epoch
        if stopper.should_stop:
            break

    model.W, model.b = best
    train_acc = float(np.mean(predict_ratings(model, X[train_idx]) - 1 == y[train_idx]))
    report = {
        "epochs_run": epochs_run,
        "best_epoch": best_epoch,
        "train_loss": cross_entropy(model, X[train_idx], y[train_idx]),
        "train_accuracy": train_acc,
    }
    if len(val_idx):
        report["val_loss"] = cross_entropy(model, X[val_idx], y[val_idx])
        report["val_accuracy"] = float(
            np.mean(predict_ratings(model, X[val_idx]) - 1 == y[val_idx]))
    return model, report


@dataclass
class RemoteRater:
    """Adapter for an external rating server speaking the /v1/rate schema."""

    endpoint: str
    timeout: float = 10.0
    max_batch: int = 64
    # At most four concurrent batches per endpoint.
    _slots: threading.Semaphore = field(default_factory=lambda: threading.Semaphore(4),
                                        repr=False, compare=False)


def _validate_response(payload: dict, n_texts: int) -> list[tuple[int, np.ndarray]]:
    if not isinstance(payload, dict):
        raise StageFailure("remote response is not a JSON object")
    ratings = payload.get("ratings")
    probs = payload.get("probs")
    if not isinstance(ratings, list) or not isinstance(probs, list):
        raise StageFailure("remote response missing ratings/probs")
    if len(ratings) != n_texts or len(probs) != n_texts:
        raise StageFailure("remote response length mismatch")
    out = []
    for rating, p in zip(ratings, probs):
        if not isinstance(rating, int) or not 1 <= rating <= 5:
            raise StageFailure(f"rating out of range: {rating!r}")
        if not isinstance(p, list) or len(p) != N_RATINGS:
            raise StageFailure("probability vector must have 5 entries")
        vec = np.asarray(p, dtype=np.float64)
        if not np.all(np.isfinite(vec)) or np.any(vec < 0):
            raise StageFailure("probability vector invalid")
        out.append((rating, vec))
    return out


def remote_rate(rater: RemoteRater, texts: list[str]) -> list[tuple[int, np.ndarray]]:
    """POST a batch to the remote rater; any failure raises StageFailure,
    which the cascade treats as reject-all for the batch."""
    if not texts:
        raise StageFailure("empty batch")
    if len(texts) > rater.max_batch:
        raise StageFailure(f"batch exceeds max size {rater.max_batch}")
    with rater._slots:
        try:
            resp = httpx.post(rater.endpoint, json={"texts": texts}, timeout=rater.timeout)
        except httpx.HTTPError as exc:
            raise StageFailure(f"remote rater unreachable: {exc}") from exc
    if resp.status_code != 200:
        raise StageFailure(f"remote rater returned {resp.status_code}")
    try:
        payload = resp.json()
    except ValueError as exc:
        raise StageFailure("remote rater returned non-JSON body") from exc
    return _validate_response(payload, len(texts))
