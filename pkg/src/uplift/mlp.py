"""Feed-forward sentiment stage: dense ReLU stack with a sigmoid output,
binary cross entropy loss, and manually derived backpropagation.

The net consumes TF-IDF feature vectors. Widths default to a halving
pyramid (256..8) of ReLU layers under a single sigmoid unit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateData, ShapeError
from .features import FeatureVector
from .optim import AdamState, EarlyStopping, TrainConfig, adam_step, validation_split

DEFAULT_HIDDEN = (256, 128, 64, 32, 16, 8)
_CLAMP = 1e-7

RELU = "relu"
SIGMOID = "sigmoid"
IDENTITY = "identity"


@dataclass
class DenseLayer:
    W: np.ndarray  # [out, in]
    b: np.ndarray  # [out]
    activation: str

    def __post_init__(self):
        if self.activation not in (RELU, SIGMOID, IDENTITY):
            raise ValueError(f"unknown activation: {self.activation}")


@dataclass
class MlpModel:
    layers: list[DenseLayer]
    input_dim: int

    def params(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.extend((layer.W, layer.b))
        return out

    def set_params(self, params: list[np.ndarray]):
        for k, layer in enumerate(self.layers):
            layer.W, layer.b = params[2 * k], params[2 * k + 1]


def new_mlp(input_dim: int, hidden: tuple[int, ...] = DEFAULT_HIDDEN,
            seed: int = 0) -> MlpModel:
    """He init for the ReLU stack, Xavier for the sigmoid unit."""
    rng = np.random.default_rng(seed)
    layers = []
    fan_in = input_dim
    for width in hidden:
        W = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(width, fan_in))
        layers.append(DenseLayer(W=W, b=np.zeros(width), activation=RELU))
        fan_in = width
    W = rng.normal(0.0, np.sqrt(1.0 / fan_in), size=(1, fan_in))
    layers.append(DenseLayer(W=W, b=np.zeros(1), activation=SIGMOID))
    return MlpModel(layers=layers, input_dim=input_dim)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # Split by sign to stay finite for large |z|.
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == RELU:
        return np.maximum(z, 0.0)
    if kind == SIGMOID:
        return _sigmoid(z)
    return z


def _forward_batch(model: MlpModel, X: np.ndarray):
    """Returns per-layer (pre-activation, activation) caches and the output."""
    if X.shape[1] != model.input_dim:
        raise ShapeError(f"input dim {X.shape[1]} != model dim {model.input_dim}")
    a = X
    cache = []
    for layer in model.layers:
        z = a @ layer.W.T + layer.b
        a_next = _activate(z, layer.activation)
        cache.append((a, z))
        a = a_next
    return cache, a


def mlp_forward(model: MlpModel, x: FeatureVector) -> float:
    """Probability the text is positive, in (0,1)."""
    if x.dimension != model.input_dim:
        raise ShapeError(f"input dim {x.dimension} != model dim {model.input_dim}")
    _, out = _forward_batch(model, x.to_dense()[None, :])
    return float(out[0, 0])


def bce_loss(p: float, y: int) -> float:
    """Binary cross entropy with the prediction clamped away from 0 and 1."""
    p = min(max(p, _CLAMP), 1.0 - _CLAMP)
    return -(y * np.log(p) + (1 - y) * np.log(1.0 - p))


def _backward_batch(model: MlpModel, cache, probs: np.ndarray,
                    y: np.ndarray) -> list[np.ndarray]:
    """Gradients of mean BCE over the batch, ordered like model.params()."""
    B = len(y)
    # Sigmoid + BCE collapse: dL/dz_out = p - y.
    delta = (probs - y[:, None]) / B
    grads: list[np.ndarray] = []
    for k in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[k]
        a_in, z = cache[k]
        if layer.activation == RELU:
            delta = delta * (z > 0)
        # Sigmoid handled at the output via the collapsed delta; identity is a no-op.
        gW = delta.T @ a_in
        gb = delta.sum(axis=0)
        grads.insert(0, gb)
        grads.insert(0, gW)
        if k:
            delta = delta @ layer.W
    return grads


def mlp_backward(model: MlpModel, x: FeatureVector, y: int) -> list[np.ndarray]:
    """Exact analytic gradients of bce_loss(mlp_forward(x), y)."""
    if x.dimension != model.input_dim:
        raise ShapeError(f"input dim {x.dimension} != model dim {model.input_dim}")
    X = x.to_dense()[None, :]
    cache, probs = _forward_batch(model, X)
    return _backward_batch(model, cache, probs, np.array([float(y)]))


def predict_proba(model: MlpModel, X: np.ndarray) -> np.ndarray:
    _, out = _forward_batch(model, X)
    return out[:, 0]


def _dense_matrix(examples: list[tuple[FeatureVector, int]]):
    dim = examples[0][0].dimension
    X = np.zeros((len(examples), dim))
    y = np.zeros(len(examples))
    for row, (vec, label) in enumerate(examples):
        if vec.dimension != dim:
            raise ShapeError("inconsistent feature dimensions in training set")
        X[row, vec.indices] = vec.values
        y[row] = label
    return X, y


def _mean_bce(probs: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(probs, _CLAMP, 1.0 - _CLAMP)
    return float(np.mean(-(y * np.log(p) + (1 - y) * np.log(1.0 - p))))


def train_mlp(examples: list[tuple[FeatureVector, int]], cfg: TrainConfig,
              hidden: tuple[int, ...] = DEFAULT_HIDDEN):
    """Mini-batch Adam on BCE with early stopping on validation loss.

    Returns the best-validation-loss snapshot and a training report.
    Deterministic for a fixed seed.
    """
    labels = {label for _, label in examples}
    if len(examples) < 2 or labels != {0, 1}:
        raise DegenerateData("training set must contain both classes")
    X, y = _dense_matrix(examples)
    rng = np.random.default_rng(cfg.seed)
    model = new_mlp(X.shape[1], hidden=hidden, seed=cfg.seed)
    train_idx, val_idx = validation_split(len(y), cfg.validation_fraction, rng)
    if len(train_idx) == 0:
        raise DegenerateData("validation split left no training examples")
    state = AdamState.for_params(model.params(), alpha=cfg.learning_rate)
    stopper = EarlyStopping(patience=cfg.early_stop_patience)
    best_params = [p.copy() for p in model.params()]
    best_epoch = 0
    epochs_run = 0

    for epoch in range(1, cfg.max_epochs + 1):
        epochs_run = epoch
        order = rng.permutation(train_idx)
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            cache, probs = _forward_batch(model, X[batch])
            grads = _backward_batch(model, cache, probs, y[batch])
            model.set_params(adam_step(model.params(), grads, state))
        # Validation loss drives early stopping; fall back to train loss
        # when the split is empty.
        monitor_idx = val_idx if len(val_idx) else train_idx
        loss = _mean_bce(predict_proba(model, X[monitor_idx]), y[monitor_idx])
        if stopper.update(loss):
            best_params = [p.copy() for p in model.params()]
            best_epoch = epoch
        if stopper.should_stop:
            break

    model.set_params(best_params)
    train_probs = predict_proba(model, X[train_idx])
    report = {
        "epochs_run": epochs_run,
        "best_epoch": best_epoch,
        "train_loss": _mean_bce(train_probs, y[train_idx]),
        "train_accuracy": float(np.mean((train_probs >= 0.5) == y[train_idx])),
    }
    if len(val_idx):
        val_probs = predict_proba(model, X[val_idx])
        report["val_loss"] = _mean_bce(val_probs, y[val_idx])
        report["val_accuracy"] = float(np.mean((val_probs >= 0.5) == y[val_idx]))
    return model, report
