"""LSTM sentiment stage: embedding table, one LSTM layer, dropout, and a
small dense head, with forward and backpropagation-through-time written
out by hand.

Sequences are zero-pre-padded (index 0), so the final hidden state sits
right after the real tokens. Embedding row 0 is frozen at zero to keep
padding inert; the forget-gate bias starts at +1 so early training does
not dump cell state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateData, ShapeError, StateError
from .features import TokenSequence
from .optim import AdamState, EarlyStopping, TrainConfig, adam_step, validation_split

GRAD_CLIP = 5.0
DEFAULT_EMBED = 64
DEFAULT_HIDDEN = 64
DEFAULT_HEAD = 32

_PARAM_NAMES = ("E", "W_i", "b_i", "W_f", "b_f", "W_g", "b_g", "W_o", "b_o",
                "W1", "b1", "W2", "b2")


@dataclass
class LstmParams:
    E: np.ndarray      # [vocab, d_e], row 0 frozen at zero
    W_i: np.ndarray    # [h, d_e + h], applied to [x_t ; h_prev]
    b_i: np.ndarray
    W_f: np.ndarray
    b_f: np.ndarray
    W_g: np.ndarray
    b_g: np.ndarray
    W_o: np.ndarray
    b_o: np.ndarray
    W1: np.ndarray     # head ReLU layer [head, h]
    b1: np.ndarray
    W2: np.ndarray     # sigmoid unit [1, head]
    b2: np.ndarray
    dropout_rate: float = 0.5

    @property
    def hidden(self) -> int:
        return self.W_i.shape[0]

    @property
    def embed_dim(self) -> int:
        return self.E.shape[1]

    def params(self) -> list[np.ndarray]:
        return [getattr(self, name) for name in _PARAM_NAMES]

    def set_params(self, values: list[np.ndarray]):
        for name, value in zip(_PARAM_NAMES, values):
            setattr(self, name, value)


def new_lstm(vocab_size: int, embed_dim: int = DEFAULT_EMBED,
             hidden: int = DEFAULT_HIDDEN, head: int = DEFAULT_HEAD,
             dropout_rate: float = 0.5, seed: int = 0) -> LstmParams:
    rng = np.random.default_rng(seed)
    E = rng.normal(0.0, 0.1, size=(vocab_size, embed_dim))
    E[0] = 0.0
    gate_std = np.sqrt(1.0 / (embed_dim + hidden))

    def gate():
        return rng.normal(0.0, gate_std, size=(hidden, embed_dim + hidden))

    return LstmParams(
        E=E,
        W_i=gate(), b_i=np.zeros(hidden),
        W_f=gate(), b_f=np.ones(hidden),
        W_g=gate(), b_g=np.zeros(hidden),
        W_o=gate(), b_o=np.zeros(hidden),
        W1=rng.normal(0.0, np.sqrt(2.0 / hidden), size=(head, hidden)),
        b1=np.zeros(head),
        W2=rng.normal(0.0, np.sqrt(1.0 / head), size=(1, head)),
        b2=np.zeros(1),
        dropout_rate=dropout_rate,
    )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def lstm_cell(x_t: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray,
              params: LstmParams):
    """One step of the standard gate equations; returns (h_t, c_t).

    Accepts single vectors or [batch, dim] arrays.
    """
    if x_t.shape[-1] != params.embed_dim or h_prev.shape[-1] != params.hidden:
        raise ShapeError("cell input dims do not match parameters")
    xh = np.concatenate([x_t, h_prev], axis=-1)
    i = _sigmoid(xh @ params.W_i.T + params.b_i)
    f = _sigmoid(xh @ params.W_f.T + params.b_f)
    g = np.tanh(xh @ params.W_g.T + params.b_g)
    o = _sigmoid(xh @ params.W_o.T + params.b_o)
    c_t = f * c_prev + i * g
    h_t = o * np.tanh(c_t)
    return h_t, c_t


@dataclass
class LstmTrace:
    """Per-timestep activations cached for BPTT; discarded after backward."""

    ids: np.ndarray                      # [B, L]
    steps: list[dict] = field(default_factory=list)
    h_last: Optional[np.ndarray] = None
    dropout_mask: Optional[np.ndarray] = None
    h_dropped: Optional[np.ndarray] = None
    z1: Optional[np.ndarray] = None
    a1: Optional[np.ndarray] = None
    probs: Optional[np.ndarray] = None


def lstm_forward(params: LstmParams, ids: np.ndarray, mode: str = "infer",
                 rng: Optional[np.random.Generator] = None):
    """Run the net over a [batch, L] index array. Returns (probs, trace).

    Dropout (inverted scaling) applies to the final hidden state in train
    mode only, so inference needs no rescaling.
    """
    if mode not in ("train", "infer"):
        raise ValueError(f"unknown mode: {mode}")
    ids = np.atleast_2d(ids)
    if ids.max(initial=0) >= params.E.shape[0]:
        raise ShapeError("token index outside embedding table")
    B, L = ids.shape
    h = np.zeros((B, params.hidden))
    c = np.zeros((B, params.hidden))
    trace = LstmTrace(ids=ids)
    for t in range(L):
        x_t = params.E[ids[:, t]]
        xh = np.concatenate([x_t, h], axis=-1)
        i = _sigmoid(xh @ params.W_i.T + params.b_i)
        f = _sigmoid(xh @ params.W_f.T + params.b_f)
        g = np.tanh(xh @ params.W_g.T + params.b_g)
        o = _sigmoid(xh @ params.W_o.T + params.b_o)
        c_new = f * c + i * g
        tanh_c = np.tanh(c_new)
        h_new = o * tanh_c
        trace.steps.append({"xh": xh, "i": i, "f": f, "g": g, "o": o,
                            "c_prev": c, "tanh_c": tanh_c})
        h, c = h_new, c_new

    trace.h_last = h
    if mode == "train" and params.dropout_rate > 0:
        if rng is None:
            rng = np.random.default_rng(0)
        keep = 1.0 - params.dropout_rate
        mask = (rng.random(h.shape) < keep) / keep
    else:
        mask = np.ones_like(h)
    trace.dropout_mask = mask
    trace.h_dropped = h * mask
    trace.z1 = trace.h_dropped @ params.W1.T + params.b1
    trace.a1 = np.maximum(trace.z1, 0.0)
    trace.probs = _sigmoid(trace.a1 @ params.W2.T + params.b2)[:, 0]
    return trace.probs, trace


def lstm_predict(params: LstmParams, seq: TokenSequence, mode: str = "infer",
                 rng: Optional[np.random.Generator] = None) -> float:
    probs, _ = lstm_forward(params, seq.indices[None, :], mode=mode, rng=rng)
    return float(probs[0])


def clip_global_norm(grads: list[np.ndarray], max_norm: float = GRAD_CLIP) -> list[np.ndarray]:
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads))
    if total > max_norm:
        scale = max_norm / total
        return [g * scale for g in grads]
    return grads


def lstm_backward(params: LstmParams, trace: Optional[LstmTrace],
                  y: np.ndarray) -> list[np.ndarray]:
    """Analytic gradients of mean BCE through the head, dropout mask, all
    timesteps, and the embedding lookups; clipped to global norm 5.

    Gradient order matches LstmParams.params(). Embedding row 0 stays
    zero (frozen padding row).
    """
    if trace is None or trace.probs is None:
        raise StateError("forward trace required before backward")
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    B = len(y)
    d_e, h_dim = params.embed_dim, params.hidden

    dz2 = (trace.probs[:, None] - y[:, None]) / B
    gW2 = dz2.T @ trace.a1
    gb2 = dz2.sum(axis=0)
    dz1 = (dz2 @ params.W2) * (trace.z1 > 0)
    gW1 = dz1.T @ trace.h_dropped
    gb1 = dz1.sum(axis=0)
    dh = (dz1 @ params.W1) * trace.dropout_mask

    gE = np.zeros_like(params.E)
    gates = {name: (np.zeros_like(getattr(params, "W_" + name)),
                    np.zeros_like(getattr(params, "b_" + name)))
             for name in ("i", "f", "g", "o")}
    dc = np.zeros((B, h_dim))
    for t in range(len(trace.steps) - 1, -1, -1):
        step = trace.steps[t]
        i, f, g, o = step["i"], step["f"], step["g"], step["o"]
        tanh_c = step["tanh_c"]
        do = dh * tanh_c
        dc = dc + dh * o * (1.0 - tanh_c ** 2)
        di = dc * g
        df = dc * step["c_prev"]
        dg = dc * i
        dzs = {
            "i": di * i * (1.0 - i),
            "f": df * f * (1.0 - f),
            "g": dg * (1.0 - g ** 2),
            "o": do * o * (1.0 - o),
        }
        dxh = np.zeros_like(step["xh"])
        for name, dz in dzs.items():
            gW, gb = gates[name]
            gW += dz.T @ step["xh"]
            gb += dz.sum(axis=0)
            dxh += dz @ getattr(params, "W_" + name)
        np.add.at(gE, trace.ids[:, t], dxh[:, :d_e])
        dh = dxh[:, d_e:]
        dc = dc * f
    gE[0] = 0.0

    grads = [gE,
             gates["i"][0], gates["i"][1],
             gates["f"][0], gates["f"][1],
             gates["g"][0], gates["g"][1],
             gates["o"][0], gates["o"][1],
             gW1, gb1, gW2, gb2]
    return clip_global_norm(grads)


def predict_batch(params: LstmParams, ids: np.ndarray) -> np.ndarray:
    probs, _ = lstm_forward(params, ids, mode="infer")
    return probs


def _mean_bce(probs: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(probs, 1e-7, 1.0 - 1e-7)
    return float(np.mean(-(y * np.log(p) + (1 - y) * np.log(1.0 - p))))


def train_lstm(examples: list[tuple[TokenSequence, int]], cfg: TrainConfig,
               vocab_size: Optional[int] = None, embed_dim: int = DEFAULT_EMBED,
               hidden: int = DEFAULT_HIDDEN, head: int = DEFAULT_HEAD,
               dropout_rate: float = 0.5):
    """Mini-batch Adam with BCE, norm clipping, and early stopping.

    Deterministic for a fixed seed: shuffle and dropout streams are both
    derived from cfg.seed.
    """
    labels = {label for _, label in examples}
    if len(examples) < 2 or labels != {0, 1}:
        raise DegenerateData("training set must contain both classes")
    ids = np.stack([seq.indices for seq, _ in examples])
    y = np.array([label for _, label in examples], dtype=np.float64)
    if vocab_size is None:
        vocab_size = int(ids.max()) + 1

    rng = np.random.default_rng(cfg.seed)
    dropout_rng = np.random.default_rng(cfg.seed + 1)
    params = new_lstm(vocab_size, embed_dim=embed_dim, hidden=hidden, head=head,
                      dropout_rate=dropout_rate, seed=cfg.seed)
    train_idx, val_idx = validation_split(len(y), cfg.validation_fraction, rng)
    if len(train_idx) == 0:
        raise DegenerateData("validation split left no training examples")
    state = AdamState.for_params(params.params(), alpha=cfg.learning_rate)
    stopper = EarlyStopping(patience=cfg.early_stop_patience)
    best = [p.copy() for p in params.params()]
    best_epoch = 0
    epochs_run = 0

    for epoch in range(1, cfg.max_epochs + 1):
        epochs_run = epoch
        order = rng.permutation(train_idx)
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            _, trace = lstm_forward(params, ids[batch], mode="train", rng=dropout_rng)
            grads = lstm_backward(params, trace, y[batch])
            params.set_params(adam_step(params.params(), grads, state))
        monitor_idx = val_idx if len(val_idx) else train_idx
        loss = _mean_bce(predict_batch(params, ids[monitor_idx]), y[monitor_idx])
        if stopper.update(loss):
            best = [p.copy() for p in params.params()]
            best_epoch = epoch
        if stopper.should_stop:
            break

    params.set_params(best)
    train_probs = predict_batch(params, ids[train_idx])
    report = {
        "epochs_run": epochs_run,
        "best_epoch": best_epoch,
        "train_loss": _mean_bce(train_probs, y[train_idx]),
        "train_accuracy": float(np.mean((train_probs >= 0.5) == y[train_idx])),
    }
    if len(val_idx):
        val_probs = predict_batch(params, ids[val_idx])
        report["val_loss"] = _mean_bce(val_probs, y[val_idx])
        report["val_accuracy"] = float(np.mean((val_probs >= 0.5) == y[val_idx]))
    return params, report
