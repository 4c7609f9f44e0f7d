"""Adam optimizer and shared training configuration.

All three trainable stages (feed-forward net, LSTM, ordinal gate) update
their parameters through `adam_step`, so the bias-corrected moment math
lives in exactly one place.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError


@dataclass
class AdamState:
    """Per-parameter first/second moment accumulators and step count."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: list[np.ndarray], alpha: float = 1e-3) -> "AdamState":
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            alpha=alpha,
        )


def adam_step(params: list[np.ndarray], grads: list[np.ndarray],
              state: AdamState) -> list[np.ndarray]:
    """One Adam update. Returns the new parameter arrays; the state's
    moments and step count are advanced in place.

    m <- b1*m + (1-b1)*g ; v <- b2*v + (1-b2)*g^2 ; after bias correction,
    theta <- theta - alpha * m_hat / (sqrt(v_hat) + eps).
    """
    if len(params) != len(grads) or any(p.shape != g.shape for p, g in zip(params, grads)):
        raise ShapeError("gradient shapes do not match parameters")
    state.t += 1
    c1 = 1.0 - state.beta1 ** state.t
    c2 = 1.0 - state.beta2 ** state.t
    out = []
    for k, (p, g) in enumerate(zip(params, grads)):
        state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g
        state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g
        m_hat = state.m[k] / c1
        v_hat = state.v[k] / c2
        out.append(p - state.alpha * m_hat / (np.sqrt(v_hat) + state.eps))
    return out


@dataclass
class TrainConfig:
    """Knobs shared by every trainer."""

    batch_size: int = 32
    max_epochs: int = 50
    early_stop_patience: int = 3
    seed: int = 0
    validation_fraction: float = 0.1
    learning_rate: float = 1e-3

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0 <= self.validation_fraction < 1:
            raise ValueError("validation_fraction must lie in [0,1)")


def validation_split(n: int, fraction: float, rng: np.random.Generator):
    """Deterministic index split; validation may be empty."""
    order = rng.permutation(n)
    n_val = int(n * fraction)
    return order[n_val:], order[:n_val]


@dataclass
class EarlyStopping:
    """Track the best validation loss; stop after `patience` stale epochs."""

    patience: int = 3
    best: float = field(default=float("inf"))
    stale: int = 0

    def update(self, loss: float) -> bool:
        """Record an epoch's validation loss; True if it improved."""
        if loss < self.best - 1e-12:
            self.best = loss
            self.stale = 0
            return True
        self.stale += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.stale >= self.patience
