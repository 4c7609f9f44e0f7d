"""Linear SVM stage trained with the Pegasos stochastic subgradient method.

The bias lives in the appended always-1 feature, so the whole model is a
single weight vector. Stage scores for cascade thresholding are the
sigmoid of the signed margin, which is monotone in the margin and
comparable to the probabilistic stages. The decision tie at exactly 0
breaks toward negative (fail-closed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateData, ShapeError
from .features import FeatureVector

DEFAULT_LAMBDA = 1e-4


@dataclass
class SvmModel:
    w: np.ndarray
    lam: float = DEFAULT_LAMBDA
    epochs_trained: int = 0


def svm_decision(model: SvmModel, x: FeatureVector) -> float:
    """Signed margin w . x."""
    if x.dimension != len(model.w):
        raise ShapeError(f"input dim {x.dimension} != model dim {len(model.w)}")
    return float(model.w[x.indices] @ x.values)


def svm_predict(model: SvmModel, x: FeatureVector) -> int:
    return 1 if svm_decision(model, x) > 0 else 0


def svm_score(model: SvmModel, x: FeatureVector) -> float:
    """Margin mapped to [0,1] for threshold comparison."""
    d = svm_decision(model, x)
    return float(1.0 / (1.0 + np.exp(-d))) if d >= 0 else float(np.exp(d) / (1.0 + np.exp(d)))


def svm_objective(w: np.ndarray, examples: list[tuple[FeatureVector, int]],
                  lam: float) -> float:
    """(lam/2)||w||^2 + mean hinge loss, labels {0,1} read as {-1,+1}."""
    hinge = 0.0
    for vec, label in examples:
        y = 1.0 if label == 1 else -1.0
        hinge += max(0.0, 1.0 - y * float(w[vec.indices] @ vec.values))
    return 0.5 * lam * float(w @ w) + hinge / len(examples)


def train_svm(examples: list[tuple[FeatureVector, int]], lam: float = DEFAULT_LAMBDA,
              epochs: int = 20, seed: int = 0) -> SvmModel:
    """Pegasos: at global step t with example (x, y), eta = 1/(lam*t);
    w <- (1-eta*lam)w + eta*y*x on a margin violation, else just the decay.

    Examples are visited in a fresh seeded shuffle each epoch, so training
    is deterministic for a fixed seed. The optional projection step of the
    original method is omitted; it is not needed at this scale.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    labels = {label for _, label in examples}
    if labels != {0, 1}:
        raise DegenerateData("training set must contain both classes")
    dim = examples[0][0].dimension
    if any(vec.dimension != dim for vec, _ in examples):
        raise ShapeError("inconsistent feature dimensions in training set")

    rng = np.random.default_rng(seed)
    w = np.zeros(dim)
    t = 0
    for _ in range(epochs):
        for idx in rng.permutation(len(examples)):
            t += 1
            vec, label = examples[idx]
            y = 1.0 if label == 1 else -1.0
            eta = 1.0 / (lam * t)
            # Margin test uses the pre-update weights.
            violated = y * float(w[vec.indices] @ vec.values) < 1.0
            w *= 1.0 - eta * lam
            if violated:
                w[vec.indices] += eta * y * vec.values
    return SvmModel(w=w, lam=lam, epochs_trained=epochs)
