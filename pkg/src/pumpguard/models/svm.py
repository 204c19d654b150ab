"""Linear one-vs-rest SVM trained by full-batch subgradient descent.

Features are standardized with statistics frozen at training time. Each
class gets its own hinge-loss problem min 0.5 ||w||^2 + C sum hinge; the
1/(C t) step schedule is applied to the sample-averaged subgradient (the
raw sum-form subgradient scales with the sample count and overshoots).
Full-batch descent is fully deterministic, so the config seed is reserved
for stochastic variants. No class weighting is applied; minority classes
are deliberately left at the mercy of the imbalance, which is the
behaviour the evaluation stage documents.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..domain import LABELS, HealthLabel
from ..errors import DataError, ValidationError
from .dataset import Dataset

N_CLASSES = 3


@dataclass(frozen=True)
class SvmConfig:
    C: float = 1.0
    epochs: int = 200
    seed: int = 42

    def __post_init__(self) -> None:
        if self.C <= 0:
            raise ValidationError(f"C must be > 0, got {self.C}")
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")


@dataclass(frozen=True, eq=False)
class SvmModel:
    weights: np.ndarray
    bias: np.ndarray
    feature_mean: np.ndarray
    feature_std: np.ndarray
    config: SvmConfig
    objective_history: tuple[tuple[float, ...], ...]

    @property
    def n_features(self) -> int:
        return int(self.weights.shape[1])

    def standardize(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=float) - self.feature_mean) / self.feature_std

    def decision_scores(self, features: np.ndarray) -> np.ndarray:
        return self.standardize(features) @ self.weights.T + self.bias

    def predict(self, x: np.ndarray) -> HealthLabel:
        return predict_svm(self, x)

    def predict_many(self, features: np.ndarray) -> np.ndarray:
        return np.argmax(self.decision_scores(features), axis=1).astype(np.int8)


def hinge_objective(
    weights: np.ndarray, bias: float, features: np.ndarray, y: np.ndarray, C: float
) -> float:
    """0.5 ||w||^2 + C sum max(0, 1 - y (w.x + b)) over the samples."""
    margins = y * (features @ weights + bias)
    return float(0.5 * np.dot(weights, weights) + C * np.maximum(0.0, 1.0 - margins).sum())


def train_svm(data: Dataset, config: SvmConfig) -> SvmModel:
    """One-vs-rest training; records the per-epoch objective per class
    (epochs + 1 entries, the first at the zero initializer)."""
    present = np.unique(data.targets)
    if present.size < 2:
        raise DataError(
            f"SVM training needs at least 2 classes, got only label {int(present[0])}"
        )
    mean = data.features.mean(axis=0)
    std = data.features.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    z = (data.features - mean) / std

    weights = np.zeros((N_CLASSES, data.n_features))
    bias = np.zeros(N_CLASSES)
    histories: list[tuple[float, ...]] = []
    for c in range(N_CLASSES):
        y = np.where(data.targets == c, 1.0, -1.0)
        w = np.zeros(data.n_features)
        b = 0.0
        history = [hinge_objective(w, b, z, y, config.C)]
        for t in range(1, config.epochs + 1):
            margins = y * (z @ w + b)
            violating = margins < 1.0
            grad_w = w - config.C * (y[violating, None] * z[violating]).sum(axis=0)
            grad_b = -config.C * y[violating].sum()
            step = 1.0 / (config.C * t * data.n)
            w = w - step * grad_w
            b = b - step * grad_b
            history.append(hinge_objective(w, b, z, y, config.C))
        weights[c] = w
        bias[c] = b
        histories.append(tuple(history))

    return SvmModel(
        weights=weights,
        bias=bias,
        feature_mean=mean,
        feature_std=std,
        config=config,
        objective_history=tuple(histories),
    )


def predict_svm(model: SvmModel, x: np.ndarray) -> HealthLabel:
    """Argmax of the per-class decision values on the standardized input;
    ties resolve to the lowest severity."""
    scores = model.decision_scores(np.asarray(x, dtype=float).reshape(1, -1))[0]
    return LABELS[int(np.argmax(scores))]
