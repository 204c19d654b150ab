"""Gradient-boosted trees with a second-order regularized objective.

Each round fits one regression tree per class to the softmax gradient and
hessian of the log loss. Leaf weights are -G/(H + lambda); splits must
improve the regularized gain. The recorded training objective is
log loss + Omega, where Omega charges gamma per leaf and (lambda/2) times
the squared deployed leaf increment (the learning-rate-scaled weight that
actually enters the model), accumulated over all rounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np

from ..domain import LABELS, HealthLabel
from ..errors import ValidationError
from .dataset import Dataset

N_CLASSES = 3

#: A round whose three trees are all single leaves with deployed weights
#: below this magnitude cannot change any prediction; training stops.
_STAGNATION_EPS = 1e-12


@dataclass(frozen=True)
class GbtConfig:
    n_rounds: int = 100
    learning_rate: float = 0.3
    reg_lambda: float = 1.0
    gamma: float = 0.0
    max_depth: int = 4

    def __post_init__(self) -> None:
        if self.n_rounds < 0:
            raise ValidationError(f"n_rounds must be >= 0, got {self.n_rounds}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValidationError(
                f"learning_rate must lie in (0, 1], got {self.learning_rate}"
            )
        if self.reg_lambda < 0 or self.gamma < 0:
            raise ValidationError("reg_lambda and gamma must be >= 0")
        if self.max_depth < 0:
            raise ValidationError(f"max_depth must be >= 0, got {self.max_depth}")


@dataclass(frozen=True)
class RegLeaf:
    weight: float


@dataclass(frozen=True)
class RegSplit:
    feature_index: int
    threshold: float
    left: "RegNode"
    right: "RegNode"


RegNode = Union[RegLeaf, RegSplit]


@dataclass(frozen=True)
class RegTree:
    root: RegNode

    def predict(self, x: np.ndarray) -> float:
        node = self.root
        while isinstance(node, RegSplit):
            node = node.left if x[node.feature_index] <= node.threshold else node.right
        return node.weight

    def predict_many(self, features: np.ndarray) -> np.ndarray:
        out = np.empty(features.shape[0])
        _apply(self.root, features, np.arange(features.shape[0]), out)
        return out

    def leaves(self) -> Iterator[RegLeaf]:
        yield from _iter_leaves(self.root)

    @property
    def is_stump_leaf(self) -> bool:
        return isinstance(self.root, RegLeaf)


def _apply(node: RegNode, features: np.ndarray, idx: np.ndarray, out: np.ndarray) -> None:
    if isinstance(node, RegLeaf):
        out[idx] = node.weight
        return
    mask = features[idx, node.feature_index] <= node.threshold
    _apply(node.left, features, idx[mask], out)
    _apply(node.right, features, idx[~mask], out)


def _iter_leaves(node: RegNode) -> Iterator[RegLeaf]:
    if isinstance(node, RegLeaf):
        yield node
    else:
        yield from _iter_leaves(node.left)
        yield from _iter_leaves(node.right)


@dataclass(frozen=True)
class BoostedModel:
    rounds: tuple[tuple[RegTree, RegTree, RegTree], ...]
    config: GbtConfig
    base_score: tuple[float, float, float]
    objective_history: tuple[float, ...]
    n_features: int

    def decision_scores(self, features: np.ndarray) -> np.ndarray:
        scores = np.tile(np.asarray(self.base_score), (features.shape[0], 1))
        for trees in self.rounds:
            for c, tree in enumerate(trees):
                scores[:, c] += self.config.learning_rate * tree.predict_many(features)
        return scores

    def predict(self, x: np.ndarray) -> HealthLabel:
        return predict_gbt(self, x)

    def predict_many(self, features: np.ndarray) -> np.ndarray:
        return np.argmax(self.decision_scores(features), axis=1).astype(np.int8)


def softmax(scores: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax."""
    scores = np.asarray(scores, dtype=float)
    shifted = scores - scores.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def softmax_grad_hess(
    scores: np.ndarray, true_class: int
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient and hessian diagonal of log loss at the given scores:
    g_c = p_c - [c == true], h_c = p_c (1 - p_c)."""
    p = softmax(np.asarray(scores, dtype=float))
    g = p.copy()
    g[true_class] -= 1.0
    return g, p * (1.0 - p)


def _log_loss(scores: np.ndarray, targets: np.ndarray) -> float:
    shifted = scores - scores.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    return float(np.sum(log_norm - shifted[np.arange(len(targets)), targets]))


def _leaf_weight(g_sum: float, h_sum: float, reg_lambda: float) -> float:
    den = h_sum + reg_lambda
    return 0.0 if den <= 0.0 else -g_sum / den


def _score_term(g: np.ndarray, h: np.ndarray, reg_lambda: float) -> np.ndarray:
    den = h + reg_lambda
    out = np.zeros_like(np.asarray(g, dtype=float))
    np.divide(g * g, den, out=out, where=den > 0)
    return out


def _grow_reg(
    features: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    depth: int,
    config: GbtConfig,
) -> RegNode:
    g_sum = float(g.sum())
    h_sum = float(h.sum())
    leaf = RegLeaf(weight=_leaf_weight(g_sum, h_sum, config.reg_lambda))
    n = g.shape[0]
    if depth >= config.max_depth or n < 2:
        return leaf

    parent_term = float(_score_term(np.array(g_sum), np.array(h_sum), config.reg_lambda))
    best_gain = 0.0
    best_feature = -1
    best_threshold = 0.0
    for feature in range(features.shape[1]):
        order = np.argsort(features[:, feature], kind="stable")
        xs = features[order, feature]
        g_left = np.cumsum(g[order])[:-1]
        h_left = np.cumsum(h[order])[:-1]
        gain = 0.5 * (
            _score_term(g_left, h_left, config.reg_lambda)
            + _score_term(g_sum - g_left, h_sum - h_left, config.reg_lambda)
            - parent_term
        ) - config.gamma
        gain[xs[1:] <= xs[:-1]] = -np.inf
        pos = int(np.argmax(gain))
        if gain[pos] > best_gain:
            best_gain = float(gain[pos])
            best_feature = feature
            best_threshold = float((xs[pos] + xs[pos + 1]) / 2.0)
    if best_feature < 0:
        return leaf

    mask = features[:, best_feature] <= best_threshold
    return RegSplit(
        feature_index=best_feature,
        threshold=best_threshold,
        left=_grow_reg(features[mask], g[mask], h[mask], depth + 1, config),
        right=_grow_reg(features[~mask], g[~mask], h[~mask], depth + 1, config),
    )


def _omega(trees: tuple[RegTree, ...], config: GbtConfig) -> float:
    total = 0.0
    for tree in trees:
        for leaf in tree.leaves():
            deployed = config.learning_rate * leaf.weight
            total += config.gamma + 0.5 * config.reg_lambda * deployed * deployed
    return total


def train_gbt(data: Dataset, config: GbtConfig) -> BoostedModel:
    """Boost for up to n_rounds, stopping early once a round degenerates
    to three no-op leaves. The objective history has one entry for the
    base scores plus one per trained round."""
    counts = data.class_counts()
    priors = np.clip(counts / data.n, 1e-12, None)
    base = np.log(priors)
    scores = np.tile(base, (data.n, 1))
    onehot = np.zeros((data.n, N_CLASSES))
    onehot[np.arange(data.n), data.targets] = 1.0

    rounds: list[tuple[RegTree, RegTree, RegTree]] = []
    omega_total = 0.0
    history = [_log_loss(scores, data.targets)]
    for _ in range(config.n_rounds):
        p = softmax(scores)
        grad = p - onehot
        hess = p * (1.0 - p)
        trees = tuple(
            RegTree(root=_grow_reg(data.features, grad[:, c], hess[:, c], 0, config))
            for c in range(N_CLASSES)
        )
        for c, tree in enumerate(trees):
            scores[:, c] += config.learning_rate * tree.predict_many(data.features)
        omega_total += _omega(trees, config)
        rounds.append(trees)
        history.append(_log_loss(scores, data.targets) + omega_total)
        if all(t.is_stump_leaf for t in trees) and all(
            abs(config.learning_rate * t.root.weight) < _STAGNATION_EPS for t in trees
        ):
            break

    return BoostedModel(
        rounds=tuple(rounds),
        config=config,
        base_score=(float(base[0]), float(base[1]), float(base[2])),
        objective_history=tuple(history),
        n_features=data.n_features,
    )


def predict_gbt(model: BoostedModel, x: np.ndarray) -> HealthLabel:
    """Argmax of the boosted class scores; ties resolve to the lowest
    severity."""
    x = np.asarray(x, dtype=float)
    scores = np.asarray(model.base_score, dtype=float).copy()
    for trees in model.rounds:
        for c, tree in enumerate(trees):
            scores[c] += model.config.learning_rate * tree.predict(x)
    return LABELS[int(np.argmax(scores))]
