"""CART-style decision trees with Gini splits and random feature subsets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from ..domain import LABELS, HealthLabel
from ..errors import ValidationError
from .dataset import Dataset


@dataclass(frozen=True)
class TreeParams:
    max_depth: int = 12
    min_leaf_samples: int = 2
    features_per_split: int = 3

    def __post_init__(self) -> None:
        if self.max_depth < 0:
            raise ValidationError(f"max_depth must be >= 0, got {self.max_depth}")
        if self.min_leaf_samples < 1:
            raise ValidationError(
                f"min_leaf_samples must be >= 1, got {self.min_leaf_samples}"
            )
        if self.features_per_split < 1:
            raise ValidationError(
                f"features_per_split must be >= 1, got {self.features_per_split}"
            )


@dataclass(frozen=True)
class Leaf:
    class_counts: tuple[int, int, int]

    @property
    def label(self) -> HealthLabel:
        # First maximum wins, so count ties resolve to the lowest severity.
        return LABELS[int(np.argmax(self.class_counts))]


@dataclass(frozen=True)
class Split:
    feature_index: int
    threshold: float
    left: "Node"
    right: "Node"


Node = Union[Leaf, Split]


@dataclass(frozen=True)
class DecisionTree:
    root: Node
    params: TreeParams
    n_features: int

    def predict(self, x: np.ndarray) -> HealthLabel:
        node = self.root
        while isinstance(node, Split):
            node = node.left if x[node.feature_index] <= node.threshold else node.right
        return node.label

    def predict_many(self, features: np.ndarray) -> np.ndarray:
        out = np.empty(features.shape[0], dtype=np.int8)
        _apply(self.root, features, np.arange(features.shape[0]), out)
        return out

    def depth(self) -> int:
        return _depth(self.root)

    def leaf_count(self) -> int:
        return _leaves(self.root)


def _apply(node: Node, features: np.ndarray, idx: np.ndarray, out: np.ndarray) -> None:
    if isinstance(node, Leaf):
        out[idx] = node.label.value
        return
    mask = features[idx, node.feature_index] <= node.threshold
    _apply(node.left, features, idx[mask], out)
    _apply(node.right, features, idx[~mask], out)


def _depth(node: Node) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(_depth(node.left), _depth(node.right))


def _leaves(node: Node) -> int:
    if isinstance(node, Leaf):
        return 1
    return _leaves(node.left) + _leaves(node.right)


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    fractions = counts / total
    return float(1.0 - np.dot(fractions, fractions))


def _best_split_on_feature(
    values: np.ndarray, targets: np.ndarray, min_leaf: int
) -> tuple[float, float] | None:
    """Best (weighted child Gini, midpoint threshold) for one feature, or
    None when no valid split position exists."""
    n = values.shape[0]
    order = np.argsort(values, kind="stable")
    xs = values[order]
    onehot = np.zeros((n, 3))
    onehot[np.arange(n), targets[order]] = 1.0
    left = np.cumsum(onehot, axis=0)[:-1]
    total = left[-1] + onehot[-1]
    right = total - left
    n_left = np.arange(1, n, dtype=float)
    n_right = n - n_left
    valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return None
    gini_left = 1.0 - np.sum((left / n_left[:, None]) ** 2, axis=1)
    gini_right = 1.0 - np.sum((right / n_right[:, None]) ** 2, axis=1)
    weighted = (n_left * gini_left + n_right * gini_right) / n
    weighted[~valid] = np.inf
    best = int(np.argmin(weighted))
    threshold = (xs[best] + xs[best + 1]) / 2.0
    return float(weighted[best]), threshold


def _grow(
    features: np.ndarray,
    targets: np.ndarray,
    depth: int,
    params: TreeParams,
    rng: np.random.Generator,
) -> Node:
    counts = np.bincount(targets, minlength=3)
    n = targets.shape[0]
    leaf = Leaf(class_counts=(int(counts[0]), int(counts[1]), int(counts[2])))
    if (
        depth >= params.max_depth
        or n < 2 * params.min_leaf_samples
        or counts.max() == n
    ):
        return leaf

    n_features = features.shape[1]
    subset = rng.choice(
        n_features, size=min(params.features_per_split, n_features), replace=False
    )
    parent = _gini(counts)
    best_feature = -1
    best_weighted = np.inf
    best_threshold = 0.0
    for feature in subset:
        candidate = _best_split_on_feature(
            features[:, feature], targets, params.min_leaf_samples
        )
        if candidate is not None and candidate[0] < best_weighted:
            best_weighted, best_threshold = candidate
            best_feature = int(feature)
    if best_feature < 0 or parent - best_weighted <= 0.0:
        return leaf

    mask = features[:, best_feature] <= best_threshold
    # Children are grown left first; every node draws its feature subset
    # from the same stream, so the tree is a pure function of (data, rng).
    left = _grow(features[mask], targets[mask], depth + 1, params, rng)
    right = _grow(features[~mask], targets[~mask], depth + 1, params, rng)
    return Split(
        feature_index=best_feature, threshold=best_threshold, left=left, right=right
    )


def train_tree(data: Dataset, params: TreeParams, rng: np.random.Generator) -> DecisionTree:
    """Grow a tree greedily, maximizing Gini impurity decrease over a
    random feature subset at each node. Splits that cannot leave
    min_leaf_samples on both sides or achieve a positive decrease are
    rejected; degenerate data yields a single leaf."""
    if data.n < params.min_leaf_samples:
        raise ValidationError(
            f"dataset of {data.n} rows is smaller than min_leaf_samples"
        )
    root = _grow(data.features, data.targets, 0, params, rng)
    return DecisionTree(root=root, params=params, n_features=data.n_features)
