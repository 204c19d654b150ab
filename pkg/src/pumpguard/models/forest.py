"""Random forest: bootstrapped Gini trees combined by majority vote."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..domain import LABELS, HealthLabel
from ..errors import ValidationError
from ..seeds import derive_seed
from .dataset import Dataset
from .tree import DecisionTree, TreeParams, train_tree


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    tree: TreeParams = field(default_factory=TreeParams)

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ValidationError(f"n_trees must be >= 1, got {self.n_trees}")


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[DecisionTree, ...]
    config: ForestConfig
    seed: int

    @property
    def n_features(self) -> int:
        return self.trees[0].n_features

    def vote_counts(self, x: np.ndarray) -> np.ndarray:
        votes = [tree.predict(x).value for tree in self.trees]
        return np.bincount(votes, minlength=3)

    def predict(self, x: np.ndarray) -> HealthLabel:
        return predict_forest(self, x)

    def predict_many(self, features: np.ndarray) -> np.ndarray:
        ballots = np.zeros((features.shape[0], 3), dtype=np.int32)
        for tree in self.trees:
            votes = tree.predict_many(features)
            ballots[np.arange(features.shape[0]), votes] += 1
        return np.argmax(ballots, axis=1).astype(np.int8)


def train_forest(data: Dataset, config: ForestConfig, seed: int) -> ForestModel:
    """Train n_trees trees, each on its own bootstrap resample.

    Every tree derives an independent RNG stream from (seed, index), so
    training is reproducible and trees could be built concurrently
    without changing the result.
    """
    trees = []
    for index in range(config.n_trees):
        rng = np.random.default_rng(derive_seed(seed, "tree", index))
        bootstrap = rng.integers(0, data.n, size=data.n)
        trees.append(train_tree(data.subset(bootstrap), config.tree, rng))
    return ForestModel(trees=tuple(trees), config=config, seed=seed)


def predict_forest(model: ForestModel, x: np.ndarray) -> HealthLabel:
    """Mode of the tree votes; ties resolve to the lowest severity."""
    counts = model.vote_counts(np.asarray(x, dtype=float))
    return LABELS[int(np.argmax(counts))]
