"""Versioned JSON persistence for trained models.

Each file is a single document with "kind" and "version" discriminators;
loading an unknown kind or a mismatched version fails loudly instead of
guessing. Floats round-trip exactly (JSON carries full repr precision),
so a loaded model predicts bit-identically.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import numpy as np

from ..errors import PersistenceError
from .boosting import BoostedModel, GbtConfig, RegLeaf, RegNode, RegSplit, RegTree
from .forest import ForestConfig, ForestModel
from .svm import SvmConfig, SvmModel
from .tree import DecisionTree, Leaf, Node, Split, TreeParams

MODEL_FORMAT_VERSION = 1

AnyModel = Union[ForestModel, BoostedModel, SvmModel]


def _encode_node(node: Node) -> dict:
    if isinstance(node, Leaf):
        return {"counts": list(node.class_counts)}
    return {
        "feature": node.feature_index,
        "threshold": node.threshold,
        "left": _encode_node(node.left),
        "right": _encode_node(node.right),
    }


def _decode_node(raw: dict) -> Node:
    if "counts" in raw:
        counts = raw["counts"]
        return Leaf(class_counts=(int(counts[0]), int(counts[1]), int(counts[2])))
    return Split(
        feature_index=int(raw["feature"]),
        threshold=float(raw["threshold"]),
        left=_decode_node(raw["left"]),
        right=_decode_node(raw["right"]),
    )


def _encode_reg_node(node: RegNode) -> dict:
    if isinstance(node, RegLeaf):
        return {"weight": node.weight}
    return {
        "feature": node.feature_index,
        "threshold": node.threshold,
        "left": _encode_reg_node(node.left),
        "right": _encode_reg_node(node.right),
    }


def _decode_reg_node(raw: dict) -> RegNode:
    if "weight" in raw:
        return RegLeaf(weight=float(raw["weight"]))
    return RegSplit(
        feature_index=int(raw["feature"]),
        threshold=float(raw["threshold"]),
        left=_decode_reg_node(raw["left"]),
        right=_decode_reg_node(raw["right"]),
    )


def _to_document(model: AnyModel) -> dict:
    if isinstance(model, ForestModel):
        return {
            "kind": "forest",
            "version": MODEL_FORMAT_VERSION,
            "seed": model.seed,
            "config": {
                "n_trees": model.config.n_trees,
                "max_depth": model.config.tree.max_depth,
                "min_leaf_samples": model.config.tree.min_leaf_samples,
                "features_per_split": model.config.tree.features_per_split,
            },
            "n_features": model.n_features,
            "trees": [_encode_node(tree.root) for tree in model.trees],
        }
    if isinstance(model, BoostedModel):
        return {
            "kind": "gbt",
            "version": MODEL_FORMAT_VERSION,
            "config": {
                "n_rounds": model.config.n_rounds,
                "learning_rate": model.config.learning_rate,
                "reg_lambda": model.config.reg_lambda,
                "gamma": model.config.gamma,
                "max_depth": model.config.max_depth,
            },
            "n_features": model.n_features,
            "base_score": list(model.base_score),
            "objective_history": list(model.objective_history),
            "rounds": [
                [_encode_reg_node(tree.root) for tree in trees]
                for trees in model.rounds
            ],
        }
    if isinstance(model, SvmModel):
        return {
            "kind": "svm",
            "version": MODEL_FORMAT_VERSION,
            "config": {
                "C": model.config.C,
                "epochs": model.config.epochs,
                "seed": model.config.seed,
            },
            "mean": model.feature_mean.tolist(),
            "std": model.feature_std.tolist(),
            "weights": model.weights.tolist(),
            "bias": model.bias.tolist(),
            "objective_history": [list(h) for h in model.objective_history],
        }
    raise PersistenceError(f"cannot serialize model of type {type(model).__name__}")


def save_model(model: AnyModel, path: str | Path) -> None:
    text = json.dumps(_to_document(model), indent=2)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_model(path: str | Path) -> AnyModel:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise PersistenceError(f"cannot read model file {path}: {exc}") from exc
    version = raw.get("version")
    if version != MODEL_FORMAT_VERSION:
        raise PersistenceError(
            f"model file {path} has format version {version!r}, "
            f"this build reads version {MODEL_FORMAT_VERSION}"
        )
    kind = raw.get("kind")
    try:
        if kind == "forest":
            cfg = raw["config"]
            params = TreeParams(
                max_depth=int(cfg["max_depth"]),
                min_leaf_samples=int(cfg["min_leaf_samples"]),
                features_per_split=int(cfg["features_per_split"]),
            )
            n_features = int(raw["n_features"])
            return ForestModel(
                trees=tuple(
                    DecisionTree(
                        root=_decode_node(node), params=params, n_features=n_features
                    )
                    for node in raw["trees"]
                ),
                config=ForestConfig(n_trees=int(cfg["n_trees"]), tree=params),
                seed=int(raw["seed"]),
            )
        if kind == "gbt":
            cfg = raw["config"]
            return BoostedModel(
                rounds=tuple(
                    tuple(RegTree(root=_decode_reg_node(node)) for node in trees)
                    for trees in raw["rounds"]
                ),
                config=GbtConfig(
                    n_rounds=int(cfg["n_rounds"]),
                    learning_rate=float(cfg["learning_rate"]),
                    reg_lambda=float(cfg["reg_lambda"]),
                    gamma=float(cfg["gamma"]),
                    max_depth=int(cfg["max_depth"]),
                ),
                base_score=tuple(float(v) for v in raw["base_score"]),
                objective_history=tuple(float(v) for v in raw["objective_history"]),
                n_features=int(raw["n_features"]),
            )
        if kind == "svm":
            cfg = raw["config"]
            return SvmModel(
                weights=np.asarray(raw["weights"], dtype=float),
                bias=np.asarray(raw["bias"], dtype=float),
                feature_mean=np.asarray(raw["mean"], dtype=float),
                feature_std=np.asarray(raw["std"], dtype=float),
                config=SvmConfig(
                    C=float(cfg["C"]), epochs=int(cfg["epochs"]), seed=int(cfg["seed"])
                ),
                objective_history=tuple(
                    tuple(float(v) for v in h) for h in raw["objective_history"]
                ),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise PersistenceError(f"malformed model file {path}: {exc}") from exc
    raise PersistenceError(f"model file {path} has unknown kind {kind!r}")
