"""From-scratch classifiers over labeled sensor data.

Three model families share the Dataset container: a random forest of
Gini-split decision trees, gradient-boosted regression trees with a
second-order regularized objective, and a linear one-vs-rest SVM.
"""

from .dataset import Dataset, make_datasets
from .tree import DecisionTree, Leaf, Split, TreeParams, train_tree
from .forest import ForestConfig, ForestModel, predict_forest, train_forest
from .boosting import (
    BoostedModel,
    GbtConfig,
    predict_gbt,
    softmax,
    softmax_grad_hess,
    train_gbt,
)
from .svm import SvmConfig, SvmModel, predict_svm, train_svm
from .persist import MODEL_FORMAT_VERSION, load_model, save_model

__all__ = [
    "Dataset",
    "make_datasets",
    "DecisionTree",
    "Leaf",
    "Split",
    "TreeParams",
    "train_tree",
    "ForestConfig",
    "ForestModel",
    "train_forest",
    "predict_forest",
    "GbtConfig",
    "BoostedModel",
    "softmax",
    "softmax_grad_hess",
    "train_gbt",
    "predict_gbt",
    "SvmConfig",
    "SvmModel",
    "train_svm",
    "predict_svm",
    "MODEL_FORMAT_VERSION",
    "save_model",
    "load_model",
]
