"""Reference grids reproducing the standard grid-search combination counts
(DecisionTree 1408, RandomForest 3456, AdaBoost 840, LinearSVM 200,
KNN 2200)."""

from __future__ import annotations

import numpy as np

from ..classifiers.params import Kind

_WEIGHT_FRACTIONS_11 = [round(0.01 * i, 2) for i in range(11)]  # 0.00 .. 0.10
_WEIGHT_FRACTIONS_6 = [round(0.02 * i, 2) for i in range(6)]  # 0.00 .. 0.10

REFERENCE_GRIDS: dict[Kind, dict[str, list]] = {
    Kind.DECISION_TREE: {
        "criterion": ["gini", "entropy"],
        "splitter": ["best", "random"],
        "min_samples_split": [2, 3, 4, 5],
        "min_samples_leaf": [1, 2, 3, 4],
        "min_weight_fraction_leaf": _WEIGHT_FRACTIONS_11,
        "class_weight": ["balanced", None],
    },
    Kind.RANDOM_FOREST: {
        "n_estimators": [10, 25, 50, 75, 100, 125, 150, 175, 200],
        "criterion": ["gini", "entropy"],
        "min_samples_split": [2, 3, 4, 5],
        "min_samples_leaf": [1, 2, 3, 4],
        "min_weight_fraction_leaf": _WEIGHT_FRACTIONS_6,
        "class_weight": ["balanced", None],
    },
    Kind.ADABOOST: {
        "n_estimators": [5, 10, 20, 40, 60, 80, 100],
        "learning_rate": [0.1, 0.2, 0.4, 0.6, 0.8, 1.0],
        "algorithm": ["SAMME", "SAMME.R"],
        "random_state": [5, 10, 15, 20, 25, 30, 35, 40, 45, 50],
    },
    Kind.LINEAR_SVM: {
        "loss": ["hinge", "squared_hinge"],
        "tol": [float(f"{v:.3g}") for v in np.geomspace(1e-5, 0.1, 20)],
        "C": [1.0, 2.0, 3.0, 4.0, 5.0],
    },
    Kind.KNN: {
        "n_neighbors": list(range(1, 11)),
        "weights": ["uniform", "distance"],
        "algorithm": ["ball_tree", "kd_tree"],
        "leaf_size": [1, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50],
        "p": [1, 2, 3, 4, 5],
    },
}


def reference_grid(kind) -> dict[str, list]:
    return {k: list(v) for k, v in REFERENCE_GRIDS[Kind.parse(kind)].items()}
