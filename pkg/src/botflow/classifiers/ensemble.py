"""Tree ensembles: bagged random forests and AdaBoost (SAMME / SAMME.R)."""

from __future__ import annotations

import logging
import math

import numpy as np

from .tree import Tree, TreeBuilder, balanced_weights

log = logging.getLogger(__name__)

_PROBA_EPS = 1e-10


def _trees_state(trees: list[Tree]) -> dict[str, np.ndarray]:
    arrays = {}
    for i, tree in enumerate(trees):
        arrays.update(tree.arrays(f"tree{i}."))
    return arrays


def _trees_from_state(arrays, count: int, n_features: int) -> list[Tree]:
    return [Tree.from_arrays(arrays, n_features, f"tree{i}.") for i in range(count)]


class RandomForest:
    def __init__(self, n_estimators=100, criterion="gini", min_samples_split=2, min_samples_leaf=1,
                 min_weight_fraction_leaf=0.0, class_weight=None, max_depth=None,
                 max_features="sqrt", bootstrap=True, seed=0):
        self.n_estimators = int(n_estimators)
        self.criterion = criterion
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.min_weight_fraction_leaf = min_weight_fraction_leaf
        self.class_weight = class_weight
        self.max_depth = max_depth
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.seed = seed

    def fit(self, x: np.ndarray, y: np.ndarray) -> "RandomForest":
        n = len(y)
        base = balanced_weights(y) if self.class_weight == "balanced" else np.ones(n)
        self.trees = []
        # one independent stream per tree: results do not depend on build order
        for child in np.random.SeedSequence(self.seed).spawn(self.n_estimators):
            rng = np.random.default_rng(child)
            w = base
            if self.bootstrap:
                w = base * np.bincount(rng.integers(0, n, n), minlength=n)
            builder = TreeBuilder(self.criterion, "best", self.min_samples_split, self.min_samples_leaf,
                                  self.min_weight_fraction_leaf, self.max_depth, self.max_features, rng)
            self.trees.append(builder.build(x, y, w))
        self.n_features = x.shape[1]
        return self

    def predict(self, x: np.ndarray) -> np.ndarray:
        votes = np.zeros(x.shape[0], dtype=np.int64)
        for tree in self.trees:
            votes += tree.predict(x)
        # strict majority needed for Botnet; ties go to Normal
        return (2 * votes > len(self.trees)).astype(np.int8)

    def feature_importances(self) -> np.ndarray:
        imp = np.mean([t.feature_importances() for t in self.trees], axis=0)
        total = imp.sum()
        return imp / total if total > 0 else imp

    def state(self):
        return {"n_trees": len(self.trees), "n_features": self.n_features}, _trees_state(self.trees)

    @classmethod
    def from_state(cls, hp, meta, arrays) -> "RandomForest":
        model = cls(**{k: hp[k] for k in ("n_estimators", "criterion", "min_samples_split",
                                          "min_samples_leaf", "min_weight_fraction_leaf",
                                          "class_weight", "max_depth", "max_features", "bootstrap")})
        model.n_features = meta["n_features"]
        model.trees = _trees_from_state(arrays, meta["n_trees"], model.n_features)
        return model


class AdaBoost:
    """Two-class AdaBoost over shallow trees.

    ``SAMME`` gives each learner ``alpha = lr * ln((1 - err) / err)``.
    ``SAMME.R`` adds ``lr * 0.5 * (ln p1 - ln p0)`` from each learner's leaf
    class probabilities. Boosting halts when a learner's weighted error
    reaches 0.5 (the learner is discarded unless it is the first) or
    drops to 0 (the learner is kept and nothing is left to boost).
    """

    def __init__(self, n_estimators=50, learning_rate=1.0, algorithm="SAMME.R", random_state=None,
                 max_depth=1, seed=0):
        self.n_estimators = int(n_estimators)
        self.learning_rate = float(learning_rate)
        self.algorithm = algorithm
        self.random_state = random_state
        self.max_depth = max_depth
        self.seed = seed

    def fit(self, x: np.ndarray, y: np.ndarray, sample_weight: np.ndarray | None = None) -> "AdaBoost":
        n = len(y)
        w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64).copy()
        w /= w.sum()
        seed = self.seed if self.random_state is None else self.random_state
        rng = np.random.default_rng(seed)
        lr = self.learning_rate
        self.trees, self.alphas, self.errors = [], [], []
        self.n_features = x.shape[1]
        self.stop_reason = "n_estimators"
        for _ in range(self.n_estimators):
            tree = TreeBuilder(max_depth=self.max_depth, rng=rng).build(x, y, w)
            pred = tree.predict(x)
            miss = pred != y
            err = float(np.sum(w[miss]) / np.sum(w))
            if err >= 0.5:
                if not self.trees:
                    self._keep(tree, 1.0, err)
                self.stop_reason = "error>=0.5"
                break
            if err <= 0.0:
                self._keep(tree, 1.0, err)
                self.stop_reason = "error=0"
                break
            if self.algorithm == "SAMME":
                alpha = lr * math.log((1.0 - err) / err)
                self._keep(tree, alpha, err)
                w = w * np.exp(alpha * miss)
            else:
                self._keep(tree, 1.0, err)
                logp = np.log(np.clip(tree.predict_proba(x), _PROBA_EPS, 1.0))
                rows = np.arange(n)
                margin = logp[rows, y] - logp[rows, 1 - y]
                w = w * np.exp(-lr * 0.5 * margin)
            w /= w.sum()
        return self

    def _keep(self, tree: Tree, alpha: float, err: float) -> None:
        self.trees.append(tree)
        self.alphas.append(alpha)
        self.errors.append(err)

    def decision_function(self, x: np.ndarray) -> np.ndarray:
        score = np.zeros(x.shape[0])
        for tree, alpha in zip(self.trees, self.alphas):
            if self.algorithm == "SAMME":
                score += alpha * (2.0 * tree.predict(x) - 1.0)
            else:
                logp = np.log(np.clip(tree.predict_proba(x), _PROBA_EPS, 1.0))
                score += self.learning_rate * 0.5 * (logp[:, 1] - logp[:, 0])
        return score

    def predict(self, x: np.ndarray) -> np.ndarray:
        return (self.decision_function(x) > 0).astype(np.int8)

    def feature_importances(self) -> np.ndarray:
        alphas = np.asarray(self.alphas)
        imp = np.sum([a * t.feature_importances() for a, t in zip(alphas, self.trees)], axis=0)
        total = imp.sum()
        return imp / total if total > 0 else imp

    def state(self):
        meta = {"n_trees": len(self.trees), "n_features": self.n_features, "stop_reason": self.stop_reason}
        arrays = {"alphas": np.asarray(self.alphas, dtype=np.float64),
                  "errors": np.asarray(self.errors, dtype=np.float64), **_trees_state(self.trees)}
        return meta, arrays

    @classmethod
    def from_state(cls, hp, meta, arrays) -> "AdaBoost":
        model = cls(hp["n_estimators"], hp["learning_rate"], hp["algorithm"], hp["random_state"],
                    hp["max_depth"])
        model.n_features = meta["n_features"]
        model.stop_reason = meta["stop_reason"]
        model.trees = _trees_from_state(arrays, meta["n_trees"], model.n_features)
        model.alphas = [float(a) for a in arrays["alphas"]]
        model.errors = [float(e) for e in arrays["errors"]]
        return model
