"""Uniform fit/predict entry points over the six classifier kinds."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from ..dataset import LabeledDataset
from ..errors import DimensionMismatch, EmptyDataset, NonFiniteInput, SingleClassDataset, UnsupportedKind
from ..flowcore import LabelClass
from .bayes import GaussianNB
from .ensemble import AdaBoost, RandomForest
from .neighbors import KNeighbors
from .params import ClassifierSpec, Kind
from .svm import LinearSVM
from .tree import DecisionTree

log = logging.getLogger(__name__)

ESTIMATORS = {
    Kind.GAUSSIAN_NB: GaussianNB,
    Kind.DECISION_TREE: DecisionTree,
    Kind.RANDOM_FOREST: RandomForest,
    Kind.ADABOOST: AdaBoost,
    Kind.LINEAR_SVM: LinearSVM,
    Kind.KNN: KNeighbors,
}

IMPORTANCE_KINDS = frozenset({Kind.DECISION_TREE, Kind.RANDOM_FOREST, Kind.ADABOOST})


@dataclass(frozen=True, eq=False)
class TrainedModel:
    spec: ClassifierSpec
    estimator: Any
    feature_names: tuple[str, ...]
    trained_on: Mapping[str, Any] = field(default_factory=dict)
    fit_time: float = 0.0

    @property
    def kind(self) -> Kind:
        return self.spec.kind

    @property
    def parameters(self) -> tuple[dict, dict[str, np.ndarray]]:
        """Fitted state as (scalar metadata, named arrays)."""
        return self.estimator.state()


def _build(spec: ClassifierSpec, seed: int):
    hp = dict(spec.hyperparameters)
    kind = spec.kind
    if kind is Kind.GAUSSIAN_NB:
        return GaussianNB(hp["var_smoothing"])
    if kind is Kind.DECISION_TREE:
        return DecisionTree(**hp, seed=seed)
    if kind is Kind.RANDOM_FOREST:
        return RandomForest(**hp, seed=seed)
    if kind is Kind.ADABOOST:
        return AdaBoost(**hp, seed=seed)
    if kind is Kind.LINEAR_SVM:
        return LinearSVM(hp["loss"], hp["tol"], hp["C"], hp["max_epochs"], rng=np.random.default_rng(seed))
    return KNeighbors(**hp)


def fit(spec: ClassifierSpec, ds: LabeledDataset, seed: int = 0) -> TrainedModel:
    """Train ``spec`` on ``ds``; deterministic for a given (spec, ds, seed)."""
    if not isinstance(spec, ClassifierSpec):
        spec = ClassifierSpec.from_dict(spec)
    if len(ds) == 0:
        raise EmptyDataset("cannot fit on an empty dataset")
    if len(np.unique(ds.y)) < 2:
        raise SingleClassDataset(f"training data has a single class ({LabelClass.from_code(int(ds.y[0])).value})")
    estimator = _build(spec, seed)
    x = np.ascontiguousarray(ds.x)
    start = time.perf_counter()
    estimator.fit(x, ds.y)
    elapsed = time.perf_counter() - start
    trained_on = {"provenance": ds.provenance, "fingerprint": ds.fingerprint(), "rows": len(ds), "seed": seed}
    log.debug("fitted %s on %d rows in %.3fs", spec.kind, len(ds), elapsed)
    return TrainedModel(spec, estimator, tuple(ds.feature_names), trained_on, elapsed)


def _check_matrix(model: TrainedModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != len(model.feature_names):
        raise DimensionMismatch(
            f"model expects {len(model.feature_names)} features, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("feature values must be finite")
    return x


def predict_batch(model: TrainedModel, x) -> np.ndarray:
    """Class codes (0 Normal, 1 Botnet) for each row of ``x``."""
    return np.asarray(model.estimator.predict(_check_matrix(model, x)), dtype=np.int8)


def predict(model: TrainedModel, x) -> LabelClass:
    vec = np.asarray(x, dtype=np.float64)
    if vec.ndim != 1:
        raise DimensionMismatch(f"expected a single feature vector, got shape {vec.shape}")
    return LabelClass.from_code(int(predict_batch(model, vec.reshape(1, -1))[0]))


def feature_importances(model: TrainedModel) -> dict[str, float]:
    if model.kind not in IMPORTANCE_KINDS:
        raise UnsupportedKind(f"{model.kind} does not define feature importances")
    values = model.estimator.feature_importances()
    return {name: float(v) for name, v in zip(model.feature_names, values)}
