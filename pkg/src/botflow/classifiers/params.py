"""Hyperparameter schemas for the six classifier kinds.

Each :class:`Param` carries two notions of range: the *search* domain
(``choices`` or ``low``/``high``) that hyperparameter search samples from,
and the *valid* domain that :func:`validate` enforces. The valid domain is a
superset: e.g. ``n_estimators=1`` is a legal forest even though search never
proposes it, and ``random_state=None`` is the AdaBoost default although the
search samples integers only.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

from ..errors import InvalidHyperparameter, UnknownKind


class Kind(str, enum.Enum):
    GAUSSIAN_NB = "GaussianNB"
    DECISION_TREE = "DecisionTree"
    RANDOM_FOREST = "RandomForest"
    ADABOOST = "AdaBoost"
    LINEAR_SVM = "LinearSVM"
    KNN = "KNN"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, value: "Kind | str") -> "Kind":
        if isinstance(value, Kind):
            return value
        lowered = str(value).replace("_", "").replace("-", "").lower()
        for kind in cls:
            if kind.value.lower() == lowered or kind.name.replace("_", "").lower() == lowered:
                return kind
        aliases = {"gnb": cls.GAUSSIAN_NB, "dt": cls.DECISION_TREE, "rf": cls.RANDOM_FOREST,
                   "ada": cls.ADABOOST, "svm": cls.LINEAR_SVM, "linearsvc": cls.LINEAR_SVM,
                   "kneighbors": cls.KNN}
        if lowered in aliases:
            return aliases[lowered]
        raise UnknownKind(f"unknown classifier kind {value!r}")


@dataclass(frozen=True)
class Param:
    name: str
    type: str  # "categorical" | "integer" | "float"
    default: Any
    choices: tuple = ()
    low: float | None = None
    high: float | None = None
    # validity bounds (inclusive); None means unbounded
    min_value: float | None = None
    max_value: float | None = None
    extra: tuple = ()  # accepted values outside the search domain
    gene: bool = True

    def in_search_domain(self, value) -> bool:
        if self.type == "categorical":
            return _member(value, self.choices)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return False
        if self.type == "integer" and int(value) != value:
            return False
        return self.low <= value <= self.high

    def is_valid(self, value) -> bool:
        if _member(value, self.extra):
            return True
        if self.type == "categorical":
            return _member(value, self.choices)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return False
        if not math.isfinite(value):
            return False
        if self.type == "integer" and int(value) != value:
            return False
        if self.min_value is not None and value < self.min_value:
            return False
        if self.max_value is not None and value > self.max_value:
            return False
        return True


def _member(value, options) -> bool:
    # type-strict membership so that True does not match 1
    return any(value is o or (type(value) is type(o) and value == o) for o in options)


def _cat(name, choices, default, extra=(), gene=True):
    return Param(name, "categorical", default, choices=tuple(choices), extra=tuple(extra), gene=gene)


def _int(name, low, high, default, min_value=None, max_value=None, extra=(), gene=True):
    return Param(name, "integer", default, low=low, high=high, min_value=min_value,
                 max_value=max_value, extra=tuple(extra), gene=gene)


def _float(name, low, high, default, min_value=None, max_value=None, extra=(), gene=True):
    return Param(name, "float", default, low=low, high=high, min_value=min_value,
                 max_value=max_value, extra=tuple(extra), gene=gene)


_TREE_GENES = (
    _cat("criterion", ["gini", "entropy"], "gini"),
    _int("min_samples_split", 2, 5, 2, min_value=2),
    _int("min_samples_leaf", 1, 4, 1, min_value=1),
    _float("min_weight_fraction_leaf", 0.0, 0.1, 0.0, min_value=0.0, max_value=0.5),
    _cat("class_weight", ["balanced", None], None),
)

SCHEMAS: dict[Kind, tuple[Param, ...]] = {
    Kind.GAUSSIAN_NB: (
        _float("var_smoothing", 1e-12, 1e-3, 1e-9, min_value=0.0),
    ),
    Kind.DECISION_TREE: (
        _TREE_GENES[0],
        _cat("splitter", ["best", "random"], "best"),
        *_TREE_GENES[1:],
        _int("max_depth", 1, 64, None, min_value=1, extra=(None,), gene=False),
        _cat("max_features", [None, "sqrt", "log2"], None, gene=False),
    ),
    Kind.RANDOM_FOREST: (
        _int("n_estimators", 10, 200, 100, min_value=1),
        *_TREE_GENES,
        _int("max_depth", 1, 64, None, min_value=1, extra=(None,), gene=False),
        _cat("max_features", ["sqrt", "log2", None], "sqrt", gene=False),
        _cat("bootstrap", [True, False], True, gene=False),
    ),
    Kind.ADABOOST: (
        _int("n_estimators", 5, 100, 50, min_value=1),
        _float("learning_rate", 0.1, 1.0, 1.0, min_value=1e-12),
        _cat("algorithm", ["SAMME", "SAMME.R"], "SAMME.R"),
        _int("random_state", 1, 50, None, min_value=0, extra=(None,)),
        _int("max_depth", 1, 8, 1, min_value=1, gene=False),
    ),
    Kind.LINEAR_SVM: (
        _cat("loss", ["hinge", "squared_hinge"], "squared_hinge"),
        _float("tol", 1e-5, 0.1, 1e-4, min_value=1e-12),
        _float("C", 1.0, 5.0, 1.0, min_value=1e-12),
        _int("max_epochs", 1, 1000, 1000, min_value=1, gene=False),
    ),
    Kind.KNN: (
        _int("n_neighbors", 1, 10, 5, min_value=1),
        _cat("weights", ["uniform", "distance"], "uniform"),
        _cat("algorithm", ["ball_tree", "kd_tree"], "auto", extra=("auto", "brute")),
        _int("leaf_size", 1, 50, 30, min_value=1),
        _int("p", 1, 5, 2, min_value=1),
        _cat("tie_break", ["Normal", "Botnet"], "Normal", gene=False),
    ),
}


def schema(kind: Kind | str) -> tuple[Param, ...]:
    return SCHEMAS[Kind.parse(kind)]


def genes(kind: Kind | str) -> tuple[Param, ...]:
    return tuple(p for p in schema(kind) if p.gene)


def defaults(kind: Kind | str) -> dict[str, Any]:
    return {p.name: p.default for p in schema(kind)}


def validate(kind: Kind | str, hyperparameters: Mapping[str, Any]) -> dict[str, Any]:
    """Fill defaults and check every value; returns the complete mapping."""
    kind = Kind.parse(kind)
    params = {p.name: p for p in SCHEMAS[kind]}
    for name in hyperparameters:
        if name not in params:
            raise InvalidHyperparameter(f"{kind}: unknown hyperparameter {name!r}")
    full = defaults(kind)
    for name, value in hyperparameters.items():
        if isinstance(value, str) and value in ("None", "none"):
            value = None
        param = params[name]
        if param.type == "integer" and isinstance(value, float) and value.is_integer():
            value = int(value)
        if param.type == "float" and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not param.is_valid(value):
            raise InvalidHyperparameter(f"{kind}: invalid value {value!r} for {name!r}")
        full[name] = value
    return full


@dataclass(frozen=True)
class ClassifierSpec:
    kind: Kind
    hyperparameters: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        kind = Kind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "hyperparameters", validate(kind, dict(self.hyperparameters)))

    def __getitem__(self, name: str):
        return self.hyperparameters[name]

    def with_params(self, **changes) -> "ClassifierSpec":
        return ClassifierSpec(self.kind, {**self.hyperparameters, **changes})

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "hyperparameters": dict(self.hyperparameters)}

    @classmethod
    def from_dict(cls, data: Mapping) -> "ClassifierSpec":
        return cls(Kind.parse(data["kind"]), dict(data.get("hyperparameters", {})))
