"""Random-forest feature ranking, per-dataset top-k selection and
cross-dataset importance averaging."""

from __future__ import annotations

from typing import Sequence

from .classifiers.model import feature_importances, fit
from .classifiers.params import ClassifierSpec, Kind
from .dataset import LabeledDataset
from .errors import KindMismatch, KTooLarge, NameSetMismatch

DEFAULT_TOP_K = 15

Ranking = list[tuple[str, float]]


def _sorted(items) -> Ranking:
    # descending importance, ties by name
    return sorted(items, key=lambda kv: (-kv[1], kv[0]))


def rank_features(ds: LabeledDataset, rf_spec: ClassifierSpec | None = None, seed: int = 0) -> Ranking:
    """(name, importance) pairs, most important first."""
    spec = rf_spec if rf_spec is not None else ClassifierSpec(Kind.RANDOM_FOREST)
    if spec.kind is not Kind.RANDOM_FOREST:
        raise KindMismatch(f"feature ranking needs a RandomForest spec, got {spec.kind}")
    model = fit(spec, ds, seed=seed)
    return _sorted(feature_importances(model).items())


def select_top_k(ranked: Ranking, k: int = DEFAULT_TOP_K) -> list[str]:
    if k > len(ranked):
        raise KTooLarge(f"k={k} exceeds the {len(ranked)} ranked features")
    if k < 0:
        raise ValueError("k must be non-negative")
    return [name for name, _ in ranked[:k]]


def select_dataset(ds: LabeledDataset, k: int = DEFAULT_TOP_K, rf_spec: ClassifierSpec | None = None,
                   seed: int = 0) -> tuple[LabeledDataset, Ranking]:
    """Rank on ``ds`` itself and keep its own top ``k`` columns.

    Selection always comes from the dataset's own ranking; averaged
    importances are for reporting only.
    """
    ranked = rank_features(ds, rf_spec, seed)
    return ds.select_columns(select_top_k(ranked, k)), ranked


def average_importances(per_dataset: Sequence[Ranking]) -> Ranking:
    if not per_dataset:
        raise ValueError("no rankings to average")
    names = {n for n, _ in per_dataset[0]}
    for ranking in per_dataset[1:]:
        if {n for n, _ in ranking} != names:
            raise NameSetMismatch("rankings cover different feature sets")
    totals = dict.fromkeys(names, 0.0)
    for ranking in per_dataset:
        for name, value in ranking:
            totals[name] += value
    return _sorted((name, total / len(per_dataset)) for name, total in totals.items())


def format_report(ranked: Ranking) -> str:
    """Two-column ``name<TAB>value`` table, values to 6 decimals."""
    return "".join(f"{name}\t{value:.6f}\n" for name, value in ranked)


def parse_report(text: str) -> Ranking:
    out = []
    for line in text.splitlines():
        if line.strip():
            name, value = line.split("\t")
            out.append((name, float(value)))
    return out
