"""Gene pools: per-kind search domains and default chromosomes."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from ..classifiers.params import ClassifierSpec, Kind, genes as schema_genes
from ..errors import InvalidHyperparameter, KindMismatch, UnknownKind


@dataclass(frozen=True)
class GeneSpec:
    name: str
    type: str  # "categorical" | "integer" | "float"
    domain: tuple  # categorical values, or (low, high) inclusive
    default: Any = None
    extra: tuple = ()  # legal non-domain values (defaults only, never sampled)

    def __post_init__(self):
        if self.type == "categorical":
            if not self.domain:
                raise ValueError(f"gene {self.name!r}: empty categorical domain")
        elif self.type in ("integer", "float"):
            low, high = self.domain
            if low > high:
                raise ValueError(f"gene {self.name!r}: low {low} > high {high}")
        else:
            raise ValueError(f"gene {self.name!r}: unknown type {self.type!r}")

    def contains(self, value) -> bool:
        if any(value is v or (type(value) is type(v) and value == v) for v in self.extra):
            return True
        if self.type == "categorical":
            return any(value is v or (type(value) is type(v) and value == v) for v in self.domain)
        if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
            return False
        if self.type == "integer" and int(value) != value:
            return False
        return self.domain[0] <= value <= self.domain[1]

    def sample(self, rng: np.random.Generator):
        if self.type == "categorical":
            return self.domain[int(rng.integers(len(self.domain)))]
        low, high = self.domain
        if self.type == "integer":
            return int(rng.integers(low, high + 1))
        return float(rng.uniform(low, high))

    def to_dict(self) -> dict:
        return {"name": self.name, "type": self.type, "domain": list(self.domain), "default": self.default}


def _from_param(p) -> GeneSpec:
    if p.type == "categorical":
        return GeneSpec(p.name, p.type, tuple(p.choices), p.default, tuple(p.extra))
    extra = tuple(p.extra)
    if p.default is not None and not (p.low <= p.default <= p.high):
        extra += (p.default,)
    return GeneSpec(p.name, p.type, (p.low, p.high), p.default, extra)


GENE_POOLS: dict[Kind, tuple[GeneSpec, ...]] = {
    kind: tuple(_from_param(p) for p in schema_genes(kind)) for kind in Kind
}


def gene_pool(kind, pools: Mapping | None = None) -> tuple[GeneSpec, ...]:
    try:
        kind = Kind.parse(kind)
    except UnknownKind:
        if pools and kind in pools:
            return tuple(pools[kind])
        raise
    source = pools if pools is not None else GENE_POOLS
    if kind not in source:
        raise UnknownKind(f"no gene pool registered for {kind}")
    return tuple(source[kind])


@dataclass(frozen=True)
class Chromosome:
    kind: Any  # Kind, or a free-form label for custom pools
    genes: tuple

    def __post_init__(self):
        object.__setattr__(self, "genes", tuple(self.genes))

    def __len__(self) -> int:
        return len(self.genes)

    def __getitem__(self, i):
        return self.genes[i]

    def as_params(self, pool: Sequence[GeneSpec]) -> dict[str, Any]:
        return {g.name: v for g, v in zip(pool, self.genes)}

    def to_spec(self, pool: Sequence[GeneSpec] | None = None) -> ClassifierSpec:
        pool = pool if pool is not None else gene_pool(self.kind)
        return ClassifierSpec(Kind.parse(self.kind), self.as_params(pool))

    def key(self) -> tuple:
        return (str(self.kind), tuple(repr(g) for g in self.genes))


def default_chromosome(kind, pool: Sequence[GeneSpec] | None = None) -> Chromosome:
    pool = pool if pool is not None else gene_pool(kind)
    k = _kind_or_label(kind)
    return Chromosome(k, tuple(g.default for g in pool))


def random_chromosome(kind, rng: np.random.Generator, pool: Sequence[GeneSpec] | None = None) -> Chromosome:
    pool = pool if pool is not None else gene_pool(kind)
    return Chromosome(_kind_or_label(kind), tuple(g.sample(rng) for g in pool))


def is_valid(chromosome: Chromosome, pool: Sequence[GeneSpec]) -> bool:
    return len(chromosome) == len(pool) and all(g.contains(v) for g, v in zip(pool, chromosome.genes))


def check_same_kind(a: Chromosome, b: Chromosome) -> None:
    if str(a.kind) != str(b.kind) or len(a) != len(b):
        raise KindMismatch(f"cannot cross {a.kind}[{len(a)}] with {b.kind}[{len(b)}]")


def _kind_or_label(kind):
    try:
        return Kind.parse(kind)
    except UnknownKind:
        return kind


def load_gene_pools(path) -> dict[Kind, tuple[GeneSpec, ...]]:
    """Built-in pools with overrides from a JSON file.

    Format: ``{"RandomForest": {"n_estimators": {"low": 10, "high": 50},
    "criterion": {"choices": ["gini"]}}}``. Override domains must stay
    within each hyperparameter's legal values.
    """
    data = json.loads(Path(path).read_text())
    pools = dict(GENE_POOLS)
    for kind_name, overrides in data.items():
        kind = Kind.parse(kind_name)
        by_name = {g.name: g for g in pools[kind]}
        for name, override in overrides.items():
            if name not in by_name:
                raise InvalidHyperparameter(f"{kind}: {name!r} is not a gene")
            old = by_name[name]
            if "choices" in override:
                domain = tuple(override["choices"])
            else:
                domain = (override.get("low", old.domain[0]), override.get("high", old.domain[1]))
            new = GeneSpec(name, old.type, domain, old.default, old.extra)
            for value in domain:
                ClassifierSpec(kind, {name: value})  # raises on illegal values
            by_name[name] = new
        pools[kind] = tuple(by_name[g.name] for g in pools[kind])
    return pools
