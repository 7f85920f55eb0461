"""Grid and random search baselines sharing the GA's fitness function."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..dataset import LabeledDataset
from ..errors import GridTooLarge, InvalidHyperparameter
from .ga import Evaluate, FitnessEvaluator, GAConfig
from .genes import Chromosome, GeneSpec, default_chromosome, gene_pool, random_chromosome

log = logging.getLogger(__name__)

DEFAULT_GRID_CAP = 10_000


@dataclass
class SearchResult:
    best: Chromosome
    best_fitness: float
    table: list[tuple[Chromosome, float]]
    combinations: int
    pool: tuple = field(default=(), repr=False)

    def rows(self) -> list[dict]:
        names = [g.name for g in self.pool]
        return [{"index": i, "fitness": f, "genes": dict(zip(names, c.genes))}
                for i, (c, f) in enumerate(self.table)]


def grid_size(grid: Mapping[str, Sequence]) -> int:
    return math.prod(len(v) for v in grid.values())


def grid_chromosomes(kind, grid: Mapping[str, Sequence], pool: Sequence[GeneSpec] | None = None):
    """Cartesian product over ``grid``; genes absent from it keep defaults."""
    pool = pool if pool is not None else gene_pool(kind)
    names = [g.name for g in pool]
    for name, values in grid.items():
        if name not in names:
            raise InvalidHyperparameter(f"{name!r} is not a gene of {kind}")
        gene = pool[names.index(name)]
        for v in values:
            if not gene.contains(v):
                raise InvalidHyperparameter(f"grid value {v!r} outside the domain of {name!r}")
    base = default_chromosome(kind, pool)
    axes = [list(grid[g.name]) if g.name in grid else [base.genes[i]] for i, g in enumerate(pool)]
    for combo in itertools.product(*axes):
        yield Chromosome(base.kind, combo)


def _best(table):
    best_i = max(range(len(table)), key=lambda i: (table[i][1], -i))
    return table[best_i]


def grid_search(kind, grid: Mapping[str, Sequence], ds: LabeledDataset | None, cfg: GAConfig = GAConfig(),
                cap: int = DEFAULT_GRID_CAP, evaluate: Evaluate | None = None,
                pool: Sequence[GeneSpec] | None = None) -> SearchResult:
    pool = tuple(pool) if pool is not None else gene_pool(kind)
    count = grid_size(grid)
    if count > cap:
        raise GridTooLarge(f"grid has {count} combinations, cap is {cap}")
    evaluate = evaluate if evaluate is not None else FitnessEvaluator(ds, cfg, pool)
    table = [(c, float(evaluate(c))) for c in grid_chromosomes(kind, grid, pool)]
    best, best_fitness = _best(table)
    log.info("grid search over %d combinations: best %.4f", count, best_fitness)
    return SearchResult(best, best_fitness, table, count, pool)


def random_search(kind, n_iter: int, ds: LabeledDataset | None, cfg: GAConfig = GAConfig(),
                  evaluate: Evaluate | None = None, pool: Sequence[GeneSpec] | None = None) -> SearchResult:
    """Sample 0 is the default chromosome; the rest are uniform draws."""
    if n_iter < 1:
        raise ValueError("n_iter must be at least 1")
    pool = tuple(pool) if pool is not None else gene_pool(kind)
    evaluate = evaluate if evaluate is not None else FitnessEvaluator(ds, cfg, pool)
    rng = np.random.default_rng(cfg.seed)
    samples = [default_chromosome(kind, pool)]
    samples += [random_chromosome(kind, rng, pool) for _ in range(n_iter - 1)]
    table = [(c, float(evaluate(c))) for c in samples]
    best, best_fitness = _best(table)
    return SearchResult(best, best_fitness, table, n_iter, pool)
