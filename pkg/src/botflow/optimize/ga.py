"""Genetic-algorithm hyperparameter search.

Each generation: score every chromosome, record the fittest, cross the top
two at the chromosome midpoint, rebuild the population from copies of the
two offspring plus fresh random chromosomes, then mutate one gene of every
member. The default chromosome is injected into the first generation, and
the best chromosome ever recorded is returned, so the result is never worse
than the defaults.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..dataset import FoldPlan, LabeledDataset, stratified_kfold
from ..errors import BotflowError
from ..metrics import cross_validate
from .genes import (Chromosome, GeneSpec, check_same_kind, default_chromosome, gene_pool,
                    random_chromosome)

log = logging.getLogger(__name__)

Evaluate = Callable[[Chromosome], float]


@dataclass(frozen=True)
class GAConfig:
    population_size: int = 10
    generation_limit: int = 10
    k: int = 10
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        if self.population_size < 4:
            raise ValueError("population_size must be at least 4")
        if self.generation_limit < 1:
            raise ValueError("generation_limit must be at least 1")
        if self.k < 2:
            raise ValueError("k must be at least 2")


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def init_population(kind, cfg: GAConfig, rng=None, pool: Sequence[GeneSpec] | None = None) -> list[Chromosome]:
    """Default chromosome first, the rest uniform random."""
    pool = pool if pool is not None else gene_pool(kind)
    rng = _rng(cfg.seed if rng is None else rng)
    population = [default_chromosome(kind, pool)]
    population += [random_chromosome(kind, rng, pool) for _ in range(cfg.population_size - 1)]
    return population


def crossover(parent1: Chromosome, parent2: Chromosome) -> tuple[Chromosome, Chromosome]:
    check_same_kind(parent1, parent2)
    cut = len(parent1) // 2
    a, b = parent1.genes, parent2.genes
    return Chromosome(parent1.kind, a[:cut] + b[cut:]), Chromosome(parent1.kind, b[:cut] + a[cut:])


def refill(offspring1: Chromosome, offspring2: Chromosome, cfg: GAConfig, rng=None,
           pool: Sequence[GeneSpec] | None = None) -> list[Chromosome]:
    """Indices below P//4 copy offspring1, below P//2 copy offspring2, the
    rest are random."""
    pool = pool if pool is not None else gene_pool(offspring1.kind)
    rng = _rng(cfg.seed if rng is None else rng)
    p = cfg.population_size
    out = []
    for index in range(p):
        if index < p // 4:
            out.append(offspring1)
        elif index < p // 2:
            out.append(offspring2)
        else:
            out.append(random_chromosome(offspring1.kind, rng, pool))
    return out


def mutate(chromosome: Chromosome, seed=None, pool: Sequence[GeneSpec] | None = None) -> Chromosome:
    """Resample one uniformly chosen gene from its domain."""
    pool = pool if pool is not None else gene_pool(chromosome.kind)
    rng = _rng(seed)
    i = int(rng.integers(len(chromosome)))
    genes = list(chromosome.genes)
    genes[i] = pool[i].sample(rng)
    return Chromosome(chromosome.kind, tuple(genes))


class FitnessEvaluator:
    """Mean k-fold F1 of a chromosome, cached per (kind, genes, data, seed).

    One fold plan is fixed per evaluator so every chromosome faces the same
    splits. A chromosome whose training fails scores 0.
    """

    def __init__(self, ds: LabeledDataset, cfg: GAConfig, pool: Sequence[GeneSpec] | None = None,
                 plan: FoldPlan | None = None):
        self.ds = ds
        self.cfg = cfg
        self.pool = pool
        self.plan = plan if plan is not None else stratified_kfold(ds, cfg.k, cfg.seed)
        self.fingerprint = ds.fingerprint()
        self.cache: dict[tuple, float] = {}
        self.evaluations = 0

    def __call__(self, chromosome: Chromosome) -> float:
        key = (chromosome.key(), self.fingerprint, self.cfg.seed)
        if key not in self.cache:
            self.cache[key] = self._evaluate(chromosome)
        return self.cache[key]

    def _evaluate(self, chromosome: Chromosome) -> float:
        self.evaluations += 1
        try:
            spec = chromosome.to_spec(self.pool)
            report = cross_validate(spec, self.ds, self.cfg.k, self.cfg.seed, self.cfg.jobs, self.plan)
        except BotflowError as exc:
            log.warning("chromosome %s failed, fitness 0: %s", list(chromosome.genes), exc)
            return 0.0
        return report.mean("f1")


def fitness(chromosome: Chromosome, ds: LabeledDataset, cfg: GAConfig) -> float:
    return FitnessEvaluator(ds, cfg)(chromosome)


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    fitness: float
    chromosome: Chromosome


@dataclass
class GAResult:
    best: Chromosome
    best_fitness: float
    history: list[GenerationRecord]
    evaluations: int = 0
    pool: tuple = field(default=(), repr=False)

    def rows(self) -> list[dict]:
        names = [g.name for g in self.pool] or [f"gene{i}" for i in range(len(self.best))]
        return [{"generation": r.generation, "best_fitness": r.fitness,
                 "best_genes": dict(zip(names, r.chromosome.genes))} for r in self.history]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["generation", "best_fitness", "best_genes"])
        for row in self.rows():
            writer.writerow([row["generation"], f"{row['best_fitness']:.6f}",
                             json.dumps(row["best_genes"], sort_keys=False)])
        return buf.getvalue()

    def to_json(self) -> str:
        names = [g.name for g in self.pool]
        return json.dumps({"kind": str(self.best.kind), "best_fitness": self.best_fitness,
                           "best": dict(zip(names, self.best.genes)), "evaluations": self.evaluations,
                           "history": self.rows()}, indent=2)


def run_ga(kind, ds: LabeledDataset | None, cfg: GAConfig = GAConfig(), evaluate: Evaluate | None = None,
           pool: Sequence[GeneSpec] | None = None) -> GAResult:
    """Search ``kind``'s gene pool; ``evaluate`` overrides the CV fitness."""
    pool = tuple(pool) if pool is not None else gene_pool(kind)
    if evaluate is None:
        evaluate = FitnessEvaluator(ds, cfg, pool)
    rng = np.random.default_rng(cfg.seed)
    population = init_population(kind, cfg, rng, pool)
    history: list[GenerationRecord] = []
    for generation in range(1, cfg.generation_limit + 1):
        assert len(population) == cfg.population_size
        scores = [float(evaluate(c)) for c in population]
        order = sorted(range(len(population)), key=lambda i: -scores[i])
        fittest = population[order[0]]
        history.append(GenerationRecord(generation, scores[order[0]], fittest))
        log.info("generation %d: best f1 %.4f %s", generation, scores[order[0]], list(fittest.genes))
        o1, o2 = crossover(population[order[0]], population[order[1]])
        population = [mutate(c, rng, pool) for c in refill(o1, o2, cfg, rng, pool)]
    best = max(history, key=lambda r: r.fitness)
    evaluations = getattr(evaluate, "evaluations", cfg.population_size * cfg.generation_limit)
    return GAResult(best.chromosome, best.fitness, history, evaluations, pool)
