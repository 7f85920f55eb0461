"""Hyperparameter search: genetic algorithm, grid and random search."""

from .ga import (FitnessEvaluator, GAConfig, GAResult, GenerationRecord, crossover, fitness,
                 init_population, mutate, refill, run_ga)
from .genes import (GENE_POOLS, Chromosome, GeneSpec, default_chromosome, gene_pool, is_valid,
                    load_gene_pools, random_chromosome)
from .grids import REFERENCE_GRIDS, reference_grid
from .search import DEFAULT_GRID_CAP, SearchResult, grid_chromosomes, grid_search, grid_size, random_search

__all__ = [
    "Chromosome", "DEFAULT_GRID_CAP", "FitnessEvaluator", "GAConfig", "GAResult", "GENE_POOLS",
    "GeneSpec", "GenerationRecord", "REFERENCE_GRIDS", "SearchResult", "crossover", "default_chromosome",
    "fitness", "gene_pool", "grid_chromosomes", "grid_search", "grid_size", "init_population", "is_valid",
    "load_gene_pools", "mutate", "random_chromosome", "random_search", "refill", "reference_grid", "run_ga",
]
