"""Genetic algorithm with RGGR-guided crossover and mutation loci."""

from .benchmarks import DiscretizedBox, decode_bin, grid_oracle, shubert, shubert_fitness
from .engine import GaConfig, RunRecord, evolve, mutate_at, select_parents, single_point_crossover
from .rggr import (
    ConstantV,
    GeneSpace,
    Rggr,
    SaturatingV,
    StrengthParams,
    UpdateParams,
    crossover_locus_probs,
    edge_strength,
    mutation_locus_probs,
    rggr_init,
    sample_locus,
    strengthen_edge,
    top_k_weights,
    update_from_population,
    weaken_edge,
)

__version__ = "0.1.0"
