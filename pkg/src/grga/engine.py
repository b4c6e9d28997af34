"""Evolutionary loop with RGGR-guided loci, plus a random-locus baseline."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np

from .rggr import (
    GeneSpace,
    Rggr,
    StrengthParams,
    UpdateParams,
    crossover_locus_probs,
    mutation_locus_probs,
    rggr_init,
    sample_locus,
    update_from_population,
)

Genes = tuple[int, ...]
FitnessFunction = Callable[[Sequence[int]], float]


class FitnessError(RuntimeError):
    """Raised when the fitness evaluator fails; carries the generation and chromosome."""

    def __init__(self, generation: int, chromosome: Sequence[int], cause: BaseException):
        super().__init__(f"fitness evaluation failed at generation {generation} for {list(chromosome)}: {cause!r}")
        self.generation = generation
        self.chromosome = tuple(chromosome)


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 200
    mutation_rate: float = 0.05
    crossover_rate: float = 1.0
    max_generations: int = 30
    stall_generations: int = 10
    elitism_count: int = 1
    selection: Literal["tournament", "roulette"] = "tournament"
    tournament_size: int = 2
    mutation_endpoint: Literal["downstream", "upstream"] = "downstream"
    seed: int = 0
    mode: Literal["grga", "baseline"] = "grga"

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if not 0 <= self.mutation_rate <= 1 or not 0 <= self.crossover_rate <= 1:
            raise ValueError("mutation_rate and crossover_rate must lie in [0, 1]")
        if self.max_generations < 1 or self.stall_generations < 1:
            raise ValueError("max_generations and stall_generations must be >= 1")
        if not 0 <= self.elitism_count < self.population_size:
            raise ValueError("elitism_count must satisfy 0 <= elitism_count < population_size")
        if self.selection not in ("tournament", "roulette"):
            raise ValueError(f"unknown selection {self.selection!r}")
        if self.selection == "tournament" and self.tournament_size < 2:
            raise ValueError("tournament_size must be >= 2")
        if self.mutation_endpoint not in ("downstream", "upstream"):
            raise ValueError(f"unknown mutation_endpoint {self.mutation_endpoint!r}")
        if self.mode not in ("grga", "baseline"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not -(2**63) <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")


@dataclass
class RunRecord:
    rows: list[tuple[int, float, float]]
    best_chromosome: Genes
    best_fitness: float
    termination_reason: Literal["stall", "max_generations"]
    rggr: Rggr | None = None
    config: GaConfig | None = None

    @property
    def generations(self) -> int:
        return self.rows[-1][0]

    def sidecar(self) -> dict:
        return {
            "config": asdict(self.config) if self.config is not None else None,
            "seed": self.config.seed if self.config is not None else None,
            "termination_reason": self.termination_reason,
            "best_chromosome": list(self.best_chromosome),
            "best_fitness": self.best_fitness,
            "generations": self.generations,
        }


def single_point_crossover(parent_a: Sequence[int], parent_b: Sequence[int], cut: int) -> tuple[Genes, Genes]:
    """Swap tails after edge column ``cut`` (between gene ``cut`` and ``cut + 1``)."""
    if len(parent_a) != len(parent_b):
        raise ValueError("parents must have equal length")
    if not 0 <= cut < len(parent_a) - 1:
        raise ValueError(f"cut {cut} outside [0, {len(parent_a) - 1})")
    a, b = tuple(parent_a), tuple(parent_b)
    return a[: cut + 1] + b[cut + 1 :], b[: cut + 1] + a[cut + 1 :]


def mutate_at(
    individual: Sequence[int],
    edge_index: int,
    rng: np.random.Generator,
    space: GeneSpace,
    endpoint: str = "downstream",
) -> Genes:
    """Replace one endpoint gene of edge ``edge_index`` with a different random allele."""
    if not 0 <= edge_index < space.num_edges:
        raise ValueError(f"edge_index {edge_index} outside [0, {space.num_edges})")
    pos = edge_index + 1 if endpoint == "downstream" else edge_index
    n = space.alphabet_sizes[pos]
    genes = list(individual)
    if n == 1:
        return tuple(genes)
    # draw from the n - 1 other alleles
    new = int(rng.integers(n - 1))
    if new >= genes[pos]:
        new += 1
    genes[pos] = new
    return tuple(genes)


def select_parents(
    population: Sequence[Genes],
    fitnesses: Sequence[float],
    config: GaConfig,
    rng: np.random.Generator,
) -> tuple[Genes, Genes]:
    if not population:
        raise ValueError("cannot select from an empty population")
    return _select_one(population, fitnesses, config, rng), _select_one(population, fitnesses, config, rng)


def _select_one(population, fitnesses, config: GaConfig, rng: np.random.Generator) -> Genes:
    n = len(population)
    if config.selection == "tournament":
        # distinct entrants, so a full-size tournament always sees the best
        m = min(config.tournament_size, n)
        if 2 * m > n:
            entrants = rng.permutation(n)[:m].tolist()
        else:
            entrants = []
            while len(entrants) < m:
                idx = int(rng.integers(n))
                if idx not in entrants:
                    entrants.append(idx)
        best = entrants[0]
        for idx in entrants[1:]:
            if fitnesses[idx] > fitnesses[best]:
                best = idx
        return population[best]
    fit = np.asarray(fitnesses, dtype=float)
    spread = float(fit.max() - fit.min())
    # the worst individual keeps a small positive share
    floor = 1e-3 * spread if spread > 0 else 1.0
    mass = fit - fit.min() + floor
    cum = np.cumsum(mass)
    idx = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    return population[min(idx, n - 1)]


def _uniform(k: int) -> list[float]:
    return [1.0 / k] * k


def evolve(
    config: GaConfig,
    space: GeneSpace,
    fitness: FitnessFunction,
    update: UpdateParams | None = None,
    strength: StrengthParams | None = None,
) -> RunRecord:
    """Run one GA from ``config.seed`` until stall or the generation cap."""
    update = update or UpdateParams()
    strength = strength or StrengthParams()
    rng = np.random.default_rng(config.seed)
    grga = config.mode == "grga"
    rggr = rggr_init(space) if grga else None
    num_edges = space.num_edges
    uniform = _uniform(num_edges)
    cache: dict[Genes, float] = {}

    def evaluate(genes: Genes, generation: int) -> float:
        try:
            return cache[genes]
        except KeyError:
            pass
        try:
            value = float(fitness(genes))
        except Exception as exc:
            raise FitnessError(generation, genes, exc) from exc
        if math.isnan(value):
            raise FitnessError(generation, genes, ValueError("fitness is NaN"))
        cache[genes] = value
        return value

    sizes = space.alphabet_sizes
    population: list[Genes] = [
        tuple(int(rng.integers(n)) for n in sizes) for _ in range(config.population_size)
    ]

    rows: list[tuple[int, float, float]] = []
    best_genes: Genes = population[0]
    best_fit = -math.inf
    generation = 0
    while True:
        fits = [evaluate(g, generation) for g in population]
        gen_best = max(range(len(fits)), key=fits.__getitem__)
        if fits[gen_best] > best_fit:
            best_fit, best_genes = fits[gen_best], population[gen_best]
        avg = math.fsum(fits) / len(fits)
        rows.append((generation, fits[gen_best], avg))

        if grga:
            update_from_population(rggr, zip(population, fits), avg, update)

        if generation >= config.stall_generations and all(
            r[1] == rows[-1][1] for r in rows[-config.stall_generations - 1 :]
        ):
            reason = "stall"
            break
        if generation >= config.max_generations:
            reason = "max_generations"
            break

        order = sorted(range(len(fits)), key=lambda i: -fits[i])
        children: list[Genes] = [population[i] for i in order[: config.elitism_count]]
        while len(children) < config.population_size:
            a, b = select_parents(population, fits, config, rng)
            if rng.random() < config.crossover_rate:
                probs = crossover_locus_probs(rggr, a, b, strength) if grga else uniform
                a, b = single_point_crossover(a, b, sample_locus(probs, rng))
            for child in (a, b):
                if rng.random() < config.mutation_rate:
                    probs = mutation_locus_probs(rggr, child, strength) if grga else uniform
                    child = mutate_at(child, sample_locus(probs, rng), rng, space, config.mutation_endpoint)
                if len(children) < config.population_size:
                    children.append(child)
        population = children
        generation += 1

    return RunRecord(
        rows=rows,
        best_chromosome=best_genes,
        best_fitness=best_fit,
        termination_reason=reason,
        rggr=rggr,
        config=config,
    )
