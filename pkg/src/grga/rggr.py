"""Relationship graph of gene regulation (RGGR).

The graph has one node column per locus and one weight matrix per pair of
adjacent loci.  Weights are reinforced or weakened from individual fitness
and turned into locus-selection probabilities for crossover and mutation.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

Chromosome = Sequence[int]


@dataclass(frozen=True)
class GeneSpace:
    """Number of loci and the alphabet size of each locus column."""

    alphabet_sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.alphabet_sizes)
        object.__setattr__(self, "alphabet_sizes", sizes)
        if len(sizes) < 2:
            raise ValueError(f"a gene space needs at least 2 loci, got {len(sizes)}")
        if any(n < 1 for n in sizes):
            raise ValueError(f"alphabet sizes must be >= 1, got {list(sizes)}")

    @classmethod
    def uniform(cls, num_loci: int, alphabet_size: int) -> "GeneSpace":
        return cls((alphabet_size,) * num_loci)

    @property
    def num_loci(self) -> int:
        return len(self.alphabet_sizes)

    @property
    def num_edges(self) -> int:
        return len(self.alphabet_sizes) - 1

    def validate(self, genes: Chromosome) -> None:
        if len(genes) != self.num_loci:
            raise ValueError(
                f"chromosome has {len(genes)} genes, gene space has {self.num_loci} loci"
            )
        for k, (g, n) in enumerate(zip(genes, self.alphabet_sizes)):
            if not 0 <= g < n:
                raise ValueError(f"gene {g} at locus {k} outside alphabet [0, {n})")


@dataclass(frozen=True)
class ConstantV:
    """Update-size control V(W) = c."""

    c: float = 1.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("ConstantV requires c > 0")

    def __call__(self, w: float) -> float:
        return self.c


@dataclass(frozen=True)
class SaturatingV:
    """Update-size control V(W) = c / (1 + alpha * W); shrinks steps on heavy edges."""

    c: float = 1.0
    alpha: float = 0.1

    def __post_init__(self):
        if not self.c > 0 or self.alpha < 0:
            raise ValueError("SaturatingV requires c > 0 and alpha >= 0")

    def __call__(self, w: float) -> float:
        return self.c / (1.0 + self.alpha * w)


@dataclass(frozen=True)
class UpdateParams:
    lambda_threshold: float = 0.0
    rho_fraction: float = 0.1
    rho_min: float = 1e-6
    mu: float = 0.8
    v_function: ConstantV | SaturatingV = field(default_factory=ConstantV)
    first_column_damping: float = 0.5

    def __post_init__(self):
        if self.lambda_threshold < 0:
            # a zero weight could be pushed negative by the W == 0 strengthen branch
            raise ValueError("lambda_threshold < 0 is not supported")
        if not self.rho_fraction > 0 or not self.rho_min > 0:
            raise ValueError("rho_fraction and rho_min must be > 0")
        if not 0 < self.mu < 1:
            raise ValueError("mu must lie in (0, 1)")
        if not 0 < self.first_column_damping <= 1:
            raise ValueError("first_column_damping must lie in (0, 1]")

    def rho(self, avg_fitness: float) -> float:
        return max(self.rho_min, self.rho_fraction * abs(avg_fitness))


@dataclass(frozen=True)
class StrengthParams:
    c1: float = 1.0
    c2: float = 0.1

    def __post_init__(self):
        if not self.c1 > 0 or self.c2 < 0:
            raise ValueError("StrengthParams requires c1 > 0 and c2 >= 0")


class Rggr:
    """Weighted multipartite graph over adjacent locus pairs.

    ``weights[k][i, j]`` is the weight of the edge from allele ``i`` at locus
    ``k`` to allele ``j`` at locus ``k + 1``.
    """

    def __init__(self, space: GeneSpace, weights: list[np.ndarray] | None = None):
        self.space = space
        if weights is None:
            sizes = space.alphabet_sizes
            weights = [np.ones((sizes[k], sizes[k + 1])) for k in range(space.num_edges)]
        else:
            weights = [np.array(w, dtype=float) for w in weights]
            if len(weights) != space.num_edges:
                raise ValueError("need one weight matrix per adjacent locus pair")
            for k, w in enumerate(weights):
                expected = (space.alphabet_sizes[k], space.alphabet_sizes[k + 1])
                if w.shape != expected:
                    raise ValueError(f"matrix {k} has shape {w.shape}, expected {expected}")
                if not np.all(np.isfinite(w)) or np.any(w < 0):
                    raise ValueError(f"matrix {k} has negative or non-finite weights")
        self.weights = weights

    def edge_weights(self, genes: Chromosome) -> list[float]:
        """Weights along the chain traced by ``genes``."""
        return [float(self.weights[k][genes[k], genes[k + 1]]) for k in range(self.space.num_edges)]

    def copy(self) -> "Rggr":
        return Rggr(self.space, [w.copy() for w in self.weights])

    def to_dict(self) -> dict:
        return {
            "alphabet_sizes": list(self.space.alphabet_sizes),
            "weights": [w.tolist() for w in self.weights],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Rggr":
        try:
            space = GeneSpace(tuple(data["alphabet_sizes"]))
            weights = data["weights"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed RGGR snapshot: {exc}") from exc
        return cls(space, weights)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Rggr":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Rggr):
            return NotImplemented
        return self.space == other.space and all(
            np.array_equal(a, b) for a, b in zip(self.weights, other.weights)
        )

    def __repr__(self) -> str:
        return f"Rggr(alphabet_sizes={list(self.space.alphabet_sizes)})"


def rggr_init(space: GeneSpace) -> Rggr:
    return Rggr(space)


def _damping(params: UpdateParams, column_k: int) -> float:
    return params.first_column_damping if column_k == 0 else 1.0


def strengthen_edge(w: float, delta: float, rho: float, params: UpdateParams, column_k: int) -> float:
    """Reinforce an edge of an acceptable chain (``delta >= lambda``)."""
    damping = _damping(params, column_k)
    if w != 0:
        return max(w + damping * (delta / (delta + rho)) * params.v_function(w), 0.0)
    return w + damping * params.mu * delta


def weaken_edge(w: float, delta_magnitude: float, rho: float, params: UpdateParams, column_k: int) -> float:
    """Weaken an edge of an unacceptable chain; ``delta_magnitude`` is ``|delta - lambda|``."""
    damping = _damping(params, column_k)
    if w != 0:
        step = (delta_magnitude / (delta_magnitude + rho)) * params.v_function(w)
        return max(w - damping * step, 0.0)
    return max(w - damping * params.mu * delta_magnitude, 0.0)


def update_from_population(
    rggr: Rggr,
    individuals: Iterable[tuple[Chromosome, float]],
    avg_fitness: float,
    params: UpdateParams,
    counter: Counter | None = None,
) -> Rggr:
    """Apply one round of fitness-driven updates in place and return ``rggr``.

    Individuals are processed in list order, edges left to right, so an edge
    shared by N individuals is transformed N times in sequence.  When
    ``counter`` is given it is incremented once per ``(k, i, j)`` application.
    """
    individuals = list(individuals)
    for genes, _ in individuals:
        rggr.space.validate(genes)
    rho = params.rho(avg_fitness)
    lam = params.lambda_threshold
    weights = rggr.weights
    for genes, fit in individuals:
        delta = fit - avg_fitness
        accept = delta >= lam
        magnitude = abs(delta - lam)
        for k in range(len(weights)):
            i, j = genes[k], genes[k + 1]
            w = float(weights[k][i, j])
            if accept:
                weights[k][i, j] = strengthen_edge(w, delta, rho, params, k)
            else:
                weights[k][i, j] = weaken_edge(w, magnitude, rho, params, k)
            if counter is not None:
                counter[(k, i, j)] += 1
    return rggr


def edge_strength(w: float, params: StrengthParams) -> float:
    return 1.0 / (params.c1 + params.c2 * w)


def _normalize(values: list[float]) -> list[float]:
    if all(v == values[0] for v in values):
        # exact uniform, so an untrained graph draws loci like the random baseline
        return [1.0 / len(values)] * len(values)
    total = math.fsum(values)
    return [v / total for v in values]


def crossover_locus_probs(
    rggr: Rggr, parent_a: Chromosome, parent_b: Chromosome, params: StrengthParams
) -> list[float]:
    """Probability of cutting at each edge column; weak joint edges are cut more often."""
    rggr.space.validate(parent_a)
    rggr.space.validate(parent_b)
    wa = rggr.edge_weights(parent_a)
    wb = rggr.edge_weights(parent_b)
    return _normalize([edge_strength(x, params) + edge_strength(y, params) for x, y in zip(wa, wb)])


def mutation_locus_probs(rggr: Rggr, individual: Chromosome, params: StrengthParams) -> list[float]:
    rggr.space.validate(individual)
    return _normalize([edge_strength(w, params) for w in rggr.edge_weights(individual)])


def sample_locus(probs: Sequence[float], rng: np.random.Generator) -> int:
    """Draw an index by inverting the cumulative distribution with one uniform draw."""
    if len(probs) == 0:
        raise ValueError("cannot sample from an empty probability vector")
    if any(p < 0 for p in probs):
        raise ValueError("probabilities must be non-negative")
    total = math.fsum(probs)
    if total <= 0:
        raise ValueError("cannot sample from an all-zero probability vector")
    u = rng.random() * total
    acc = 0.0
    last = 0
    for k, p in enumerate(probs):
        if p <= 0:
            continue
        acc += p
        last = k
        if u < acc:
            return k
    # u landed in the rounding gap at the top end
    return last


def top_k_weights(rggr: Rggr, k: int) -> list[list[tuple[int, int, float]]]:
    """Per edge column, the ``k`` heaviest edges, ties broken by lower ``(i, j)``."""
    if k < 0:
        raise ValueError("k must be >= 0")
    out = []
    for w in rggr.weights:
        n_from, n_to = w.shape
        flat = w.ravel()
        # stable sort on negated weight keeps row-major (i, j) order among ties
        order = np.argsort(-flat, kind="stable")[:k]
        out.append([(int(idx // n_to), int(idx % n_to), float(flat[idx])) for idx in order])
    return out


def rank1_chain(rggr: Rggr) -> list[int]:
    """Chain through the heaviest first-column edge, then the heaviest outgoing edge at each step."""
    w0 = rggr.weights[0]
    i, j = divmod(int(np.argmax(w0)), w0.shape[1])
    chain = [i, j]
    for w in rggr.weights[1:]:
        row = w[chain[-1]]
        chain.append(int(np.argmax(row)))
    return chain
