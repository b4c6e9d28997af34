"""Discretized benchmark functions and an exhaustive grid oracle.

Shubert is the reference multimodal problem.  Sphere and Rastrigin are small
sanity problems for the engine and are not part of the reference experiment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .rggr import GeneSpace

SHUBERT_MAX = 2709.0935
GRID_BUDGET = 10**7


@dataclass(frozen=True)
class DiscretizedBox:
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    bins: tuple[int, ...]

    def __post_init__(self):
        if not (len(self.lo) == len(self.hi) == len(self.bins)) or not self.lo:
            raise ValueError("lo, hi and bins must be non-empty and of equal length")
        for lo, hi, n in zip(self.lo, self.hi, self.bins):
            if not hi > lo:
                raise ValueError(f"need hi > lo, got [{lo}, {hi}]")
            if n < 1:
                raise ValueError("bins must be >= 1")

    @classmethod
    def uniform(cls, dims: int = 3, lo: float = -10.0, hi: float = 10.0, bins: int = 60) -> "DiscretizedBox":
        return cls((float(lo),) * dims, (float(hi),) * dims, (int(bins),) * dims)

    @property
    def dims(self) -> int:
        return len(self.bins)

    @property
    def cells(self) -> int:
        return math.prod(self.bins)

    def gene_space(self) -> GeneSpace:
        return GeneSpace(self.bins)

    def decode(self, genes: Sequence[int]) -> list[float]:
        return [decode_bin(g, self, d) for d, g in enumerate(genes)]

    def axis(self, dim: int) -> np.ndarray:
        return np.array([decode_bin(b, self, dim) for b in range(self.bins[dim])])

    def to_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi), "bins": list(self.bins)}


SHUBERT_BOX = DiscretizedBox.uniform(3, -10.0, 10.0, 60)


def _shubert_term(x: float) -> float:
    return sum(j * math.cos((j + 1) * x + j) for j in range(1, 6))


def shubert(x: Sequence[float]) -> float:
    """-prod_i sum_{j=1..5} j cos((j+1) x_i + j); maximization form."""
    if len(x) < 1:
        raise ValueError("shubert needs at least one coordinate")
    prod = 1.0
    for xi in x:
        prod *= _shubert_term(xi)
    return -prod


def sphere(x: Sequence[float]) -> float:
    """Negated sphere, so the maximum 0 is at the origin."""
    return -sum(v * v for v in x)


def rastrigin(x: Sequence[float]) -> float:
    """Negated Rastrigin (A = 10); maximum 0 at the origin."""
    return -(10.0 * len(x) + sum(v * v - 10.0 * math.cos(2 * math.pi * v) for v in x))


def decode_bin(bin_index: int, box: DiscretizedBox, dim: int) -> float:
    """Left edge of bin ``bin_index`` along ``dim``."""
    n = box.bins[dim]
    if not 0 <= bin_index < n:
        raise ValueError(f"bin {bin_index} outside [0, {n})")
    lo, hi = box.lo[dim], box.hi[dim]
    return (hi - lo) * bin_index / n + lo


def _check_space(genes: Sequence[int], box: DiscretizedBox) -> None:
    if len(genes) != box.dims:
        raise ValueError(f"chromosome length {len(genes)} != box dims {box.dims}")


def shubert_fitness(box: DiscretizedBox = SHUBERT_BOX) -> Callable[[Sequence[int]], float]:
    """Fitness over bin indices; per-axis terms are tabulated once."""
    tables = [[_shubert_term(decode_bin(b, box, d)) for b in range(box.bins[d])] for d in range(box.dims)]

    def fitness(genes: Sequence[int]) -> float:
        _check_space(genes, box)
        prod = 1.0
        for d, g in enumerate(genes):
            if not 0 <= g < box.bins[d]:
                raise ValueError(f"bin {g} outside [0, {box.bins[d]})")
            prod *= tables[d][g]
        return -prod

    return fitness


def box_fitness(fn: Callable[[Sequence[float]], float], box: DiscretizedBox) -> Callable[[Sequence[int]], float]:
    def fitness(genes: Sequence[int]) -> float:
        _check_space(genes, box)
        return fn(box.decode(genes))

    return fitness


@dataclass
class GridOracle:
    best_bins: tuple[int, ...]
    best_value: float
    sorted_values: np.ndarray

    def quantile(self, q: float) -> float:
        if not 0 <= q <= 1:
            raise ValueError("q must lie in [0, 1]")
        return float(np.quantile(self.sorted_values, q))

    def rank_fraction(self, value: float) -> float:
        """Fraction of grid cells whose value is >= ``value``."""
        n = len(self.sorted_values)
        return (n - int(np.searchsorted(self.sorted_values, value, side="left"))) / n

    def to_dict(self, qs: Sequence[float] = (0.9, 0.99, 0.999)) -> dict:
        return {
            "best_bins": list(self.best_bins),
            "best_value": self.best_value,
            "quantiles": {str(q): self.quantile(q) for q in qs},
        }


def grid_oracle(box: DiscretizedBox = SHUBERT_BOX, fn: Callable[[Sequence[float]], float] = shubert) -> GridOracle:
    """Evaluate ``fn`` at every decoded cell of ``box``."""
    if box.cells > GRID_BUDGET:
        raise ValueError(f"grid has {box.cells} cells, budget is {GRID_BUDGET}")
    best_value = -math.inf
    best_bins: tuple[int, ...] = ()
    values = np.empty(box.cells)
    for flat, bins in enumerate(np.ndindex(*box.bins)):
        v = fn(box.decode(bins))
        values[flat] = v
        if v > best_value:
            best_value, best_bins = v, tuple(int(b) for b in bins)
    values.sort()
    return GridOracle(best_bins, best_value, values)


def refine_continuous(x0: Sequence[float], box: DiscretizedBox, fn=shubert) -> tuple[np.ndarray, float]:
    """Bounded local maximization of ``fn`` from ``x0``."""
    from scipy.optimize import minimize

    res = minimize(
        lambda x: -fn(x),
        np.asarray(x0, dtype=float),
        method="L-BFGS-B",
        bounds=list(zip(box.lo, box.hi)),
        options={"ftol": 1e-15, "gtol": 1e-10},
    )
    return res.x, -float(res.fun)
