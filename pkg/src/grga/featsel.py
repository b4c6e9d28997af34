"""Wrapper feature selection: binary masks scored by cross-validated 1-NN accuracy."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .rggr import GeneSpace


class DatasetError(ValueError):
    pass


class DatasetFileError(DatasetError):
    pass


class MissingColumnError(DatasetError):
    pass


class NonNumericError(DatasetError):
    pass


class SingleClassError(DatasetError):
    pass


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: list[str]
    class_names: list[str]

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[0] != self.labels.shape[0]:
            raise DatasetError("feature rows and labels disagree")
        if self.features.shape[0] < 2:
            raise DatasetError("need at least 2 samples")
        if self.features.shape[1] < 1:
            raise DatasetError("need at least 1 feature")
        if len(np.unique(self.labels)) < 2:
            raise SingleClassError("need at least 2 classes")

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    def gene_space(self) -> GeneSpace:
        return GeneSpace((2,) * self.num_features)


def standardize(x: np.ndarray) -> np.ndarray:
    """Zero mean, unit variance per column; constant columns become zeros."""
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    out = np.zeros_like(x, dtype=float)
    ok = std > 0
    out[:, ok] = (x[:, ok] - mean[ok]) / std[ok]
    return out


def load_dataset(path: str | Path, label_column: str) -> Dataset:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError as exc:
        raise DatasetFileError(f"dataset not found: {path}") from exc
    except OSError as exc:
        raise DatasetFileError(f"cannot read dataset {path}: {exc}") from exc
    if not rows:
        raise DatasetError(f"{path} is empty")
    header, body = rows[0], [r for r in rows[1:] if r]
    if label_column not in header:
        raise MissingColumnError(f"label column {label_column!r} not in header {header}")
    li = header.index(label_column)
    names = [h for c, h in enumerate(header) if c != li]
    values = np.empty((len(body), len(names)))
    raw_labels = []
    for r, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DatasetError(f"line {r}: expected {len(header)} cells, got {len(row)}")
        cells = [v for c, v in enumerate(row) if c != li]
        for c, v in enumerate(cells):
            try:
                values[r - 2, c] = float(v)
            except ValueError:
                raise NonNumericError(f"line {r}, column {names[c]!r}: non-numeric value {v!r}") from None
            if not math.isfinite(values[r - 2, c]):
                raise NonNumericError(f"line {r}, column {names[c]!r}: non-finite value {v!r}")
        raw_labels.append(row[li])
    classes = sorted(set(raw_labels))
    if len(classes) < 2:
        raise SingleClassError(f"label column {label_column!r} has a single class")
    index = {c: i for i, c in enumerate(classes)}
    labels = np.array([index[v] for v in raw_labels], dtype=int)
    return Dataset(standardize(values), labels, names, classes)


def fixture_path() -> Path:
    return Path(str(resources.files("grga") / "data" / "featsel_fixture.csv"))


def load_fixture() -> Dataset:
    return load_dataset(fixture_path(), "label")


def stratified_folds(labels: np.ndarray, folds: int, seed: int = 0) -> np.ndarray:
    """Fold id per sample: shuffle each class with ``seed``, then deal round-robin."""
    rng = np.random.default_rng(seed)
    assign = np.empty(len(labels), dtype=int)
    offset = 0
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(len(idx))]
        # continue the deal across classes so small classes don't all land in fold 0
        assign[idx] = (np.arange(len(idx)) + offset) % folds
        offset += len(idx)
    return assign


@dataclass(frozen=True)
class FeatSelFitness:
    dataset: Dataset
    penalty: float = 0.001
    folds: int = 5
    fold_seed: int = 0

    def __post_init__(self):
        if self.penalty < 0 or self.penalty * self.dataset.num_features >= 1:
            raise ValueError("penalty must satisfy 0 <= penalty * num_features < 1")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if self.folds > len(self.dataset.labels):
            raise ValueError("more folds than samples")


def majority_rate(labels: np.ndarray) -> float:
    return float(np.bincount(labels).max() / len(labels))


def cv_accuracy(x: np.ndarray, labels: np.ndarray, fold_ids: np.ndarray) -> float:
    """Pooled k-fold accuracy of 1-NN (Euclidean, ties to the lowest training index)."""
    correct = 0
    for f in np.unique(fold_ids):
        test = fold_ids == f
        train = ~test
        xtr, ytr = x[train], labels[train]
        d = ((x[test][:, None, :] - xtr[None, :, :]) ** 2).sum(axis=2)
        pred = ytr[np.argmin(d, axis=1)]
        correct += int((pred == labels[test]).sum())
    return correct / len(labels)


def featsel_fitness(config: FeatSelFitness) -> Callable[[Sequence[int]], float]:
    ds = config.dataset
    fold_ids = stratified_folds(ds.labels, config.folds, config.fold_seed)
    baseline = majority_rate(ds.labels)

    def fitness(mask: Sequence[int]) -> float:
        if len(mask) != ds.num_features:
            raise ValueError(f"mask length {len(mask)} != {ds.num_features} features")
        cols = [i for i, m in enumerate(mask) if m]
        if not cols:
            return baseline
        acc = cv_accuracy(ds.features[:, cols], ds.labels, fold_ids)
        return acc - config.penalty * len(cols)

    return fitness


def selected_names(mask: Sequence[int], dataset: Dataset) -> list[str]:
    return [n for n, m in zip(dataset.feature_names, mask) if m]
