"""Regenerate the bundled feature-selection fixture CSV.

Three Gaussian classes over 4 informative features, 2 noisy copies of
informative features, 5 pure-noise features, and one exact duplicate of a
noise feature.
"""

import argparse
import csv
from pathlib import Path

import numpy as np

DEFAULT_OUT = Path(__file__).resolve().parents[1] / "src" / "grga" / "data" / "featsel_fixture.csv"


def make(seed: int = 20240601, per_class: int = 50):
    rng = np.random.default_rng(seed)
    centers = 1.8 * np.array([[0.0, 0.0, 0.0, 0.0], [1.6, 0.8, 0.0, 1.0], [0.0, 1.6, 1.4, -0.6]])
    rows, labels = [], []
    for c, center in enumerate(centers):
        informative = center + rng.normal(size=(per_class, 4))
        redundant = informative[:, :2] + 0.8 * rng.normal(size=(per_class, 2))
        noise = rng.normal(size=(per_class, 5)) * 1.5
        rows.append(np.hstack([informative, redundant, noise, noise[:, :1]]))
        labels += [f"c{c}"] * per_class
    x = np.vstack(rows)
    names = [f"inf{i}" for i in range(4)] + ["red0", "red1"] + [f"noise{i}" for i in range(5)] + ["noise0_dup"]
    return names, x, labels


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    ap.add_argument("--seed", type=int, default=20240601)
    args = ap.parse_args()
    names, x, labels = make(args.seed)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with args.out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + ["label"])
        for row, lab in zip(x, labels):
            w.writerow([f"{v:.6f}" for v in row] + [lab])
    print(f"wrote {len(labels)} rows to {args.out}")


if __name__ == "__main__":
    main()
