"""Run the Shubert and feature-selection comparisons and print headline numbers.

    python3 scripts/run_studies.py --out out/studies
"""

import argparse
import json
from pathlib import Path

from grga.experiment import ExperimentConfig, run_experiment


def shubert_config(out, runs, seed):
    return ExperimentConfig.from_dict(
        {
            "problem": {"kind": "shubert", "dims": 3, "lo": -10.0, "hi": 10.0, "bins": 60},
            "ga": {"population_size": 200, "mutation_rate": 0.05, "max_generations": 30},
            "mc_runs": runs,
            "base_seed": seed,
            "output_dir": str(out),
        }
    )


def featsel_config(out, runs, seed):
    return ExperimentConfig.from_dict(
        {
            "problem": {"kind": "featsel", "label": "label", "penalty": 0.001, "folds": 5},
            "ga": {"population_size": 30, "mutation_rate": 0.2, "max_generations": 100, "stall_generations": 10},
            "mc_runs": runs,
            "base_seed": seed,
            "output_dir": str(out),
        }
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/studies")
    ap.add_argument("--shubert-runs", type=int, default=100)
    ap.add_argument("--featsel-runs", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    root = Path(args.out)

    s = run_experiment(shubert_config(root / "shubert", args.shubert_runs, args.seed))
    g_avg, b_avg = s.stats["grga"]["mean_avg"], s.stats["baseline"]["mean_avg"]
    print("shubert: generation, mean avg fitness GRGA - GA")
    for g in range(0, len(g_avg), 5):
        print(f"  {g:3d} {g_avg[g] - b_avg[g]:+9.2f}")
    print(f"  mean best at final generation: GRGA {s.stats['grga']['mean_best'][-1]:.2f}, GA {s.stats['baseline']['mean_best'][-1]:.2f}")
    print(f"  rank-1 chains in grid top 1%: {s.extras['rank1_top1pct_hits']}/{args.shubert_runs}")

    f = run_experiment(featsel_config(root / "featsel", args.featsel_runs, args.seed))
    print("featsel:")
    print(f"  mean generations: {json.dumps(f.mean_generations)}")
    print(f"  mean final fitness: {json.dumps(f.mean_final_best)}")


if __name__ == "__main__":
    main()
