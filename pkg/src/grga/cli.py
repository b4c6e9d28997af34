"""Command-line front end.

    grga bench shubert  [run flags]
    grga featsel        [run flags] [--dataset CSV --label COL --penalty P]
    grga report heatmap --snapshot RGGR.json [--k 5] [--decode] [--out CSV]
    grga report slice   --snapshot RGGR.json [--top-pairs 5] [--out CSV]
    grga verify aggregate --out DIR
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .benchmarks import DiscretizedBox
from .engine import FitnessError
from .experiment import ConfigError, ExperimentConfig, run_experiment, verify_aggregate
from .featsel import DatasetError, DatasetFileError
from .report import emit_fixed_slice, emit_heatmap
from .rggr import Rggr

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_RUN = 4

PRESETS = {
    "shubert": {
        "problem": {"kind": "shubert", "dims": 3, "lo": -10.0, "hi": 10.0, "bins": 60},
        "ga": {"population_size": 200, "mutation_rate": 0.05, "max_generations": 30},
        "mc_runs": 100,
        "output_dir": "out/shubert",
    },
    "featsel": {
        "problem": {"kind": "featsel", "dataset": None, "label": "label", "penalty": 0.001, "folds": 5},
        "ga": {"population_size": 30, "mutation_rate": 0.2, "max_generations": 100, "stall_generations": 10},
        "mc_runs": 30,
        "output_dir": "out/featsel",
    },
}


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def resolve_config(preset: str, args: argparse.Namespace) -> ExperimentConfig:
    """Preset, then the JSON config file, then command-line flags."""
    data = json.loads(json.dumps(PRESETS[preset]))
    if args.config:
        try:
            file_data = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON: {exc}") from exc
        if not isinstance(file_data, dict):
            raise ConfigError(f"{args.config}: top level must be an object")
        data = _merge(data, file_data)
    flags = {
        "base_seed": args.seed,
        "mc_runs": args.mc_runs,
        "jobs": args.jobs,
        "output_dir": args.out,
        "mode": args.mode,
    }
    data.update({k: v for k, v in flags.items() if v is not None})
    ga = {"population_size": args.pop, "max_generations": args.generations, "mutation_rate": args.mutation_rate}
    data["ga"] = {**data.get("ga", {}), **{k: v for k, v in ga.items() if v is not None}}
    if preset == "featsel":
        extra = {"dataset": args.dataset, "label": args.label, "penalty": args.penalty}
        data["problem"] = {**data["problem"], **{k: v for k, v in extra.items() if v is not None}}
    return ExperimentConfig.from_dict(data)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment config; flags override its values")
    p.add_argument("--seed", type=int, help="base seed; run i uses base_seed + i")
    p.add_argument("--pop", type=int, help="population size")
    p.add_argument("--generations", type=int, help="generation cap")
    p.add_argument("--mutation-rate", type=float)
    p.add_argument("--mc-runs", type=int, help="number of paired Monte Carlo runs")
    p.add_argument("--jobs", type=int, help="worker processes")
    p.add_argument("--out", help="output directory")
    p.add_argument("--mode", choices=["grga", "baseline", "both"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grga", description="Gene-regulatory GA experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="benchmark experiments")
    bench_sub = bench.add_subparsers(dest="bench", required=True)
    _add_run_flags(bench_sub.add_parser("shubert", help="3-D Shubert, 60 bins per axis"))

    fs = sub.add_parser("featsel", help="wrapper feature selection")
    _add_run_flags(fs)
    fs.add_argument("--dataset", help="CSV with a header row (default: bundled fixture)")
    fs.add_argument("--label", help="label column name")
    fs.add_argument("--penalty", type=float, help="fitness penalty per selected feature")

    report = sub.add_parser("report", help="reports from an RGGR snapshot")
    report_sub = report.add_subparsers(dest="report", required=True)
    hm = report_sub.add_parser("heatmap", help="top-k weighted edges per column")
    hm.add_argument("--snapshot", required=True)
    hm.add_argument("--k", type=int, default=5)
    hm.add_argument("--decode", action="store_true", help="add decoded values on a [lo, hi] box")
    hm.add_argument("--lo", type=float, default=-10.0)
    hm.add_argument("--hi", type=float, default=10.0)
    hm.add_argument("--out")
    sl = report_sub.add_parser("slice", help="sweep x3 for the heaviest (x1, x2) edges")
    sl.add_argument("--snapshot", required=True)
    sl.add_argument("--top-pairs", type=int, default=5)
    sl.add_argument("--lo", type=float, default=-10.0)
    sl.add_argument("--hi", type=float, default=10.0)
    sl.add_argument("--out")

    verify = sub.add_parser("verify", help="consistency checks on outputs")
    verify_sub = verify.add_subparsers(dest="verify", required=True)
    agg = verify_sub.add_parser("aggregate", help="recompute aggregate.csv from per-run CSVs")
    agg.add_argument("--out", required=True, help="experiment output directory")
    return parser


def _load_snapshot(path: str) -> Rggr:
    try:
        return Rggr.from_json(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed snapshot: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _box_for(rggr: Rggr, lo: float, hi: float) -> DiscretizedBox:
    sizes = rggr.space.alphabet_sizes
    return DiscretizedBox((lo,) * len(sizes), (hi,) * len(sizes), sizes)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _print_summary(summary) -> None:
    d = summary.to_dict()
    keep = ["win_rate", "first_exceed_generation", "overtake_generation", "mean_final_best", "mean_generations", "terminations"]
    out = {k: d[k] for k in keep}
    if "rank1_top1pct_hits" in summary.extras:
        out["rank1_top1pct_hits"] = summary.extras["rank1_top1pct_hits"]
    if "selected" in summary.extras:
        out["selected"] = {a: v["selected_features"] for a, v in summary.extras["selected"].items()}
    print(json.dumps(out, indent=2, sort_keys=True))


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "bench":
        summary = run_experiment(resolve_config("shubert", args))
        _print_summary(summary)
    elif args.command == "featsel":
        summary = run_experiment(resolve_config("featsel", args))
        _print_summary(summary)
    elif args.command == "report":
        rggr = _load_snapshot(args.snapshot)
        if args.report == "heatmap":
            box = _box_for(rggr, args.lo, args.hi) if args.decode else None
            _emit(emit_heatmap(rggr, args.k, box), args.out)
        else:
            _emit(emit_fixed_slice(rggr, _box_for(rggr, args.lo, args.hi), args.top_pairs), args.out)
    elif args.command == "verify":
        problems = verify_aggregate(Path(args.out))
        for p in problems:
            print(p, file=sys.stderr)
        if problems:
            return 1
        print("aggregate.csv matches per-run CSVs")
    return 0


def main(argv: list[str] | None = None) -> int:
    try:
        return run(argv)
    except FitnessError as exc:
        print(f"run error: {exc}", file=sys.stderr)
        return EXIT_RUN
    except (DatasetFileError, FileNotFoundError, OSError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, DatasetError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
