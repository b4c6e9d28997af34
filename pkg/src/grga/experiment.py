"""Monte Carlo orchestration of paired GRGA / baseline runs and their CSV/JSON outputs."""

from __future__ import annotations

import csv
import importlib
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .benchmarks import DiscretizedBox, box_fitness, grid_oracle, rastrigin, shubert_fitness, sphere
from .engine import GaConfig, RunRecord, evolve
from .featsel import DatasetFileError, FeatSelFitness, featsel_fitness, fixture_path, load_dataset, selected_names
from .rggr import ConstantV, GeneSpace, Rggr, SaturatingV, StrengthParams, UpdateParams, rank1_chain

log = logging.getLogger(__name__)

RUN_HEADER = ["run_id", "algo", "generation", "best_fitness", "avg_fitness"]
AGG_HEADER = ["algo", "generation", "n_runs", "mean_best", "std_best", "mean_avg", "std_avg"]
ALGOS = ("grga", "baseline")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    problem: dict = field(default_factory=lambda: {"kind": "shubert"})
    ga: GaConfig = field(default_factory=GaConfig)
    update: UpdateParams = field(default_factory=UpdateParams)
    strength: StrengthParams = field(default_factory=StrengthParams)
    mc_runs: int = 100
    base_seed: int = 0
    mode: str = "both"
    jobs: int = 1
    output_dir: Path = Path("out")

    def __post_init__(self):
        if self.mc_runs < 1:
            raise ConfigError("mc_runs must be >= 1")
        if self.mode not in ("grga", "baseline", "both"):
            raise ConfigError(f"mode must be grga, baseline or both, got {self.mode!r}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        self.output_dir = Path(self.output_dir)

    @property
    def algos(self) -> tuple[str, ...]:
        return ALGOS if self.mode == "both" else (self.mode,)

    def to_dict(self) -> dict:
        update = asdict(self.update)
        v = self.update.v_function
        update["v_function"] = {"kind": "saturating", "c": v.c, "alpha": v.alpha} if isinstance(v, SaturatingV) else {"kind": "constant", "c": v.c}
        return {
            "problem": self.problem,
            "ga": asdict(self.ga),
            "update": update,
            "strength": asdict(self.strength),
            "mc_runs": self.mc_runs,
            "base_seed": self.base_seed,
            "mode": self.mode,
            "jobs": self.jobs,
            "output_dir": str(self.output_dir),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {"problem", "ga", "update", "strength", "mc_runs", "base_seed", "mode", "jobs", "output_dir"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            problem = dict(data.get("problem", {"kind": "shubert"}))
            ga = dict(data.get("ga", {}))
            if problem.get("kind") == "shubert":
                # a fixed-length experiment unless a stall window is given
                ga.setdefault("stall_generations", ga.get("max_generations", GaConfig.max_generations))
            update = dict(data.get("update", {}))
            if "v_function" in update:
                update["v_function"] = _v_function(update["v_function"])
            return cls(
                problem=problem,
                ga=GaConfig(**ga),
                update=UpdateParams(**update),
                strength=StrengthParams(**data.get("strength", {})),
                mc_runs=int(data.get("mc_runs", 100)),
                base_seed=int(data.get("base_seed", 0)),
                mode=data.get("mode", "both"),
                jobs=int(data.get("jobs", 1)),
                output_dir=Path(data.get("output_dir", "out")),
            )
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


def _v_function(spec):
    kind = spec.get("kind", "constant")
    if kind == "constant":
        return ConstantV(spec.get("c", 1.0))
    if kind == "saturating":
        return SaturatingV(spec.get("c", 1.0), spec.get("alpha", 0.1))
    raise ConfigError(f"unknown v_function kind {kind!r}")


def problem_box(problem: dict) -> DiscretizedBox:
    dims = problem.get("dims", 3)
    return DiscretizedBox.uniform(dims, problem.get("lo", -10.0), problem.get("hi", 10.0), problem.get("bins", 60))


def build_problem(problem: dict) -> tuple[GeneSpace, Callable]:
    """Gene space and fitness function for a problem description."""
    kind = problem.get("kind")
    try:
        if kind == "shubert":
            box = problem_box(problem)
            return box.gene_space(), shubert_fitness(box)
        if kind in ("sphere", "rastrigin"):
            box = problem_box(problem)
            return box.gene_space(), box_fitness(sphere if kind == "sphere" else rastrigin, box)
        if kind == "featsel":
            ds = load_dataset(problem.get("dataset") or fixture_path(), problem.get("label", "label"))
            cfg = FeatSelFitness(ds, problem.get("penalty", 0.001), problem.get("folds", 5), problem.get("fold_seed", 0))
            return ds.gene_space(), featsel_fitness(cfg)
        if kind == "custom":
            module, _, name = problem["callable"].partition(":")
            fn = getattr(importlib.import_module(module), name)
            return GeneSpace(tuple(problem["alphabet_sizes"])), fn
    except DatasetFileError:
        raise
    except (KeyError, ImportError, AttributeError, ValueError) as exc:
        raise ConfigError(f"invalid problem {problem}: {exc}") from exc
    raise ConfigError(f"unknown problem kind {kind!r}")


def run_one(config: ExperimentConfig, run_index: int, algo: str) -> RunRecord:
    space, fitness = build_problem(config.problem)
    ga = replace(config.ga, seed=config.base_seed + run_index, mode=algo)
    return evolve(ga, space, fitness, config.update, config.strength)


def _worker(args):
    cfg_dict, run_index, algo = args
    return run_one(ExperimentConfig.from_dict(cfg_dict), run_index, algo)


def run_all(config: ExperimentConfig) -> dict[str, list[RunRecord]]:
    tasks = [(i, algo) for i in range(config.mc_runs) for algo in config.algos]
    if config.jobs > 1:
        cfg = config.to_dict()
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            records = list(pool.map(_worker, [(cfg, i, a) for i, a in tasks], chunksize=4))
    else:
        records = [run_one(config, i, a) for i, a in tasks]
    out: dict[str, list[RunRecord]] = {a: [] for a in config.algos}
    for (_, algo), rec in zip(tasks, records):
        out[algo].append(rec)
    return out


# -- CSV helpers ------------------------------------------------------------

def fmt(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"refusing to write non-finite value {x}")
    return repr(float(x))


def run_csv(run_id: int, algo: str, record: RunRecord) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RUN_HEADER)
    for g, best, avg in record.rows:
        w.writerow([run_id, algo, g, fmt(best), fmt(avg)])
    return buf.getvalue()


def read_run_csv(path: Path) -> list[tuple[int, str, int, float, float]]:
    """Strict reader: exact header, finite floats."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RUN_HEADER:
            raise ValueError(f"{path}: bad header {header}")
        rows = []
        for line in reader:
            run_id, algo, g, best, avg = line
            best_f, avg_f = float(best), float(avg)
            if not (math.isfinite(best_f) and math.isfinite(avg_f)):
                raise ValueError(f"{path}: non-finite value")
            rows.append((int(run_id), algo, int(g), best_f, avg_f))
    return rows


def _mean_std(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    return mean, math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (n - 1))


def aggregate(traces: dict[str, list[list[tuple[int, float, float]]]]) -> list[tuple]:
    """Per-algorithm, per-generation stats over the runs that reached each generation."""
    rows = []
    for algo in ALGOS:
        if algo not in traces:
            continue
        runs = traces[algo]
        last = max(r[-1][0] for r in runs)
        for g in range(last + 1):
            at = [r[g] for r in runs if len(r) > g]
            mb, sb = _mean_std([x[1] for x in at])
            ma, sa = _mean_std([x[2] for x in at])
            rows.append((algo, g, len(at), mb, sb, ma, sa))
    return rows


def aggregate_csv(rows: list[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(AGG_HEADER)
    for algo, g, n, mb, sb, ma, sa in rows:
        w.writerow([algo, g, n, fmt(mb), fmt(sb), fmt(ma), fmt(sa)])
    return buf.getvalue()


# -- summary ----------------------------------------------------------------

@dataclass
class ComparisonSummary:
    generations: list[int]
    stats: dict[str, dict[str, list[float]]]
    counts: dict[str, list[int]]
    win_rate: float | None
    first_exceed_generation: int | None
    overtake_generation: int | None
    mean_final_best: dict[str, float]
    mean_generations: dict[str, float]
    terminations: dict[str, dict[str, int]]
    extras: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def summarize(records: dict[str, list[RunRecord]]) -> ComparisonSummary:
    traces = {a: [r.rows for r in recs] for a, recs in records.items()}
    agg = aggregate(traces)
    stats: dict[str, dict[str, list[float]]] = {}
    counts: dict[str, list[int]] = {}
    for algo, g, n, mb, sb, ma, sa in agg:
        s = stats.setdefault(algo, {"mean_best": [], "std_best": [], "mean_avg": [], "std_avg": []})
        s["mean_best"].append(mb)
        s["std_best"].append(sb)
        s["mean_avg"].append(ma)
        s["std_avg"].append(sa)
        counts.setdefault(algo, []).append(n)
    win_rate = first_exceed = overtake = None
    common = min(len(s["mean_avg"]) for s in stats.values())
    if set(records) == set(ALGOS):
        pairs = list(zip(records["grga"], records["baseline"]))
        win_rate = sum(1.0 if a.best_fitness > b.best_fitness else 0.5 if a.best_fitness == b.best_fitness else 0.0 for a, b in pairs) / len(pairs)
        ahead = [stats["grga"]["mean_avg"][g] > stats["baseline"]["mean_avg"][g] for g in range(common)]
        first_exceed = next((g for g, x in enumerate(ahead) if x), None)
        # first generation from which GRGA stays ahead through the last shared generation
        if ahead and ahead[-1]:
            overtake = common - 1
            while overtake > 0 and ahead[overtake - 1]:
                overtake -= 1
    return ComparisonSummary(
        generations=list(range(max(len(s["mean_avg"]) for s in stats.values()))),
        stats=stats,
        counts=counts,
        win_rate=win_rate,
        first_exceed_generation=first_exceed,
        overtake_generation=overtake,
        mean_final_best={a: math.fsum(r.best_fitness for r in recs) / len(recs) for a, recs in records.items()},
        mean_generations={a: math.fsum(r.generations for r in recs) / len(recs) for a, recs in records.items()},
        terminations={a: {t: sum(r.termination_reason == t for r in recs) for t in ("stall", "max_generations")} for a, recs in records.items()},
    )


def check_output_dir(path: Path) -> None:
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {path} is not writable: {exc}") from exc


def write_outputs(config: ExperimentConfig, records: dict[str, list[RunRecord]], summary: ComparisonSummary) -> None:
    out = config.output_dir
    runs_dir = out / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)
    for algo, recs in records.items():
        for i, rec in enumerate(recs):
            stem = runs_dir / f"{algo}_run{i:03d}"
            Path(f"{stem}.csv").write_text(run_csv(i, algo, rec))
            Path(f"{stem}.json").write_text(json.dumps(rec.sidecar(), indent=2, sort_keys=True) + "\n")
            if rec.rggr is not None:
                Path(f"{stem}_rggr.json").write_text(rec.rggr.to_json() + "\n")
    traces = {a: [r.rows for r in recs] for a, recs in records.items()}
    (out / "aggregate.csv").write_text(aggregate_csv(aggregate(traces)))
    (out / "summary.json").write_text(json.dumps(summary.to_dict(), indent=2, sort_keys=True) + "\n")
    (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")


def shubert_extras(config: ExperimentConfig, records: dict[str, list[RunRecord]]) -> dict:
    """Grid-oracle context plus, per GRGA run, where its rank-1 weight chain lands."""
    box = problem_box(config.problem)
    oracle = grid_oracle(box)
    extras: dict[str, Any] = {"oracle": oracle.to_dict()}
    if "grga" in records:
        fitness = shubert_fitness(box)
        top1 = oracle.quantile(0.99)
        chains = [rank1_chain(r.rggr) for r in records["grga"]]
        values = [fitness(c) for c in chains]
        extras["rank1_chains"] = [list(c) for c in chains]
        extras["rank1_values"] = values
        extras["rank1_top1pct_hits"] = sum(v >= top1 for v in values)
    return extras


def featsel_extras(config: ExperimentConfig, records: dict[str, list[RunRecord]]) -> dict:
    ds = load_dataset(config.problem.get("dataset") or fixture_path(), config.problem.get("label", "label"))
    out = {}
    for algo, recs in records.items():
        best = max(recs, key=lambda r: r.best_fitness)
        out[algo] = {
            "best_fitness": best.best_fitness,
            "mask": list(best.best_chromosome),
            "selected_features": selected_names(best.best_chromosome, ds),
        }
    return {"selected": out}


def run_experiment(config: ExperimentConfig) -> ComparisonSummary:
    """Run paired Monte Carlo experiments and write every report file."""
    build_problem(config.problem)  # surface problem errors before any run
    check_output_dir(config.output_dir)
    log.info("running %d x %s on %s", config.mc_runs, config.algos, config.problem.get("kind"))
    records = run_all(config)
    summary = summarize(records)
    kind = config.problem.get("kind")
    if kind == "shubert":
        summary.extras = shubert_extras(config, records)
    elif kind == "featsel":
        summary.extras = featsel_extras(config, records)
        (config.output_dir / "selected_features.json").write_text(json.dumps(summary.extras["selected"], indent=2, sort_keys=True) + "\n")
    write_outputs(config, records, summary)
    return summary


def verify_aggregate(output_dir: Path) -> list[str]:
    """Recompute aggregate.csv from the per-run CSVs; returns mismatch descriptions."""
    output_dir = Path(output_dir)
    traces: dict[str, list[list[tuple[int, float, float]]]] = {}
    for path in sorted((output_dir / "runs").glob("*_run*.csv")):
        rows = read_run_csv(path)
        if not rows:
            continue
        algo = rows[0][1]
        traces.setdefault(algo, []).append([(g, b, a) for _, _, g, b, a in rows])
    expected = aggregate_csv(aggregate(traces))
    actual = (output_dir / "aggregate.csv").read_text()
    if expected == actual:
        return []
    problems = []
    exp_lines, act_lines = expected.splitlines(), actual.splitlines()
    if len(exp_lines) != len(act_lines):
        problems.append(f"row count differs: expected {len(exp_lines)}, found {len(act_lines)}")
    for n, (e, a) in enumerate(zip(exp_lines, act_lines)):
        if e != a:
            problems.append(f"line {n + 1}: expected {e!r}, found {a!r}")
    return problems
