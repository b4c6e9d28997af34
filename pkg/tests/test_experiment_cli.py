import csv
import json
import math
from pathlib import Path

import pytest

from grga.benchmarks import SHUBERT_BOX, grid_oracle, shubert, shubert_fitness
from grga.cli import EXIT_CONFIG, EXIT_IO, EXIT_RUN, main
from grga.engine import GaConfig, evolve
from grga.experiment import (
    AGG_HEADER,
    RUN_HEADER,
    ConfigError,
    ExperimentConfig,
    aggregate,
    read_run_csv,
    run_experiment,
    verify_aggregate,
)
from grga.report import HEATMAP_HEADER, SLICE_HEADER, emit_fixed_slice, emit_heatmap
from grga.rggr import GeneSpace, Rggr, rggr_init


def small_config(out, **kw):
    data = {
        "problem": {"kind": "shubert"},
        "ga": {"population_size": 30, "max_generations": 8},
        "mc_runs": 2,
        "output_dir": str(out),
    }
    data.update(kw)
    return ExperimentConfig.from_dict(data)


def read_rows(text):
    return list(csv.reader(text.splitlines()))


def tree_bytes(root: Path):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


# -- run_experiment ---------------------------------------------------------

def test_single_run_file_contract(tmp_path):
    run_experiment(small_config(tmp_path, mc_runs=1))
    run_csvs = sorted(p.name for p in (tmp_path / "runs").glob("*.csv"))
    assert run_csvs == ["baseline_run000.csv", "grga_run000.csv"]
    assert (tmp_path / "summary.json").exists()
    assert (tmp_path / "aggregate.csv").exists()
    sidecar = json.loads((tmp_path / "runs" / "grga_run000.json").read_text())
    assert {"config", "seed", "termination_reason", "best_chromosome"} <= set(sidecar)
    Rggr.from_json((tmp_path / "runs" / "grga_run000_rggr.json").read_text())
    assert not (tmp_path / "runs" / "baseline_run000_rggr.json").exists()


def test_run_csv_schema_and_strict_parse(tmp_path):
    run_experiment(small_config(tmp_path))
    for p in (tmp_path / "runs").glob("*.csv"):
        rows = read_run_csv(p)
        assert [r[2] for r in rows] == list(range(len(rows)))
    header = read_rows((tmp_path / "aggregate.csv").read_text())[0]
    assert header == AGG_HEADER
    for row in read_rows((tmp_path / "aggregate.csv").read_text())[1:]:
        assert all(math.isfinite(float(v)) for v in row[3:])


def test_paired_seeds(tmp_path):
    run_experiment(small_config(tmp_path))
    for i in range(2):
        g = json.loads((tmp_path / "runs" / f"grga_run{i:03d}.json").read_text())
        b = json.loads((tmp_path / "runs" / f"baseline_run{i:03d}.json").read_text())
        assert g["seed"] == b["seed"] == i
        # identical seeds give identical initial populations
        assert read_run_csv(tmp_path / "runs" / f"grga_run{i:03d}.csv")[0][3:] == read_run_csv(tmp_path / "runs" / f"baseline_run{i:03d}.csv")[0][3:]


def test_rerun_byte_identical(tmp_path):
    run_experiment(small_config(tmp_path / "a"))
    first = tree_bytes(tmp_path / "a")
    run_experiment(small_config(tmp_path / "a"))
    assert tree_bytes(tmp_path / "a") == first
    run_experiment(small_config(tmp_path / "c"))
    second = tree_bytes(tmp_path / "c")
    # config.json records the output directory itself
    strip = lambda d: {k: v for k, v in d.items() if k != "config.json"}
    assert strip(first) == strip(second)


def test_parallel_matches_serial(tmp_path):
    run_experiment(small_config(tmp_path / "serial", mc_runs=3))
    run_experiment(small_config(tmp_path / "par", mc_runs=3, jobs=2))
    a, b = tree_bytes(tmp_path / "serial"), tree_bytes(tmp_path / "par")
    a.pop("config.json"), b.pop("config.json")
    assert a == b


def test_summary_fields(tmp_path):
    s = run_experiment(small_config(tmp_path))
    assert 0 <= s.win_rate <= 1
    assert len(s.stats["grga"]["mean_avg"]) == len(s.counts["grga"])
    assert s.extras["oracle"]["best_bins"] == [7, 9, 9]
    assert len(s.extras["rank1_values"]) == 2


def test_single_mode_has_no_comparison(tmp_path):
    s = run_experiment(small_config(tmp_path, mode="grga"))
    assert s.win_rate is None
    assert not list((tmp_path / "runs").glob("baseline_*"))


def test_aggregate_uses_runs_that_reached_generation():
    traces = {"grga": [[(0, 1.0, 0.5), (1, 2.0, 1.0)], [(0, 3.0, 1.5)]]}
    rows = aggregate(traces)
    assert rows[0] == ("grga", 0, 2, 2.0, math.sqrt(2.0), 1.0, math.sqrt(0.5))
    assert rows[1] == ("grga", 1, 1, 2.0, 0.0, 1.0, 0.0)


def test_verify_aggregate_detects_tampering(tmp_path):
    run_experiment(small_config(tmp_path))
    assert verify_aggregate(tmp_path) == []
    p = tmp_path / "runs" / "grga_run001.csv"
    lines = p.read_text().splitlines()
    parts = lines[3].split(",")
    parts[4] = repr(float(parts[4]) + 1.0)
    lines[3] = ",".join(parts)
    p.write_text("\n".join(lines) + "\n")
    assert verify_aggregate(tmp_path)


def test_strict_reader_rejects_bad_header(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("run,algo,generation,best,avg\n")
    with pytest.raises(ValueError):
        read_run_csv(p)
    p.write_text(",".join(RUN_HEADER) + "\n0,grga,0,nan,1.0\n")
    with pytest.raises(ValueError):
        read_run_csv(p)


@pytest.mark.parametrize(
    "data",
    [
        {"mc_runs": 0},
        {"mode": "neither"},
        {"problem": {"kind": "nope"}},
        {"ga": {"population_size": 1}},
        {"update": {"mu": 2.0}},
        {"update": {"v_function": {"kind": "cubic"}}},
        {"bogus": 1},
    ],
)
def test_invalid_config(tmp_path, data):
    with pytest.raises(ConfigError):
        cfg = ExperimentConfig.from_dict({"output_dir": str(tmp_path), **data})
        run_experiment(cfg)


def test_shubert_stall_defaults_to_generation_cap():
    cfg = ExperimentConfig.from_dict({"problem": {"kind": "shubert"}, "ga": {"max_generations": 17}})
    assert cfg.ga.stall_generations == 17
    cfg = ExperimentConfig.from_dict({"problem": {"kind": "featsel"}, "ga": {"max_generations": 17}})
    assert cfg.ga.stall_generations == 10


def test_config_round_trip():
    cfg = ExperimentConfig.from_dict({"update": {"v_function": {"kind": "saturating", "c": 2.0, "alpha": 0.5}}, "mc_runs": 3})
    again = ExperimentConfig.from_dict(cfg.to_dict())
    assert again.to_dict() == cfg.to_dict()


# -- reports ----------------------------------------------------------------

def test_heatmap_fresh():
    rows = read_rows(emit_heatmap(rggr_init(GeneSpace((3, 3, 3))), 2))
    assert rows[0] == HEATMAP_HEADER
    assert rows[1:] == [["0", "1", "0", "0", "1.0"], ["0", "2", "0", "1", "1.0"], ["1", "1", "0", "0", "1.0"], ["1", "2", "0", "1", "1.0"]]


def test_heatmap_k0_header_only():
    assert read_rows(emit_heatmap(rggr_init(GeneSpace((3, 3))), 0)) == [HEATMAP_HEADER]


def test_heatmap_decoded_values():
    r = rggr_init(SHUBERT_BOX.gene_space())
    r.weights[0][7, 9] = 191.33
    rows = read_rows(emit_heatmap(r, 1, SHUBERT_BOX))
    assert rows[0] == HEATMAP_HEADER + ["from_value", "to_value"]
    assert rows[1][:5] == ["0", "1", "7", "9", "191.33"]
    assert float(rows[1][5]) == pytest.approx(-23 / 3) and float(rows[1][6]) == pytest.approx(-7.0)


def test_converged_run_heatmap_chain_in_top_percent():
    oracle = grid_oracle(SHUBERT_BOX)
    rec = evolve(GaConfig(seed=3, stall_generations=30), SHUBERT_BOX.gene_space(), shubert_fitness())
    rows = read_rows(emit_heatmap(rec.rggr, 1, SHUBERT_BOX))[1:]
    (c0,), (c1,) = [[r for r in rows if r[0] == str(c)] for c in (0, 1)]
    # chain through column 0's top edge, continuing along column 1's heaviest outgoing edge
    x1, x2 = int(c0[2]), int(c0[3])
    x3 = int(rec.rggr.weights[1][x2].argmax())
    assert shubert_fitness()([x1, x2, x3]) >= oracle.quantile(0.99)


def test_slice_rows_match_direct_evaluation():
    r = rggr_init(SHUBERT_BOX.gene_space())
    r.weights[0][7, 9] = 50.0
    r.weights[0][2, 3] = 20.0
    rows = read_rows(emit_fixed_slice(r, SHUBERT_BOX, 2))
    assert rows[0] == SLICE_HEADER
    body = rows[1:]
    assert len(body) == 120
    assert {(row[0], row[1], row[2]) for row in body} == {("1", "7", "9"), ("2", "2", "3")}
    for row in body:
        x = [float(v) for v in row[4:7]]
        assert float(row[7]) == shubert(x)
    best = max((row for row in body if row[0] == "1"), key=lambda row: float(row[7]))
    assert best[3] == "9"


def test_slice_fresh_uses_first_chain():
    rows = read_rows(emit_fixed_slice(rggr_init(SHUBERT_BOX.gene_space()), SHUBERT_BOX, 1))
    assert {(row[1], row[2]) for row in rows[1:]} == {("0", "0")}


def test_slice_requires_3d():
    with pytest.raises(ValueError):
        emit_fixed_slice(rggr_init(GeneSpace((60, 60))), SHUBERT_BOX, 1)


# -- CLI --------------------------------------------------------------------

def test_cli_bench_and_reports(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["bench", "shubert", "--mc-runs", "1", "--pop", "20", "--generations", "4", "--out", str(out), "--seed", "5"]) == 0
    cfg = json.loads((out / "config.json").read_text())
    assert cfg["base_seed"] == 5 and cfg["ga"]["population_size"] == 20
    assert main(["verify", "aggregate", "--out", str(out)]) == 0
    snap = str(out / "runs" / "grga_run000_rggr.json")
    hm = tmp_path / "hm.csv"
    assert main(["report", "heatmap", "--snapshot", snap, "--k", "5", "--decode", "--out", str(hm)]) == 0
    assert len(read_rows(hm.read_text())) == 1 + 2 * 5
    sl = tmp_path / "sl.csv"
    assert main(["report", "slice", "--snapshot", snap, "--top-pairs", "2", "--out", str(sl)]) == 0
    assert len(read_rows(sl.read_text())) == 1 + 2 * 60


def test_cli_config_file_with_flag_override(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"ga": {"population_size": 12, "max_generations": 3}, "mc_runs": 1, "mode": "baseline"}))
    out = tmp_path / "o"
    assert main(["bench", "shubert", "--config", str(conf), "--pop", "14", "--out", str(out)]) == 0
    cfg = json.loads((out / "config.json").read_text())
    assert cfg["ga"]["population_size"] == 14
    assert cfg["ga"]["max_generations"] == 3
    assert cfg["mode"] == "baseline"


def test_cli_featsel(tmp_path):
    out = tmp_path / "fs"
    assert main(["featsel", "--mc-runs", "1", "--pop", "10", "--generations", "3", "--out", str(out)]) == 0
    sel = json.loads((out / "selected_features.json").read_text())
    assert set(sel) == {"grga", "baseline"}
    assert all(isinstance(n, str) for n in sel["grga"]["selected_features"])


def test_cli_exit_codes(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["bench", "shubert", "--config", str(bad), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["bench", "shubert", "--mc-runs", "0", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["featsel", "--dataset", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == EXIT_IO
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["bench", "shubert", "--mc-runs", "1", "--out", str(blocker / "sub")]) == EXIT_IO
    snap = tmp_path / "snap.json"
    snap.write_text('{"alphabet_sizes": [2, 2]}')
    assert main(["report", "heatmap", "--snapshot", str(snap)]) == EXIT_CONFIG


def failing_fitness(genes):
    raise RuntimeError("evaluator crashed")


def test_cli_run_error_code(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"problem": {"kind": "custom", "callable": "test_experiment_cli:failing_fitness", "alphabet_sizes": [2, 2]}, "mc_runs": 1}))
    assert main(["bench", "shubert", "--config", str(conf), "--out", str(tmp_path / "o")]) == EXIT_RUN
