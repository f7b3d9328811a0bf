import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from vnfplace import cli
from vnfplace.harness.bench import BENCH_HEADER, SKIP, bench_strategies, format_table
from vnfplace.harness.config import ConfigError, ExperimentConfig, TopologySpec, from_dict, load_config
from vnfplace.harness.experiments import (
    GENERATION_HEADER,
    METRICS_HEADER,
    SUMMARY_HEADER,
    TIMINGS_HEADER,
    compare_algorithms,
    optimize,
    read_hypervolumes,
)
from vnfplace.harness.workload import WorkloadParams, generate_workload
from vnfplace.selection import cache_bytes
from vnfplace.topology import build_fat_tree

ROOT = Path(__file__).resolve().parents[1]


def _small(**kw):
    base = dict(
        topologies=(TopologySpec.make("fat_tree", k=4),),
        algorithms=("nsga2",),
        representations=("fls", "pl"),
        population=8,
        budget=24,
        seeds=(0, 1),
    )
    base.update(kw)
    return ExperimentConfig(**base)


def _header(path):
    with open(path, newline="") as fh:
        return next(csv.reader(fh))


# ---------------------------------------------------------------- workload and config


def test_workload_fill_and_ranges():
    g = build_fat_tree(4)
    wl = generate_workload(g, WorkloadParams(), np.random.default_rng(0))
    assert wl.total_capacity == 256
    assert wl.total_demand >= 154
    # the last chain is the one that crossed the target
    assert wl.total_demand - sum(wl.services[-1].demands) < 0.6 * 256
    for s in wl.services:
        assert 3 <= len(s.demands) <= 7
        assert all(1 <= d <= 4 for d in s.demands)
        assert 50.0 <= s.rate <= 200.0
    again = generate_workload(g, WorkloadParams(), np.random.default_rng(0))
    assert again == wl


def test_workload_rejects_bad_parameters():
    for kw in ({"fill": 0.0}, {"fill": 1.2}, {"chain_length": (0, 3)}, {"demand": (3, 2)}, {"rate": (0.0, 1.0)}):
        with pytest.raises(ConfigError):
            WorkloadParams(**kw)
    g = build_fat_tree(4, server_capacity=2)
    with pytest.raises(ConfigError):
        generate_workload(g, WorkloadParams(demand=(3, 4)), np.random.default_rng(0))


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("[topology\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    topo = {"topology": {"family": "fat_tree", "k": 4}}
    for d in (
        {**topo, "extras": {}},
        {**topo, "optimizer": {"populaton": 10}},
        {**topo, "optimizer": {"algorithms": ["spea2"]}},
        {**topo, "optimizer": {"budget": 10, "population": 20}},
        {**topo, "optimizer": {"seeds": []}},
        {**topo, "workload": {"fill": 0}},
        {**topo, "workload": {"rate": 5}},
        {**topo, "model": {"buffer": 0}},
        {**topo, "output": {"colour": "red"}},
        {"topology": {"family": "torus"}},
        {"topology": {"family": "fat_tree", "fat_tree": {"k": 4, "radix": 2}}},
        {},
    ):
        with pytest.raises(ConfigError):
            from_dict(d)


def test_config_parsing(tmp_path):
    cfg = load_config(ROOT / "configs" / "example.toml")
    assert cfg.seeds == (0, 1, 2)
    assert cfg.topologies[0].build().n_servers == 16
    multi = load_config(ROOT / "configs" / "bench_scaling.toml")
    assert [t.label for t in multi.topologies][:2] == ["fat_tree-k12", "dcell-n20"]
    assert from_dict({"topology": {"family": "dcell", "n": 3}, "optimizer": {"seeds": [4, 9]}}).seeds == (4, 9)
    assert cfg.digest() == cfg.override(threads=4, out_dir="elsewhere").digest()
    assert cfg.digest() != cfg.override(budget=300).digest()


# ---------------------------------------------------------------- runs


def test_optimize_writes_outputs(tmp_path):
    cfg = _small(representations=("vls",), seeds=(3,))
    d = optimize(cfg, str(tmp_path))
    data = json.loads((d / "archive.json").read_text())
    assert data["evaluations"] == 24 and data["seed"] == 3
    assert data["latency"] == "conditioned on delivery"
    assert data["archive"] and all(len(m["objectives"]) == 3 for m in data["archive"])
    assert _header(d / "metrics.csv") == GENERATION_HEADER
    assert json.loads((d / "config.snapshot").read_text())["budget"] == 24
    assert (d / "archive.json").read_bytes() == (optimize(cfg, str(tmp_path)) / "archive.json").read_bytes()


def test_compare_layout_and_resume(tmp_path):
    cfg = _small()
    seen = []
    d = compare_algorithms(cfg, str(tmp_path), seen.append)
    assert len(seen) == 4
    assert _header(d / "metrics.csv") == METRICS_HEADER
    assert _header(d / "summary.csv") == SUMMARY_HEADER
    assert _header(d / "timings.csv") == TIMINGS_HEADER
    hv = read_hypervolumes(d)
    assert set(hv) == {("fat_tree-k4", "fls", "nsga2"), ("fat_tree-k4", "pl", "nsga2")}
    assert all(len(v) == 2 and all(0 <= x <= 1 for x in v) for v in hv.values())
    archive = json.loads((d / "archive.json").read_text())
    assert set(archive["bounds"]) == {"fat_tree-k4"} and len(archive["runs"]) == 4
    before = (d / "metrics.csv").read_bytes()
    again = []
    compare_algorithms(cfg, str(tmp_path), again.append)
    assert again == [] and (d / "metrics.csv").read_bytes() == before
    # deleting one run file reruns exactly that cell
    (d / "runs" / "fat_tree-k4__pl__nsga2__s1.json").unlink()
    compare_algorithms(cfg, str(tmp_path), again.append)
    assert again == ["fat_tree-k4__pl__nsga2__s1"]
    assert (d / "metrics.csv").read_bytes() == before


def test_single_seed_summary_omits_p(tmp_path):
    d = compare_algorithms(_small(seeds=(0,)), str(tmp_path))
    rows = list(csv.DictReader(open(d / "summary.csv", newline="")))
    assert len(rows) == 2 and all(r["p_vs_best"] == "" and r["runs"] == "1" for r in rows)


def test_failed_run_is_recorded_not_fatal(tmp_path, monkeypatch):
    from vnfplace.harness import experiments

    def boom(*a, **k):
        raise RuntimeError("injected")

    monkeypatch.setattr(experiments, "run", boom)
    d = compare_algorithms(_small(seeds=(0,), representations=("fls",)), str(tmp_path))
    row = next(csv.DictReader(open(d / "metrics.csv", newline="")))
    assert row["error"] == "RuntimeError: injected" and row["hypervolume"] == ""


def test_bench_table(tmp_path):
    need = cache_bytes(build_fat_tree(4))
    cfg = _small(memory_budget=need - 1)
    rows, path = bench_strategies(cfg, str(tmp_path), n_solutions=5)
    assert _header(path) == BENCH_HEADER
    by = {r[2]: r for r in rows}
    assert set(by) == {"simple", "cached", "spanning"}
    assert by["cached"][3:] == [SKIP] * 4
    rows, _ = bench_strategies(_small(memory_budget=need), str(tmp_path), n_solutions=5)
    assert SKIP not in rows[1]
    for name in ("simple", "spanning"):
        pre, mean, med, total = map(float, by[name][3:])
        assert mean > 0 and med > 0 and abs(total - (pre + 10 * mean)) <= 0.06  # printed at 2 dp
    text = format_table(rows)
    assert text.splitlines()[0].split()[0] == "topology" and len(text.splitlines()) == 4


# ---------------------------------------------------------------- CLI


def test_cli_missing_config(tmp_path, capsys):
    missing = tmp_path / "nope.toml"
    assert cli.main(["optimize", "--config", str(missing)]) == 2
    err = capsys.readouterr().err
    assert err.startswith("vnfplace: error:") and str(missing) in err


def test_cli_parse_errors_exit_2():
    with pytest.raises(SystemExit) as e:
        cli.main(["optimize"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        cli.main(["frobnicate"])
    assert e.value.code == 2


def test_cli_topo_round_trip(tmp_path, capsys):
    path = tmp_path / "ft4.edges"
    assert cli.main(["topo", "--family", "fat_tree", "--param", "k=4", "--export", str(path)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert (info["servers"], info["switches"], info["links"]) == (16, 20, 48)
    assert cli.main(["topo", "--import", str(path)]) == 0
    back = json.loads(capsys.readouterr().out)
    assert back["servers"] == 16 and back["links"] == 48 and back["tree_root"] == info["tree_root"]
    assert cli.main(["topo", "--family", "dcell", "--param", "k=3"]) == 2
    assert cli.main(["topo"]) == 2


def test_cli_optimize_seed_and_hv(tmp_path, capsys):
    cfgfile = tmp_path / "c.toml"
    cfgfile.write_text(
        '[topology]\nfamily = "fat_tree"\nk = 4\n'
        '[optimizer]\npopulation = 8\nbudget = 16\nseeds = 2\n'
    )
    assert cli.main(["optimize", "--config", str(cfgfile), "--seed", "7", "--out", str(tmp_path)]) == 0
    (run,) = list(tmp_path.glob("optimize-*"))
    data = json.loads((run / "archive.json").read_text())
    assert data["seed"] == 7
    capsys.readouterr()
    assert cli.main(["hv", str(run / "archive.json")]) == 0
    assert 0.0 <= float(capsys.readouterr().out) <= 1.0
    front = tmp_path / "f.json"
    front.write_text(json.dumps({"front": [[0.5, 0.5, 0.5]]}))
    assert cli.main(["hv", str(front), "--normalized"]) == 0
    assert float(capsys.readouterr().out) == 0.125


def test_cli_compare_and_bench(tmp_path, capsys):
    cfgfile = tmp_path / "c.toml"
    cfgfile.write_text(
        '[topology]\nfamily = "leaf_spine"\nleaves = 2\nspines = 2\nservers_per_leaf = 4\n'
        '[optimizer]\nrepresentations = ["fls"]\npopulation = 8\nbudget = 16\nseeds = 2\n'
        '[output]\nbench_solutions = 4\n'
    )
    assert cli.main(["compare", "--config", str(cfgfile), "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == ",".join(SUMMARY_HEADER)
    assert cli.main(["bench", "--config", str(cfgfile), "--out", str(tmp_path)]) == 0
    assert "Preprocessing (s)" in capsys.readouterr().out


def test_console_script_entry_point():
    r = subprocess.run([sys.executable, "-m", "vnfplace.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "compare" in r.stdout
