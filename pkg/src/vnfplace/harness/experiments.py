"""Single optimisation runs and resumable algorithm comparisons."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
import time
import traceback
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..encoding import Instance, genotype_to_json, make_representation
from ..metrics import estimate_bounds, hypervolume, normalize, rank_sum_test
from ..moea import RunConfig, RunResult, run
from .config import ExperimentConfig, TopologySpec
from .workload import Workload, generate_workload

__all__ = [
    "build_instance",
    "optimize",
    "compare_algorithms",
    "METRICS_HEADER",
    "SUMMARY_HEADER",
    "TIMINGS_HEADER",
    "GENERATION_HEADER",
]

METRICS_HEADER = [
    "topology", "representation", "algorithm", "seed",
    "evaluations", "infeasible", "archive_size", "hypervolume", "error",
]
SUMMARY_HEADER = [
    "topology", "representation", "algorithm", "runs",
    "mean_hypervolume", "std_hypervolume", "p_vs_best",
]
TIMINGS_HEADER = [
    "topology", "representation", "algorithm", "seed",
    "runtime_s", "variation_s", "evaluation_s", "selection_s", "preprocess_s",
]
GENERATION_HEADER = ["generation", "evaluations", "archive_size", "hypervolume"]


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def instance_rng(cfg: ExperimentConfig, spec: TopologySpec) -> np.random.Generator:
    return np.random.default_rng([cfg.workload_seed, zlib.crc32(spec.label.encode())])


def build_workload(cfg: ExperimentConfig, spec: TopologySpec, graph=None) -> Workload:
    g = graph if graph is not None else spec.build()
    return generate_workload(g, cfg.workload, instance_rng(cfg, spec))


def build_instance(cfg: ExperimentConfig, spec: TopologySpec, strategy: str | None = None):
    """(Instance, Workload, preprocessing seconds) for one topology."""
    t0 = time.perf_counter()
    g = spec.build()
    wl = build_workload(cfg, spec, g)
    inst = Instance(
        g, list(wl.services), strategy or cfg.strategy, cfg.model,
        service_order=cfg.service_order, memory_budget=cfg.memory_budget,
    )
    return inst, wl, time.perf_counter() - t0


def _run_config(cfg: ExperimentConfig, algorithm: str, seed: int) -> RunConfig:
    return RunConfig(
        algorithm=algorithm,
        population=cfg.population,
        budget=cfg.budget,
        crossover_rate=cfg.crossover_rate,
        mutation_rate=cfg.mutation_rate,
        seed=seed,
    )


def _archive_json(res: RunResult) -> list[dict]:
    return [
        {"objectives": list(m.objectives), "genotype": genotype_to_json(m.genotype)}
        for m in res.archive.members
    ]


def run_dir(cfg: ExperimentConfig, command: str, out: str | None = None) -> Path:
    root = Path(out if out is not None else cfg.out_dir)
    rid = cfg.run_id or f"{command}-{cfg.digest()}"
    return root / rid


# ---------------------------------------------------------------- optimize


def optimize(cfg: ExperimentConfig, out: str | None = None) -> Path:
    """One run: first topology, representation, algorithm and seed of ``cfg``."""
    spec = cfg.topologies[0]
    inst, wl, pre = build_instance(cfg, spec)
    rep = make_representation(cfg.representations[0], inst)
    rc = _run_config(cfg, cfg.algorithms[0], cfg.seeds[0])
    rc = replace(rc, threads=cfg.threads)
    res = run(rep, rc)
    d = run_dir(cfg, "optimize", out)
    write_atomic(d / "config.snapshot", json.dumps(cfg.snapshot(), indent=2, sort_keys=True))
    write_atomic(
        d / "archive.json",
        json.dumps(
            {
                "topology": spec.label,
                "representation": rep.name,
                "algorithm": rc.algorithm,
                "seed": rc.seed,
                "evaluations": res.evaluations,
                "infeasible": res.infeasible_evaluations,
                "no_feasible": res.no_feasible,
                "services": len(wl.services),
                "fill_fraction": wl.fill_fraction,
                "latency": "conditioned on delivery",
                "archive": _archive_json(res),
            },
            sort_keys=True,
        ),
    )
    rows = [[e["generation"], e["evaluations"], e["archive_size"], _fmt(e["hypervolume"])] for e in res.log]
    write_atomic(d / "metrics.csv", _csv(GENERATION_HEADER, rows))
    trows = [[e["generation"], f"{e['elapsed_ms']:.3f}"] for e in res.log]
    text = _csv(["generation", "elapsed_ms"], trows)
    text += _csv(["phase", "seconds"], [[k, f"{v:.6f}"] for k, v in sorted(res.timings.items())])
    text += f"preprocess,{pre:.6f}\n"
    write_atomic(d / "timings.csv", text)
    return d


# ---------------------------------------------------------------- compare


def _run_name(spec: TopologySpec, rep: str, alg: str, seed: int) -> str:
    return f"{spec.label}__{rep}__{alg}__s{seed}"


_INSTANCES: dict = {}


def _cached_instance(cfg: ExperimentConfig, spec: TopologySpec):
    key = (cfg.digest(), spec)
    if key not in _INSTANCES:
        _INSTANCES.clear()
        _INSTANCES[key] = build_instance(cfg, spec)
    return _INSTANCES[key]


def _one_run(cfg: ExperimentConfig, spec: TopologySpec, rep_name: str, alg: str, seed: int,
             runs_dir: str) -> str:
    name = _run_name(spec, rep_name, alg, seed)
    base = Path(runs_dir)
    result = {"topology": spec.label, "representation": rep_name, "algorithm": alg, "seed": seed}
    timing = dict(result)
    try:
        inst, _, pre = _cached_instance(cfg, spec)
        rep = make_representation(rep_name, inst)
        res = run(rep, _run_config(cfg, alg, seed))
        result.update(
            evaluations=res.evaluations,
            infeasible=res.infeasible_evaluations,
            archive=_archive_json(res),
            log=[{k: v for k, v in e.items() if k != "elapsed_ms"} for e in res.log],
            error=None,
        )
        timing.update(res.timings, preprocess=pre,
                      elapsed_ms=[e["elapsed_ms"] for e in res.log])
    except Exception as e:  # recorded, never fatal for the sweep
        result.update(evaluations=0, infeasible=0, archive=[], log=[],
                      error=f"{type(e).__name__}: {e}", traceback=traceback.format_exc())
    write_atomic(base / f"{name}.timing.json", json.dumps(timing, sort_keys=True))
    write_atomic(base / f"{name}.json", json.dumps(result, sort_keys=True))
    return name


def compare_algorithms(cfg: ExperimentConfig, out: str | None = None, progress=None) -> Path:
    """Every (topology, representation, algorithm, seed) cell; skips runs already on disk."""
    d = run_dir(cfg, "compare", out)
    runs = d / "runs"
    runs.mkdir(parents=True, exist_ok=True)
    write_atomic(d / "config.snapshot", json.dumps(cfg.snapshot(), indent=2, sort_keys=True))
    jobs = []
    for spec in cfg.topologies:
        for rep in cfg.representations:
            for alg in cfg.algorithms:
                for seed in cfg.seeds:
                    if not (runs / f"{_run_name(spec, rep, alg, seed)}.json").exists():
                        jobs.append((spec, rep, alg, seed))
    if cfg.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.threads) as pool:
            futs = [pool.submit(_one_run, cfg, *j, str(runs)) for j in jobs]
            for f in futs:
                name = f.result()
                if progress:
                    progress(name)
    else:
        for j in jobs:
            name = _one_run(cfg, *j, str(runs))
            if progress:
                progress(name)
    _report(cfg, d)
    return d


def _load_runs(cfg: ExperimentConfig, d: Path):
    out = []
    for spec in cfg.topologies:
        for rep in cfg.representations:
            for alg in cfg.algorithms:
                for seed in cfg.seeds:
                    name = _run_name(spec, rep, alg, seed)
                    r = json.loads((d / "runs" / f"{name}.json").read_text())
                    t = d / "runs" / f"{name}.timing.json"
                    r["_timing"] = json.loads(t.read_text()) if t.exists() else {}
                    out.append(r)
    return out


def _report(cfg: ExperimentConfig, d: Path) -> None:
    runs = _load_runs(cfg, d)
    bounds = {}
    for spec in cfg.topologies:
        pts = [m["objectives"] for r in runs if r["topology"] == spec.label for m in r["archive"]]
        bounds[spec.label] = estimate_bounds(pts) if pts else None
    metric_rows, timing_rows, archive_runs = [], [], []
    hv: dict[tuple, list[float]] = {}
    for r in runs:
        b = bounds[r["topology"]]
        val = None
        if r["error"] is None:
            pts = np.asarray([m["objectives"] for m in r["archive"]], dtype=float).reshape(-1, 3)
            val = hypervolume(np.clip(normalize(pts, b), 0, 1)) if b is not None and len(pts) else 0.0
            hv.setdefault((r["topology"], r["representation"], r["algorithm"]), []).append(val)
        key = [r["topology"], r["representation"], r["algorithm"], r["seed"]]
        metric_rows.append(key + [r["evaluations"], r["infeasible"], len(r["archive"]),
                                  _fmt(val), r["error"] or ""])
        t = r["_timing"]
        timing_rows.append(key + [
            f"{t.get('total', 0.0):.6f}", f"{t.get('variation', 0.0):.6f}",
            f"{t.get('evaluation', 0.0):.6f}", f"{t.get('selection', 0.0):.6f}",
            f"{t.get('preprocess', 0.0):.6f}",
        ])
        archive_runs.append({**{k: r[k] for k in ("topology", "representation", "algorithm", "seed", "error")},
                             "hypervolume": val, "archive": r["archive"]})
    summary = []
    for spec in cfg.topologies:
        cells = [(k, v) for k, v in hv.items() if k[0] == spec.label]
        if not cells:
            continue
        best_key, best_vals = max(cells, key=lambda kv: (np.mean(kv[1]), kv[0]))
        for k, v in cells:
            p = None
            if k != best_key and len(v) > 1 and len(best_vals) > 1:
                p = rank_sum_test(v, best_vals)
            summary.append(list(k) + [len(v), _fmt(np.mean(v)), _fmt(np.std(v, ddof=1) if len(v) > 1 else 0.0),
                                      _fmt(p)])
    write_atomic(d / "metrics.csv", _csv(METRICS_HEADER, metric_rows))
    write_atomic(d / "summary.csv", _csv(SUMMARY_HEADER, summary))
    write_atomic(d / "timings.csv", _csv(TIMINGS_HEADER, timing_rows))
    write_atomic(
        d / "archive.json",
        json.dumps(
            {
                "bounds": {k: (None if b is None else b.to_json()) for k, b in bounds.items()},
                "latency": "conditioned on delivery",
                "runs": archive_runs,
            },
            sort_keys=True,
        ),
    )


def read_hypervolumes(d: Path) -> dict[tuple[str, str, str], list[float]]:
    """``(topology, representation, algorithm) -> [hv per seed]`` from a compare directory."""
    out: dict[tuple[str, str, str], list[float]] = {}
    with open(Path(d) / "metrics.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            if row["hypervolume"]:
                key = (row["topology"], row["representation"], row["algorithm"])
                out.setdefault(key, []).append(float(row["hypervolume"]))
    return out
