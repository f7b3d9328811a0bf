"""Selection-strategy timing: preprocessing, per-solution preparation, 10 000-solution total."""

from __future__ import annotations

import time

import numpy as np

from ..encoding import fls_init, fls_origins
from ..selection import ResourceError, cache_bytes, make_strategy
from .config import ExperimentConfig
from .experiments import _csv, build_workload, run_dir, write_atomic

__all__ = ["BENCH_HEADER", "bench_strategies", "format_table"]

BENCH_HEADER = [
    "topology", "servers", "strategy",
    "Preprocessing (s)", "Mean Solution Preparation (ms)",
    "Median Solution Preparation (ms)", "Total for 10000 Solutions (s)",
]
SKIP = "---"
WARMUP = 3


def _time_strategy(strategy, origins_list, ptr, demands):
    times = []
    for k, origins in enumerate(origins_list):
        t0 = time.perf_counter()
        placer = strategy.start()
        _, failed = placer.place_services(origins, ptr, demands)
        dt = time.perf_counter() - t0
        if failed >= 0:
            raise RuntimeError("placement failed on a benchmark solution")
        if k >= WARMUP:
            times.append(dt)
    return np.asarray(times)


def bench_strategies(cfg: ExperimentConfig, out: str | None = None, n_solutions: int | None = None):
    """Returns ``(rows, path)``; rows follow ``BENCH_HEADER`` with ``---`` for skipped cells."""
    n = n_solutions if n_solutions is not None else cfg.bench_solutions
    rows = []
    for spec in cfg.topologies:
        g = spec.build()
        wl = build_workload(cfg, spec, g)
        ptr = np.zeros(len(wl.services) + 1, dtype=np.int32)
        np.cumsum([len(s) for s in wl.services], out=ptr[1:])
        demands = np.array([d for s in wl.services for d in s.demands], dtype=np.int64)
        rng = np.random.default_rng([cfg.workload_seed, 1])
        origins_list = [
            np.ascontiguousarray(
                g.server_nodes[fls_origins(fls_init(rng, len(wl.services), g.n_servers), len(wl.services))],
                dtype=np.int32,
            )
            for _ in range(n + WARMUP)
        ]
        for name in cfg.bench_strategies:
            if name == "cached" and cache_bytes(g) > cfg.memory_budget:
                rows.append([spec.label, g.n_servers, name, SKIP, SKIP, SKIP, SKIP])
                continue
            t0 = time.perf_counter()
            try:
                strat = make_strategy(name, g, cfg.memory_budget)
            except ResourceError:
                rows.append([spec.label, g.n_servers, name, SKIP, SKIP, SKIP, SKIP])
                continue
            pre = time.perf_counter() - t0
            ts = _time_strategy(strat, origins_list, ptr, demands)
            mean_ms = float(ts.mean() * 1000.0)
            rows.append([
                spec.label, g.n_servers, name,
                f"{pre:.2f}", f"{mean_ms:.2f}", f"{float(np.median(ts) * 1000.0):.2f}",
                f"{pre + 10_000 * mean_ms / 1000.0:.2f}",
            ])
            del strat
    path = run_dir(cfg, "bench", out) / "bench.csv"
    write_atomic(path, _csv(BENCH_HEADER, rows))
    return rows, path


def format_table(rows) -> str:
    widths = [max(len(str(r[i])) for r in [BENCH_HEADER, *rows]) for i in range(len(BENCH_HEADER))]
    lines = ["  ".join(str(c).rjust(w) for c, w in zip(r, widths)) for r in [BENCH_HEADER, *rows]]
    return "\n".join(lines)
