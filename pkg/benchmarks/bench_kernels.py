"""Compare the compiled and pure-Python kernel backends on the same inputs.

    python benchmarks/bench_kernels.py [--k 8] [--repeat 3]

Prints one line per kernel with the best-of-N wall time for each backend and
the speed-up. Both backends must produce identical results, which is checked.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from vnfplace import _kernels
from vnfplace.harness.workload import WorkloadParams, generate_workload
from vnfplace.objectives import ModelParams
from vnfplace.routing import CondensedTables
from vnfplace.selection import CapacityState, SpanningTables
from vnfplace.topology import build_fat_tree, build_spanning_tree


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(g, k):
    wl = generate_workload(g, WorkloadParams(), np.random.default_rng(0))
    ptr = np.zeros(len(wl.services) + 1, dtype=np.int32)
    np.cumsum([len(s) for s in wl.services], out=ptr[1:])
    dem = np.array([d for s in wl.services for d in s.demands], dtype=np.int64)
    lam = np.array([s.rate for s in wl.services])
    rng = np.random.default_rng(1)
    origins = np.ascontiguousarray(g.server_nodes[rng.integers(0, g.n_servers, len(wl.services))], dtype=np.int32)
    tree = build_spanning_tree(g)
    layout = SpanningTables.layout(tree)
    full = CapacityState.full(g)
    mu = ModelParams().service_rates(g)

    def place(kind, mod, extra):
        rem = full.remaining.copy()
        out = np.full(len(dem), -1, dtype=np.int32)
        fn = getattr(mod, f"place_{kind}")
        fn(*extra, g, rem, origins, ptr, dem, out) if extra else fn(g, rem, origins, ptr, dem, out)
        return out

    def run_case(name, mod):
        if name == "bfs":
            return mod.bfs_distances(g.indptr, g.indices, 0)
        if name == "place_simple":
            return place("simple", mod, ())
        if name == "nearest_order":
            return mod.nearest_order(g, np.arange(min(64, g.n_nodes), dtype=np.int32))
        if name == "st_build":
            t = layout.copy()
            mod.st_build(t, g, full.remaining)
            return t.cap
        if name == "place_spanning":
            t = layout.copy()
            mod.st_build(t, g, full.remaining)
            return place("spanning", mod, (t,))
        if name == "route_ranges":
            return np.concatenate(mod.route_ranges(g))
        if name == "evaluate_flows":
            ranges = CondensedTables(g, *mod.route_ranges(g))
            hosts = place("simple", mod, ())
            nodes = np.ascontiguousarray(g.server_nodes[hosts], dtype=np.int32)
            return mod.evaluate_flows(g, ranges, nodes, ptr, lam, mu, 20)[4]
        raise KeyError(name)

    return run_case, len(wl.services), len(dem)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--k", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if "native" not in _kernels.available():
        raise SystemExit("compiled backend not built; run `pip install -e . --no-build-isolation`")
    native, pure = _kernels.load("native"), _kernels.load("pure")
    g = build_fat_tree(args.k)
    run_case, n_svc, n_vnf = cases(g, args.k)
    print(f"fat tree k={args.k}: {g.n_nodes} nodes, {g.n_servers} servers, {n_svc} services, {n_vnf} VNFs")
    print(f"{'kernel':<16}{'native (ms)':>14}{'pure (ms)':>14}{'speed-up':>10}")
    for name in ["bfs", "place_simple", "nearest_order", "st_build", "place_spanning",
                 "route_ranges", "evaluate_flows"]:
        tn, rn = best_of(lambda: run_case(name, native), args.repeat)
        tp, rp = best_of(lambda: run_case(name, pure), 1)
        if not np.allclose(np.asarray(rn, dtype=float), np.asarray(rp, dtype=float), rtol=1e-12, atol=0):
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:<16}{tn * 1e3:>14.3f}{tp * 1e3:>14.1f}{tp / tn:>9.0f}x")


if __name__ == "__main__":
    main()
