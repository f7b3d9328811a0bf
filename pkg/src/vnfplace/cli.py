"""``vnfplace`` command line: topo, bench, optimize, compare, hv."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .harness.config import ConfigError, ExperimentConfig, TopologySpec, load_config
from .metrics import Bounds, estimate_bounds, hypervolume, normalize
from .topology import InvalidParameterError, NetworkGraph, build_spanning_tree


def _common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
    p.add_argument("--config", required=config_required, help="TOML experiment config")
    p.add_argument("--seed", type=int, help="base optimiser seed (overrides [optimizer].seed)")
    p.add_argument("--out", help="output root directory (default from [output].dir)")
    p.add_argument("--threads", type=int, help="worker count")
    p.add_argument("--budget", type=int, help="evaluation budget per run")


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    seeds = None
    if args.seed is not None:
        n = len(cfg.seeds)
        seeds = tuple(range(args.seed, args.seed + n))
    return cfg.override(seeds=seeds, threads=args.threads, budget=args.budget)


def _topology_from_args(args) -> NetworkGraph:
    if args.config:
        return load_config(args.config).topologies[0].build()
    if args.import_path:
        return NetworkGraph.import_edge_list(args.import_path)
    if not args.family:
        raise ConfigError("topo needs --config, --family or --import")
    params = {}
    for item in args.param or []:
        k, _, v = item.partition("=")
        params[k] = int(v)
    return TopologySpec.make(args.family, args.server_capacity, **params).build()


def cmd_topo(args) -> int:
    g = _topology_from_args(args)
    tree = build_spanning_tree(g)
    info = {
        "family": g.family,
        "params": g.params,
        "nodes": g.n_nodes,
        "servers": g.n_servers,
        "switches": g.n_nodes - g.n_servers,
        "links": g.n_edges,
        "total_capacity": int(g.server_capacity.sum()),
        "tree_root": tree.root,
        "tree_depth": int(tree.depth.max()),
    }
    print(json.dumps(info, indent=2))
    if args.export:
        g.export_edge_list(args.export)
        print(f"edge list written to {args.export}", file=sys.stderr)
    return 0


def cmd_bench(args) -> int:
    from .harness.bench import bench_strategies, format_table

    cfg = _load(args)
    rows, path = bench_strategies(cfg, args.out, args.solutions)
    print(format_table(rows))
    print(f"wrote {path}", file=sys.stderr)
    return 0


def cmd_optimize(args) -> int:
    from .harness.experiments import optimize

    cfg = _load(args)
    d = optimize(cfg, args.out)
    print(f"wrote {d}", file=sys.stderr)
    return 0


def cmd_compare(args) -> int:
    from .harness.experiments import compare_algorithms

    cfg = _load(args)

    def progress(name):
        print(f"done {name}", file=sys.stderr)

    d = compare_algorithms(cfg, args.out, progress)
    print((d / "summary.csv").read_text(), end="")
    print(f"wrote {d}", file=sys.stderr)
    return 0


def _front_points(data) -> list[list[float]]:
    if isinstance(data, dict):
        if "archive" in data:
            return [m["objectives"] for m in data["archive"]]
        if "front" in data:
            return data["front"]
        raise ValueError("front file needs an 'archive' or 'front' key")
    return data


def cmd_hv(args) -> int:
    data = json.loads(Path(args.front).read_text())
    pts = np.asarray(_front_points(data), dtype=float).reshape(-1, 3)
    if args.bounds:
        b = Bounds.from_json(json.loads(Path(args.bounds).read_text()))
    elif args.normalized:
        b = Bounds((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))
    else:
        b = estimate_bounds(pts) if len(pts) else Bounds((0.0,) * 3, (1.0,) * 3)
    value = hypervolume(np.clip(normalize(pts, b), 0.0, 1.0)) if len(pts) else 0.0
    print(repr(value))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vnfplace", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("topo", help="generate / inspect / export a topology")
    p.add_argument("--config")
    p.add_argument("--family", choices=["fat_tree", "leaf_spine", "dcell"])
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="e.g. k=4")
    p.add_argument("--server-capacity", type=int, default=16)
    p.add_argument("--import", dest="import_path", help="read an exported edge list")
    p.add_argument("--export", help="write the graph as an edge list")
    p.set_defaults(fn=cmd_topo)

    p = sub.add_parser("bench", help="time the three server-selection strategies")
    _common(p)
    p.add_argument("--solutions", type=int, help="random solutions per strategy")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("optimize", help="one optimisation run")
    _common(p)
    p.set_defaults(fn=cmd_optimize)

    p = sub.add_parser("compare", help="every representation x algorithm x seed, resumable")
    _common(p)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("hv", help="hypervolume of a front JSON file")
    p.add_argument("front")
    p.add_argument("--bounds", help="JSON with 'utopian' and 'nadir'")
    p.add_argument("--normalized", action="store_true", help="points are already in [0,1]^3")
    p.set_defaults(fn=cmd_hv)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, InvalidParameterError, FileNotFoundError, ValueError) as e:
        print(f"vnfplace: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
