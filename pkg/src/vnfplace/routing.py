"""ECMP routing over condensed, server-ID-range keyed tables."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import backend as _k
from .topology import NetworkGraph

__all__ = [
    "CondensedTables",
    "PathSet",
    "build_condensed_tables",
    "enumerate_paths",
    "service_paths",
    "DEFAULT_MAX_PATHS",
]

DEFAULT_MAX_PATHS = 64


@dataclass(eq=False)
class CondensedTables:
    """Inclusive server-ID ranges per adjacency slot (CSR over ``graph.indices``).

    Slot ``e`` of node ``v`` (``graph.indptr[v] <= e < graph.indptr[v+1]``)
    is a shortest-path next hop towards every server whose ID lies in one of
    ``lo[slot_ptr[e]:slot_ptr[e+1]]..hi[...]``.
    """

    graph: NetworkGraph
    slot_ptr: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def ranges(self, v: int) -> dict[int, list[tuple[int, int]]]:
        g = self.graph
        out = {}
        for e in range(g.indptr[v], g.indptr[v + 1]):
            a, b = self.slot_ptr[e], self.slot_ptr[e + 1]
            out[int(g.indices[e])] = [
                (int(x), int(y)) for x, y in zip(self.lo[a:b], self.hi[a:b])
            ]
        return out

    def next_hops(self, v: int, dst_server: int) -> list[int]:
        return _k.next_hops(self.graph, self, int(v), int(dst_server))

    def dump(self, v: int) -> str:
        """``edge -> [lo..hi],[lo..hi]`` lines for node ``v``."""
        lines = []
        for u, rs in self.ranges(v).items():
            body = ",".join(f"[{a}..{b}]" for a, b in rs)
            lines.append(f"{v}-{u} -> {body}")
        return "\n".join(lines)

    @property
    def n_ranges(self) -> int:
        return len(self.lo)


def build_condensed_tables(g: NetworkGraph) -> CondensedTables:
    slot_ptr, lo, hi = _k.route_ranges(g)
    return CondensedTables(g, slot_ptr, lo, hi)


@dataclass(frozen=True)
class PathSet:
    paths: tuple[tuple[int, ...], ...]
    weights: tuple[float, ...]

    @property
    def hops(self) -> int:
        return len(self.paths[0]) - 1

    @property
    def src(self) -> int:
        return self.paths[0][0]

    @property
    def dst(self) -> int:
        return self.paths[0][-1]

    def node_weights(self) -> dict[int, float]:
        """Fraction of the segment's traffic crossing each node."""
        acc: dict[int, float] = {}
        for path, wt in zip(self.paths, self.weights):
            for v in path:
                acc[v] = acc.get(v, 0.0) + wt
        return acc


def enumerate_paths(
    tables: CondensedTables, src: int, dst: int, max_paths: int = DEFAULT_MAX_PATHS
) -> PathSet:
    """All minimal-hop ``src -> dst`` paths with per-hop equal split weights.

    Paths come out in lexicographic node order. When more than ``max_paths``
    exist, the first ``max_paths`` are kept and their weights rescaled to 1.
    """
    g = tables.graph
    if not 0 <= dst < g.n_nodes or not g.is_server(dst):
        raise ValueError(f"destination {dst!r} is not a server node")
    if not 0 <= src < g.n_nodes:
        raise ValueError(f"source {src!r} is not a node")
    t = int(g.node_server[dst])
    paths: list[tuple[int, ...]] = []
    weights: list[float] = []
    stack = [(src, (src,), 1.0)]
    while stack and len(paths) < max_paths:
        v, path, wt = stack.pop()
        if v == dst:
            paths.append(path)
            weights.append(wt)
            continue
        hops = sorted(tables.next_hops(v, t))
        share = wt / len(hops)
        for u in reversed(hops):
            stack.append((u, path + (u,), share))
    total = sum(weights)
    if total != 1.0:
        weights = [w / total for w in weights]
    return PathSet(tuple(paths), tuple(weights))


def service_paths(
    hosts, tables: CondensedTables, max_paths: int = DEFAULT_MAX_PATHS
) -> list[PathSet]:
    """One PathSet per consecutive VNF pair; ``hosts`` are the VNFs' server IDs in chain order."""
    g = tables.graph
    hosts = [int(h) for h in hosts]
    if any(h < 0 or h >= g.n_servers for h in hosts):
        raise ValueError(f"unplaced or invalid host in {hosts}")
    nodes = [int(g.server_nodes[h]) for h in hosts]
    return [enumerate_paths(tables, a, b, max_paths) for a, b in zip(nodes, nodes[1:])]
