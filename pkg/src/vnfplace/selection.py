"""Nearest-server-with-capacity search: simple BFS, cached BFS and spanning-tree tables.

All three strategies share one metric (hop count) and one tie-break (lowest
server ID), and all accept any node, server or switch, as the search origin.
Capacities are integral units held in a :class:`CapacityState`.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ._kernels import backend as _k
from .topology import NetworkGraph, SpanningTree, build_spanning_tree

__all__ = [
    "CapacityState",
    "NearestCache",
    "SpanningTables",
    "ResourceError",
    "InvariantError",
    "simple_bfs_nearest",
    "build_nearest_cache",
    "cached_nearest",
    "st_build",
    "st_place",
    "st_update",
    "SimpleStrategy",
    "CachedStrategy",
    "SpanningStrategy",
    "make_strategy",
    "STRATEGIES",
]

EMPTY_CAP = -1


class ResourceError(MemoryError):
    """Preprocessing would exceed the configured memory budget."""

    def __init__(self, required_bytes: int, budget_bytes: int):
        self.required_bytes = int(required_bytes)
        self.budget_bytes = int(budget_bytes)
        super().__init__(
            f"nearest-server cache needs {self.required_bytes} bytes, "
            f"budget is {self.budget_bytes} bytes"
        )


class InvariantError(RuntimeError):
    """Internal tables disagree with the capacity state."""


@dataclass(eq=False)
class CapacityState:
    """Remaining capacity per server ID."""

    remaining: np.ndarray
    total: np.ndarray

    @classmethod
    def full(cls, graph: NetworkGraph) -> CapacityState:
        total = np.ascontiguousarray(graph.server_capacity, dtype=np.int64)
        return cls(total.copy(), total)

    def copy(self) -> CapacityState:
        return CapacityState(self.remaining.copy(), self.total)

    def commit(self, server: int, demand: int) -> None:
        if self.remaining[server] < demand:
            raise InvariantError(
                f"server {server} has {self.remaining[server]} units, cannot take {demand}"
            )
        self.remaining[server] -= demand

    def check(self) -> None:
        if (self.remaining < 0).any() or (self.remaining > self.total).any():
            raise InvariantError("remaining capacity out of [0, total]")

    @property
    def used(self) -> np.ndarray:
        return self.total - self.remaining


def simple_bfs_nearest(
    g: NetworkGraph, caps: CapacityState, origin: int, demand: int
) -> int | None:
    """Closest server (hops, then lowest ID) with ``remaining >= demand``."""
    s = _k.simple_nearest(g, caps.remaining, int(origin), int(demand))
    return None if s < 0 else int(s)


@dataclass(eq=False)
class NearestCache:
    """``order[v]`` lists every server ID by ascending distance from node ``v``."""

    order: np.ndarray

    @property
    def nbytes(self) -> int:
        return int(self.order.nbytes)


def cache_bytes(g: NetworkGraph) -> int:
    return g.n_nodes * g.n_servers * np.dtype(np.int32).itemsize


def build_nearest_cache(g: NetworkGraph, memory_budget: int | None = None) -> NearestCache:
    need = cache_bytes(g)
    if memory_budget is not None and need > memory_budget:
        raise ResourceError(need, memory_budget)
    order = _k.nearest_order(g, np.arange(g.n_nodes, dtype=np.int32))
    return NearestCache(order)


def cached_nearest(
    cache: NearestCache, caps: CapacityState, origin: int, demand: int
) -> int | None:
    s = _k.cached_nearest(cache.order[origin], caps.remaining, int(demand))
    return None if s < 0 else int(s)


@dataclass(eq=False)
class SpanningTables:
    """Per-node rows over tree edges (plus a self-row on servers).

    Rows of node ``v`` live at ``row_ptr[v]:row_ptr[v+1]``. ``row_nbr`` is the
    tree neighbour the row looks through (-1 for the self-row) and ``row_rev``
    the matching row at that neighbour. ``cap``/``dist``/``srv`` hold the best
    server on that side: highest remaining capacity, then nearest, then
    lowest ID. Rows over server-free subtrees hold ``(-1, 0, -1)``.
    ``best``/``second`` cache each node's two best rows.
    """

    row_ptr: np.ndarray
    row_nbr: np.ndarray
    row_rev: np.ndarray
    row_node: np.ndarray
    self_row: np.ndarray
    cap: np.ndarray
    dist: np.ndarray
    srv: np.ndarray
    best: np.ndarray
    second: np.ndarray

    @classmethod
    def layout(cls, tree: SpanningTree) -> SpanningTables:
        g = tree.graph
        n = tree.n_nodes
        row_ptr = np.zeros(n + 1, dtype=np.int32)
        nbrs: list[int] = []
        owner: list[int] = []
        self_row = np.full(n, -1, dtype=np.int32)
        slot: dict[tuple[int, int], int] = {}
        for v in range(n):
            if g is not None and g.is_server(v):
                self_row[v] = len(nbrs)
                nbrs.append(-1)
                owner.append(v)
            for u in tree.tree_neighbors(v):
                slot[(v, u)] = len(nbrs)
                nbrs.append(u)
                owner.append(v)
            row_ptr[v + 1] = len(nbrs)
        rev = np.full(len(nbrs), -1, dtype=np.int32)
        for (v, u), r in slot.items():
            rev[r] = slot[(u, v)]
        r = len(nbrs)
        return cls(
            row_ptr=row_ptr,
            row_nbr=np.asarray(nbrs, dtype=np.int32),
            row_rev=rev,
            row_node=np.asarray(owner, dtype=np.int32),
            self_row=self_row,
            cap=np.full(r, EMPTY_CAP, dtype=np.int64),
            dist=np.zeros(r, dtype=np.int32),
            srv=np.full(r, -1, dtype=np.int32),
            best=np.full(n, -1, dtype=np.int32),
            second=np.full(n, -1, dtype=np.int32),
        )

    def copy(self) -> SpanningTables:
        return SpanningTables(
            self.row_ptr, self.row_nbr, self.row_rev, self.row_node, self.self_row,
            self.cap.copy(), self.dist.copy(), self.srv.copy(),
            self.best.copy(), self.second.copy(),
        )

    def rows(self, v: int) -> list[tuple[int, int, int, int]]:
        """``(neighbour, cap, dist, server)`` for each row of ``v``; neighbour -1 is the self-row."""
        a, b = self.row_ptr[v], self.row_ptr[v + 1]
        return [
            (int(self.row_nbr[r]), int(self.cap[r]), int(self.dist[r]), int(self.srv[r]))
            for r in range(a, b)
        ]

    def row_for(self, v: int, neighbor: int) -> tuple[int, int, int]:
        for nb, c, d, s in self.rows(v):
            if nb == neighbor:
                return c, d, s
        raise KeyError((v, neighbor))

    def same_rows(self, other: SpanningTables) -> bool:
        return (
            np.array_equal(self.cap, other.cap)
            and np.array_equal(self.dist, other.dist)
            and np.array_equal(self.srv, other.srv)
        )


def _tree_graph(tree: SpanningTree) -> NetworkGraph:
    if tree.graph is None:
        raise ValueError("spanning tree carries no source graph")
    return tree.graph


def st_build(tree: SpanningTree, caps: CapacityState) -> SpanningTables:
    """Fill tables by a pruned BFS from every server over the tree."""
    tables = SpanningTables.layout(tree)
    _k.st_build(tables, _tree_graph(tree), caps.remaining)
    return tables


def st_place(
    tables: SpanningTables,
    tree: SpanningTree,
    caps: CapacityState,
    origin: int,
    demand: int,
) -> int | None:
    """Greedy walk along the nearest row that can hold ``demand``."""
    s = _k.st_place(tables, int(origin), int(demand))
    if s == _k.STUCK:
        raise InvariantError("spanning tables promise capacity no server has")
    if s < 0:
        return None
    if caps.remaining[s] < demand:
        raise InvariantError(f"table row for server {s} exceeds its remaining capacity")
    return int(s)


def st_update(
    tables: SpanningTables, tree: SpanningTree, changed: int, new_remaining: int
) -> int:
    """Propagate a server's new remaining capacity; returns the number of rows modified."""
    g = _tree_graph(tree)
    if not 0 <= changed < g.n_servers:
        raise ValueError(f"{changed!r} is not a server ID")
    return int(_k.st_update(tables, int(g.server_nodes[changed]), int(new_remaining)))


class _Strategy:
    name = ""

    def __init__(self, graph: NetworkGraph):
        self.graph = graph
        self.preprocess_seconds = 0.0

    def memory_bytes(self) -> int:
        return 0

    def start(self, caps: CapacityState | None = None) -> Placer:
        return Placer(self, caps if caps is not None else CapacityState.full(self.graph))

    # hooks used by Placer
    def _scratch(self, caps):
        return None

    def _find(self, scratch, caps, origin, demand):
        raise NotImplementedError

    def _commit(self, scratch, caps, server):
        pass

    def _batch(self, scratch, caps, origin_nodes, vnf_ptr, demands, out):
        raise NotImplementedError


class SimpleStrategy(_Strategy):
    name = "simple"

    def _find(self, scratch, caps, origin, demand):
        return simple_bfs_nearest(self.graph, caps, origin, demand)

    def _batch(self, scratch, caps, origin_nodes, vnf_ptr, demands, out):
        return _k.place_simple(self.graph, caps.remaining, origin_nodes, vnf_ptr, demands, out)


class CachedStrategy(_Strategy):
    name = "cached"

    def __init__(self, graph: NetworkGraph, memory_budget: int | None = None):
        super().__init__(graph)
        t0 = time.perf_counter()
        self.cache = build_nearest_cache(graph, memory_budget)
        self.preprocess_seconds = time.perf_counter() - t0

    def memory_bytes(self) -> int:
        return self.cache.nbytes

    def _find(self, scratch, caps, origin, demand):
        return cached_nearest(self.cache, caps, origin, demand)

    def _batch(self, scratch, caps, origin_nodes, vnf_ptr, demands, out):
        return _k.place_cached(
            self.cache.order, self.graph, caps.remaining, origin_nodes, vnf_ptr, demands, out
        )


class SpanningStrategy(_Strategy):
    name = "spanning"

    def __init__(self, graph: NetworkGraph, tree: SpanningTree | None = None):
        super().__init__(graph)
        t0 = time.perf_counter()
        self.tree = tree if tree is not None else build_spanning_tree(graph)
        self.initial = st_build(self.tree, CapacityState.full(graph))
        self.preprocess_seconds = time.perf_counter() - t0

    def memory_bytes(self) -> int:
        t = self.initial
        return int(sum(a.nbytes for a in (t.row_ptr, t.row_nbr, t.row_rev, t.row_node,
                                          t.self_row, t.cap, t.dist, t.srv,
                                          t.best, t.second)))

    def _scratch(self, caps):
        if np.array_equal(caps.remaining, caps.total):
            return self.initial.copy()
        return st_build(self.tree, caps)

    def _find(self, scratch, caps, origin, demand):
        return st_place(scratch, self.tree, caps, origin, demand)

    def _commit(self, scratch, caps, server):
        st_update(scratch, self.tree, server, int(caps.remaining[server]))

    def _batch(self, scratch, caps, origin_nodes, vnf_ptr, demands, out):
        return _k.place_spanning(
            scratch, self.graph, caps.remaining, origin_nodes, vnf_ptr, demands, out
        )


@dataclass(eq=False)
class Placer:
    """Mutable placement session: one capacity state plus strategy scratch."""

    strategy: _Strategy
    caps: CapacityState
    scratch: object = field(default=None)

    def __post_init__(self):
        self.scratch = self.strategy._scratch(self.caps)

    def find(self, origin: int, demand: int) -> int | None:
        return self.strategy._find(self.scratch, self.caps, int(origin), int(demand))

    def place(self, origin: int, demand: int) -> int | None:
        """Find the nearest feasible server and commit ``demand`` to it."""
        s = self.find(origin, demand)
        if s is None:
            return None
        self.caps.commit(s, demand)
        self.strategy._commit(self.scratch, self.caps, s)
        return s

    def place_services(self, origin_nodes, vnf_ptr, demands) -> tuple[np.ndarray, int]:
        """Place every chain in order, each VNF next to its predecessor.

        Returns ``(servers, failed)`` where ``failed`` is the flat index of the
        first VNF that could not be placed, or -1.
        """
        origin_nodes = np.ascontiguousarray(origin_nodes, dtype=np.int32)
        vnf_ptr = np.ascontiguousarray(vnf_ptr, dtype=np.int32)
        demands = np.ascontiguousarray(demands, dtype=np.int64)
        out = np.full(len(demands), -1, dtype=np.int32)
        failed = self.strategy._batch(
            self.scratch, self.caps, origin_nodes, vnf_ptr, demands, out
        )
        return out, int(failed)


STRATEGIES = {"simple": SimpleStrategy, "cached": CachedStrategy, "spanning": SpanningStrategy}


def make_strategy(name: str, graph: NetworkGraph, memory_budget: int | None = None) -> _Strategy:
    if name not in STRATEGIES:
        raise ValueError(f"unknown strategy {name!r}; expected one of {sorted(STRATEGIES)}")
    if name == "cached":
        return CachedStrategy(graph, memory_budget)
    return STRATEGIES[name](graph)


def strategy_place(placer: Placer, origin: int, demand: int) -> int | None:
    return placer.place(origin, demand)
