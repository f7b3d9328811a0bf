"""Datacentre topology generators, server-ID assignment and spanning trees.

Graphs are stored in CSR form (``indptr``/``indices``) with neighbours of
every node sorted ascending, which fixes the visiting order of every BFS in
the package. Generators emit servers first, in construction order
(pod-major for Fat Tree, leaf-major for Leaf-Spine, cell-major for DCell),
so server IDs coincide with node indices for generated graphs.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

from ._kernels import backend as _k


class InvalidParameterError(ValueError):
    """A generator or graph constructor received an unusable parameter."""


class NodeKind(IntEnum):
    SWITCH = 0
    SERVER = 1


@dataclass(frozen=True)
class Node:
    kind: NodeKind
    capacity: int


@dataclass(eq=False)
class NetworkGraph:
    """Undirected, connected graph of servers and switches.

    Attributes:
        kinds: per-node ``NodeKind`` values (uint8).
        capacity: per-node capacity units; 0 for switches.
        edges: ``(E, 2)`` array of node pairs with ``u < v``, sorted.
        indptr, indices: CSR adjacency with ascending neighbour lists.
        server_nodes: node index of each server ID.
        node_server: server ID of each node, -1 for switches.
        family: generator name, kept for reporting.
    """

    kinds: np.ndarray
    capacity: np.ndarray
    edges: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    server_nodes: np.ndarray
    node_server: np.ndarray
    family: str = "custom"
    params: dict = field(default_factory=dict)

    @classmethod
    def from_edges(
        cls,
        kinds,
        edges,
        capacity=None,
        *,
        server_capacity: int = 16,
        family: str = "custom",
        params: dict | None = None,
        check_connected: bool = True,
    ) -> NetworkGraph:
        kinds = np.asarray(kinds, dtype=np.uint8)
        n = len(kinds)
        if n == 0:
            raise InvalidParameterError("graph has no nodes")
        if not np.isin(kinds, (NodeKind.SWITCH, NodeKind.SERVER)).all():
            raise InvalidParameterError("node kinds must be SWITCH or SERVER")
        if capacity is None:
            capacity = np.where(kinds == NodeKind.SERVER, server_capacity, 0)
        capacity = np.asarray(capacity, dtype=np.int64)
        servers = kinds == NodeKind.SERVER
        if (capacity[~servers] != 0).any():
            raise InvalidParameterError("switch capacity must be 0")
        if (capacity[servers] <= 0).any():
            raise InvalidParameterError("server capacity must be positive")

        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if len(e) and (e.min() < 0 or e.max() >= n):
            raise InvalidParameterError("edge endpoint out of range")
        if (e[:, 0] == e[:, 1]).any():
            raise InvalidParameterError("self-loops are not allowed")
        e = np.sort(e, axis=1)
        order = np.lexsort((e[:, 1], e[:, 0]))
        e = e[order]
        if len(e) > 1 and (np.diff(e, axis=0) == 0).all(axis=1).any():
            raise InvalidParameterError("duplicate edges are not allowed")

        both = np.concatenate([e, e[:, ::-1]])
        both = both[np.lexsort((both[:, 1], both[:, 0]))]
        indptr = np.zeros(n + 1, dtype=np.int32)
        np.cumsum(np.bincount(both[:, 0], minlength=n), out=indptr[1:])
        indices = np.ascontiguousarray(both[:, 1], dtype=np.int32)

        server_nodes = np.flatnonzero(servers).astype(np.int32)
        node_server = np.full(n, -1, dtype=np.int32)
        node_server[server_nodes] = np.arange(len(server_nodes), dtype=np.int32)
        g = cls(
            kinds=kinds,
            capacity=capacity,
            edges=e.astype(np.int32),
            indptr=indptr,
            indices=indices,
            server_nodes=server_nodes,
            node_server=node_server,
            family=family,
            params=dict(params or {}),
        )
        if check_connected and not g.is_connected():
            raise InvalidParameterError("graph is not connected")
        return g

    @property
    def n_nodes(self) -> int:
        return len(self.kinds)

    @property
    def n_servers(self) -> int:
        return len(self.server_nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def nodes(self) -> list[Node]:
        return [Node(NodeKind(k), int(c)) for k, c in zip(self.kinds, self.capacity)]

    @property
    def server_capacity(self) -> np.ndarray:
        """Capacity indexed by server ID."""
        return self.capacity[self.server_nodes]

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def is_server(self, v: int) -> bool:
        return bool(self.kinds[v] == NodeKind.SERVER)

    def distances(self, source: int) -> np.ndarray:
        """Hop distances from ``source`` (-1 where unreachable)."""
        return _k.bfs_distances(self.indptr, self.indices, int(source))

    def is_connected(self) -> bool:
        return bool((self.distances(0) >= 0).all())

    def same_as(self, other: NetworkGraph) -> bool:
        return (
            np.array_equal(self.kinds, other.kinds)
            and np.array_equal(self.capacity, other.capacity)
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.server_nodes, other.server_nodes)
        )

    def export_edge_list(self, path: str | Path) -> None:
        """Write ``u v`` lines, preceded by ``# node <i> <kind> <capacity>`` comments."""
        lines = [f"# family {self.family}"]
        lines.extend(f"# param {k} {v}" for k, v in sorted(self.params.items()))
        for i, (k, c) in enumerate(zip(self.kinds, self.capacity)):
            lines.append(f"# node {i} {NodeKind(k).name.lower()} {int(c)}")
        lines.extend(f"{u} {v}" for u, v in self.edges)
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def import_edge_list(cls, path: str | Path) -> NetworkGraph:
        kinds, caps, edges = [], [], []
        family = "custom"
        params = {}
        for raw in Path(path).read_text(encoding="utf-8").splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts[:1] == ["family"] and len(parts) > 1:
                    family = parts[1]
                elif parts[:1] == ["param"] and len(parts) == 3:
                    params[parts[1]] = int(parts[2])
                elif parts[:1] == ["node"]:
                    if int(parts[1]) != len(kinds):
                        raise InvalidParameterError(f"node lines out of order: {line!r}")
                    kinds.append(NodeKind[parts[2].upper()])
                    caps.append(int(parts[3]))
                continue
            u, v = line.split()
            edges.append((int(u), int(v)))
        return cls.from_edges(kinds, edges, caps, family=family, params=params)


class _Builder:
    def __init__(self, server_capacity: int):
        self.kinds: list[int] = []
        self.edges: list[tuple[int, int]] = []
        self.server_capacity = server_capacity

    def add(self, kind: NodeKind, count: int) -> list[int]:
        start = len(self.kinds)
        self.kinds.extend([kind] * count)
        return list(range(start, start + count))

    def link(self, u: int, v: int) -> None:
        self.edges.append((u, v))

    def build(self, family: str, params: dict) -> NetworkGraph:
        return NetworkGraph.from_edges(
            self.kinds,
            self.edges,
            server_capacity=self.server_capacity,
            family=family,
            params=params,
        )


def build_fat_tree(k: int, server_capacity: int = 16) -> NetworkGraph:
    """k-ary fat tree: k pods, (k/2)^2 cores, k^3/4 servers."""
    if not isinstance(k, (int, np.integer)) or k < 2 or k % 2:
        raise InvalidParameterError(f"fat tree k must be an even integer >= 2, got {k!r}")
    h = k // 2
    b = _Builder(server_capacity)
    servers = b.add(NodeKind.SERVER, k * h * h)
    edge = b.add(NodeKind.SWITCH, k * h)
    agg = b.add(NodeKind.SWITCH, k * h)
    core = b.add(NodeKind.SWITCH, h * h)
    for pod in range(k):
        for e in range(h):
            esw = edge[pod * h + e]
            for i in range(h):
                b.link(servers[(pod * h + e) * h + i], esw)
            for a in range(h):
                b.link(esw, agg[pod * h + a])
        for a in range(h):
            for c in range(h):
                b.link(agg[pod * h + a], core[a * h + c])
    return b.build("fat_tree", {"k": int(k)})


def build_leaf_spine(
    leaves: int,
    spines: int | None = None,
    servers_per_leaf: int = 1,
    server_capacity: int = 16,
) -> NetworkGraph:
    """Two-tier Clos: every leaf wired to every spine. ``spines`` defaults to ceil(leaves/2)."""
    if spines is None:
        spines = -(-leaves // 2)
    for name, val in (("leaves", leaves), ("spines", spines), ("servers_per_leaf", servers_per_leaf)):
        if not isinstance(val, (int, np.integer)) or val < 1:
            raise InvalidParameterError(f"leaf-spine {name} must be >= 1, got {val!r}")
    b = _Builder(server_capacity)
    servers = b.add(NodeKind.SERVER, leaves * servers_per_leaf)
    leaf = b.add(NodeKind.SWITCH, leaves)
    spine = b.add(NodeKind.SWITCH, spines)
    for i in range(leaves):
        for j in range(servers_per_leaf):
            b.link(servers[i * servers_per_leaf + j], leaf[i])
        for s in spine:
            b.link(leaf[i], s)
    params = {"leaves": int(leaves), "spines": int(spines), "servers_per_leaf": int(servers_per_leaf)}
    return b.build("leaf_spine", params)


def build_dcell(n: int, level: int = 1, server_capacity: int = 16) -> NetworkGraph:
    """Level-1 DCell: n+1 cells of n servers around a switch, one link per cell pair."""
    if level != 1:
        raise InvalidParameterError("only level-1 DCell is supported")
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise InvalidParameterError(f"dcell n must be an integer >= 2, got {n!r}")
    cells = n + 1
    b = _Builder(server_capacity)
    servers = b.add(NodeKind.SERVER, cells * n)
    switches = b.add(NodeKind.SWITCH, cells)
    for c in range(cells):
        for j in range(n):
            b.link(servers[c * n + j], switches[c])
    for i in range(cells):
        for j in range(i, n):
            b.link(servers[i * n + j], servers[(j + 1) * n + i])
    return b.build("dcell", {"n": int(n)})


def assign_server_ids(g: NetworkGraph) -> NetworkGraph:
    """Number servers in construction (node-index) order.

    Generators already emit servers in locality-preserving order, so this is
    a normalisation step and is idempotent.
    """
    return NetworkGraph.from_edges(
        g.kinds, g.edges, g.capacity, family=g.family, params=g.params, check_connected=False
    )


def build_topology(family: str, **params) -> NetworkGraph:
    builders = {"fat_tree": build_fat_tree, "leaf_spine": build_leaf_spine, "dcell": build_dcell}
    try:
        fn = builders[family]
    except KeyError:
        raise InvalidParameterError(f"unknown topology family {family!r}") from None
    return fn(**params)


@dataclass(eq=False)
class SpanningTree:
    parent: np.ndarray
    children: list[list[int]]
    root: int
    depth: np.ndarray
    graph: NetworkGraph | None = None

    @property
    def n_nodes(self) -> int:
        return len(self.parent)

    def tree_edges(self) -> list[tuple[int, int]]:
        return [(int(p), v) for v, p in enumerate(self.parent) if p >= 0]

    def tree_neighbors(self, v: int) -> list[int]:
        p = int(self.parent[v])
        return ([p] if p >= 0 else []) + self.children[v]

    def distances(self, source: int) -> np.ndarray:
        """Hop distances within the tree."""
        dist = np.full(self.n_nodes, -1, dtype=np.int64)
        dist[source] = 0
        q = deque([source])
        while q:
            v = q.popleft()
            for u in self.tree_neighbors(v):
                if dist[u] < 0:
                    dist[u] = dist[v] + 1
                    q.append(u)
        return dist


def central_node(g: NetworkGraph) -> int:
    """Approximate centre: midpoint of a double-BFS diameter path.

    Candidates are the one or two middle nodes of the path; the one with the
    smaller eccentricity wins, then the lower index.
    """
    d0 = g.distances(0)
    if (d0 < 0).any():
        raise InvalidParameterError("graph is not connected")
    a = int(np.argmax(d0))
    da = g.distances(a)
    b = int(np.argmax(da))
    db = g.distances(b)
    length = int(da[b])
    on_path = np.flatnonzero((da + db) == length)
    mids = {length // 2, (length + 1) // 2}
    candidates = sorted(int(v) for v in on_path if int(da[v]) in mids)
    best = min(candidates, key=lambda v: (int(g.distances(v).max()), v))
    return best


def build_spanning_tree(g: NetworkGraph, root: int | None = None) -> SpanningTree:
    """Breadth-first spanning tree rooted at the (approximate) central node."""
    if root is None:
        root = central_node(g)
    n = g.n_nodes
    parent = np.full(n, -1, dtype=np.int32)
    depth = np.full(n, -1, dtype=np.int32)
    children: list[list[int]] = [[] for _ in range(n)]
    depth[root] = 0
    ip, ix = g.indptr, g.indices
    q = deque([root])
    while q:
        v = q.popleft()
        for u in ix[ip[v] : ip[v + 1]].tolist():
            if depth[u] < 0:
                depth[u] = depth[v] + 1
                parent[u] = v
                children[v].append(u)
                q.append(u)
    if (depth < 0).any():
        raise InvalidParameterError("graph is not connected")
    return SpanningTree(parent=parent, children=children, root=int(root), depth=depth, graph=g)
