import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from vnfplace.topology import (
    InvalidParameterError,
    NetworkGraph,
    assign_server_ids,
    build_dcell,
    build_fat_tree,
    build_leaf_spine,
    build_spanning_tree,
    build_topology,
    central_node,
)


def _degrees(g):
    return np.diff(g.indptr)


@pytest.mark.parametrize("k", [2, 4, 6, 8])
def test_fat_tree_shape(k):
    g = build_fat_tree(k)
    h = k // 2
    assert g.n_servers == k**3 // 4
    assert g.n_nodes == k**3 // 4 + k * k + h * h
    assert g.n_edges == 3 * k**3 // 4
    deg = _degrees(g)
    assert (deg[g.server_nodes] == 1).all()
    switches = np.flatnonzero(g.kinds == 0)
    assert (deg[switches] == k).all()
    assert g.is_connected()


def test_leaf_spine_shape():
    g = build_leaf_spine(6, 3, 5)
    assert g.n_servers == 30
    assert g.n_nodes == 30 + 6 + 3
    deg = _degrees(g)
    assert (deg[g.server_nodes] == 1).all()
    assert sorted(set(deg[30:36].tolist())) == [5 + 3]
    assert sorted(set(deg[36:].tolist())) == [6]
    assert build_leaf_spine(5).n_nodes == 5 + 5 + 3


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_dcell_shape(n):
    g = build_dcell(n)
    assert g.n_servers == n * (n + 1)
    assert g.n_nodes == n * (n + 1) + n + 1
    # every server: one switch uplink plus one inter-cell link
    assert (_degrees(g)[g.server_nodes] == 2).all()
    assert g.n_edges == n * (n + 1) + n * (n + 1) // 2
    assert max(oracles.bfs(oracles.adjacency(g), 0)) <= 5


@pytest.mark.parametrize(
    "fn, kw",
    [
        (build_fat_tree, {"k": 3}),
        (build_fat_tree, {"k": 0}),
        (build_leaf_spine, {"leaves": 0}),
        (build_leaf_spine, {"leaves": 2, "spines": 0}),
        (build_dcell, {"n": 1}),
        (build_dcell, {"n": 3, "level": 2}),
    ],
)
def test_invalid_parameters(fn, kw):
    with pytest.raises(InvalidParameterError):
        fn(**kw)


def test_unknown_family():
    with pytest.raises(InvalidParameterError):
        build_topology("torus", k=4)


def test_from_edges_rejects_bad_graphs():
    kinds = [1, 1, 0]
    with pytest.raises(InvalidParameterError):
        NetworkGraph.from_edges(kinds, [(0, 2)])  # disconnected
    with pytest.raises(InvalidParameterError):
        NetworkGraph.from_edges(kinds, [(0, 2), (2, 0), (1, 2)])
    with pytest.raises(InvalidParameterError):
        NetworkGraph.from_edges(kinds, [(0, 0), (1, 2)])
    with pytest.raises(InvalidParameterError):
        NetworkGraph.from_edges(kinds, [(0, 2), (1, 2)], capacity=[4, 0, 0])


def test_server_ids_are_node_prefix(small_graph):
    g = small_graph
    assert g.server_nodes.tolist() == list(range(g.n_servers))
    assert g.node_server[: g.n_servers].tolist() == list(range(g.n_servers))
    assert (g.node_server[g.n_servers :] == -1).all()
    assert assign_server_ids(g).same_as(g)


def test_distances_match_oracle(small_graph, backend):
    adj = oracles.adjacency(small_graph)
    for v in range(small_graph.n_nodes):
        ref = oracles.bfs(adj, v)
        assert small_graph.distances(v).tolist() == ref
        assert ref == oracles.dijkstra_unit(adj, v)


def test_edge_list_round_trip(tmp_path):
    g = build_leaf_spine(3, 2, 2, server_capacity=7)
    p = tmp_path / "ls.edges"
    g.export_edge_list(p)
    h = NetworkGraph.import_edge_list(p)
    assert h.same_as(g)
    assert h.family == g.family and h.params == g.params
    assert h.server_capacity.tolist() == [7] * 6


@pytest.mark.parametrize("make", [lambda: build_fat_tree(6), lambda: build_dcell(4),
                                  lambda: build_leaf_spine(5, 3, 2)])
def test_spanning_tree_is_bfs_tree(make):
    g = make()
    t = build_spanning_tree(g)
    adj = oracles.adjacency(g)
    edges = {tuple(e) for e in g.edges.tolist()}
    assert len(t.tree_edges()) == g.n_nodes - 1
    for p, v in t.tree_edges():
        assert (min(p, v), max(p, v)) in edges
    assert t.depth.tolist() == oracles.bfs(adj, t.root)
    assert t.distances(t.root).tolist() == t.depth.tolist()


def test_central_node_beats_endpoints():
    g = build_fat_tree(4)
    adj = oracles.adjacency(g)
    ecc = [max(oracles.bfs(adj, v)) for v in range(g.n_nodes)]
    c = central_node(g)
    # servers sit at eccentricity 6; the centre reaches everything in 4
    assert ecc[c] == min(ecc) == 4
    assert g.kinds[c] == 0


@st.composite
def random_trees(draw):
    n = draw(st.integers(2, 30))
    parents = [draw(st.integers(0, i - 1)) for i in range(1, n)]
    kinds = draw(st.lists(st.sampled_from([0, 1]), min_size=n, max_size=n))
    kinds[0] = 1
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=10))
    edges = {(min(i + 1, p), max(i + 1, p)) for i, p in enumerate(parents)}
    edges |= {(min(a, b), max(a, b)) for a, b in extra if a != b}
    return kinds, sorted(edges)


@settings(max_examples=60, deadline=None)
@given(random_trees())
def test_random_graphs_distances_and_tree(data):
    kinds, edges = data
    g = NetworkGraph.from_edges(kinds, edges, server_capacity=3)
    adj = oracles.adjacency(g)
    t = build_spanning_tree(g)
    assert t.depth.tolist() == oracles.bfs(adj, t.root)
    for v in range(g.n_nodes):
        assert g.distances(v).tolist() == oracles.bfs(adj, v)
        tadj = oracles.tree_adjacency(t.parent)
        assert t.distances(v).tolist() == oracles.bfs(tadj, v)


def _per_layer_fat_tree(k):
    """Count nodes and links layer by layer, independently of the generator."""
    h = k // 2
    servers = k * h * h
    edge_sw = agg_sw = k * h
    core = h * h
    links = servers + edge_sw * h + agg_sw * h
    return servers, edge_sw + agg_sw + core, links


@pytest.mark.parametrize("k", [2, 4, 6, 12])
def test_fat_tree_per_layer_enumeration(k):
    g = build_fat_tree(k)
    assert (g.n_servers, g.n_nodes - g.n_servers, g.n_edges) == _per_layer_fat_tree(k)


def test_small_hand_counts():
    g = build_fat_tree(2)
    assert (g.n_servers, g.n_nodes - g.n_servers) == (2, 5)
    g = build_fat_tree(4)
    assert (g.n_servers, g.n_nodes - g.n_servers, g.n_edges) == (16, 20, 48)
    g = build_leaf_spine(1, 1, 1)
    assert (g.n_servers, g.n_nodes - g.n_servers, g.n_edges) == (1, 2, 2)
    g = build_leaf_spine(2, 2, 4)
    assert (g.n_servers, g.n_nodes - g.n_servers, g.n_edges) == (8, 4, 12)
    g = build_dcell(2)
    assert (g.n_servers, g.n_nodes - g.n_servers, g.n_edges) == (6, 3, 9)


def test_construction_order_ids():
    g = build_fat_tree(4)
    adj = oracles.adjacency(g)
    # servers 0-3 share pod 0: their edge switches share aggregation switches
    pod_of = {}
    for s in range(16):
        esw = adj[s][0]
        aggs = tuple(a for a in adj[esw] if a >= 24)
        pod_of[s] = aggs
    assert len({pod_of[s] for s in range(4)}) == 1
    assert len({pod_of[s] for s in range(4, 8)}) == 1
    assert pod_of[0] != pod_of[4]
    g = build_leaf_spine(2, 2, 4)
    adj = oracles.adjacency(g)
    assert {adj[s][0] for s in range(4)} == {8}


def test_trivial_trees():
    path = NetworkGraph.from_edges([1, 0, 1], [(0, 1), (1, 2)])
    t = build_spanning_tree(path, root=1)
    assert t.depth.tolist() == [1, 0, 1]
    star = NetworkGraph.from_edges([0, 1, 1, 1], [(0, 1), (0, 2), (0, 3)])
    t = build_spanning_tree(star)
    assert sorted((min(a, b), max(a, b)) for a, b in t.tree_edges()) == [tuple(e) for e in star.edges.tolist()]


def test_fat_tree_tree_diameter_bound():
    g = build_fat_tree(4)
    t = build_spanning_tree(g)
    tadj = oracles.tree_adjacency(t.parent.tolist())
    tree_diam = max(max(oracles.bfs(tadj, v)) for v in range(g.n_nodes))
    graph_diam = max(max(oracles.bfs(oracles.adjacency(g), v)) for v in range(g.n_nodes))
    assert tree_diam <= 2 * graph_diam == 12
