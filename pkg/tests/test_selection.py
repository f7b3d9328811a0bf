import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from vnfplace._kernels import _pure
from vnfplace.selection import (
    CachedStrategy,
    CapacityState,
    InvariantError,
    ResourceError,
    SimpleStrategy,
    SpanningStrategy,
    SpanningTables,
    build_nearest_cache,
    cache_bytes,
    cached_nearest,
    make_strategy,
    simple_bfs_nearest,
    st_build,
    st_place,
    st_update,
)
from vnfplace.topology import NetworkGraph, build_dcell, build_fat_tree, build_spanning_tree


def _random_caps(g, rng, zero_frac=0.3):
    total = g.server_capacity.astype(np.int64)
    rem = rng.integers(0, total + 1)
    rem[rng.random(len(rem)) < zero_frac] = 0
    return CapacityState(rem, total)


def _rows_match_oracle(tables, tree, g, caps):
    ref = oracles.spanning_rows(tree.parent.tolist(), g.kinds.tolist(), caps.remaining.tolist())
    for v in range(g.n_nodes):
        for nb, c, d, s in tables.rows(v):
            assert ref[(v, nb)] == (c, d, s), (v, nb)


def _top2_fresh(tables, v):
    return _pure._top2(tables.row_ptr, tables.cap, tables.dist, tables.srv, v)


def test_simple_and_cached_match_exhaustive(small_graph, backend):
    g = small_graph
    rng = np.random.default_rng(3)
    adj = oracles.adjacency(g)
    servers = oracles.server_list(g)
    dists = [oracles.bfs(adj, v) for v in range(g.n_nodes)]
    cache = build_nearest_cache(g)
    for _ in range(300):
        caps = _random_caps(g, rng)
        origin = int(rng.integers(g.n_nodes))
        demand = int(rng.integers(1, 18))
        want = oracles.exhaustive_nearest(dists[origin], servers, caps.remaining, demand)
        assert simple_bfs_nearest(g, caps, origin, demand) == want
        assert cached_nearest(cache, caps, origin, demand) == want


def test_cache_rows_are_distance_sorted(small_graph, backend):
    g = small_graph
    cache = build_nearest_cache(g)
    adj = oracles.adjacency(g)
    servers = oracles.server_list(g)
    for v in range(g.n_nodes):
        d = oracles.bfs(adj, v)
        want = sorted(range(len(servers)), key=lambda s: (d[servers[s]], s))
        assert cache.order[v].tolist() == want


def test_cache_respects_memory_budget():
    g = build_fat_tree(4)
    need = cache_bytes(g)
    assert need == g.n_nodes * g.n_servers * 4
    with pytest.raises(ResourceError) as e:
        build_nearest_cache(g, memory_budget=need - 1)
    assert e.value.required_bytes == need
    assert build_nearest_cache(g, memory_budget=need).nbytes == need
    with pytest.raises(ResourceError):
        make_strategy("cached", g, memory_budget=16)


def test_st_build_matches_oracle(small_graph, backend):
    g = small_graph
    tree = build_spanning_tree(g)
    rng = np.random.default_rng(5)
    for _ in range(20):
        caps = _random_caps(g, rng)
        t = st_build(tree, caps)
        _rows_match_oracle(t, tree, g, caps)
        for v in range(g.n_nodes):
            assert (t.best[v], t.second[v]) == _top2_fresh(t, v)


def test_row_layout(small_graph):
    g = small_graph
    tree = build_spanning_tree(g)
    t = SpanningTables.layout(tree)
    for v in range(g.n_nodes):
        nbrs = [nb for nb, *_ in t.rows(v)]
        expect = ([-1] if g.is_server(v) else []) + tree.tree_neighbors(v)
        assert nbrs == expect
    for r in range(len(t.row_nbr)):
        if t.row_nbr[r] >= 0:
            back = t.row_rev[r]
            assert t.row_node[back] == t.row_nbr[r]
            assert t.row_nbr[back] == t.row_node[r]


def test_incremental_equals_rebuild(small_graph, backend):
    g = small_graph
    tree = build_spanning_tree(g)
    rng = np.random.default_rng(11)
    caps = _random_caps(g, rng, zero_frac=0.0)
    t = st_build(tree, caps)
    for step in range(400):
        s = int(rng.integers(g.n_servers))
        # mostly consume, sometimes release, sometimes no-op
        new = int(rng.integers(0, g.server_capacity[s] + 1))
        caps.remaining[s] = new
        st_update(t, tree, s, new)
        fresh = st_build(tree, caps)
        assert t.same_rows(fresh), step
        for v in range(g.n_nodes):
            best, second = _top2_fresh(t, v)
            assert t.cap[t.best[v]] == t.cap[best] and t.srv[t.best[v]] == t.srv[best]
            if second >= 0:
                assert (t.cap[t.second[v]], t.dist[t.second[v]], t.srv[t.second[v]]) == (
                    t.cap[second], t.dist[second], t.srv[second])
    _rows_match_oracle(t, tree, g, caps)


def test_update_reports_modified_rows():
    g = build_fat_tree(4)
    tree = build_spanning_tree(g)
    caps = CapacityState.full(g)
    t = st_build(tree, caps)
    assert st_update(t, tree, 0, 16) == 0
    assert st_update(t, tree, 0, 15) >= 1
    with pytest.raises(ValueError):
        st_update(t, tree, g.n_servers, 3)


def test_spanning_uniform_is_tree_nearest(small_graph, backend):
    g = small_graph
    tree = build_spanning_tree(g)
    tadj = oracles.tree_adjacency(tree.parent.tolist())
    servers = oracles.server_list(g)
    rng = np.random.default_rng(2)
    for _ in range(200):
        c = int(rng.integers(1, 17))
        caps = CapacityState(np.full(g.n_servers, c, dtype=np.int64), g.server_capacity.astype(np.int64))
        t = st_build(tree, caps)
        origin = int(rng.integers(g.n_nodes))
        demand = int(rng.integers(1, 17))
        want = oracles.exhaustive_nearest(oracles.bfs(tadj, origin), servers, caps.remaining, demand)
        assert st_place(t, tree, caps, origin, demand) == want


def test_st_place_detects_stale_tables():
    g = build_fat_tree(4)
    tree = build_spanning_tree(g)
    caps = CapacityState.full(g)
    t = st_build(tree, caps)
    caps.remaining[:] = 0  # tables not told
    with pytest.raises(InvariantError):
        st_place(t, tree, caps, 0, 4)


@pytest.mark.parametrize("cls", [SimpleStrategy, CachedStrategy, SpanningStrategy])
def test_placer_batch_equals_stepwise(cls, small_graph, backend):
    g = small_graph
    rng = np.random.default_rng(8)
    strat = cls(g)
    lens = rng.integers(1, 5, 12)
    ptr = np.concatenate([[0], np.cumsum(lens)]).astype(np.int32)
    dem = rng.integers(1, 5, int(ptr[-1]))
    origins = rng.integers(0, g.n_nodes, 12)
    batch = strat.start()
    out, failed = batch.place_services(origins, ptr, dem)
    step = strat.start()
    ref = []
    for i in range(12):
        at = int(origins[i])
        for j in range(ptr[i], ptr[i + 1]):
            s = step.place(at, int(dem[j]))
            if s is None:
                break
            ref.append(s)
            at = int(g.server_nodes[s])
        else:
            continue
        break
    n_ok = len(ref)
    assert out[:n_ok].tolist() == ref
    assert failed == (-1 if n_ok == len(dem) else n_ok)
    assert np.array_equal(batch.caps.remaining, step.caps.remaining)
    step.caps.check()


def test_simple_and_cached_agree_on_chains(small_graph, backend):
    g = small_graph
    rng = np.random.default_rng(9)
    lens = rng.integers(3, 8, 10)
    ptr = np.concatenate([[0], np.cumsum(lens)]).astype(np.int32)
    dem = rng.integers(1, 5, int(ptr[-1]))
    origins = g.server_nodes[rng.integers(0, g.n_servers, 10)]
    a, fa = SimpleStrategy(g).start().place_services(origins, ptr, dem)
    b, fb = CachedStrategy(g).start().place_services(origins, ptr, dem)
    assert fa == fb and a.tolist() == b.tolist()


def test_capacity_state_guards():
    g = build_fat_tree(2)
    caps = CapacityState.full(g)
    caps.commit(0, 16)
    with pytest.raises(InvariantError):
        caps.commit(0, 1)
    assert caps.used.tolist() == [16, 0]
    caps.remaining[1] = 99
    with pytest.raises(InvariantError):
        caps.check()


@st.composite
def graph_and_updates(draw):
    n = draw(st.integers(2, 18))
    parents = [draw(st.integers(0, i - 1)) for i in range(1, n)]
    kinds = draw(st.lists(st.sampled_from([0, 1]), min_size=n, max_size=n))
    kinds[draw(st.integers(0, n - 1))] = 1
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=8))
    edges = {(min(i + 1, p), max(i + 1, p)) for i, p in enumerate(parents)}
    edges |= {(min(a, b), max(a, b)) for a, b in extra if a != b}
    n_srv = sum(kinds)
    caps = draw(st.lists(st.integers(1, 8), min_size=n_srv, max_size=n_srv))
    ups = draw(st.lists(st.tuples(st.integers(0, n_srv - 1), st.integers(0, 8)), max_size=25))
    return kinds, sorted(edges), caps, ups


@settings(max_examples=80, deadline=None)
@given(graph_and_updates())
def test_property_incremental_equals_rebuild(data):
    kinds, edges, cap, ups = data
    kinds_arr = np.asarray(kinds)
    full_cap = np.zeros(len(kinds), dtype=np.int64)
    full_cap[kinds_arr == 1] = cap
    g = NetworkGraph.from_edges(kinds, edges, capacity=full_cap)
    tree = build_spanning_tree(g)
    caps = CapacityState.full(g)
    t = st_build(tree, caps)
    for s, new in ups:
        new = min(new, int(caps.total[s]))
        caps.remaining[s] = new
        st_update(t, tree, s, new)
        assert t.same_rows(st_build(tree, caps))
    _rows_match_oracle(t, tree, g, caps)
    servers = oracles.server_list(g)
    adj = oracles.adjacency(g)
    for origin in range(g.n_nodes):
        for demand in (1, 4, 9):
            feasible = oracles.any_feasible(caps.remaining, demand)
            got = st_place(t, tree, caps, origin, demand)
            assert (got is None) == (not feasible)
            want = oracles.exhaustive_nearest(oracles.bfs(adj, origin), servers, caps.remaining, demand)
            assert simple_bfs_nearest(g, caps, origin, demand) == want


def _path3():
    # s0 - w - s1
    return NetworkGraph.from_edges([1, 0, 1], [(0, 1), (1, 2)], capacity=[5, 0, 5])


def test_trivial_simple_cases():
    g = _path3()
    caps = CapacityState(np.array([0, 5]), np.array([5, 5]))
    assert simple_bfs_nearest(g, caps, 0, 3) == 1
    caps = CapacityState(np.array([4, 5]), np.array([5, 5]))
    assert simple_bfs_nearest(g, caps, 0, 3) == 0
    assert simple_bfs_nearest(g, caps, 0, 6) is None


def test_trivial_cache_cases():
    line = NetworkGraph.from_edges([1, 1, 1], [(0, 1), (1, 2)], server_capacity=4)
    cache = build_nearest_cache(line)
    assert cache.order[0].tolist() == [0, 1, 2]
    caps = CapacityState(np.array([0, 0, 4]), np.array([4, 4, 4]))
    assert cached_nearest(cache, caps, 0, 2) == 2
    assert cached_nearest(cache, caps, 0, 5) is None
    g = build_fat_tree(4)
    c = build_nearest_cache(g)
    assert all(len(row) == g.n_servers for row in c.order)
    for s in range(g.n_servers):
        first = set(c.order[s][:2].tolist())
        assert first == {s - s % 2, s - s % 2 + 1}


def test_trivial_table_cases():
    single = NetworkGraph.from_edges([1, 0], [(0, 1)], capacity=[6, 0])
    tree = build_spanning_tree(single)
    t = st_build(tree, CapacityState.full(single))
    assert t.rows(1) == [(0, 6, 1, 0)]
    star = NetworkGraph.from_edges([1, 1, 1, 0], [(0, 3), (1, 3), (2, 3)], capacity=[5, 3, 7, 0])
    tree = build_spanning_tree(star)
    t = st_build(tree, CapacityState.full(star))
    assert sorted((c, d, s) for _, c, d, s in t.rows(3)) == [(3, 1, 1), (5, 1, 0), (7, 1, 2)]


def test_path_update_example():
    g = NetworkGraph.from_edges([1, 0, 1], [(0, 1), (1, 2)], capacity=[5, 0, 4])
    tree = build_spanning_tree(g, root=1)
    caps = CapacityState.full(g)
    t = st_build(tree, caps)
    caps.remaining[0] = 1
    st_update(t, tree, 0, 1)
    assert t.row_for(1, 0) == (1, 1, 0)
    assert t.row_for(2, 1) == (1, 2, 0)
    assert t.same_rows(st_build(tree, caps))


def test_placement_consumes_and_never_overfills():
    g = _path3()
    strat = SpanningStrategy(g)
    placer = strat.start()
    assert placer.place(0, 5) == 0
    assert placer.place(0, 5) == 1  # server 0 is full now
    assert placer.place(0, 1) is None
    placer.caps.check()


@pytest.mark.parametrize("name", ["simple", "cached", "spanning"])
def test_strategies_feasible_on_dcell(name, backend):
    g = build_dcell(3)
    rng = np.random.default_rng(4)
    lens = rng.integers(3, 8, 16)
    ptr = np.concatenate([[0], np.cumsum(lens)]).astype(np.int32)
    dem = rng.integers(1, 5, int(ptr[-1]))
    origins = g.server_nodes[rng.integers(0, g.n_servers, 16)]
    placer = make_strategy(name, g).start()
    out, failed = placer.place_services(origins, ptr, dem)
    n_ok = len(dem) if failed < 0 else failed
    used = np.bincount(out[:n_ok], weights=dem[:n_ok], minlength=g.n_servers)
    assert (used <= g.server_capacity).all()
    assert np.array_equal(used, placer.caps.used)
    if failed >= 0:
        assert not oracles.any_feasible(placer.caps.remaining, int(dem[failed]))
