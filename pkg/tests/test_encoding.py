import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

import oracles
from vnfplace.encoding import (
    FLSGenotype,
    Instance,
    PLGenotype,
    ServiceChain,
    VLSGenotype,
    decode,
    fls_crossover,
    fls_init,
    fls_mutate,
    fls_origins,
    genotype_from_json,
    genotype_to_json,
    make_representation,
    pl_init,
    pl_repair,
    vls_init,
    vls_messy_crossover,
    vls_mutate,
    vls_origins,
)
from vnfplace.harness.workload import WorkloadParams, generate_workload
from vnfplace.topology import NetworkGraph, build_fat_tree


def _exactly_once(g: FLSGenotype, n):
    flat = sorted(i for lst in g.origins for i in lst)
    return flat == list(range(n))


def _instance(strategy="spanning", seed=0, order="ascending"):
    g = build_fat_tree(4)
    wl = generate_workload(g, WorkloadParams(), np.random.default_rng(seed))
    return Instance(g, list(wl.services), strategy, service_order=order)


# ---------------------------------------------------------------- FLS


def test_fls_init_uniform_and_exact():
    g = fls_init(np.random.default_rng(0), 1000, 100)
    assert _exactly_once(g, 1000)
    counts = [len(x) for x in g.origins]
    assert chisquare(counts).pvalue > 0.01
    empty = fls_init(np.random.default_rng(0), 0, 5)
    assert empty.origins == ((),) * 5


def test_fls_crossover_trivial_cases():
    rng = np.random.default_rng(1)
    a = fls_init(rng, 30, 8)
    b = fls_init(rng, 30, 8)
    c1, c2 = fls_crossover(a, a, rng)
    assert c1 == a and c2 == a

    class Zero:
        def integers(self, lo, hi):
            return 0

    c1, c2 = fls_crossover(a, b, Zero())
    assert c1 == b and c2 == a


def test_fls_crossover_invariant_sweep():
    rng = np.random.default_rng(2)
    for _ in range(500):
        n_srv = int(rng.integers(1, 12))
        n = int(rng.integers(0, 40))
        a, b = fls_init(rng, n, n_srv), fls_init(rng, n, n_srv)
        for child in fls_crossover(a, b, rng):
            assert _exactly_once(child, n)
            assert len(child.origins) == n_srv


def test_fls_crossover_repair_rule():
    a = FLSGenotype(((0,), (1,), (2,)))
    b = FLSGenotype(((1,), (2,), (0,)))

    class Cut:
        def integers(self, lo, hi):
            return 1

    c1, c2 = fls_crossover(a, b, Cut())
    # c1 = a[:1] + b[1:] = (0), (2), (0): duplicate 0 kept on server 0, 1 restored where a had it
    assert c1.origins == ((0,), (2, 1), ())
    assert _exactly_once(c2, 3)


def test_fls_mutation():
    rng = np.random.default_rng(3)
    g = fls_init(rng, 50, 10)
    assert fls_mutate(g, rng, 0.0) == g
    before = fls_origins(g, 50)
    moved = sum(
        (fls_origins(fls_mutate(g, np.random.default_rng(s), 1.0), 50) != before).sum()
        for s in range(40)
    )
    # rate 1 redraws every origin uniformly: about 9/10 of them change
    assert abs(moved / (40 * 50) - 0.9) < 0.03
    for _ in range(10_000 // 50):
        g = fls_mutate(g, rng, 0.2)
        assert _exactly_once(g, 50)
    with pytest.raises(ValueError):
        fls_mutate(g, rng, 1.5)


# ---------------------------------------------------------------- VLS


def test_vls_init():
    with pytest.raises(ValueError):
        vls_init(np.random.default_rng(0), 0, 5)
    g = vls_init(np.random.default_rng(0), 1000, 100)
    assert sorted(i for i, _ in g.genes) == list(range(1000))
    counts = np.bincount([s for _, s in g.genes], minlength=100)
    assert chisquare(counts).pvalue > 0.01


def test_vls_crossover_cases():
    rng = np.random.default_rng(4)
    a, b = vls_init(rng, 10, 4), vls_init(rng, 7, 4)

    class Ends:
        def __init__(self):
            self.calls = 0

        def integers(self, lo, hi):
            self.calls += 1
            return hi - 1  # cut after the last gene of each parent

    c1, c2 = vls_messy_crossover(a, b, Ends())
    assert c1 == a and c2 == b
    for _ in range(500):
        c1, c2 = vls_messy_crossover(a, b, rng)
        assert len(c1.genes) + len(c2.genes) == len(a.genes) + len(b.genes)
        assert c1.genes and c2.genes
        for c in (c1, c2):
            o = vls_origins(c, 10, 4)
            assert ((o >= 0) & (o < 4)).all() and len(o) == 10


def test_vls_origins_rules():
    g = VLSGenotype(((2, 1), (0, 3), (2, 0), (9, 1)))
    o = vls_origins(g, 3, 4)
    assert o[0] == 3 and o[2] == 1
    assert 0 <= o[1] < 4
    assert vls_origins(g, 3, 4).tolist() == o.tolist()  # genotype-seeded, deterministic


def test_vls_mutation():
    rng = np.random.default_rng(5)
    g = vls_init(rng, 20, 6)
    assert vls_mutate(g, rng, 0.0, 6) == g
    m = vls_mutate(g, rng, 1.0, 6)
    assert [i for i, _ in m.genes] == [i for i, _ in g.genes]


# ---------------------------------------------------------------- PL


def test_pl_repair_cases():
    cap = np.array([4, 4, 4, 4])
    assert pl_repair([0, 1, 2], np.array([1, 1, 1]), cap).tolist() == [0, 1, 2]
    # server 1 overfull by one VNF; its neighbour 0 in ID order is free
    assert pl_repair([1, 1, 2, 2, 2, 2], np.array([2, 3, 1, 1, 1, 1]), cap).tolist() == [1, 0, 2, 2, 2, 2]
    assert pl_repair([0, 0], np.array([4, 4]), np.array([4, 3])) is None


def test_pl_repair_sweep():
    inst = _instance()
    rng = np.random.default_rng(6)
    cap = inst.graph.server_capacity
    for _ in range(500):
        a = rng.integers(0, inst.n_servers, inst.n_vnfs)
        hosts = pl_repair(a, inst.demands, cap)
        assert hosts is not None
        used = np.bincount(hosts, weights=inst.demands, minlength=inst.n_servers)
        assert (used <= cap).all()


def test_pl_init_shape():
    inst = _instance()
    g = pl_init(np.random.default_rng(0), inst)
    assert len(g.assignment) == inst.n_vnfs
    for i in range(inst.n_services):
        a, b = inst.vnf_ptr[i], inst.vnf_ptr[i + 1]
        first = g.assignment[a]
        assert list(g.assignment[a:b]) == [(first + j) % inst.n_servers for j in range(b - a)]


# ---------------------------------------------------------------- decode


def test_decode_trivial_cases():
    g = NetworkGraph.from_edges([1, 0, 1], [(0, 1), (1, 2)], capacity=[3, 0, 3])
    inst = Instance(g, [ServiceChain((1,), 10.0)])
    sol = decode(FLSGenotype(((0,), ())), inst)
    assert sol.feasible and sol.hosts.tolist() == [0]
    assert sol.paths(inst) == [[]]
    inst = Instance(g, [ServiceChain((1, 1, 1), 10.0)])
    sol = decode(FLSGenotype(((), (0,))), inst)
    assert sol.hosts.tolist() == [1, 1, 1]
    assert all(p.hops == 0 for p in sol.paths(inst)[0])


@pytest.mark.parametrize("strategy", ["simple", "cached", "spanning"])
@pytest.mark.parametrize("rep", ["fls", "vls", "pl"])
def test_decode_feasibility_sweep(strategy, rep):
    inst = _instance(strategy)
    r = make_representation(rep, inst)
    rng = np.random.default_rng(7)
    cap = inst.graph.server_capacity
    for _ in range(100):
        sol = r.evaluate(r.init(rng))
        assert sol.feasible
        used = np.bincount(sol.hosts, weights=inst.demands, minlength=inst.n_servers)
        assert (used <= cap).all()
        assert np.array_equal(sol.used(inst), used)


def test_strategies_decode_identically_when_equivalent():
    a, b = _instance("simple"), _instance("cached")
    rng = np.random.default_rng(8)
    for _ in range(20):
        g = fls_init(rng, a.n_services, a.n_servers)
        sa, sb = decode(g, a), decode(g, b)
        assert sa.hosts.tolist() == sb.hosts.tolist()
        assert sa.objectives == sb.objectives


def test_routing_led_chains_stay_local():
    inst = _instance("simple")
    adj = oracles.adjacency(inst.graph)
    g = fls_init(np.random.default_rng(9), inst.n_services, inst.n_servers)
    sol = decode(g, inst)
    origins = fls_origins(g, inst.n_services)
    first = sol.hosts[inst.vnf_ptr[:-1]]
    # the first VNF sits at its origin whenever the origin had room at the time
    dist = [oracles.bfs(adj, int(inst.graph.server_nodes[o]))[int(inst.graph.server_nodes[f])]
            for o, f in zip(origins, first)]
    assert np.mean(np.asarray(dist) == 0) > 0.5


def test_shuffled_order_is_deterministic():
    inst = _instance(order="shuffled")
    g = fls_init(np.random.default_rng(10), inst.n_services, inst.n_servers)
    a, b = decode(g, inst), decode(g, inst)
    assert a.hosts.tolist() == b.hosts.tolist() and a.objectives == b.objectives


def test_solution_serialisation():
    inst = _instance()
    g = vls_init(np.random.default_rng(11), inst.n_services, inst.n_servers)
    sol = decode(g, inst)
    d = sol.to_json()
    assert d["feasible"] is True and len(d["objectives"]) == 3
    trace = sol.trace(inst)
    assert len(trace) == inst.n_vnfs
    for gt in (g, fls_init(np.random.default_rng(0), 4, 3), PLGenotype((0, 1, 2))):
        assert genotype_from_json(genotype_to_json(gt)) == gt


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 30), st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_property_fls_operators_keep_invariant(n, n_srv, seed):
    rng = np.random.default_rng(seed)
    a, b = fls_init(rng, n, n_srv), fls_init(rng, n, n_srv)
    for c in fls_crossover(a, b, rng):
        assert _exactly_once(fls_mutate(c, rng, 0.3), n)
