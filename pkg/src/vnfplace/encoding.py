"""Genotypes, variation operators and decoding.

Routing-led genotypes (FLS, VLS) only fix where each service starts; every
later VNF is put on the nearest server with room, via a selection strategy.
The placement-led genotype (PL) assigns every VNF explicitly and is repaired
before evaluation.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .objectives import Evaluation, ModelParams, ObjectiveVector, evaluate
from .routing import CondensedTables, PathSet, build_condensed_tables, service_paths
from .selection import CapacityState, make_strategy
from .topology import NetworkGraph

__all__ = [
    "ServiceChain",
    "Instance",
    "FLSGenotype",
    "VLSGenotype",
    "PLGenotype",
    "Solution",
    "fls_init",
    "fls_crossover",
    "fls_mutate",
    "fls_origins",
    "vls_init",
    "vls_messy_crossover",
    "vls_mutate",
    "vls_origins",
    "pl_init",
    "pl_crossover",
    "pl_mutate",
    "pl_repair",
    "pl_decode",
    "decode",
    "genotype_to_json",
    "genotype_from_json",
    "REPRESENTATIONS",
    "make_representation",
]


@dataclass(frozen=True)
class ServiceChain:
    demands: tuple[int, ...]
    rate: float

    def __post_init__(self):
        if len(self.demands) == 0:
            raise ValueError("a service chain needs at least one VNF")
        if any(int(d) != d or d <= 0 for d in self.demands):
            raise ValueError(f"VNF demands must be positive integers: {self.demands}")
        if not self.rate > 0:
            raise ValueError("arrival rate must be positive")

    def __len__(self) -> int:
        return len(self.demands)


class Instance:
    """A topology, a service set and the structures every decode shares."""

    def __init__(
        self,
        graph: NetworkGraph,
        services: list[ServiceChain],
        strategy: str = "spanning",
        params: ModelParams = ModelParams(),
        tables: CondensedTables | None = None,
        service_order: str = "ascending",
        memory_budget: int | None = None,
    ):
        if service_order not in ("ascending", "shuffled"):
            raise ValueError(f"unknown service order {service_order!r}")
        self.graph = graph
        self.services = list(services)
        self.params = params
        self.service_order = service_order
        self.tables = tables if tables is not None else build_condensed_tables(graph)
        self.strategy = make_strategy(strategy, graph, memory_budget)
        lens = np.array([len(s) for s in self.services], dtype=np.int32)
        self.vnf_ptr = np.zeros(len(lens) + 1, dtype=np.int32)
        np.cumsum(lens, out=self.vnf_ptr[1:])
        self.demands = np.array(
            [d for s in self.services for d in s.demands], dtype=np.int64
        )
        self.rates = np.array([s.rate for s in self.services], dtype=np.float64)
        self.service_of = np.repeat(np.arange(len(lens), dtype=np.int32), lens)

    @property
    def n_services(self) -> int:
        return len(self.services)

    @property
    def n_servers(self) -> int:
        return self.graph.n_servers

    @property
    def n_vnfs(self) -> int:
        return int(self.vnf_ptr[-1])


@dataclass(frozen=True)
class FLSGenotype:
    origins: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class VLSGenotype:
    genes: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class PLGenotype:
    assignment: tuple[int, ...]


@dataclass(eq=False)
class Solution:
    """Decoded phenotype. ``hosts`` is flat over VNFs in service order (-1 if unplaced)."""

    hosts: np.ndarray
    feasible: bool
    objectives: ObjectiveVector | None = None
    evaluation: Evaluation | None = field(default=None, repr=False)

    def placements(self, inst: Instance) -> list[list[int]]:
        p = inst.vnf_ptr
        return [self.hosts[p[i]:p[i + 1]].tolist() for i in range(inst.n_services)]

    def paths(self, inst: Instance) -> list[list[PathSet]]:
        if not self.feasible:
            raise ValueError("infeasible solutions have no routes")
        return [service_paths(h, inst.tables) for h in self.placements(inst)]

    def used(self, inst: Instance) -> np.ndarray:
        ok = self.hosts >= 0
        return np.bincount(
            self.hosts[ok], weights=inst.demands[ok], minlength=inst.n_servers
        ).astype(np.int64)

    def trace(self, inst: Instance) -> list[dict]:
        out = []
        for i, hs in enumerate(self.placements(inst)):
            for j, s in enumerate(hs):
                out.append({"service": i, "vnf": j, "server": int(s)})
        return out

    def to_json(self) -> dict:
        return {
            "hosts": self.hosts.tolist(),
            "feasible": self.feasible,
            "objectives": None if self.objectives is None else list(self.objectives.as_tuple()),
        }


# ---------------------------------------------------------------- FLS


def fls_init(rng: np.random.Generator, n_services: int, n_servers: int) -> FLSGenotype:
    if n_servers < 1:
        raise ValueError("need at least one server")
    at = rng.integers(0, n_servers, n_services)
    lists: list[list[int]] = [[] for _ in range(n_servers)]
    for i, s in enumerate(at.tolist()):
        lists[s].append(i)
    return FLSGenotype(tuple(tuple(x) for x in lists))


def fls_origins(g: FLSGenotype, n_services: int) -> np.ndarray:
    out = np.full(n_services, -1, dtype=np.int64)
    for s, lst in enumerate(g.origins):
        for i in lst:
            out[i] = s
    return out


def _fls_child(head, tail, c, guide) -> FLSGenotype:
    lists = [list(x) for x in head[:c]] + [list(x) for x in tail[c:]]
    seen = set()
    for lst in lists:
        keep = [i for i in lst if i not in seen]
        seen.update(keep)
        lst[:] = keep
    for s, lst in enumerate(guide):
        for i in lst:
            if i not in seen:
                lists[s].append(i)
                seen.add(i)
    return FLSGenotype(tuple(tuple(x) for x in lists))


def fls_crossover(
    a: FLSGenotype, b: FLSGenotype, rng: np.random.Generator
) -> tuple[FLSGenotype, FLSGenotype]:
    """Single-point crossover over the server axis, then exactly-once repair.

    Duplicates keep the copy on the lower server ID; a service lost by the
    cut is restored where the first-listed parent (``a`` for child 1, ``b``
    for child 2) had it.
    """
    if len(a.origins) != len(b.origins):
        raise ValueError("parents cover different server sets")
    if sum(map(len, a.origins)) != sum(map(len, b.origins)):
        raise ValueError("parents cover different service sets")
    c = int(rng.integers(0, len(a.origins) + 1))
    return (
        _fls_child(a.origins, b.origins, c, a.origins),
        _fls_child(b.origins, a.origins, c, b.origins),
    )


def fls_mutate(g: FLSGenotype, rng: np.random.Generator, rate: float) -> FLSGenotype:
    if not 0.0 <= rate <= 1.0:
        raise ValueError("mutation rate must lie in [0, 1]")
    n_srv = len(g.origins)
    lists = [list(x) for x in g.origins]
    moves = []
    for s, lst in enumerate(g.origins):
        for i in lst:
            if rng.random() < rate:
                moves.append((i, s, int(rng.integers(0, n_srv))))
    if not moves:
        return g
    for i, s, t in moves:
        lists[s].remove(i)
        lists[t].append(i)
    return FLSGenotype(tuple(tuple(x) for x in lists))


# ---------------------------------------------------------------- VLS


def vls_init(rng: np.random.Generator, n_services: int, n_servers: int) -> VLSGenotype:
    if n_services < 1:
        raise ValueError("a VLS genotype cannot be empty")
    at = rng.integers(0, n_servers, n_services)
    order = rng.permutation(n_services)
    return VLSGenotype(tuple((int(i), int(at[i])) for i in order))


def vls_messy_crossover(
    a: VLSGenotype, b: VLSGenotype, rng: np.random.Generator
) -> tuple[VLSGenotype, VLSGenotype]:
    """Cut-and-splice with independent cuts; both children keep at least one gene."""
    if not a.genes or not b.genes:
        raise ValueError("messy crossover needs non-empty parents")
    ca = int(rng.integers(1, len(a.genes) + 1))
    cb = int(rng.integers(1, len(b.genes) + 1))
    return (
        VLSGenotype(a.genes[:ca] + b.genes[cb:]),
        VLSGenotype(b.genes[:cb] + a.genes[ca:]),
    )


def vls_mutate(
    g: VLSGenotype, rng: np.random.Generator, rate: float, n_servers: int
) -> VLSGenotype:
    if not 0.0 <= rate <= 1.0:
        raise ValueError("mutation rate must lie in [0, 1]")
    hit = rng.random(len(g.genes)) < rate
    if not hit.any():
        return g
    draws = rng.integers(0, n_servers, len(g.genes))
    return VLSGenotype(
        tuple((i, int(draws[k]) if hit[k] else s) for k, (i, s) in enumerate(g.genes))
    )


def _genotype_seed(genes) -> int:
    h = hashlib.blake2b(repr(genes).encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little")


def vls_origins(g: VLSGenotype, n_services: int, n_servers: int) -> np.ndarray:
    """First valid gene per service wins; absent services get a hash-seeded draw."""
    out = np.full(n_services, -1, dtype=np.int64)
    for i, s in g.genes:
        if 0 <= i < n_services and 0 <= s < n_servers and out[i] < 0:
            out[i] = s
    missing = out < 0
    if missing.any():
        rng = np.random.default_rng(_genotype_seed(g.genes))
        out[missing] = rng.integers(0, n_servers, int(missing.sum()))
    return out


# ---------------------------------------------------------------- decode


def _service_order(inst: Instance, key) -> np.ndarray | None:
    if inst.service_order == "ascending":
        return None
    return np.random.default_rng(_genotype_seed(key)).permutation(inst.n_services)


def decode_origins(inst: Instance, origins: np.ndarray, order_key=None) -> Solution:
    """Routing-led placement from one origin server per service, then evaluation."""
    g = inst.graph
    placer = inst.strategy.start()
    origin_nodes = g.server_nodes[np.asarray(origins, dtype=np.int64)]
    perm = _service_order(inst, order_key if order_key is not None else tuple(origins))
    if perm is None:
        hosts, failed = placer.place_services(origin_nodes, inst.vnf_ptr, inst.demands)
    else:
        lens = np.diff(inst.vnf_ptr)[perm]
        ptr = np.zeros(len(perm) + 1, dtype=np.int32)
        np.cumsum(lens, out=ptr[1:])
        idx = np.concatenate(
            [np.arange(inst.vnf_ptr[i], inst.vnf_ptr[i + 1]) for i in perm]
        )
        h, failed = placer.place_services(origin_nodes[perm], ptr, inst.demands[idx])
        hosts = np.full(inst.n_vnfs, -1, dtype=np.int32)
        hosts[idx] = h
        if failed >= 0:
            failed = int(idx[failed])
    if failed >= 0:
        return Solution(hosts, False)
    return _evaluated(inst, hosts, placer.caps.used)


def _evaluated(inst: Instance, hosts: np.ndarray, used: np.ndarray) -> Solution:
    ev = evaluate(inst.tables, hosts, inst.vnf_ptr, inst.rates, used, inst.params)
    return Solution(hosts, True, ev.objectives, ev)


def decode(genotype, inst: Instance) -> Solution:
    if isinstance(genotype, FLSGenotype):
        return decode_origins(inst, fls_origins(genotype, inst.n_services), genotype.origins)
    if isinstance(genotype, VLSGenotype):
        o = vls_origins(genotype, inst.n_services, inst.n_servers)
        return decode_origins(inst, o, genotype.genes)
    if isinstance(genotype, PLGenotype):
        return pl_decode(genotype, inst)
    raise TypeError(f"not a genotype: {type(genotype).__name__}")


# ---------------------------------------------------------------- PL


def pl_init(rng: np.random.Generator, inst: Instance) -> PLGenotype:
    """Origins as in FLS init; VNF ``j`` of a chain goes ``j`` servers further along."""
    origins = rng.integers(0, inst.n_servers, inst.n_services)
    offs = np.arange(inst.n_vnfs) - inst.vnf_ptr[inst.service_of]
    return PLGenotype(tuple(((origins[inst.service_of] + offs) % inst.n_servers).tolist()))


def pl_crossover(
    a: PLGenotype, b: PLGenotype, rng: np.random.Generator
) -> tuple[PLGenotype, PLGenotype]:
    if len(a.assignment) != len(b.assignment):
        raise ValueError("parents cover different VNF sets")
    c = int(rng.integers(0, len(a.assignment) + 1))
    return (
        PLGenotype(a.assignment[:c] + b.assignment[c:]),
        PLGenotype(b.assignment[:c] + a.assignment[c:]),
    )


def pl_mutate(
    g: PLGenotype, rng: np.random.Generator, rate: float, n_servers: int
) -> PLGenotype:
    if not 0.0 <= rate <= 1.0:
        raise ValueError("mutation rate must lie in [0, 1]")
    hit = rng.random(len(g.assignment)) < rate
    if not hit.any():
        return g
    a = np.asarray(g.assignment)
    a = np.where(hit, rng.integers(0, n_servers, len(a)), a)
    return PLGenotype(tuple(a.tolist()))


def pl_repair(
    assignment, demands: np.ndarray, capacity: np.ndarray
) -> np.ndarray | None:
    """Move VNFs off overfull servers to the nearest server in ID order with room.

    Servers are scanned by ID; an overfull server sheds its highest-index VNFs
    first. Distance is cyclic over IDs, ties go to the lower ID. Returns
    ``None`` if some VNF fits nowhere.
    """
    hosts = np.array(assignment, dtype=np.int32)
    demands = np.asarray(demands, dtype=np.int64)
    cap = np.asarray(capacity, dtype=np.int64)
    n = len(cap)
    if demands.sum() > cap.sum():
        return None
    used = np.bincount(hosts, weights=demands, minlength=n).astype(np.int64)
    over = np.nonzero(used > cap)[0]
    if len(over) == 0:
        return hosts
    by_server: dict[int, list[int]] = {int(s): [] for s in over}
    for j in np.nonzero(np.isin(hosts, over))[0].tolist():
        by_server[int(hosts[j])].append(j)
    for s in over.tolist():
        vnfs = by_server[s]
        while used[s] > cap[s]:
            j = vnfs.pop()
            d = demands[j]
            t = _nearest_with_room(s, d, used, cap, n)
            if t < 0:
                return None
            used[s] -= d
            used[t] += d
            hosts[j] = t
    return hosts


def _nearest_with_room(s: int, d: int, used, cap, n: int) -> int:
    for k in range(1, n // 2 + 1):
        lo, hi = (s - k) % n, (s + k) % n
        cands = sorted({lo, hi})
        for t in cands:
            if used[t] + d <= cap[t]:
                return t
    return -1


def pl_decode(g: PLGenotype, inst: Instance) -> Solution:
    hosts = pl_repair(g.assignment, inst.demands, inst.graph.server_capacity)
    if hosts is None:
        return Solution(np.asarray(g.assignment, dtype=np.int32), False)
    used = np.bincount(hosts, weights=inst.demands, minlength=inst.n_servers)
    return _evaluated(inst, hosts, used.astype(np.int64))


# ---------------------------------------------------------------- bundles


class _Representation:
    name = ""

    def __init__(self, inst: Instance):
        self.inst = inst

    @property
    def default_mutation_rate(self) -> float:
        return 1.0 / max(1, self.inst.n_services)

    def evaluate(self, genotype) -> Solution:
        return decode(genotype, self.inst)


class FLSRepresentation(_Representation):
    name = "fls"

    def init(self, rng):
        return fls_init(rng, self.inst.n_services, self.inst.n_servers)

    def crossover(self, a, b, rng):
        return fls_crossover(a, b, rng)

    def mutate(self, g, rng, rate):
        return fls_mutate(g, rng, rate)


class VLSRepresentation(_Representation):
    name = "vls"

    def init(self, rng):
        return vls_init(rng, self.inst.n_services, self.inst.n_servers)

    def crossover(self, a, b, rng):
        return vls_messy_crossover(a, b, rng)

    def mutate(self, g, rng, rate):
        return vls_mutate(g, rng, rate, self.inst.n_servers)


class PLRepresentation(_Representation):
    name = "pl"

    @property
    def default_mutation_rate(self) -> float:
        # one expected change per genotype, as for FLS/VLS
        return 1.0 / max(1, self.inst.n_vnfs)

    def init(self, rng):
        return pl_init(rng, self.inst)

    def crossover(self, a, b, rng):
        return pl_crossover(a, b, rng)

    def mutate(self, g, rng, rate):
        return pl_mutate(g, rng, rate, self.inst.n_servers)


REPRESENTATIONS = {"fls": FLSRepresentation, "vls": VLSRepresentation, "pl": PLRepresentation}


def make_representation(name: str, inst: Instance) -> _Representation:
    try:
        return REPRESENTATIONS[name](inst)
    except KeyError:
        raise ValueError(f"unknown representation {name!r}") from None


def genotype_to_json(g) -> dict:
    if isinstance(g, FLSGenotype):
        return {"type": "fls", "origins": [list(x) for x in g.origins]}
    if isinstance(g, VLSGenotype):
        return {"type": "vls", "genes": [list(x) for x in g.genes]}
    if isinstance(g, PLGenotype):
        return {"type": "pl", "assignment": list(g.assignment)}
    raise TypeError(type(g).__name__)


def genotype_from_json(d) -> FLSGenotype | VLSGenotype | PLGenotype:
    if isinstance(d, str):
        d = json.loads(d)
    kind = d["type"]
    if kind == "fls":
        return FLSGenotype(tuple(tuple(int(i) for i in x) for x in d["origins"]))
    if kind == "vls":
        return VLSGenotype(tuple((int(i), int(s)) for i, s in d["genes"]))
    if kind == "pl":
        return PLGenotype(tuple(int(s) for s in d["assignment"]))
    raise ValueError(f"unknown genotype type {kind!r}")
