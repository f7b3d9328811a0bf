"""Latency, packet loss and energy of a placed and routed solution.

Every node is an M/M/1/K queue. Switches serve at ``mu_switch``; servers
serve at ``mu_vnf`` both when running a VNF and when forwarding (DCell routes
through servers). Each VNF visit is one pass through its host's queue.

Arrivals are propagated per service with ECMP per-hop splitting. Drop-aware
loads are obtained in one correction pass: blocking probabilities computed
from the drop-free loads attenuate downstream traffic, and the resulting
loads define the final queue metrics. Latency is the expected sum of sojourn
times of delivered packets; loss is the undelivered fraction.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ._kernels import backend as _k
from .routing import CondensedTables, PathSet
from .topology import NetworkGraph

__all__ = [
    "ModelParams",
    "ObjectiveVector",
    "Evaluation",
    "EvaluationError",
    "node_metrics",
    "aggregate_arrivals",
    "service_objectives",
    "energy",
    "evaluate",
]


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    mu_switch: float = 10_000.0
    mu_vnf: float = 1_000.0
    buffer: int = 20
    p_idle: float = 100.0
    p_max: float = 200.0
    p_switch: float = 50.0

    def __post_init__(self):
        if not (self.mu_switch > 0 and self.mu_vnf > 0):
            raise ValueError("service rates must be positive")
        if int(self.buffer) != self.buffer or self.buffer < 1:
            raise ValueError("buffer K must be an integer >= 1")
        if min(self.p_idle, self.p_max, self.p_switch) < 0 or self.p_max < self.p_idle:
            raise ValueError("power figures must satisfy 0 <= p_idle <= p_max, p_switch >= 0")

    def service_rates(self, g: NetworkGraph) -> np.ndarray:
        is_srv = np.asarray(g.kinds) == 1
        return np.where(is_srv, self.mu_vnf, self.mu_switch).astype(np.float64)


@dataclass(frozen=True, order=True)
class ObjectiveVector:
    latency: float
    loss: float
    energy: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.latency, self.loss, self.energy)

    def dominates(self, other: ObjectiveVector) -> bool:
        a, b = self.as_tuple(), other.as_tuple()
        return all(x <= y for x, y in zip(a, b)) and a != b


def node_metrics(lam, mu, k: int):
    """M/M/1/K mean sojourn time ``W`` and blocking probability ``p``.

    Scalars give a ``(W, p)`` pair; arrays give a pair of arrays.
    """
    if np.ndim(lam) == 0 and np.ndim(mu) == 0:
        lam, mu = float(lam), float(mu)
        if not (math.isfinite(lam) and math.isfinite(mu)) or lam < 0 or mu <= 0:
            raise ValueError(f"need finite lam >= 0 and mu > 0, got {lam}, {mu}")
        if int(k) != k or k < 1:
            raise ValueError("K must be an integer >= 1")
        return _k.mm1k(lam, mu, int(k))
    lam_a, mu_a = np.broadcast_arrays(np.asarray(lam, float), np.asarray(mu, float))
    w = np.empty(lam_a.shape)
    p = np.empty(lam_a.shape)
    for idx in np.ndindex(lam_a.shape):
        w[idx], p[idx] = node_metrics(lam_a[idx], mu_a[idx], k)
    return w, p


def aggregate_arrivals(
    g: NetworkGraph,
    hosts: list[list[int]],
    paths: list[list[PathSet]],
    lam,
    drop=None,
) -> np.ndarray:
    """Per-node arrival rate from explicit path sets.

    ``hosts[i]`` lists the server IDs of service ``i``'s VNFs; ``paths[i]``
    holds the PathSet for each consecutive pair. With ``drop`` given, traffic
    surviving each node is attenuated by ``1 - drop[node]`` before moving on.
    """
    n = g.n_nodes
    p = np.zeros(n) if drop is None else np.asarray(drop, float)
    load = np.zeros(n)
    for i, chain in enumerate(hosts):
        mass = float(lam[i])
        nodes = [int(g.server_nodes[h]) for h in chain]
        seg = iter(paths[i])
        for j, v in enumerate(nodes):
            if j > 0:
                ps = next(seg)
                out = 0.0
                for path, wt in zip(ps.paths, ps.weights):
                    m = mass * wt
                    for u in path[1:-1]:
                        load[u] += m
                        m *= 1.0 - p[u]
                    out += m
                mass = out
            load[v] += mass
            mass *= 1.0 - p[v]
    return load


def service_objectives(
    g: NetworkGraph, chain: list[int], paths: list[PathSet], w, p, lam: float = 1.0
) -> tuple[float, float]:
    """(latency, loss) of one service from explicit path sets and node metrics."""
    nodes = [int(g.server_nodes[h]) for h in chain]
    mass, latm = float(lam), 0.0
    seg = iter(paths)
    for j, v in enumerate(nodes):
        if j > 0:
            ps = next(seg)
            s_tot = l_tot = 0.0
            for path, wt in zip(ps.paths, ps.weights):
                s, lsum = 1.0, 0.0
                for u in path[1:-1]:
                    s *= 1.0 - p[u]
                    lsum += w[u]
                s_tot += wt * s
                l_tot += wt * s * lsum
            latm = latm * s_tot + mass * l_tot
            mass *= s_tot
        latm = (latm + mass * w[v]) * (1.0 - p[v])
        mass *= 1.0 - p[v]
    latency = latm / mass if mass > 0 else math.inf
    return latency, 1.0 - mass / lam


def energy(
    g: NetworkGraph, used: np.ndarray, switch_load: np.ndarray, n_services: int,
    params: ModelParams = ModelParams(),
) -> float:
    """Datacentre power divided by the number of services.

    ``used`` is committed capacity per server ID; a server is on iff it hosts
    something, a switch iff it carries traffic.
    """
    if n_services == 0:
        return 0.0
    used = np.asarray(used, dtype=np.float64)
    total = np.asarray(g.server_capacity, dtype=np.float64)
    on = used > 0
    u = used[on] / total[on]
    e = float(np.sum(params.p_idle + u * (params.p_max - params.p_idle)))
    is_sw = np.asarray(g.kinds) == 0
    e += params.p_switch * int(np.count_nonzero(np.asarray(switch_load)[is_sw] > 0))
    return e / n_services


@dataclass(eq=False)
class Evaluation:
    objectives: ObjectiveVector
    latency: np.ndarray
    loss: np.ndarray
    raw_load: np.ndarray
    load: np.ndarray
    drop: np.ndarray
    wait: np.ndarray
    meta: dict = field(default_factory=lambda: {"latency": "conditioned on delivery"})

    def trace_json(self) -> str:
        return json.dumps(
            {
                "objectives": asdict(self.objectives),
                "service_latency": self.latency.tolist(),
                "service_loss": self.loss.tolist(),
                "node_load": self.load.tolist(),
                "node_drop": self.drop.tolist(),
                "node_wait": self.wait.tolist(),
                "meta": self.meta,
            }
        )


def evaluate(
    tables: CondensedTables,
    hosts: np.ndarray,
    vnf_ptr: np.ndarray,
    lam: np.ndarray,
    used: np.ndarray,
    params: ModelParams = ModelParams(),
) -> Evaluation:
    """Objectives of a placement given as flat host server IDs in chain order."""
    g = tables.graph
    vnf_ptr = np.ascontiguousarray(vnf_ptr, dtype=np.int32)
    n_svc = len(vnf_ptr) - 1
    if n_svc <= 0:
        raise EvaluationError("no services to evaluate")
    hosts = np.asarray(hosts)
    if len(hosts) != vnf_ptr[-1] or (hosts < 0).any() or (hosts >= g.n_servers).any():
        raise EvaluationError("placement has unplaced or invalid VNFs")
    vnf_nodes = np.ascontiguousarray(g.server_nodes[hosts], dtype=np.int32)
    lam = np.ascontiguousarray(lam, dtype=np.float64)
    mu = params.service_rates(g)
    raw, load, p, w, lat, loss = _k.evaluate_flows(
        g, tables, vnf_nodes, vnf_ptr, lam, mu, int(params.buffer)
    )
    obj = ObjectiveVector(
        float(np.mean(lat)),
        float(np.mean(loss)),
        energy(g, used, raw, n_svc, params),
    )
    return Evaluation(obj, lat, loss, raw, load, p, w)
