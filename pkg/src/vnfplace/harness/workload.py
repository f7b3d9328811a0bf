"""Random service-chain workloads filled to a target fraction of capacity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..encoding import ServiceChain
from ..topology import NetworkGraph

__all__ = ["WorkloadParams", "Workload", "generate_workload"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class WorkloadParams:
    fill: float = 0.6
    chain_length: tuple[int, int] = (3, 7)
    demand: tuple[int, int] = (1, 4)
    rate: tuple[float, float] = (50.0, 200.0)

    def __post_init__(self):
        if not 0.0 < self.fill <= 1.0:
            raise ConfigError(f"fill target must lie in (0, 1], got {self.fill}")
        lo, hi = self.chain_length
        if not 1 <= lo <= hi:
            raise ConfigError(f"bad chain length range {self.chain_length}")
        lo, hi = self.demand
        if not 1 <= lo <= hi:
            raise ConfigError(f"bad demand range {self.demand}")
        lo, hi = self.rate
        if not 0.0 < lo <= hi:
            raise ConfigError(f"bad arrival rate range {self.rate}")


@dataclass(frozen=True)
class Workload:
    services: tuple[ServiceChain, ...]
    fill_fraction: float
    total_demand: int
    total_capacity: int


def generate_workload(
    g: NetworkGraph, params: WorkloadParams, rng: np.random.Generator
) -> Workload:
    cap = int(g.server_capacity.sum())
    max_cap = int(g.server_capacity.max())
    d_lo, d_hi = params.demand
    if d_lo > max_cap:
        raise ConfigError(f"smallest VNF demand {d_lo} exceeds every server capacity ({max_cap})")
    need = params.fill * cap
    services: list[ServiceChain] = []
    total = 0
    while total < need:
        n = int(rng.integers(params.chain_length[0], params.chain_length[1] + 1))
        demands = []
        for _ in range(n):
            d = int(rng.integers(d_lo, d_hi + 1))
            while d > max_cap:
                d = int(rng.integers(d_lo, d_hi + 1))
            demands.append(d)
        rate = float(rng.uniform(*params.rate))
        services.append(ServiceChain(tuple(demands), rate))
        total += sum(demands)
    return Workload(tuple(services), total / cap, total, cap)
