"""Experiment configuration: TOML with [topology], [model], [workload], [optimizer], [output]."""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from ..encoding import REPRESENTATIONS
from ..moea import ALGORITHMS
from ..objectives import ModelParams
from ..selection import STRATEGIES
from ..topology import NetworkGraph, build_topology
from .workload import ConfigError, WorkloadParams

__all__ = ["TopologySpec", "ExperimentConfig", "load_config", "ConfigError"]

_FAMILY_KEYS = {
    "fat_tree": {"k"},
    "leaf_spine": {"leaves", "spines", "servers_per_leaf"},
    "dcell": {"n", "level"},
}


@dataclass(frozen=True)
class TopologySpec:
    family: str
    params: tuple[tuple[str, int], ...]
    server_capacity: int = 16

    @classmethod
    def make(cls, family: str, server_capacity: int = 16, **params) -> TopologySpec:
        if family not in _FAMILY_KEYS:
            raise ConfigError(f"unknown topology family {family!r}")
        bad = set(params) - _FAMILY_KEYS[family]
        if bad:
            raise ConfigError(f"unknown {family} parameters: {sorted(bad)}")
        return cls(family, tuple(sorted((k, int(v)) for k, v in params.items())), int(server_capacity))

    def build(self) -> NetworkGraph:
        return build_topology(self.family, server_capacity=self.server_capacity, **dict(self.params))

    @property
    def label(self) -> str:
        body = "-".join(f"{k}{v}" for k, v in self.params)
        return f"{self.family}-{body}" if body else self.family


@dataclass(frozen=True)
class ExperimentConfig:
    topologies: tuple[TopologySpec, ...]
    model: ModelParams = ModelParams()
    workload: WorkloadParams = WorkloadParams()
    workload_seed: int = 0
    algorithms: tuple[str, ...] = ("nsga2",)
    representations: tuple[str, ...] = ("fls",)
    strategy: str = "spanning"
    service_order: str = "ascending"
    population: int = 100
    budget: int = 2000
    crossover_rate: float = 0.9
    mutation_rate: float | None = None
    seeds: tuple[int, ...] = (0,)
    threads: int = 1
    out_dir: str = "results"
    run_id: str | None = None
    memory_budget: int = 4 * 1024**3
    bench_solutions: int = 1000
    bench_strategies: tuple[str, ...] = ("simple", "cached", "spanning")
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.topologies:
            raise ConfigError("no topology configured")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {a!r}; expected one of {list(ALGORITHMS)}")
        for r in self.representations:
            if r not in REPRESENTATIONS:
                raise ConfigError(f"unknown representation {r!r}; expected one of {sorted(REPRESENTATIONS)}")
        for s in (self.strategy, *self.bench_strategies):
            if s not in STRATEGIES:
                raise ConfigError(f"unknown strategy {s!r}; expected one of {sorted(STRATEGIES)}")
        if not self.seeds:
            raise ConfigError("seed list must not be empty")
        if self.budget < self.population:
            raise ConfigError("budget must be at least the population size")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    def override(self, **kw) -> ExperimentConfig:
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self

    def snapshot(self) -> dict:
        """Fully resolved configuration as plain JSON data."""
        d = asdict(self)
        d.pop("extra")
        d["topologies"] = [
            {"family": t.family, "server_capacity": t.server_capacity, **dict(t.params)}
            for t in self.topologies
        ]
        return d

    def digest(self) -> str:
        d = self.snapshot()
        for k in ("threads", "out_dir", "run_id"):
            d.pop(k)
        return hashlib.sha1(json.dumps(d, sort_keys=True).encode()).hexdigest()[:10]


def _topologies(sec: dict) -> tuple[TopologySpec, ...]:
    cap = int(sec.get("server_capacity", 16))
    out = []
    for inst in sec.get("instance", []):
        inst = dict(inst)
        fam = inst.pop("family")
        c = int(inst.pop("server_capacity", cap))
        out.append(TopologySpec.make(fam, c, **inst))
    if "family" in sec:
        fam = sec["family"]
        params = dict(sec.get(fam, {}))
        for k in _FAMILY_KEYS.get(fam, ()):
            if k in sec:
                params[k] = sec[k]
        out.insert(0, TopologySpec.make(fam, cap, **params))
    return tuple(out)


def _pair(v, name):
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return tuple(v)
    raise ConfigError(f"{name} must be a two-element [lo, hi] list")


def from_dict(d: dict) -> ExperimentConfig:
    known = {"topology", "model", "workload", "optimizer", "output"}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    topo = _topologies(d.get("topology", {}))
    try:
        model = ModelParams(**d.get("model", {}))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"[model]: {e}") from None
    w = dict(d.get("workload", {}))
    wseed = int(w.pop("seed", 0))
    for key in ("chain_length", "demand", "rate"):
        if key in w:
            w[key] = _pair(w[key], f"workload.{key}")
    try:
        workload = WorkloadParams(**w)
    except TypeError as e:
        raise ConfigError(f"[workload]: {e}") from None
    o = dict(d.get("optimizer", {}))
    seeds = o.pop("seeds", None)
    base = int(o.pop("seed", 0))
    if seeds is None:
        seeds = (base,)
    elif isinstance(seeds, int):
        seeds = tuple(range(base, base + seeds))
    else:
        seeds = tuple(int(s) for s in seeds)
    out = dict(d.get("output", {}))
    kw = dict(
        topologies=topo,
        model=model,
        workload=workload,
        workload_seed=wseed,
        seeds=seeds,
    )
    for key in ("algorithms", "representations", "bench_strategies"):
        src = out if key == "bench_strategies" else o
        if key in src:
            kw[key] = tuple(src.pop(key))
    for key in ("strategy", "service_order", "population", "budget", "crossover_rate",
                "mutation_rate", "threads"):
        if key in o:
            kw[key] = o.pop(key)
    if o:
        raise ConfigError(f"unknown [optimizer] keys: {sorted(o)}")
    if "dir" in out:
        kw["out_dir"] = str(out.pop("dir"))
    if "run_id" in out:
        kw["run_id"] = str(out.pop("run_id"))
    if "memory_budget_mb" in out:
        kw["memory_budget"] = int(out.pop("memory_budget_mb")) * 1024**2
    if "bench_solutions" in out:
        kw["bench_solutions"] = int(out.pop("bench_solutions"))
    if out:
        raise ConfigError(f"unknown [output] keys: {sorted(out)}")
    return ExperimentConfig(**kw)


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = tomllib.loads(p.read_text())
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{p}: {e}") from None
    return from_dict(data)
