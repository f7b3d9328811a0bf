"""NSGA-II, IBEA and MOEA/D over a generic problem bundle.

A problem bundle supplies ``init(rng)``, ``crossover(a, b, rng)``,
``mutate(g, rng, rate)``, ``evaluate(g)`` (returning something with
``feasible`` and ``objectives``) and ``default_mutation_rate``. All objectives
are minimised. Infeasible individuals carry no objective values; every
feasible individual dominates them and they are mutually non-dominated.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .metrics import estimate_bounds, hypervolume, normalize

__all__ = [
    "Individual",
    "RunConfig",
    "RunResult",
    "Archive",
    "dominates",
    "non_dominated_sort",
    "crowding_distance",
    "ibea_fitness",
    "ibea_select",
    "simplex_lattice",
    "lattice_size",
    "tchebycheff",
    "moead_step",
    "run",
    "ALGORITHMS",
]

ALGORITHMS = ("nsga2", "ibea", "moead")


@dataclass(eq=False)
class Individual:
    genotype: object
    objectives: tuple[float, ...] | None = None
    solution: object = field(default=None, repr=False)
    rank: int = 0
    crowding: float = 0.0
    fitness: float = 0.0
    subproblem: int = -1

    @property
    def feasible(self) -> bool:
        return self.objectives is not None


@dataclass(frozen=True)
class RunConfig:
    algorithm: str = "nsga2"
    population: int = 100
    budget: int = 10_000
    crossover_rate: float = 0.9
    mutation_rate: float | None = None
    seed: int = 0
    kappa: float = 0.05
    neighbours: int = 20
    threads: int = 1

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.population < 2:
            raise ValueError("population must be at least 2")
        if self.budget < self.population:
            raise ValueError("budget must be at least the population size")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError("crossover rate must lie in [0, 1]")
        if self.mutation_rate is not None and not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation rate must lie in [0, 1]")


def dominates(a, b) -> bool:
    """Pareto dominance with the infeasible rule; ``None`` marks infeasible."""
    if a is None:
        return False
    if b is None:
        return True
    le = all(x <= y for x, y in zip(a, b))
    return le and any(x < y for x, y in zip(a, b))


def non_dominated_sort(objs) -> np.ndarray:
    """Front index per point (0 = non-dominated); ``None`` entries go last."""
    n = len(objs)
    ranks = np.zeros(n, dtype=np.int64)
    feas = [i for i in range(n) if objs[i] is not None]
    if feas:
        f = np.asarray([objs[i] for i in feas], dtype=float)
        le = np.all(f[:, None, :] <= f[None, :, :], axis=2)
        lt = np.any(f[:, None, :] < f[None, :, :], axis=2)
        dom = le & lt  # dom[i, j]: i dominates j
        count = dom.sum(axis=0)
        r = np.full(len(feas), -1, dtype=np.int64)
        front = np.nonzero(count == 0)[0]
        k = 0
        while len(front):
            r[front] = k
            count = count - dom[front].sum(axis=0)
            count[r >= 0] = -1
            front = np.nonzero(count == 0)[0]
            k += 1
        ranks[feas] = r
        worst = k
    else:
        worst = 0
    for i in range(n):
        if objs[i] is None:
            ranks[i] = worst
    return ranks


def crowding_distance(front) -> np.ndarray:
    f = np.asarray(front, dtype=float)
    n = len(f)
    d = np.zeros(n)
    if n == 0:
        return d
    if n <= 2:
        d[:] = math.inf
        return d
    for m in range(f.shape[1]):
        order = np.argsort(f[:, m], kind="stable")
        lo, hi = f[order[0], m], f[order[-1], m]
        d[order[0]] = d[order[-1]] = math.inf
        if hi == lo:
            continue
        gaps = (f[order[2:], m] - f[order[:-2], m]) / (hi - lo)
        d[order[1:-1]] += gaps
    return d


def _eps_matrix(f: np.ndarray) -> np.ndarray:
    """``I[i, j]``: smallest shift making point i weakly dominate point j."""
    return np.max(f[:, None, :] - f[None, :, :], axis=2)


def _ibea_norm(f: np.ndarray) -> np.ndarray:
    lo, hi = f.min(axis=0), f.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return (f - lo) / span


def ibea_fitness(objs, kappa: float = 0.05, scale: float | None = None):
    """Additive-epsilon IBEA fitness; returns ``(fitness, I, c)``.

    ``F(x) = sum_{y != x} -exp(-I(y, x) / (c * kappa))`` on objectives
    normalised to the population's range, with ``c = max |I|``.
    """
    f = _ibea_norm(np.asarray(objs, dtype=float))
    ind = _eps_matrix(f)
    c = scale if scale is not None else float(np.max(np.abs(ind))) if len(f) > 1 else 1.0
    if c == 0.0:
        c = 1.0
    contrib = -np.exp(-ind / (c * kappa))
    np.fill_diagonal(contrib, 0.0)
    return contrib.sum(axis=0), ind, c


def ibea_select(objs, n_keep: int, kappa: float = 0.05) -> list[int]:
    """Indices kept by IBEA environmental selection.

    Infeasible entries (``None``) are discarded first, highest index first;
    then the worst-fitness feasible point is removed repeatedly, updating the
    survivors' fitness. Ties remove the highest index.
    """
    alive = list(range(len(objs)))
    bad = [i for i in alive if objs[i] is None]
    while len(alive) > n_keep and bad:
        alive.remove(bad.pop())
    feas = [i for i in alive if objs[i] is not None]
    if len(alive) <= n_keep or not feas:
        return alive[:n_keep] if len(alive) > n_keep else alive
    fit, ind, c = ibea_fitness([objs[i] for i in feas], kappa)
    keep = np.ones(len(feas), dtype=bool)
    while keep.sum() + (len(alive) - len(feas)) > n_keep:
        cand = np.nonzero(keep)[0]
        w = cand[fit[cand] == fit[cand].min()][-1]
        keep[w] = False
        fit += np.exp(-ind[w] / (c * kappa))
    kept = {feas[i] for i in np.nonzero(keep)[0]}
    return [i for i in alive if objs[i] is None or i in kept]


def lattice_size(h: int, m: int = 3) -> int:
    return math.comb(h + m - 1, m - 1)


def simplex_lattice(pop: int, m: int = 3) -> np.ndarray:
    """Largest uniform lattice ``{k/H}`` with at most ``pop`` weight vectors."""
    h = 1
    while lattice_size(h + 1, m) <= pop:
        h += 1
    pts = []
    for cuts in combinations(range(h + m - 1), m - 1):
        parts, prev = [], -1
        for c in cuts:
            parts.append(c - prev - 1)
            prev = c
        parts.append(h + m - 2 - prev)
        pts.append(parts)
    return np.asarray(sorted(pts, reverse=True), dtype=float) / h


def tchebycheff(f, weight, ideal, scale=None) -> float:
    if f is None:
        return math.inf
    f = np.asarray(f, dtype=float)
    s = np.ones_like(f) if scale is None else np.asarray(scale, dtype=float)
    return float(np.max(np.asarray(weight) * np.abs(f - np.asarray(ideal)) / s))


def moead_step(pop: list, weights, neighbourhood, child: Individual, ideal, scale, sub: int):
    """Offer ``child`` to the neighbourhood of subproblem ``sub``; returns replacements."""
    replaced = 0
    for j in neighbourhood[sub]:
        new = tchebycheff(child.objectives, weights[j], ideal, scale)
        old = tchebycheff(pop[j].objectives, weights[j], ideal, scale)
        if new < old or (math.isinf(old) and child.feasible):
            child_j = Individual(child.genotype, child.objectives, child.solution, subproblem=j)
            pop[j] = child_j
            replaced += 1
    return replaced


class Archive:
    """Non-dominated set of every feasible evaluation; exact duplicates skipped."""

    def __init__(self):
        self.members: list[Individual] = []

    def offer(self, ind: Individual) -> bool:
        if not ind.feasible:
            return False
        f = ind.objectives
        for m in self.members:
            if m.objectives == f or dominates(m.objectives, f):
                return False
        self.members = [m for m in self.members if not dominates(f, m.objectives)]
        self.members.append(ind)
        return True

    def objectives(self) -> np.ndarray:
        return np.asarray([m.objectives for m in self.members], dtype=float).reshape(-1, 3)

    def __len__(self) -> int:
        return len(self.members)


@dataclass(eq=False)
class RunResult:
    config: RunConfig
    population: list[Individual]
    archive: Archive
    log: list[dict]
    evaluations: int
    timings: dict
    infeasible_evaluations: int

    @property
    def no_feasible(self) -> bool:
        return len(self.archive) == 0


class _Runner:
    def __init__(self, problem, cfg: RunConfig):
        self.problem = problem
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.rate = cfg.mutation_rate if cfg.mutation_rate is not None else problem.default_mutation_rate
        self.archive = Archive()
        self.evals = 0
        self.infeasible = 0
        self.log: list[dict] = []
        self.t = {"variation": 0.0, "evaluation": 0.0, "selection": 0.0}
        self.start = time.perf_counter()
        self.bounds = None
        self.pool = ThreadPoolExecutor(cfg.threads) if cfg.threads > 1 else None

    def evaluate(self, genotypes) -> list[Individual]:
        t0 = time.perf_counter()
        if self.pool is not None:
            sols = list(self.pool.map(self.problem.evaluate, genotypes))
        else:
            sols = [self.problem.evaluate(g) for g in genotypes]
        out = []
        for g, s in zip(genotypes, sols):
            obj = tuple(float(x) for x in s.objectives.as_tuple()) if s.feasible else None
            ind = Individual(g, obj, s)
            self.evals += 1
            if obj is None:
                self.infeasible += 1
            self.archive.offer(ind)
            out.append(ind)
        self.t["evaluation"] += time.perf_counter() - t0
        return out

    @property
    def left(self) -> int:
        return self.cfg.budget - self.evals

    def record(self, gen: int):
        if self.bounds is None:
            feas = [i.objectives for i in self.archive.members]
            if feas:
                self.bounds = estimate_bounds(feas)
        hv = 0.0
        if self.bounds is not None and len(self.archive):
            hv = hypervolume(np.clip(normalize(self.archive.objectives(), self.bounds), 0, 1))
        self.log.append(
            {
                "generation": gen,
                "evaluations": self.evals,
                "archive_size": len(self.archive),
                "hypervolume": hv,
                "elapsed_ms": (time.perf_counter() - self.start) * 1000.0,
            }
        )

    def vary(self, parents: list[tuple[object, object]], n: int) -> list:
        t0 = time.perf_counter()
        kids = []
        for a, b in parents:
            if self.rng.random() < self.cfg.crossover_rate:
                c1, c2 = self.problem.crossover(a, b, self.rng)
            else:
                c1, c2 = a, b
            kids.append(self.problem.mutate(c1, self.rng, self.rate))
            if len(kids) < n:
                kids.append(self.problem.mutate(c2, self.rng, self.rate))
            if len(kids) >= n:
                break
        self.t["variation"] += time.perf_counter() - t0
        return kids[:n]

    def tournament(self, better) -> int:
        i, j = (int(x) for x in self.rng.integers(0, self.n_pop, 2))
        if better(j, i) and not better(i, j):
            return j
        if better(i, j) and not better(j, i):
            return i
        return min(i, j)

    def finish(self, pop) -> RunResult:
        if self.pool is not None:
            self.pool.shutdown()
        self.t["total"] = time.perf_counter() - self.start
        return RunResult(self.cfg, pop, self.archive, self.log, self.evals, self.t, self.infeasible)


def _nsga2_select(pop: list[Individual], n: int) -> list[Individual]:
    objs = [p.objectives for p in pop]
    ranks = non_dominated_sort(objs)
    out: list[Individual] = []
    for r in range(int(ranks.max()) + 1 if len(pop) else 0):
        idx = [i for i in range(len(pop)) if ranks[i] == r]
        members = [pop[i] for i in idx]
        feas = [m for m in members if m.feasible]
        cd = np.zeros(len(members))
        if feas:
            cdf = crowding_distance([m.objectives for m in feas])
            k = 0
            for t, m in enumerate(members):
                if m.feasible:
                    cd[t] = cdf[k]
                    k += 1
        for t, m in enumerate(members):
            m.rank = r
            m.crowding = float(cd[t])
        if len(out) + len(members) <= n:
            out.extend(members)
        else:
            order = sorted(range(len(members)), key=lambda t: (-cd[t], t))
            out.extend(members[t] for t in order[: n - len(out)])
        if len(out) >= n:
            break
    return out


def _run_nsga2(r: _Runner) -> list[Individual]:
    n = r.cfg.population
    r.n_pop = n
    pop = r.evaluate([r.problem.init(r.rng) for _ in range(n)])
    pop = _nsga2_select(pop, n)
    gen = 0
    r.record(gen)

    def better(i, j):
        a, b = pop[i], pop[j]
        return (a.rank, -a.crowding) < (b.rank, -b.crowding)

    while r.left > 0:
        gen += 1
        m = min(n, r.left)
        parents = [
            (pop[r.tournament(better)].genotype, pop[r.tournament(better)].genotype)
            for _ in range((m + 1) // 2)
        ]
        kids = r.evaluate(r.vary(parents, m))
        t0 = time.perf_counter()
        pop = _nsga2_select(pop + kids, n)
        r.t["selection"] += time.perf_counter() - t0
        r.record(gen)
    return pop


def _ibea_assign(pop: list[Individual], kappa: float):
    feas = [p for p in pop if p.feasible]
    if feas:
        fit, _, _ = ibea_fitness([p.objectives for p in feas], kappa)
        for p, v in zip(feas, fit):
            p.fitness = float(v)
    for p in pop:
        if not p.feasible:
            p.fitness = -math.inf


def _run_ibea(r: _Runner) -> list[Individual]:
    n, kappa = r.cfg.population, r.cfg.kappa
    r.n_pop = n
    pop = r.evaluate([r.problem.init(r.rng) for _ in range(n)])
    _ibea_assign(pop, kappa)
    gen = 0
    r.record(gen)

    def better(i, j):
        return pop[i].fitness > pop[j].fitness

    while r.left > 0:
        gen += 1
        m = min(n, r.left)
        parents = [
            (pop[r.tournament(better)].genotype, pop[r.tournament(better)].genotype)
            for _ in range((m + 1) // 2)
        ]
        kids = r.evaluate(r.vary(parents, m))
        t0 = time.perf_counter()
        merged = pop + kids
        keep = ibea_select([p.objectives for p in merged], n, kappa)
        pop = [merged[i] for i in keep]
        _ibea_assign(pop, kappa)
        r.t["selection"] += time.perf_counter() - t0
        r.record(gen)
    return pop


def _neighbourhoods(weights: np.ndarray, t: int) -> list[np.ndarray]:
    d = np.linalg.norm(weights[:, None, :] - weights[None, :, :], axis=2)
    t = min(t, len(weights))
    return [np.lexsort((np.arange(len(weights)), d[i]))[:t] for i in range(len(weights))]


def _run_moead(r: _Runner) -> list[Individual]:
    weights = simplex_lattice(r.cfg.population)
    n = len(weights)
    r.n_pop = n
    nbr = _neighbourhoods(weights, r.cfg.neighbours)
    pop = r.evaluate([r.problem.init(r.rng) for _ in range(n)])
    for i, p in enumerate(pop):
        p.subproblem = i
    ideal = np.full(3, math.inf)

    def refresh_ideal(inds):
        nonlocal ideal
        for p in inds:
            if p.feasible:
                ideal = np.minimum(ideal, p.objectives)

    def scale():
        feas = [p.objectives for p in pop if p.feasible]
        if not feas:
            return np.ones(3)
        s = np.max(np.asarray(feas), axis=0) - ideal
        return np.where(s > 0, s, 1.0)

    refresh_ideal(pop)
    gen = 0
    r.record(gen)
    while r.left > 0:
        gen += 1
        m = min(n, r.left)
        subs = list(range(m))
        parents = []
        for i in subs:
            a, b = r.rng.choice(nbr[i], 2, replace=False)
            parents.append((pop[int(a)].genotype, pop[int(b)].genotype))
        t0 = time.perf_counter()
        kids = []
        for a, b in parents:
            if r.rng.random() < r.cfg.crossover_rate:
                c, _ = r.problem.crossover(a, b, r.rng)
            else:
                c = a
            kids.append(r.problem.mutate(c, r.rng, r.rate))
        r.t["variation"] += time.perf_counter() - t0
        kids = r.evaluate(kids)
        t0 = time.perf_counter()
        refresh_ideal(kids)
        for i, child in zip(subs, kids):
            moead_step(pop, weights, nbr, child, ideal, scale(), i)
        r.t["selection"] += time.perf_counter() - t0
        r.record(gen)
    return pop


def run(problem, cfg: RunConfig) -> RunResult:
    """Optimise for exactly ``cfg.budget`` evaluations."""
    r = _Runner(problem, cfg)
    pop = {"nsga2": _run_nsga2, "ibea": _run_ibea, "moead": _run_moead}[cfg.algorithm](r)
    return r.finish(pop)
