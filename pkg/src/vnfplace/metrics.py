"""Front normalisation, exact 3-D hypervolume and rank-sum testing."""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np
from scipy.stats import mannwhitneyu

__all__ = [
    "Bounds",
    "estimate_bounds",
    "normalize",
    "hypervolume",
    "rank_sum_test",
]


@dataclass(frozen=True)
class Bounds:
    utopian: tuple[float, ...]
    nadir: tuple[float, ...]

    def to_json(self) -> dict:
        return {"utopian": list(self.utopian), "nadir": list(self.nadir)}

    @classmethod
    def from_json(cls, d) -> Bounds:
        return cls(tuple(map(float, d["utopian"])), tuple(map(float, d["nadir"])))


def estimate_bounds(*fronts) -> Bounds:
    """Componentwise best and worst over every point of every front."""
    pts = [np.asarray(f, dtype=float).reshape(-1, np.shape(f)[-1]) for f in fronts if len(f)]
    if not pts:
        raise ValueError("cannot estimate bounds from no points")
    allp = np.vstack(pts)
    return Bounds(tuple(allp.min(axis=0).tolist()), tuple(allp.max(axis=0).tolist()))


def normalize(front, bounds: Bounds) -> np.ndarray:
    f = np.asarray(front, dtype=float)
    lo = np.asarray(bounds.utopian)
    span = np.asarray(bounds.nadir) - lo
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (f - lo) / safe, 0.0)


def _area_2d_insert(stair_x, stair_y, x, y):
    """Insert (x, y) into a 2-D staircase (x asc, y desc); return added area.

    The staircase holds mutually non-dominated points, reference (1, 1).
    """
    i = bisect.bisect_left(stair_x, x)
    # dominated by the left neighbour (or an equal-x point with y no worse)
    if i > 0 and stair_y[i - 1] <= y:
        return 0.0
    if i < len(stair_x) and stair_x[i] == x and stair_y[i] <= y:
        return 0.0
    added = 0.0
    top = stair_y[i - 1] if i > 0 else 1.0
    j = i
    while j < len(stair_x) and stair_y[j] >= y:
        nxt = stair_x[j + 1] if j + 1 < len(stair_x) else 1.0
        added += (nxt - stair_x[j]) * (stair_y[j] - y)
        j += 1
    first_right = stair_x[i] if i < len(stair_x) else 1.0
    # strip between x and the first old point to its right, height top - y
    added += (first_right - x) * (top - y)
    del stair_x[i:j]
    del stair_y[i:j]
    stair_x.insert(i, x)
    stair_y.insert(i, y)
    return added


def hypervolume(front, reference=(1.0, 1.0, 1.0)) -> float:
    """Exact volume dominated by ``front`` (minimisation) inside the reference box.

    Points are clipped to ``[0, reference]``. A sweep over the third objective
    maintains the 2-D dominated area of the points seen so far.
    """
    f = np.asarray(front, dtype=float)
    if f.size == 0:
        return 0.0
    ref = np.asarray(reference, dtype=float)
    f = np.clip(f.reshape(-1, 3), 0.0, ref) / np.where(ref > 0, ref, 1.0)
    f = f[np.all(f < 1.0, axis=1)]
    if len(f) == 0:
        return 0.0
    order = np.lexsort((f[:, 1], f[:, 0], f[:, 2]))
    f = f[order]
    sx: list[float] = []
    sy: list[float] = []
    area = 0.0
    vol = 0.0
    z_lo = 0.0
    for x, y, z in f.tolist():
        gain = _area_2d_insert(sx, sy, x, y)
        # a slab closes only where the area grows, so dominated points change nothing bit-for-bit
        if gain > 0.0:
            vol += area * (z - z_lo)
            area += gain
            z_lo = z
    vol += area * (1.0 - z_lo)
    return float(vol * np.prod(np.where(ref > 0, ref, 1.0)))


def rank_sum_test(a, b) -> float:
    """Two-sided Wilcoxon rank-sum p-value, normal approximation with tie correction.

    No continuity correction is applied.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("rank-sum test needs two non-empty samples")
    both = np.concatenate([a, b])
    if np.all(both == both[0]):
        return 1.0
    res = mannwhitneyu(a, b, alternative="two-sided", method="asymptotic", use_continuity=False)
    return float(min(1.0, res.pvalue))
