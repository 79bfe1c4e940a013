"""Sorted disjoint unions of closed intervals, with sweep-line intersection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from psilab.numerics import compensated_sum

MERGE_TOL = 1e-12


def _as_pairs(lo, hi) -> np.ndarray:
    lo = np.asarray(lo, dtype=float).ravel()
    hi = np.asarray(hi, dtype=float).ravel()
    if lo.shape != hi.shape:
        raise ValueError("lo and hi must have equal length")
    return np.column_stack([lo, hi]) if lo.size else np.empty((0, 2))


def _normalize(pairs: np.ndarray, tol: float) -> np.ndarray:
    """Sort, drop empty or degenerate pieces and merge overlaps / gaps <= tol."""
    if pairs.size == 0:
        return np.empty((0, 2))
    pairs = pairs[pairs[:, 1] > pairs[:, 0]]
    if pairs.size == 0:
        return np.empty((0, 2))
    pairs = pairs[np.argsort(pairs[:, 0], kind="stable")]
    lo, hi = pairs[:, 0], np.maximum.accumulate(pairs[:, 1])
    # a new component starts where lo exceeds every earlier hi by more than tol
    starts = np.ones(lo.size, dtype=bool)
    starts[1:] = lo[1:] > hi[:-1] + tol
    idx = np.flatnonzero(starts)
    ends = np.append(idx[1:] - 1, lo.size - 1)
    return np.column_stack([lo[idx], hi[ends]])


@dataclass(frozen=True)
class IntervalUnion:
    """Closed, pairwise disjoint intervals [lo, hi] sorted by lo.

    Degenerate (single point) components are dropped on construction: they
    carry no measure and the sweep would otherwise report them as components.
    """

    intervals: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    def __post_init__(self):
        arr = np.asarray(self.intervals, dtype=float).reshape(-1, 2)
        arr = _normalize(arr, MERGE_TOL)
        arr.setflags(write=False)
        object.__setattr__(self, "intervals", arr)

    @classmethod
    def from_bounds(cls, lo, hi) -> "IntervalUnion":
        return cls(_as_pairs(lo, hi))

    @classmethod
    def empty(cls) -> "IntervalUnion":
        return cls(np.empty((0, 2)))

    @property
    def lo(self) -> np.ndarray:
        return self.intervals[:, 0]

    @property
    def hi(self) -> np.ndarray:
        return self.intervals[:, 1]

    @property
    def total_measure(self) -> float:
        return compensated_sum(self.hi - self.lo)

    @property
    def component_count(self) -> int:
        return int(self.intervals.shape[0])

    def __len__(self) -> int:
        return self.component_count

    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        i = np.searchsorted(self.lo, x, side="right") - 1
        ok = i >= 0
        ic = np.clip(i, 0, None)
        if self.component_count == 0:
            return np.zeros(x.shape, dtype=bool)
        return ok & (x <= self.hi[ic])

    def clip(self, a: float, b: float) -> "IntervalUnion":
        lo = np.maximum(self.lo, a)
        hi = np.minimum(self.hi, b)
        return IntervalUnion.from_bounds(lo, hi)

    def log_measure(self) -> float:
        """Sum of log(hi/lo) over components (all components must be > 0)."""
        if self.component_count == 0:
            return 0.0
        if np.any(self.lo <= 0):
            raise ValueError("log measure needs positive intervals")
        return compensated_sum(np.log(self.hi) - np.log(self.lo))

    def is_subset_of(self, other: "IntervalUnion", tol: float = MERGE_TOL) -> bool:
        if self.component_count == 0:
            return True
        if other.component_count == 0:
            return False
        j = np.searchsorted(other.lo, self.lo + tol, side="right") - 1
        if np.any(j < 0):
            return False
        return bool(np.all(self.hi <= other.hi[j] + tol))

    def to_dict(self) -> dict:
        return {
            "intervals": self.intervals.tolist(),
            "total_measure": self.total_measure,
            "component_count": self.component_count,
        }


def intersect_all(unions) -> IntervalUnion:
    """k-way intersection of interval unions by a single endpoint sweep.

    Opening events sort before closing events at equal coordinates, so closed
    intervals that touch intersect in a point (which is then dropped as
    degenerate).
    """
    unions = list(unions)
    if not unions:
        raise ValueError("need at least one interval union")
    k = len(unions)
    if k == 1:
        return unions[0]
    if any(u.component_count == 0 for u in unions):
        return IntervalUnion.empty()
    coords = np.concatenate([np.concatenate([u.lo, u.hi]) for u in unions])
    kinds = np.concatenate(
        [np.concatenate([np.ones(u.component_count, int), -np.ones(u.component_count, int)]) for u in unions]
    )
    order = np.lexsort((-kinds, coords))
    coords, kinds = coords[order], kinds[order]
    depth = np.cumsum(kinds)
    opened = np.flatnonzero(depth == k)
    # each union is disjoint, so depth k is left exactly at the next event
    lo = coords[opened]
    hi = coords[opened + 1]
    return IntervalUnion.from_bounds(lo, hi)
