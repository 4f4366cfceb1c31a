"""Per-variable bound boxes used by propagation and the search tree."""

from __future__ import annotations

import math

import numpy as np

from .intervals import INF, Interval

# bounds are never propagated beyond this magnitude
BOUND_CEILING = 1e20


class Box:
    """Dense lower/upper bound arrays indexed by variable id."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: np.ndarray, hi: np.ndarray) -> None:
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)

    @classmethod
    def full(cls, n: int) -> "Box":
        return cls(np.full(n, -INF), np.full(n, INF))

    def __len__(self) -> int:
        return len(self.lo)

    def __getitem__(self, j: int) -> Interval:
        return Interval(self.lo[j], self.hi[j])

    def set(self, j: int, ivl: Interval) -> None:
        self.lo[j] = ivl.lo
        self.hi[j] = ivl.hi

    def copy(self) -> "Box":
        return Box(self.lo.copy(), self.hi.copy())

    def is_empty(self) -> bool:
        return bool(np.any(self.lo > self.hi))

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.minimum(np.maximum(x, self.lo), self.hi)

    def mid(self, j: int) -> float:
        return self[j].mid()


def round_integer(ivl: Interval, eps: float = 1e-9) -> Interval:
    """Round an integer variable's interval inward (with a small tolerance)."""
    if ivl.empty:
        return ivl
    lo = ivl.lo if ivl.lo == -INF else math.ceil(ivl.lo - eps)
    hi = ivl.hi if ivl.hi == INF else math.floor(ivl.hi + eps)
    return Interval(lo, hi)


def apply_ceiling(ivl: Interval) -> Interval:
    """Derived bounds beyond the +-1e20 ceiling are treated as infinite."""
    if ivl.empty:
        return ivl
    lo = ivl.lo if ivl.lo >= -BOUND_CEILING else -INF
    hi = ivl.hi if ivl.hi <= BOUND_CEILING else INF
    return Interval(lo, hi)
