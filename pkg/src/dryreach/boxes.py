from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box ``[lo_d, hi_d]`` in R^n."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lo, dtype=float).reshape(-1)
        hi = np.array(self.hi, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise DimensionMismatch("lower and upper corners differ in dimension")
        if np.any(lo > hi):
            raise ValueError(f"empty box: lo {lo} exceeds hi {hi}")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def from_intervals(cls, intervals: Sequence[Sequence[float]]) -> "Box":
        arr = np.asarray(intervals, dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1])

    @classmethod
    def point(cls, x) -> "Box":
        return cls(x, x)

    @classmethod
    def hull(cls, boxes: Iterable["Box"]) -> "Box":
        boxes = list(boxes)
        if not boxes:
            raise ValueError("hull of no boxes")
        return cls(np.min([b.lo for b in boxes], axis=0), np.max([b.hi for b in boxes], axis=0))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    @property
    def widths(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def radius(self) -> float:
        """Euclidean distance from the center to any corner."""
        return float(np.linalg.norm(0.5 * self.widths))

    def intervals(self) -> list[list[float]]:
        return [[float(a), float(b)] for a, b in zip(self.lo, self.hi)]

    def contains(self, other: "Box", tol: float = 0.0) -> bool:
        return bool(np.all(self.lo - tol <= other.lo) and np.all(other.hi <= self.hi + tol))

    def contains_point(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(self.lo - tol <= x) and np.all(x <= self.hi + tol))

    def intersects(self, other: "Box") -> bool:
        return bool(np.all(self.lo <= other.hi) and np.all(other.lo <= self.hi))

    def bloat(self, r) -> "Box":
        return Box(self.lo - r, self.hi + r)

    def split(self, dim: int, parts: int) -> list["Box"]:
        edges = np.linspace(self.lo[dim], self.hi[dim], parts + 1)
        edges[-1] = self.hi[dim]
        out = []
        for a, b in zip(edges[:-1], edges[1:]):
            lo, hi = self.lo.copy(), self.hi.copy()
            lo[dim], hi[dim] = a, b
            out.append(Box(lo, hi))
        return out

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        return self.lo + rng.random((m, self.dim)) * self.widths

    def __eq__(self, other) -> bool:
        return isinstance(other, Box) and np.array_equal(self.lo, other.lo) and np.array_equal(self.hi, other.hi)

    def __hash__(self):
        return hash((self.lo.tobytes(), self.hi.tobytes()))

    def __repr__(self) -> str:
        return f"Box({self.intervals()})"
