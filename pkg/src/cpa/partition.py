"""Partitions of a box-shaped state domain into hypercube cells.

Every cell is half-open ``[lo, hi)`` in each dimension except the topmost
cell per dimension, which is closed so that the cells cover the whole
domain.  Cell indices are linearized row-major (last dimension fastest).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "Box",
    "RectilinearPartition",
    "UniformPartition",
    "clamp_points",
]


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by per-dimension lower/upper bounds (model units)."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise ValueError("lower and upper must have the same dimension")
        for d, (lo, hi) in enumerate(zip(self.lower, self.upper)):
            if not lo < hi:
                raise ValueError(f"dimension {d}: lower bound {lo} must be < upper bound {hi}")

    @property
    def ndim(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(np.asarray(self.upper) - np.asarray(self.lower)))

    @property
    def midpoint(self) -> np.ndarray:
        return (np.asarray(self.lower) + np.asarray(self.upper)) / 2.0

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(p >= self.lower) and np.all(p <= self.upper))


def clamp_points(points: np.ndarray, box: Box) -> tuple[np.ndarray, int]:
    """Clamp points componentwise into the box.

    Returns the clamped array and the number of rows that changed.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    clamped = np.clip(pts, box.lower, box.upper)
    n_clamped = int(np.any(clamped != pts, axis=1).sum())
    return clamped, n_clamped


class RectilinearPartition:
    """Partition with arbitrary sorted breakpoints per dimension.

    The theory behind the automaton engine is developed for uniform
    partitions; this variant exists because non-uniform intervals are
    occasionally needed to reproduce locality counterexamples, and the
    engine itself only relies on encode/cell_bounds/sample_cell.
    """

    def __init__(self, breaks):
        self._breaks = tuple(np.asarray(b, dtype=float) for b in breaks)
        for d, b in enumerate(self._breaks):
            if b.ndim != 1 or len(b) < 2:
                raise ValueError(f"dimension {d}: need at least two breakpoints")
            if not np.all(np.diff(b) > 0):
                raise ValueError(f"dimension {d}: breakpoints must be strictly increasing")
        self.cells_per_dim = tuple(len(b) - 1 for b in self._breaks)
        self.box = Box(
            lower=tuple(float(b[0]) for b in self._breaks),
            upper=tuple(float(b[-1]) for b in self._breaks),
        )

    @property
    def ndim(self) -> int:
        return len(self._breaks)

    @property
    def size(self) -> int:
        """Number of cells |E|."""
        return int(np.prod(self.cells_per_dim))

    def breaks(self, dim: int) -> np.ndarray:
        return self._breaks[dim]

    # -- symbol indexing -------------------------------------------------

    def multi_index(self, symbol: int) -> tuple[int, ...]:
        if not 0 <= symbol < self.size:
            raise ValueError(f"symbol {symbol} outside range(0, {self.size})")
        return tuple(int(i) for i in np.unravel_index(symbol, self.cells_per_dim))

    def flat_index(self, multi) -> int:
        return int(np.ravel_multi_index(tuple(int(i) for i in multi), self.cells_per_dim))

    # -- coding map ------------------------------------------------------

    def encode_many(self, points: np.ndarray) -> np.ndarray:
        """Vectorized coding map for an (M, n) array of in-domain points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.ndim:
            raise DomainError(f"points have dimension {pts.shape[1]}, expected {self.ndim}")
        idx = np.empty((self.ndim, pts.shape[0]), dtype=np.int64)
        for d in range(self.ndim):
            b = self._breaks[d]
            x = pts[:, d]
            bad_low = x < b[0]
            bad_high = x > b[-1]
            if bad_low.any() or bad_high.any():
                where = int(np.argmax(bad_low | bad_high))
                raise DomainError(
                    f"coordinate {pts[where, d]!r} of point {where} outside "
                    f"[{b[0]}, {b[-1]}] in dimension {d}",
                    dim=d,
                    value=float(pts[where, d]),
                )
            k = np.searchsorted(b, x, side="right") - 1
            np.clip(k, 0, len(b) - 2, out=k)  # top cell is closed
            idx[d] = k
        return np.ravel_multi_index(tuple(idx), self.cells_per_dim)

    def encode(self, point) -> int:
        return int(self.encode_many(np.asarray(point, dtype=float)[None, :])[0])

    def cell_bounds(self, symbol: int) -> Box:
        multi = self.multi_index(symbol)
        lower = tuple(float(self._breaks[d][i]) for d, i in enumerate(multi))
        upper = tuple(float(self._breaks[d][i + 1]) for d, i in enumerate(multi))
        return Box(lower, upper)

    def cell_volume(self, symbol: int) -> float:
        return self.cell_bounds(symbol).volume

    def sample_cell(self, symbol: int, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draw ``count`` i.i.d. uniform points from the cell, shape (count, n)."""
        if count < 1:
            raise ValueError("count must be >= 1")
        cell = self.cell_bounds(symbol)
        u = rng.random((count, self.ndim))
        lo = np.asarray(cell.lower)
        hi = np.asarray(cell.upper)
        return lo + u * (hi - lo)

    # -- serialization helpers -------------------------------------------

    def spec_dict(self) -> dict:
        return {
            "kind": "rectilinear",
            "breaks": [[float(x) for x in b] for b in self._breaks],
        }

    def __eq__(self, other) -> bool:
        if not isinstance(other, RectilinearPartition):
            return NotImplemented
        return len(self._breaks) == len(other._breaks) and all(
            np.array_equal(a, b) for a, b in zip(self._breaks, other._breaks)
        )

    def __repr__(self) -> str:
        return f"{type(self).__name__}(cells_per_dim={self.cells_per_dim})"


class UniformPartition(RectilinearPartition):
    """Uniform decomposition of a box into equal cells per dimension."""

    def __init__(self, domain: Box, cells_per_dim):
        cells = tuple(int(c) for c in cells_per_dim)
        if len(cells) != domain.ndim:
            raise ValueError("cells_per_dim must match the domain dimension")
        if any(c < 1 for c in cells):
            raise ValueError("every dimension needs at least one cell")
        breaks = []
        for d, c in enumerate(cells):
            lo, hi = domain.lower[d], domain.upper[d]
            # k/c is exact at the endpoints so the cells cover the domain.
            b = lo + (hi - lo) * (np.arange(c + 1) / c)
            b[0], b[-1] = lo, hi
            breaks.append(b)
        super().__init__(breaks)
        self.domain = domain

    def spec_dict(self) -> dict:
        return {
            "kind": "uniform",
            "lower": [float(x) for x in self.domain.lower],
            "upper": [float(x) for x in self.domain.upper],
            "cells_per_dim": list(self.cells_per_dim),
        }


def partition_from_spec(spec: dict) -> RectilinearPartition:
    """Rebuild a partition from its ``spec_dict`` representation."""
    kind = spec.get("kind")
    if kind == "uniform":
        box = Box(tuple(spec["lower"]), tuple(spec["upper"]))
        return UniformPartition(box, spec["cells_per_dim"])
    if kind == "rectilinear":
        return RectilinearPartition(spec["breaks"])
    raise ValueError(f"unknown partition kind {kind!r}")
