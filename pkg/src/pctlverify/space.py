"""State spaces and measurable sets represented as cell masks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class SpaceMismatch(ValueError):
    """Raised when two objects live on different state spaces."""


@dataclass(frozen=True)
class StateSpace:
    """Either a finite index set or a uniform grid over a 1D/2D box.

    Grid cells are indexed in C order over the axes, so in 2D the cell
    ``(i, j)`` has flat index ``i * resolution[1] + j``.
    """

    kind: str
    count: int = 0
    bounds: tuple[tuple[float, float], ...] = ()
    resolution: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind == "finite":
            if self.count < 1:
                raise ValueError("finite space needs at least one state")
        elif self.kind == "grid":
            if len(self.bounds) not in (1, 2) or len(self.bounds) != len(self.resolution):
                raise ValueError("grid must be 1D or 2D with one resolution per axis")
            for lo, hi in self.bounds:
                if not lo < hi:
                    raise ValueError(f"degenerate axis bounds ({lo}, {hi})")
            for r in self.resolution:
                if r < 1:
                    raise ValueError("grid resolution must be >= 1 per axis")
        else:
            raise ValueError(f"unknown space kind {self.kind!r}")

    @classmethod
    def finite(cls, count: int) -> StateSpace:
        return cls("finite", count=int(count))

    @classmethod
    def grid(cls, bounds: Sequence[Sequence[float]], resolution: Sequence[int]) -> StateSpace:
        b = tuple((float(lo), float(hi)) for lo, hi in bounds)
        return cls("grid", bounds=b, resolution=tuple(int(r) for r in resolution))

    @property
    def is_grid(self) -> bool:
        return self.kind == "grid"

    @property
    def dim(self) -> int:
        return len(self.bounds) if self.is_grid else 0

    @property
    def size(self) -> int:
        if self.is_grid:
            return int(np.prod(self.resolution))
        return self.count

    @property
    def widths(self) -> np.ndarray:
        return np.array([(hi - lo) / r for (lo, hi), r in zip(self.bounds, self.resolution)])

    @property
    def cell_diameter(self) -> float:
        return float(np.linalg.norm(self.widths))

    def edges(self, axis: int) -> np.ndarray:
        lo, hi = self.bounds[axis]
        return np.linspace(lo, hi, self.resolution[axis] + 1)

    def axis_centers(self, axis: int) -> np.ndarray:
        e = self.edges(axis)
        return 0.5 * (e[:-1] + e[1:])

    def centers(self) -> np.ndarray:
        """Cell centers as an array of shape (size, dim)."""
        self._require_grid()
        axes = [self.axis_centers(k) for k in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def cell_of(self, points) -> np.ndarray:
        """Flat cell index for each point, or -1 for points outside the grid.

        Cells are closed-open per axis: ``[edge_k, edge_{k+1})``.
        """
        self._require_grid()
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dim:
            pts = pts.reshape(-1, self.dim)
        flat = np.zeros(len(pts), dtype=np.int64)
        inside = np.ones(len(pts), dtype=bool)
        for k in range(self.dim):
            r = self.resolution[k]
            idx = np.searchsorted(self.edges(k), pts[:, k], side="right") - 1
            inside &= (idx >= 0) & (idx < r)
            flat = flat * r + np.clip(idx, 0, r - 1)
        return np.where(inside, flat, -1)

    def coordinates(self, index) -> np.ndarray:
        return self.centers()[index]

    def _require_grid(self):
        if not self.is_grid:
            raise SpaceMismatch("operation requires a grid space")


class Region:
    """A union of states (finite space) or whole cells (grid space)."""

    __slots__ = ("space", "mask")

    def __init__(self, space: StateSpace, mask):
        mask = np.asarray(mask, dtype=bool).ravel()
        if mask.shape != (space.size,):
            raise ValueError(f"mask has length {mask.size}, space has {space.size} cells")
        mask = mask.copy()
        mask.flags.writeable = False
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "mask", mask)

    def __setattr__(self, name, value):
        raise AttributeError("Region is immutable")

    @classmethod
    def empty(cls, space: StateSpace) -> Region:
        return cls(space, np.zeros(space.size, dtype=bool))

    @classmethod
    def full(cls, space: StateSpace) -> Region:
        return cls(space, np.ones(space.size, dtype=bool))

    @classmethod
    def from_states(cls, space: StateSpace, states) -> Region:
        mask = np.zeros(space.size, dtype=bool)
        idx = np.asarray(list(states), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= space.size):
            raise IndexError(f"state index out of range for space of size {space.size}")
        mask[idx] = True
        return cls(space, mask)

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    def is_empty(self) -> bool:
        return not self.mask.any()

    def _check(self, other: Region):
        if self.space != other.space:
            raise SpaceMismatch("regions live on different state spaces")

    def union(self, other: Region) -> Region:
        self._check(other)
        return Region(self.space, self.mask | other.mask)

    def intersect(self, other: Region) -> Region:
        self._check(other)
        return Region(self.space, self.mask & other.mask)

    def difference(self, other: Region) -> Region:
        self._check(other)
        return Region(self.space, self.mask & ~other.mask)

    def complement(self) -> Region:
        return Region(self.space, ~self.mask)

    def issubset(self, other: Region) -> bool:
        self._check(other)
        return bool(np.all(other.mask[self.mask]))

    __or__ = union
    __and__ = intersect
    __sub__ = difference
    __invert__ = complement
    __le__ = issubset

    def __eq__(self, other):
        if not isinstance(other, Region):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.mask, other.mask)

    def __hash__(self):
        return hash((self.space, self.mask.tobytes()))

    def __len__(self):
        return self.count

    def contains_points(self, points) -> np.ndarray:
        """Membership of continuous points through the cell that holds them."""
        cells = self.space.cell_of(points)
        out = np.zeros(len(cells), dtype=bool)
        ok = cells >= 0
        out[ok] = self.mask[cells[ok]]
        return out

    def __repr__(self):
        return f"Region({self.count}/{self.space.size} cells)"


def set_algebra(a: Region, b: Region, op: str) -> Region:
    ops = {"union": a.union, "intersect": a.intersect, "difference": a.difference}
    if op not in ops:
        raise ValueError(f"unknown set operation {op!r}")
    return ops[op](b)


def subset(a: Region, b: Region) -> bool:
    return a.issubset(b)


_BOX_TOL = 1e-12


def region_from_box(space: StateSpace, box, mode: str = "center") -> Region:
    """Cells selected by an axis-aligned box.

    ``mode="center"`` keeps cells whose center lies in the closed-open box
    ``[lo, hi)`` per axis. ``mode="inner"`` keeps only cells whose closed
    extent lies inside the closed box, which is the inward rounding needed
    when the region must stay inside a given set.
    """
    if not space.is_grid:
        raise SpaceMismatch("region_from_box requires a grid space")
    box = [tuple(map(float, iv)) for iv in box]
    if len(box) != space.dim:
        raise ValueError(f"box has {len(box)} axes, grid has {space.dim}")
    for (lo, hi), (blo, bhi) in zip(box, space.bounds):
        if lo > hi:
            raise ValueError(f"empty box interval ({lo}, {hi})")
        span = bhi - blo
        if lo < blo - _BOX_TOL * span or hi > bhi + _BOX_TOL * span:
            raise ValueError(f"box interval ({lo}, {hi}) lies outside grid bounds ({blo}, {bhi})")

    keep = []
    for k, (lo, hi) in enumerate(box):
        if mode == "center":
            c = space.axis_centers(k)
            keep.append((c >= lo) & (c < hi))
        elif mode == "inner":
            e = space.edges(k)
            tol = _BOX_TOL * (space.bounds[k][1] - space.bounds[k][0])
            keep.append((e[:-1] >= lo - tol) & (e[1:] <= hi + tol))
        else:
            raise ValueError(f"unknown box mode {mode!r}")
    if space.dim == 1:
        mask = keep[0]
    else:
        mask = np.logical_and.outer(keep[0], keep[1]).ravel()
    return Region(space, mask)
