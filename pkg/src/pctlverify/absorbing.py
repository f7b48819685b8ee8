"""Largest absorbing subsets and simplicity checks."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .engine import matvec, RowBlocks
from .kernel import ROW_TOL, DensityKernel, MatrixKernel
from .space import Region, SpaceMismatch

SIMPLE = "Simple"
NON_SIMPLE = "NonSimple"
INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class AbsorbingReport:
    las: Region
    verdict: str
    iterations: int
    delta_used: float

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "las": self.las.indices.tolist(),
            "iterations": self.iterations,
            "delta": self.delta_used,
        }


def las_finite(kernel: MatrixKernel, A: Region) -> AbsorbingReport:
    """Greatest fixpoint of A_{k+1} = {x in A : P(x, A_k) = 1}, starting at A_0 = A.

    Probability-one tests allow ROW_TOL of slack for rounding in the row sums.
    """
    if A.space != kernel.space:
        raise SpaceMismatch("region and kernel live on different spaces")
    idx = A.indices
    M = RowBlocks(kernel.submatrix(idx))
    cur = A.mask.copy()
    k = 0
    while True:
        mass = matvec(M, cur.astype(float)) if idx.size else np.zeros(0)
        nxt = np.zeros_like(cur)
        nxt[idx] = mass >= 1.0 - ROW_TOL
        if np.array_equal(nxt, cur):
            break
        cur = nxt
        k += 1
    las = Region(A.space, cur)
    return AbsorbingReport(las, NON_SIMPLE if cur.any() else SIMPLE, k, 0.0)


def _representative_scores(kernel, A: Region):
    """Return a function mapping a cell mask to per-cell P(rep, mask).

    For a density kernel every cell is represented by its center and by any
    absorbing point it contains; the cell's score is the largest of these.
    """
    if isinstance(kernel, MatrixKernel):
        if A.space != kernel.space:
            raise SpaceMismatch("region and kernel live on different spaces")
        M = RowBlocks(kernel.matrix)
        return lambda mask: matvec(M, mask.astype(float))
    if isinstance(kernel, DensityKernel):
        grid = A.space
        probs, _ = kernel.cell_probabilities(grid.centers(), grid)
        cells = grid.cell_of(kernel.absorbing_points)
        extra_rows, extra_cells = [], []
        for p, c in zip(kernel.absorbing_points, cells):
            if c >= 0:
                row, _ = kernel.cell_probabilities(p[None, :], grid)
                extra_rows.append(row[0])
                extra_cells.append(c)

        def score(mask):
            s = probs[:, mask].sum(axis=1)
            for row, c in zip(extra_rows, extra_cells):
                s[c] = max(s[c], row[mask].sum())
            return s

        return score
    raise TypeError(f"unsupported kernel type {type(kernel).__name__}")


def an_sequence_approx(kernel, A: Region, delta: float, n_max: int = 1000) -> AbsorbingReport:
    """Supersatisfaction sequence A*_{k+1} = {x in A*_k : P(x, A*_k) >= 1 - delta}.

    An empty iterate proves simplicity. A non-empty fixpoint, or running
    out of iterations, only yields a candidate superset of the largest
    absorbing subset, so NonSimple is never returned.
    """
    if not 0 <= delta < 1:
        raise ValueError("delta must lie in [0, 1)")
    score = _representative_scores(kernel, A)
    threshold = 1.0 - max(delta, ROW_TOL)
    cur = A.mask.copy()
    for k in range(1, n_max + 1):
        if not cur.any():
            return AbsorbingReport(Region(A.space, cur), SIMPLE, k - 1, delta)
        nxt = cur & (score(cur) >= threshold)
        if not nxt.any():
            return AbsorbingReport(Region(A.space, nxt), SIMPLE, k, delta)
        if np.array_equal(nxt, cur):
            return AbsorbingReport(Region(A.space, cur), INCONCLUSIVE, k, delta)
        cur = nxt
    return AbsorbingReport(Region(A.space, cur), INCONCLUSIVE, n_max, delta)


def simplicity_by_support(kernel: DensityKernel, A: Region) -> AbsorbingReport:
    """Decide simplicity from the support of the density.

    For the Gaussian families s(x) is the whole space at every
    non-absorbing x, so a bounded A is absorbing-free unless it holds an
    absorbing point; the largest absorbing subset is then that point,
    reported as the cells containing it.
    """
    if not isinstance(kernel, DensityKernel) or not getattr(kernel, "full_support", False):
        raise TypeError("support geometry unknown for this kernel family")
    if not A.space.is_grid:
        raise SpaceMismatch("density kernels need a grid region")
    cells = A.space.cell_of(kernel.absorbing_points)
    mask = np.zeros(A.space.size, dtype=bool)
    for c in cells:
        if c >= 0 and A.mask[c]:
            mask[c] = True
    las = Region(A.space, mask)
    return AbsorbingReport(las, NON_SIMPLE if mask.any() else SIMPLE, 0, 0.0)


def shortest_exit_lengths(kernel: MatrixKernel, A: Region) -> np.ndarray:
    """Length m_i of the shortest positive-probability path from i to the complement of A.

    Entries are 0 outside A and inf where no such path exists.
    """
    rev = kernel.adjacency().T.tocsr()
    dist = np.full(kernel.n, math.inf)
    queue = deque(np.flatnonzero(~A.mask).tolist())
    dist[~A.mask] = 0
    while queue:
        j = queue.popleft()
        for i in rev.indices[rev.indptr[j]:rev.indptr[j + 1]]:
            if dist[i] == math.inf:
                dist[i] = dist[j] + 1
                queue.append(i)
    return dist


def m_upper_bound_graph(kernel: MatrixKernel, A: Region) -> float:
    """sup over A of the shortest exit path length; inf iff some state never leaves A."""
    if A.is_empty():
        return 0
    d = shortest_exit_lengths(kernel, A)[A.mask].max()
    return math.inf if d == math.inf else int(d)


def las_graph(kernel: MatrixKernel, A: Region) -> Region:
    """States of A from which the complement of A is unreachable (CTL AG A)."""
    d = shortest_exit_lengths(kernel, A)
    return Region(A.space, A.mask & (d == math.inf))
