"""Invariance operator and finite-horizon dynamic programming for reach-avoid and invariance."""

from __future__ import annotations

import csv
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .kernel import MatrixKernel
from .space import Region, SpaceMismatch, StateSpace

CLAMP_WARN = 1e-9
_BLOCK = 256
_threads = 1
_pool = None


class ClampWarning(RuntimeWarning):
    """Iterates drifted outside [0, 1] by more than rounding can explain."""


def set_threads(n: int) -> None:
    """Worker count for operator application (results do not depend on it)."""
    global _threads, _pool
    _threads = max(1, int(n))
    if _pool is not None:
        _pool.shutdown()
        _pool = None


def get_threads() -> int:
    return _threads


@dataclass(frozen=True)
class ValueFn:
    space: StateSpace
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.space.size,):
            raise ValueError(f"value vector of length {v.size} for space of size {self.space.size}")
        if np.any(v < 0) or np.any(v > 1):
            raise ValueError("value functions must lie in [0, 1]")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __getitem__(self, idx):
        return self.values[idx]

    def __len__(self):
        return len(self.values)

    def sup_distance(self, other: ValueFn) -> float:
        return float(np.max(np.abs(self.values - other.values)))


class RowBlocks:
    """A matrix pre-split into fixed-size row blocks for repeated products."""

    def __init__(self, matrix):
        self.shape = matrix.shape
        self.blocks = [matrix[s:s + _BLOCK] for s in range(0, matrix.shape[0], _BLOCK)]


def matvec(matrix, f: np.ndarray) -> np.ndarray:
    """Row-blocked product ``matrix @ f``.

    Blocks are fixed in size, so the arithmetic performed for each output
    entry is the same whatever the number of worker threads.
    """
    rb = matrix if isinstance(matrix, RowBlocks) else RowBlocks(matrix)
    if rb.shape[0] == 0:
        return np.zeros(0)
    if _threads == 1 or len(rb.blocks) == 1:
        return np.concatenate([_product(b, f) for b in rb.blocks])
    global _pool
    if _pool is None:
        _pool = ThreadPoolExecutor(max_workers=_threads)
    return np.concatenate(list(_pool.map(lambda b: _product(b, f), rb.blocks)))


def _product(block, f):
    return np.asarray(block @ f).ravel()


def _clamp(v: np.ndarray) -> np.ndarray:
    excess = max(float(np.max(v, initial=0.0)) - 1.0, -float(np.min(v, initial=0.0)))
    if excess > CLAMP_WARN:
        warnings.warn(f"value iterate left [0, 1] by {excess:.3e}", ClampWarning, stacklevel=3)
    return np.clip(v, 0.0, 1.0)


def _check_space(kernel: MatrixKernel, *regions: Region):
    for r in regions:
        if r.space != kernel.space:
            raise SpaceMismatch("region and kernel live on different spaces")


def apply_invariance_op(kernel: MatrixKernel, A: Region, f) -> ValueFn:
    """(I_A f)(x) = 1_A(x) * sum_y P(x, y) f(y)."""
    _check_space(kernel, A)
    fv = f.values if isinstance(f, ValueFn) else np.asarray(f, dtype=float)
    if isinstance(f, ValueFn) and f.space != kernel.space:
        raise SpaceMismatch("value function and kernel live on different spaces")
    out = np.zeros(kernel.n)
    idx = A.indices
    out[idx] = matvec(kernel.submatrix(idx), fv)
    return ValueFn(kernel.space, _clamp(out))


def reach_avoid_iterates(kernel: MatrixKernel, A: Region, B: Region, n: int):
    """Yield w_0, ..., w_n as plain arrays."""
    _check_space(kernel, A, B)
    if n < 0:
        raise ValueError("horizon must be non-negative")
    base = B.mask.astype(float)
    idx = (A - B).indices
    M = RowBlocks(kernel.submatrix(idx))
    w = base.copy()
    yield w
    for _ in range(n):
        nxt = base.copy()
        if idx.size:
            nxt[idx] = matvec(M, w)
        w = _clamp(nxt)
        yield w


def bounded_reach_avoid(kernel: MatrixKernel, A: Region, B: Region, n: int) -> ValueFn:
    """w_n(x; A, B): probability of reaching B within n steps while staying in A."""
    for w in reach_avoid_iterates(kernel, A, B, n):
        pass
    return ValueFn(kernel.space, w)


def invariance_iterates(kernel: MatrixKernel, A: Region, n: int):
    """Yield u_0, ..., u_n as plain arrays."""
    _check_space(kernel, A)
    if n < 0:
        raise ValueError("horizon must be non-negative")
    idx = A.indices
    M = RowBlocks(kernel.submatrix(idx, idx))
    u = A.mask.astype(float)
    yield u
    ua = u[idx]
    for _ in range(n):
        ua = _clamp(matvec(M, ua)) if idx.size else ua
        u = np.zeros(kernel.n)
        u[idx] = ua
        yield u


def bounded_invariance(kernel: MatrixKernel, A: Region, n: int) -> ValueFn:
    """u_n(x; A): probability of staying in A for steps 0..n."""
    for u in invariance_iterates(kernel, A, n):
        pass
    return ValueFn(kernel.space, u)


def bellman_residual(kernel: MatrixKernel, A: Region, B: Region, w) -> float:
    """sup |1_B + I_{A minus B} w - w|."""
    wv = w.values if isinstance(w, ValueFn) else np.asarray(w, dtype=float)
    rhs = B.mask.astype(float)
    idx = (A - B).indices
    if idx.size:
        rhs[idx] += matvec(kernel.submatrix(idx), wv)
    return float(np.max(np.abs(rhs - wv)))


def write_values_csv(fh, space: StateSpace, lower, upper=None) -> None:
    """CSV rows ``index,x1[,x2],lower,upper`` (finite spaces use the index as x1)."""
    lo = lower.values if isinstance(lower, ValueFn) else np.asarray(lower)
    up = lo if upper is None else (upper.values if isinstance(upper, ValueFn) else np.asarray(upper))
    writer = csv.writer(fh, lineterminator="\n")
    if space.is_grid:
        coords = space.centers()
        writer.writerow(["index"] + [f"x{k + 1}" for k in range(space.dim)] + ["lower", "upper"])
        for i in range(space.size):
            writer.writerow([i] + [repr(float(c)) for c in coords[i]] + [repr(float(lo[i])), repr(float(up[i]))])
    else:
        writer.writerow(["index", "x1", "lower", "upper"])
        for i in range(space.size):
            writer.writerow([i, i, repr(float(lo[i])), repr(float(up[i]))])
