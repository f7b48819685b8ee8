"""Trajectory simulation and Monte Carlo estimates of reach-avoid and invariance probabilities.

Paths are sampled in fixed blocks of BLOCK paths; block b draws from a
Philox generator keyed by (seed, b). The partition never changes with the
thread count and the per-block hit counts are integers, so estimates are
bit-identical however the blocks are scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import engine
from .kernel import DensityKernel, MatrixKernel
from .space import Region, SpaceMismatch

BLOCK = 4096
Z95 = 1.96


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


@dataclass
class Path:
    """A sampled trajectory x_0, ..., x_steps."""

    states: np.ndarray
    _hits: dict = field(default_factory=dict, repr=False)

    def __len__(self):
        return len(self.states)

    def hitting_time(self, region: Region) -> float:
        """First index with the state in ``region``, or ``math.inf`` if never."""
        key = hash(region)
        if key not in self._hits:
            inside = _membership(region, self.states)
            hits = np.flatnonzero(inside)
            self._hits[key] = int(hits[0]) if hits.size else math.inf
        return self._hits[key]


@dataclass(frozen=True)
class Estimate:
    mean: float
    half_width: float
    samples: int
    seed: int
    lower: float
    upper: float

    def contains(self, value: float, z: float = Z95) -> bool:
        """Is ``value`` inside the interval widened to ``z`` standard errors?"""
        widen = (z / Z95 - 1.0) * self.half_width
        return self.lower - widen <= value <= self.upper + widen

    def to_dict(self) -> dict:
        return asdict(self)


def _membership(region: Region, states: np.ndarray) -> np.ndarray:
    if region.space.is_grid:
        return region.contains_points(states)
    return region.mask[np.asarray(states, dtype=int)]


def _check(kernel, *regions):
    for r in regions:
        if isinstance(kernel, MatrixKernel) and r.space != kernel.space:
            raise SpaceMismatch("region and kernel live on different spaces")
        if isinstance(kernel, DensityKernel) and (not r.space.is_grid or r.space.dim != kernel.dim):
            raise SpaceMismatch("density kernels need grid regions of matching dimension")


def _initial(kernel, x0, count: int) -> np.ndarray:
    if isinstance(kernel, MatrixKernel):
        return np.full(count, int(x0), dtype=np.int64)
    pt = np.atleast_1d(np.asarray(x0, dtype=float))
    if kernel.dim == 1:
        return np.full(count, float(pt[0]))
    return np.tile(pt, (count, 1))


def simulate(kernel, x0, steps: int, seed: int) -> Path:
    """One trajectory of ``steps`` transitions from ``x0``; reproducible given ``seed``."""
    if steps < 0:
        raise ValueError("steps must be non-negative")
    rng = block_rng(seed, 0)
    cur = _initial(kernel, x0, 1)
    out = [cur[0]]
    for _ in range(steps):
        cur = kernel.step(cur, rng)
        out.append(cur[0])
    return Path(np.array(out))


def _reach_avoid_block(kernel, x0, A, B, n, count, rng) -> int:
    cur = _initial(kernel, x0, count)
    hit = _membership(B, cur)
    alive = _membership(A, cur) & ~hit
    hits = int(hit.sum())
    cur = cur[alive]
    t = 0
    while cur.shape[0] and t < n:
        cur = kernel.step(cur, rng)
        in_b = _membership(B, cur)
        hits += int(in_b.sum())
        cur = cur[~in_b & _membership(A, cur)]
        t += 1
    return hits


def _invariance_block(kernel, x0, A, n, count, rng) -> int:
    cur = _initial(kernel, x0, count)
    cur = cur[_membership(A, cur)]
    t = 0
    while cur.shape[0] and t < n:
        cur = kernel.step(cur, rng)
        cur = cur[_membership(A, cur)]
        t += 1
    return int(cur.shape[0])


def _map_blocks(job, samples: int, seed: int, threads: int | None) -> list:
    """Run ``job(count, rng)`` on every block, returning results in block order."""
    if samples < 1:
        raise ValueError("need at least one sample")
    sizes = [min(BLOCK, samples - s) for s in range(0, samples, BLOCK)]
    tasks = [(size, block_rng(seed, b)) for b, size in enumerate(sizes)]
    threads = engine.get_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(tasks) == 1:
        return [job(*t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda t: job(*t), tasks))


def _run_blocks(job, samples: int, seed: int, threads: int | None) -> int:
    return sum(_map_blocks(job, samples, seed, threads))


def _estimate(hits: int, samples: int, seed: int, widen_up: float = 0.0, widen_down: float = 0.0) -> Estimate:
    mean = hits / samples
    hw = Z95 * math.sqrt(mean * (1.0 - mean) / samples)
    return Estimate(mean, hw, samples, seed, max(0.0, mean - hw - widen_down), min(1.0, mean + hw + widen_up))


def estimate_reach_avoid(kernel, A: Region, B: Region, x0, n: int, samples: int, seed: int,
                         tail: float = 0.0, threads: int | None = None) -> Estimate:
    """Frequency of {tau_B <= tau_(A^c), tau_B <= n} over ``samples`` paths from ``x0``.

    For an unbounded query pass the cutoff as ``n`` and the tail bound at
    that cutoff as ``tail``; the interval is widened upward by it.
    """
    _check(kernel, A, B)
    if B.is_empty():
        return Estimate(0.0, 0.0, samples, seed, 0.0, 0.0)
    hits = _run_blocks(lambda c, rng: _reach_avoid_block(kernel, x0, A, B, n, c, rng), samples, seed, threads)
    return _estimate(hits, samples, seed, widen_up=tail)


def estimate_invariance(kernel, A: Region, x0, n: int, samples: int, seed: int,
                        tail: float = 0.0, threads: int | None = None) -> Estimate:
    """Frequency of {tau_(A^c) > n}.

    u_n decreases to u with u_n - u <= tail, so for an unbounded query the
    interval is widened downward by ``tail``.
    """
    _check(kernel, A)
    hits = _run_blocks(lambda c, rng: _invariance_block(kernel, x0, A, n, c, rng), samples, seed, threads)
    return _estimate(hits, samples, seed, widen_down=tail)


def simulate_paths(kernel, x0, steps: int, samples: int, seed: int, threads: int | None = None) -> np.ndarray:
    """``samples`` trajectories as an array of shape (samples, steps + 1[, dim]).

    Path j of block b uses the generator keyed by (seed, b), as the estimators do.
    """
    if steps < 0:
        raise ValueError("steps must be non-negative")

    def job(count, rng):
        cur = _initial(kernel, x0, count)
        out = [cur]
        for _ in range(steps):
            cur = kernel.step(cur, rng)
            out.append(cur)
        return np.stack(out, axis=1)

    return np.concatenate(_map_blocks(job, samples, seed, threads), axis=0)
