"""Grid abstraction of density kernels and the additive error ledger."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass

import numpy as np

from .engine import ValueFn
from .kernel import DensityKernel, MatrixKernel
from .space import Region, SpaceMismatch, StateSpace


@dataclass
class Abstraction:
    """Finite chain over the grid cells plus one absorbing sink for escaping mass.

    Chain state ``i < grid.size`` is grid cell ``i`` (represented by its
    center); chain state ``grid.size`` is the sink.
    """

    chain: MatrixKernel
    grid: StateSpace
    kernel: DensityKernel
    lam: float
    provenance: str

    @property
    def sink(self) -> int:
        return self.grid.size

    @property
    def centers(self) -> np.ndarray:
        return self.grid.centers()

    def lift(self, region: Region) -> Region:
        """Embed a grid region into the chain space; the sink is never included."""
        if region.space != self.grid:
            raise SpaceMismatch("region does not live on the abstraction grid")
        return Region(self.chain.space, np.append(region.mask, False))

    def restrict(self, values) -> ValueFn:
        v = values.values if isinstance(values, ValueFn) else np.asarray(values)
        return ValueFn(self.grid, v[: self.grid.size])

    def dump_csv(self, fh) -> None:
        """Nonzero entries of the abstract transition matrix as ``row,col,prob``."""
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row", "col", "prob"])
        m = self.chain.dense()
        for i, j in zip(*np.nonzero(m)):
            writer.writerow([int(i), int(j), repr(float(m[i, j]))])


def discretize(kernel: DensityKernel, grid: StateSpace, lipschitz: float | None = None,
               lam: float | None = None, cover: Region | None = None) -> Abstraction:
    """Cell-center abstraction of a density kernel.

    Entry (i, j) is the exact probability of moving from the center of
    cell i into cell j; whatever leaves the grid goes to the sink. The
    per-step error is ``lam`` when given, otherwise ``lipschitz * h`` with h
    the largest cell diameter.
    """
    if not isinstance(kernel, DensityKernel):
        raise TypeError("discretize needs a built-in density kernel")
    if not grid.is_grid or grid.dim != kernel.dim:
        raise SpaceMismatch(f"need a {kernel.dim}D grid for {kernel!r}")
    if cover is not None and cover.space != grid:
        raise SpaceMismatch("grid does not cover the analysis region")
    if lam is not None:
        if lam < 0:
            raise ValueError("lambda must be non-negative")
        lam_value, provenance = float(lam), "user-supplied"
    elif lipschitz is not None:
        if lipschitz < 0:
            raise ValueError("Lipschitz constant must be non-negative")
        lam_value, provenance = float(lipschitz) * grid.cell_diameter, "lipschitz-derived"
    else:
        raise ValueError("discretize needs either a Lipschitz constant or a user lambda")

    n = grid.size
    probs, outside = kernel.cell_probabilities(grid.centers(), grid)
    P = np.zeros((n + 1, n + 1))
    P[:n, :n] = probs
    P[:n, n] = outside
    P[n, n] = 1.0
    P /= P.sum(axis=1, keepdims=True)
    chain = MatrixKernel(P, StateSpace.finite(n + 1))
    return Abstraction(chain, grid, kernel, lam_value, provenance)


@dataclass(frozen=True)
class ErrorLedger:
    discretization: float
    tail: float
    excision: float
    total: float

    def to_dict(self) -> dict:
        return asdict(self)


def total_error(abstraction, n: int, tail: float, excision: float) -> ErrorLedger:
    """Additive composition of the error sources, each capped at 1.

    ``abstraction`` may be an Abstraction or a bare per-step lambda.
    """
    lam = abstraction.lam if isinstance(abstraction, Abstraction) else float(abstraction)
    parts = (lam, n, tail, excision)
    if any(p < 0 for p in parts):
        raise ValueError("error components must be non-negative")
    disc = min(1.0, lam * n)
    total = min(1.0, disc + tail + excision)
    return ErrorLedger(disc, float(tail), float(excision), total)


def discretization_ledger(discretization: float, tail: float, excision: float) -> ErrorLedger:
    """Ledger from an already-known discretization error (e.g. a target the abstraction met)."""
    if min(discretization, tail, excision) < 0:
        raise ValueError("error components must be non-negative")
    return ErrorLedger(min(1.0, discretization), float(tail), float(excision),
                       min(1.0, discretization + tail + excision))
