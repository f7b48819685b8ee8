"""Checker contexts: atom bindings plus value-function enclosures for the verify driver."""

from __future__ import annotations

import numpy as np

from .absorbing import SIMPLE, las_finite, simplicity_by_support
from .decompose import builtin_candidate, decompose_reach_avoid, excision_region, verify_local_excessivity
from .discretize import Abstraction, total_error
from .engine import bounded_reach_avoid, matvec
from .formula import TRUE, Bounds, PrecisionUnavailable, UnboundAtom
from .horizon import NonContractive, unbounded_reach_avoid
from .kernel import MatrixKernel
from .mclinear import solve_reach_avoid_exact
from .space import Region, SpaceMismatch


class _Context:
    space = None
    labels: dict

    def _check_labels(self):
        if TRUE in self.labels:
            raise ValueError(f"'{TRUE}' is reserved and cannot be a label")
        for name, r in self.labels.items():
            if r.space != self.space:
                raise SpaceMismatch(f"label {name!r} lives on a different space")

    def visible(self, region: Region) -> Region:
        """The part of a set that is reported to the user."""
        return region

    def region(self, name: str) -> Region:
        if name == TRUE:
            return Region.full(self.space)
        try:
            return self.labels[name]
        except KeyError:
            raise UnboundAtom(f"atom {name!r} is not bound to a region") from None


class FiniteContext(_Context):
    """Finite chain. With ``exact`` unbounded until goes through the linear system
    (enclosures of width zero, so delta = 0 is allowed); otherwise through the
    contraction sandwich, excising the absorbing core when needed."""

    def __init__(self, kernel: MatrixKernel, labels: dict, exact: bool = True, m_max: int | None = None):
        self.kernel = kernel
        self.space = kernel.space
        self.labels = dict(labels)
        self.exact = exact
        self.m_max = m_max
        self._check_labels()

    def next(self, S: Region) -> Bounds:
        v = np.clip(matvec(self.kernel.matrix, S.mask.astype(float)), 0.0, 1.0)
        return Bounds(v, v)

    def bounded_until(self, A: Region, B: Region, n: int, delta: float) -> Bounds:
        w = bounded_reach_avoid(self.kernel, A, B, n).values
        return Bounds(w, w)

    def until(self, A: Region, B: Region, delta: float) -> Bounds:
        if self.exact:
            w = solve_reach_avoid_exact(self.kernel, A, B).values
            return Bounds(w, w, note="linear solve")
        if delta <= 0:
            raise PrecisionUnavailable("unbounded until needs delta > 0 without the exact solver")
        try:
            lo, hi, cert = unbounded_reach_avoid(self.kernel, A, B, delta, self.m_max)
            return Bounds(lo.values, hi.values, cert, total_error(0.0, cert.horizon, cert.tail, 0.0))
        except NonContractive:
            core = A - B
            las = las_finite(self.kernel, core).las
            # w vanishes on the absorbing core, so excising it costs nothing
            res = decompose_reach_avoid(self.kernel, core, B, las, eps_claim=0.0, eps=delta, m_max=self.m_max)
            return Bounds(res.lower.values, res.upper.values, res.certificate, res.ledger, "absorbing core excised")


class GridContext(_Context):
    """Density kernel seen through a grid abstraction with per-step error lambda.

    Sets live on the abstraction's chain space, i.e. the grid cells plus the
    sink standing for everything outside the grid. Atoms never contain the
    sink, so negations do: leaving the grid counts as leaving every labelled
    region. ``visible`` drops the sink for reporting.

    The delta budget of an unbounded until over a non-simple set is split as
    excision delta, tail delta/2, discretization delta/4 (on each side).
    """

    def __init__(self, abstraction: Abstraction, labels: dict, m_max: int | None = None, candidate=None):
        self.abstraction = abstraction
        self.grid = abstraction.grid
        self.space = abstraction.chain.space
        for name, r in labels.items():
            if r.space != self.grid:
                raise SpaceMismatch(f"label {name!r} does not live on the abstraction grid")
        self.labels = {name: abstraction.lift(r) for name, r in labels.items()}
        self.m_max = m_max
        self.candidate = candidate
        self._check_labels()
        self._sink = Region.from_states(self.space, [abstraction.sink])

    @property
    def _chain(self):
        return self.abstraction.chain

    def visible(self, region: Region) -> Region:
        return Region(self.grid, region.mask[: self.grid.size])

    def _lift(self, grid_region: Region) -> Region:
        return self.abstraction.lift(grid_region)

    def _enclose(self, w: np.ndarray, err: float) -> tuple:
        lo, hi = np.clip(w - err, 0.0, 1.0), np.clip(w + err, 0.0, 1.0)
        # the sink is exact: nothing is abstracted there
        s = self.abstraction.sink
        lo[s] = hi[s] = w[s]
        return lo, hi

    def next(self, S: Region) -> Bounds:
        lam = self.abstraction.lam
        v = np.clip(matvec(self._chain.matrix, S.mask.astype(float)), 0.0, 1.0)
        lo, hi = self._enclose(v, lam)
        return Bounds(lo, hi, ledger=total_error(lam, 1, 0.0, 0.0))

    def bounded_until(self, A: Region, B: Region, n: int, delta: float) -> Bounds:
        w = bounded_reach_avoid(self._chain, A, B, n).values
        ledger = total_error(self.abstraction.lam, n, 0.0, 0.0)
        lo, hi = self._enclose(w, ledger.discretization)
        return Bounds(lo, hi, ledger=ledger)

    def until(self, A: Region, B: Region, delta: float) -> Bounds:
        if delta <= 0:
            raise PrecisionUnavailable("unbounded until on a grid needs delta > 0")
        ab = self.abstraction
        # the sink is absorbing and never in B, so w vanishes there whether or not A holds it
        A = A - self._sink
        core = A - B
        verdict = simplicity_by_support(ab.kernel, self.visible(core))
        if verdict.verdict == SIMPLE:
            try:
                lo, hi, cert = unbounded_reach_avoid(self._chain, A, B, delta, self.m_max)
            except NonContractive as exc:
                raise PrecisionUnavailable(f"no contraction certificate on the abstraction: {exc}") from exc
            ledger = total_error(ab.lam, cert.horizon, cert.tail, 0.0)
            if ledger.discretization > delta / 2:
                raise PrecisionUnavailable(
                    f"discretization error {ledger.discretization:.3g} exceeds the budget {delta / 2:g}")
            lo, _ = self._enclose(lo.values, ledger.discretization)
            _, hi = self._enclose(hi.values, ledger.discretization)
            return Bounds(lo, hi, cert, ledger)

        cand = self.candidate or builtin_candidate(ab.kernel, self.grid)
        if cand is None:
            raise PrecisionUnavailable("non-simple set and no locally excessive candidate applies")
        report = verify_local_excessivity(ab.kernel, cand, self.visible(core))
        if not report.passed:
            raise PrecisionUnavailable(f"candidate {cand.name} failed local excessivity: {report.failures}")
        C = excision_region(self.grid, cand, delta) & self.visible(core)
        if not verdict.las.issubset(C):
            raise PrecisionUnavailable("grid too coarse: the excision does not cover the absorbing core")
        try:
            res = decompose_reach_avoid(self._chain, core, B, self._lift(C), eps_claim=delta, eps=delta / 2,
                                        m_max=self.m_max)
        except NonContractive as exc:
            raise PrecisionUnavailable(f"excised set still not contractive: {exc}") from exc
        cert = res.certificate
        ledger = total_error(ab.lam, cert.horizon, cert.tail, res.excision_error)
        if ledger.discretization > delta / 4:
            raise PrecisionUnavailable(
                f"discretization error {ledger.discretization:.3g} exceeds the budget {delta / 4:g}")
        lo, _ = self._enclose(res.lower.values, ledger.discretization)
        _, hi = self._enclose(res.upper.values, ledger.discretization)
        return Bounds(lo, hi, cert, ledger, "absorbing core excised with " + cand.name)
