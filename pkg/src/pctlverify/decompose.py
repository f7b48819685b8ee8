"""Reach-avoid and invariance over non-simple sets by excising a neighbourhood of the absorbing core.

A delta-locally excessive function g (g >= 0, zero exactly on the largest
absorbing subset, with {g < delta} inside both A and the excessive set
{Pg <= g}) bounds the damage of cutting out C = {g < eps * delta}: the
reach-avoid value changes by at most eps, and what remains of A is simple.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .absorbing import INCONCLUSIVE, las_finite, simplicity_by_support
from .discretize import Abstraction, ErrorLedger, total_error
from .engine import ValueFn, matvec
from .horizon import Certificate, unbounded_reach_avoid
from .kernel import AffineGauss1D, DensityKernel, MatrixKernel, Nonlinear2D, affine_gauss_moment, nonlinear2d_Pg
from .space import Region, SpaceMismatch, StateSpace

VERIFIED = "Verified(numerically)"
FAILED = "Failed"
NUMERICALLY_VERIFIED = "numerically verified"

CERTIFIED = "certified"
CONDITIONAL = "conditionally certified"
UNCERTIFIED = "uncertified excision"


class UnverifiedCandidate(ValueError):
    """A bound was requested from a candidate that did not pass verification."""


class NoExcessiveFunction(RuntimeError):
    """No power |x|^q with b(q) < 1 exists on the searched range."""


@dataclass(frozen=True)
class ExcessiveCandidate:
    """Claimed delta-locally excessive function.

    ``g`` maps an array of points (or state indices on a finite chain) to
    non-negative values. ``Pg`` is the closed-form image under the kernel;
    when absent it is computed by quadrature or by the chain's matrix.
    """

    g: Callable
    delta: float
    zero_set: Region
    Pg: Callable | None = None
    name: str = "g"

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")


def _sample_points(space: StateSpace):
    return space.centers() if space.is_grid else np.arange(space.size)


def _eval(fn, pts) -> np.ndarray:
    return np.asarray(fn(pts), dtype=float).reshape(-1)


def _apply_kernel(kernel, g, Pg, pts) -> np.ndarray:
    if Pg is not None:
        return _eval(Pg, pts)
    if isinstance(kernel, MatrixKernel):
        return matvec(kernel.matrix, _eval(g, np.arange(kernel.n)))[pts]
    return kernel.expectation(g, pts)


def excessive_set(kernel, g: Callable, sample: Region, Pg: Callable | None = None) -> Region:
    """Cells of ``sample`` whose center x satisfies Pg(x) - g(x) <= 0."""
    idx = sample.indices
    pts = _sample_points(sample.space)[idx]
    gv = _eval(g, pts)
    if np.any(gv < 0):
        raise ValueError(f"g is negative at {int(np.sum(gv < 0))} sampled points")
    mask = np.zeros(sample.space.size, dtype=bool)
    if idx.size:
        mask[idx] = _apply_kernel(kernel, g, Pg, pts) - gv <= 0
    return Region(sample.space, mask)


@dataclass(frozen=True)
class ExcessivityReport:
    candidate: ExcessiveCandidate
    inside_A: str
    inside_excessive: str
    zero_set: str
    las_candidate: Region
    failures: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c == VERIFIED for c in (self.inside_A, self.inside_excessive, self.zero_set))

    @property
    def status(self) -> str:
        return NUMERICALLY_VERIFIED if self.passed else FAILED

    def to_dict(self) -> dict:
        return {
            "candidate": self.candidate.name,
            "delta": self.candidate.delta,
            "checks": {"sublevel_in_A": self.inside_A, "sublevel_in_excessive_set": self.inside_excessive,
                       "zero_set_is_las": self.zero_set},
            "status": self.status,
            "failures": self.failures,
        }


def _outer_samples(space: StateSpace, factor: int = 3) -> np.ndarray:
    """Lattice at the grid's spacing over the box spanning ``factor`` times each axis."""
    axes = []
    for k, (lo, hi) in enumerate(space.bounds):
        span = hi - lo
        n = space.resolution[k] * factor
        axes.append(lo - span * (factor - 1) / 2 + (np.arange(n) + 0.5) * span / space.resolution[k])
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _las_candidate(kernel, A: Region) -> Region:
    if isinstance(kernel, MatrixKernel):
        return las_finite(kernel, A).las
    return simplicity_by_support(kernel, A).las


def verify_local_excessivity(kernel, cand: ExcessiveCandidate, A: Region) -> ExcessivityReport:
    """Check the three defining conditions at cell-center resolution.

    (a) {g < delta} inside A, sampled on a lattice three times wider than
    the grid so that sublevel points outside A are seen; (b) {g < delta}
    inside {Pg <= g}; (c) the claimed zero set equals the absorbing-core
    candidate, g vanishes on the absorbing points and is positive at every
    center outside the zero set. Passing means numerically verified, not proved.
    """
    space = A.space
    if cand.zero_set.space != space:
        raise SpaceMismatch("candidate zero set and A live on different spaces")
    failures = {}
    delta = cand.delta

    if space.is_grid:
        outer = _outer_samples(space)
        escaped = (_eval(cand.g, outer) < delta) & ~A.contains_points(outer)
    else:
        pts = np.arange(space.size)
        escaped = (_eval(cand.g, pts) < delta) & ~A.mask
    check_a = FAILED if escaped.any() else VERIFIED
    if escaped.any():
        failures["sublevel_in_A"] = int(escaped.sum())

    centers = _sample_points(space)
    gv = _eval(cand.g, centers)
    if np.any(gv < 0):
        raise ValueError("g is negative at a sampled point")
    sub = Region(space, gv < delta)
    exc = excessive_set(kernel, cand.g, sub, cand.Pg)
    bad = sub - exc
    check_b = FAILED if not bad.is_empty() else VERIFIED
    if not bad.is_empty():
        failures["sublevel_in_excessive_set"] = bad.count

    las = _las_candidate(kernel, A)
    ok_c = cand.zero_set == las
    if space.is_grid and isinstance(kernel, DensityKernel):
        for p in kernel.absorbing_points:
            if A.contains_points(p[None, :])[0]:
                ok_c &= bool(_eval(cand.g, p[None, :])[0] == 0.0)
    ok_c &= bool(np.all(gv[~cand.zero_set.mask] > 0))
    check_c = VERIFIED if ok_c else FAILED
    if not ok_c:
        failures["zero_set_is_las"] = "zero set differs from the absorbing-core candidate"
    return ExcessivityReport(cand, check_a, check_b, check_c, las, failures)


def doob_lower_bound(cand: ExcessiveCandidate, x, report: ExcessivityReport | None) -> np.ndarray:
    """max(0, 1 - g(x) / delta), a lower bound on u(x; {g < delta})."""
    if report is None or report.candidate is not cand or not report.passed:
        raise UnverifiedCandidate("doob bound needs a candidate that passed verify_local_excessivity")
    gx = _eval(cand.g, np.asarray(x, dtype=float) if not isinstance(x, (int, np.integer)) else x)
    return np.maximum(0.0, 1.0 - gx / cand.delta)


def excision_region(space: StateSpace, cand: ExcessiveCandidate, eps: float) -> Region:
    """Whole cells lying inside {g <= eps * delta}, rounded inward.

    A cell is kept when g is within the level at its center and at every
    corner, which settles containment for sublevel sets that are convex
    (true for the built-in norm-type candidates).
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    level = eps * cand.delta
    if not space.is_grid:
        return Region(space, _eval(cand.g, np.arange(space.size)) <= level)
    keep = _eval(cand.g, space.centers()) <= level
    w = space.widths
    for corner in np.array(np.meshgrid(*[[-0.5, 0.5]] * space.dim, indexing="ij")).reshape(space.dim, -1).T:
        keep &= _eval(cand.g, space.centers() + corner * w) <= level
    return Region(space, keep)


@dataclass(frozen=True)
class DecompositionResult:
    """Certified sandwich for w(.; A, B) (or u(.; A)) after excising C."""

    lower: ValueFn
    upper: ValueFn
    inner_lower: ValueFn
    inner_upper: ValueFn
    excision: Region
    excision_error: float
    certificate: Certificate
    ledger: ErrorLedger
    status: str

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "excision_cells": self.excision.count,
            "excision_error": self.excision_error,
            "certificate": self.certificate.to_dict(),
            "ledger": self.ledger.to_dict(),
        }


def _unwrap(model, *regions):
    if isinstance(model, Abstraction):
        return model.chain, [model.lift(r) for r in regions], model
    return model, list(regions), None


def _wrap(abstraction, v: ValueFn) -> ValueFn:
    return v if abstraction is None else abstraction.restrict(v)


def _status(eps_claim, conditional):
    if eps_claim is None:
        return UNCERTIFIED
    return CONDITIONAL if conditional else CERTIFIED


def decompose_reach_avoid(model, A: Region, B: Region, C: Region, eps_claim: float | None = None,
                          eps: float = 1e-3, m_max: int | None = None, conditional: bool = False) -> DecompositionResult:
    """w(.; A, B) from the certified sandwich of w(.; A minus C, B).

    ``eps_claim`` bounds sup over C of w(.; A, B); without it the excision
    error is reported as 1 (uncertified). ``model`` is a MatrixKernel or an
    Abstraction, in which case regions live on its grid.
    """
    if not (A & B).is_empty():
        raise ValueError("A and B must be disjoint")
    if not C.issubset(A):
        raise ValueError("the excised set C must lie inside A")
    if eps_claim is not None and not 0 <= eps_claim <= 1:
        raise ValueError("eps_claim must lie in [0, 1]")
    kernel, (A_, B_, C_), abstraction = _unwrap(model, A, B, C)
    lower, upper, cert = unbounded_reach_avoid(kernel, A_ - C_, B_, eps, m_max)
    exc = 1.0 if eps_claim is None else float(eps_claim)
    up = np.minimum(1.0, upper.values + exc)
    lam = 0.0 if abstraction is None else abstraction.lam
    ledger = total_error(lam, cert.horizon, cert.tail, exc)
    return DecompositionResult(
        lower=_wrap(abstraction, lower),
        upper=_wrap(abstraction, ValueFn(kernel.space, up)),
        inner_lower=_wrap(abstraction, lower),
        inner_upper=_wrap(abstraction, upper),
        excision=C,
        excision_error=exc,
        certificate=cert,
        ledger=ledger,
        status=_status(eps_claim, conditional),
    )


def decompose_invariance(model, A: Region, C: Region, eps_claim: float | None = None,
                         eps: float = 1e-3, m_max: int | None = None, conditional: bool = False) -> DecompositionResult:
    """u(.; A) sandwiched through w(.; A, C).

    A certificate for A minus C means no path stays there forever, so
    u <= w(.; A, C); and w - u <= sup over C of (1 - u(.; A)) <= eps_claim.
    Hence u lies in [w_lower - eps_claim, w_upper].
    """
    if not C.issubset(A):
        raise ValueError("the excised set C must lie inside A")
    kernel, (A_, C_), abstraction = _unwrap(model, A, C)
    lower, upper, cert = unbounded_reach_avoid(kernel, A_, C_, eps, m_max)
    exc = 1.0 if eps_claim is None else float(eps_claim)
    lo = np.maximum(0.0, lower.values - exc)
    lam = 0.0 if abstraction is None else abstraction.lam
    ledger = total_error(lam, cert.horizon, cert.tail, exc)
    return DecompositionResult(
        lower=_wrap(abstraction, ValueFn(kernel.space, lo)),
        upper=_wrap(abstraction, upper),
        inner_lower=_wrap(abstraction, lower),
        inner_upper=_wrap(abstraction, upper),
        excision=C,
        excision_error=exc,
        certificate=cert,
        ledger=ledger,
        status=_status(eps_claim, conditional),
    )


def conditional_excision(kernel, A: Region, delta: float, n_max: int = 1000):
    """Excision set from the delta-supersatisfaction sequence and whether it is only conditional.

    An Inconclusive verdict leaves a candidate superset of the absorbing
    core; using it as C is sound only if it really covers the core, so the
    result is branded conditionally certified.
    """
    from .absorbing import an_sequence_approx

    rep = an_sequence_approx(kernel, A, delta, n_max)
    return rep.las, rep.verdict == INCONCLUSIVE


# Built-in candidates --------------------------------------------------------

def power_candidate(kernel: AffineGauss1D, space: StateSpace, q: float, delta: float = 1.0) -> ExcessiveCandidate:
    """g_q(x) = |x|^q, for which P g_q = b(q) g_q exactly."""
    if q <= 0:
        raise ValueError("q must be positive")
    b = affine_gauss_moment(kernel.mu, kernel.sigma, q)
    zero = _cells_of_points(space, kernel.absorbing_points)

    def g(x):
        return np.abs(np.asarray(x, dtype=float).reshape(-1)) ** q

    return ExcessiveCandidate(g=g, delta=delta, zero_set=zero, Pg=lambda x: b * g(x), name=f"|x|^{q:g}")


def norm_squared_candidate(space: StateSpace, delta: float = 0.25) -> ExcessiveCandidate:
    """g(x) = |x|^2 for the two-dimensional polynomial system, with Pg in closed form."""

    def g(x):
        p = np.atleast_2d(np.asarray(x, dtype=float))
        return p[:, 0] ** 2 + p[:, 1] ** 2

    def Pg(x):
        p = np.atleast_2d(np.asarray(x, dtype=float))
        return nonlinear2d_Pg(p[:, 0], p[:, 1])

    zero = _cells_of_points(space, Nonlinear2D.absorbing_points)
    return ExcessiveCandidate(g=g, delta=delta, zero_set=zero, Pg=Pg, name="|x|^2")


def _cells_of_points(space: StateSpace, points) -> Region:
    cells = space.cell_of(points)
    return Region.from_states(space, cells[cells >= 0])


def find_power_q(mu: float, sigma: float, q_max: float = 4.0, margin: float = 1e-3) -> tuple[float, float]:
    """Minimise b(q) over (0, q_max]; return (q, b(q)) if b(q) < 1 - margin."""
    res = minimize_scalar(lambda q: affine_gauss_moment(mu, sigma, q), bounds=(1e-6, q_max),
                          method="bounded", options={"xatol": 1e-6})
    q, b = float(res.x), float(res.fun)
    if not b < 1.0 - margin:
        raise NoExcessiveFunction(f"min b(q) over (0, {q_max}] is {b:.6f}; no |x|^q is locally excessive")
    return q, b


def builtin_candidate(kernel, space: StateSpace) -> ExcessiveCandidate | None:
    """Default candidate for the built-in families, or None when none applies."""
    if isinstance(kernel, Nonlinear2D):
        return norm_squared_candidate(space)
    if isinstance(kernel, AffineGauss1D):
        try:
            q, _ = find_power_q(kernel.mu, kernel.sigma)
        except NoExcessiveFunction:
            return None
        return power_candidate(kernel, space, q)
    return None
