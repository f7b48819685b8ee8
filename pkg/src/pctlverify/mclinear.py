"""Exact reach-avoid values on finite chains and the equivalence battery for simplicity."""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg as sla
from scipy import sparse

from .absorbing import las_finite
from .engine import ValueFn, matvec, RowBlocks
from .horizon import ETA, compute_m_rho, tail_bound
from .kernel import MatrixKernel
from .space import Region

DIRECT_LIMIT = 2000
RCOND_MIN = 1e-12
RESIDUAL_TOL = 1e-10
TRIVIAL_TOL = 1e-9


class SingularSystem(AssertionError):
    """The restricted system was singular after removing the absorbing core."""


def _dense(m):
    return m.toarray() if sparse.issparse(m) else np.asarray(m)


def _rcond(M: np.ndarray) -> float:
    """Reciprocal 1-norm condition number, scaled by min(1, ||M||).

    rcond alone is scale-free: the 1x1 system [1e-16] looks perfectly
    conditioned. For M = I - P_AA the norm is at most 2, so the scaled value
    is about 1 / ||M^-1|| and small exactly when M is nearly singular.
    """
    if M.size == 0:
        return 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, _ = sla.lu_factor(M, check_finite=False)
    anorm = np.linalg.norm(M, 1)
    if not np.all(np.isfinite(lu)) or np.any(np.diag(lu) == 0):
        return 0.0
    lapack_gecon = sla.get_lapack_funcs("gecon", (lu,))
    rcond, info = lapack_gecon(lu, anorm, norm="1")
    return float(rcond) * min(1.0, anorm) if info == 0 else 0.0


def solve_reach_avoid_exact(kernel: MatrixKernel, A: Region, B: Region) -> ValueFn:
    """w(.; A, B) from the linear system on A minus B minus its largest absorbing subset.

    w is 1 on B, 0 on the absorbing core and off A union B, and solves
    (I - P~) w = b on the remaining states, where b_i = P(i, B).
    """
    core = A - B
    las = las_finite(kernel, core).las
    rest = (core - las).indices
    w = B.mask.astype(float)
    if rest.size == 0:
        return ValueFn(kernel.space, w)
    P_rest = kernel.submatrix(rest, rest)
    b = matvec(kernel.submatrix(rest), B.mask.astype(float))
    system = np.eye(rest.size) - _dense(P_rest) if rest.size <= DIRECT_LIMIT else None
    if system is not None and _rcond(system) > RCOND_MIN:
        x = sla.solve(system, b, check_finite=False)
    else:
        x = _richardson(kernel, Region.from_states(kernel.space, rest), P_rest, b)
    x = np.clip(x, 0.0, 1.0)
    resid = x - matvec(P_rest, x) - b
    if np.max(np.abs(resid)) > RESIDUAL_TOL:
        raise SingularSystem(f"reach-avoid system residual {np.max(np.abs(resid)):.2e} after excision")
    w[rest] = x
    return ValueFn(kernel.space, w)


def _richardson(kernel, region, P_rest, b, target=1e-12):
    cert = compute_m_rho(kernel, region)
    if not cert.certified:
        raise SingularSystem("set left after removing the absorbing core is not contractive")
    M = RowBlocks(P_rest)
    x = np.zeros_like(b)
    n = 0
    while cert.m and tail_bound(cert.m, cert.rho, n) > target:
        x = b + matvec(M, x)
        n += 1
    return x


def invariance_exact(kernel: MatrixKernel, A: Region) -> ValueFn:
    """u(.; A) = 1 - w(.; X, complement of A), via the linear system."""
    full = Region.full(kernel.space)
    w = solve_reach_avoid_exact(kernel, full, A.complement())
    return ValueFn(kernel.space, 1.0 - w.values)


def invariance_limit(kernel: MatrixKernel, A: Region, max_squarings: int = 64) -> ValueFn:
    """u(.; A) = lim P_AA^n 1 by repeated squaring, stopped once the row sums settle.

    Row sums of a closed class carry rounding of order 1e-16, so squaring a
    fixed 64 times would drive them to 0 or infinity; stopping when the sums
    no longer move keeps them at 1 while leaking rows have long since vanished.
    """
    idx = A.indices
    u = np.zeros(kernel.n)
    if idx.size:
        Q = _dense(kernel.submatrix(idx, idx))
        sums = Q.sum(axis=1)
        for _ in range(max_squarings):
            Q = Q @ Q
            new = Q.sum(axis=1)
            if np.max(np.abs(new - sums)) <= 1e-10:
                break
            sums = new
        u[idx] = np.clip(sums, 0.0, 1.0)
    return ValueFn(kernel.space, u)


@dataclass(frozen=True)
class EquivalenceReport:
    m_finite: bool
    contractive: bool
    unique: bool
    trivial: bool
    simple: bool

    @property
    def agree(self) -> bool:
        return len({self.m_finite, self.contractive, self.unique, self.trivial, self.simple}) == 1

    def to_dict(self) -> dict:
        return asdict(self)


def is_contractive(kernel: MatrixKernel, A: Region, max_power: int | None = None) -> bool:
    """Is ||I_A^n|| < 1 for some n <= |A| + 1?

    ||I_A^n|| is the largest row sum of (1_A P)^n, i.e. of P_AA^(n-1) on the
    rows of A; powers are formed explicitly.
    """
    idx = A.indices
    if idx.size == 0:
        return True
    if max_power is None:
        max_power = idx.size + 1
    Q = _dense(kernel.submatrix(idx, idx))
    power = np.eye(idx.size)
    for _ in range(1, max_power):
        power = power @ Q
        if np.abs(power).sum(axis=1).max() < 1.0 - ETA:
            return True
    return False


def theorem1_battery(kernel: MatrixKernel, A: Region) -> EquivalenceReport:
    """Evaluate the five equivalent characterisations of a simple set independently."""
    idx = A.indices
    m_finite = compute_m_rho(kernel, A, A.count + 1).certified
    contractive = is_contractive(kernel, A)
    unique = _rcond(np.eye(idx.size) - _dense(kernel.submatrix(idx, idx))) > RCOND_MIN
    trivial = float(invariance_limit(kernel, A).values.max(initial=0.0)) <= TRIVIAL_TOL
    simple = las_finite(kernel, A).las.is_empty()
    return EquivalenceReport(m_finite, contractive, unique, trivial, simple)


def uniqueness_iff_trivial(kernel: MatrixKernel, A: Region) -> tuple[bool, bool]:
    """(I - P_AA nonsingular, u(.; A) identically zero)."""
    idx = A.indices
    unique = _rcond(np.eye(idx.size) - _dense(kernel.submatrix(idx, idx))) > RCOND_MIN
    trivial = float(invariance_exact(kernel, A).values.max(initial=0.0)) <= TRIVIAL_TOL
    return unique, trivial
