"""Contraction analysis: m(A), rho(A), geometric tail bounds and horizon planning."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .engine import ValueFn, bounded_reach_avoid, invariance_iterates
from .kernel import MatrixKernel
from .space import Region

ETA = 1e-9

CERTIFIED = "Certified"
UNKNOWN = "Unknown"


@dataclass(frozen=True)
class Certificate:
    m: int | None
    rho: float
    horizon: int
    tail: float
    status: str
    raw_tail: float = math.inf

    @property
    def certified(self) -> bool:
        return self.status == CERTIFIED

    def at_horizon(self, n: int) -> Certificate:
        if not self.certified:
            raise NonContractive(None, self)
        if self.m == 0:
            return replace(self, horizon=n, tail=0.0, raw_tail=0.0)
        return replace(self, horizon=n, tail=tail_bound(self.m, self.rho, n),
                       raw_tail=raw_tail_bound(self.m, self.rho, n))

    def to_dict(self) -> dict:
        d = asdict(self)
        if not math.isfinite(d["raw_tail"]):
            d["raw_tail"] = None
        return d


class NonContractive(RuntimeError):
    """No horizon m <= m_max gave ||u_m|| < 1; the set may hold an absorbing subset."""

    def __init__(self, region: Region | None, certificate: Certificate, kernel: MatrixKernel | None = None):
        self.region = region
        self.certificate = certificate
        self.kernel = kernel
        size = "?" if region is None else region.count
        super().__init__(f"no contraction certificate for a set of {size} states "
                         f"(status {certificate.status}); it is possibly non-simple")

    def diagnose(self):
        """Largest absorbing subset of the offending set (finite chains only)."""
        from .absorbing import las_finite

        if self.kernel is None or self.region is None:
            raise ValueError("no kernel attached to diagnose")
        return las_finite(self.kernel, self.region)


def compute_m_rho(kernel: MatrixKernel, A: Region, m_max: int | None = None) -> Certificate:
    """First m with sup u_m(.; A) < 1 - ETA, and rho = sup u_m.

    ``m_max`` defaults to |A| + 1, beyond which a finite chain cannot have a
    finite m(A).
    """
    if m_max is None:
        m_max = A.count + 1
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    for k, u in enumerate(invariance_iterates(kernel, A, m_max)):
        norm = float(u.max(initial=0.0))
        if norm < 1.0 - ETA:
            cert = Certificate(m=k, rho=norm, horizon=0, tail=1.0 if k else 0.0, status=CERTIFIED)
            return cert.at_horizon(0)
    return Certificate(m=None, rho=1.0, horizon=0, tail=1.0, status=UNKNOWN)


def raw_tail_bound(m: int, rho: float, n: int) -> float:
    if rho >= 1:
        return math.inf
    return m / (1.0 - rho) * rho ** (n // m)


def tail_bound(m: int, rho: float, n: int) -> float:
    """Uniform bound on w - w_n: min(1, m / (1 - rho) * rho ** floor(n / m))."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not 0 <= rho < 1:
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    if n < 0:
        raise ValueError("n must be non-negative")
    return min(1.0, raw_tail_bound(m, rho, n))


def plan_horizon(m: int, rho: float, eps: float) -> int:
    """Smallest n with tail_bound(m, rho, n) <= eps."""
    if not 0 <= rho < 1:
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if m == 0:
        return 0
    if rho == 0:
        return m
    k = max(0, math.ceil(math.log(eps * (1 - rho) / m) / math.log(rho)))
    # the log estimate can be off by one either way in floating point
    while k > 0 and tail_bound(m, rho, m * (k - 1)) <= eps:
        k -= 1
    while tail_bound(m, rho, m * k) > eps:
        k += 1
    return m * k


def unbounded_reach_avoid(kernel: MatrixKernel, A: Region, B: Region, eps: float,
                          m_max: int | None = None):
    """Certified sandwich ``lower <= w(.; A, B) <= upper``.

    Returns ``(lower, upper, certificate)``. Raises NonContractive when A
    minus B has no contraction certificate within ``m_max`` steps.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    core = A - B
    if B.is_empty():
        zero = ValueFn(kernel.space, np.zeros(kernel.n))
        return zero, zero, Certificate(m=0, rho=0.0, horizon=0, tail=0.0, status=CERTIFIED, raw_tail=0.0)
    cert = compute_m_rho(kernel, core, m_max)
    if not cert.certified:
        raise NonContractive(core, cert, kernel)
    n = plan_horizon(cert.m, cert.rho, eps)
    cert = cert.at_horizon(n)
    lower = bounded_reach_avoid(kernel, A, B, n)
    up = lower.values.copy()
    # the gap w - w_n vanishes outside A minus B
    up[core.mask] = np.minimum(1.0, up[core.mask] + cert.tail)
    return lower, ValueFn(kernel.space, up), cert
