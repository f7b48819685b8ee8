"""Stochastic kernels: finite matrices and the built-in Gaussian density families."""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, sparse
from scipy.special import ndtr

from .space import Region, SpaceMismatch, StateSpace

ROW_TOL = 1e-12
SPARSE_DENSITY = 0.25


class QuadratureError(RuntimeError):
    pass


class MatrixKernel:
    """Row-stochastic transition matrix over a finite state space.

    Dense storage is used unless fewer than 25% of the entries are nonzero,
    in which case the matrix is kept in CSR form.
    """

    def __init__(self, matrix, space: StateSpace | None = None, check: bool = True):
        if sparse.issparse(matrix):
            m = sparse.csr_matrix(matrix, dtype=float)
        else:
            m = np.array(matrix, dtype=float)
            if m.ndim != 2:
                raise ValueError("transition matrix must be two-dimensional")
        n, k = m.shape
        if n != k:
            raise ValueError(f"transition matrix must be square, got {m.shape}")
        if space is None:
            space = StateSpace.finite(n)
        if space.size != n:
            raise SpaceMismatch(f"matrix of size {n} over space of size {space.size}")
        if check:
            data = m.data if sparse.issparse(m) else m
            if np.any(data < 0) or not np.all(np.isfinite(data)):
                raise ValueError("transition probabilities must be finite and non-negative")
            sums = np.asarray(m.sum(axis=1)).ravel()
            bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_TOL)
            if bad.size:
                raise ValueError(f"row {bad[0]} sums to {sums[bad[0]]!r}, not 1")
        if not sparse.issparse(m):
            if np.count_nonzero(m) < SPARSE_DENSITY * m.size:
                m = sparse.csr_matrix(m)
        else:
            if m.nnz >= SPARSE_DENSITY * n * n:
                m = m.toarray()
        if sparse.issparse(m):
            m.sort_indices()
        self.matrix = m
        self.space = space

    @property
    def n(self) -> int:
        return self.space.size

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.matrix)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else self.matrix

    def row(self, i: int) -> np.ndarray:
        if self.is_sparse:
            return self.matrix.getrow(i).toarray().ravel()
        return self.matrix[i]

    def submatrix(self, rows, cols=None):
        """Restriction to the given rows (and columns), keeping the storage kind."""
        rows = np.asarray(rows)
        m = self.matrix[rows]
        if cols is not None:
            m = m[:, np.asarray(cols)]
        if sparse.issparse(m):
            m = sparse.csr_matrix(m)
            m.sort_indices()
        return m

    def transition_prob(self, x: int, region: Region) -> float:
        if region.space != self.space:
            raise SpaceMismatch("region and kernel live on different spaces")
        return float(np.sum(self.row(int(x))[region.mask]))

    def adjacency(self) -> sparse.csr_matrix:
        """Edge (i, j) iff p_ij > 0."""
        m = sparse.csr_matrix(self.matrix)
        m.eliminate_zeros()
        return sparse.csr_matrix((np.ones_like(m.data, dtype=bool), m.indices, m.indptr), shape=m.shape)

    def step(self, states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Sample one transition for each state in ``states``."""
        if not hasattr(self, "_cum"):
            cum = np.cumsum(self.dense(), axis=1)
            cum[:, -1] = 1.0
            self._cum = cum
        u = rng.random(len(states))
        cum = self._cum[states]
        nxt = (u[:, None] >= cum).sum(axis=1)
        return np.minimum(nxt, self.n - 1)


class DensityKernel:
    """Integral kernel with a Gaussian density away from its absorbing points.

    Subclasses supply the conditional mean and noise scale of the next
    state; at an absorbing point the kernel is the point mass there.
    """

    dim = 1
    absorbing_points = np.zeros((1, 1))
    full_support = True

    def mean_scale(self, points: np.ndarray):
        raise NotImplementedError

    def _points(self, x) -> np.ndarray:
        pts = np.asarray(x, dtype=float)
        if self.dim == 1:
            return pts.reshape(-1, 1)
        pts = np.atleast_2d(pts)
        if pts.shape[-1] != self.dim:
            raise SpaceMismatch(f"expected {self.dim}-dimensional points, got shape {pts.shape}")
        return pts

    def is_absorbing(self, x) -> np.ndarray:
        pts = self._points(x)
        hit = np.zeros(len(pts), dtype=bool)
        for a in self.absorbing_points:
            hit |= np.all(pts == a, axis=1)
        return hit

    def step(self, x, rng: np.random.Generator) -> np.ndarray:
        pts = self._points(x)
        mean, scale = self.mean_scale(pts)
        noise = rng.standard_normal(pts.shape)
        nxt = mean + scale[:, None] * noise
        return nxt.ravel() if self.dim == 1 else nxt

    def density(self, x, y) -> np.ndarray:
        """p(x, y) for non-absorbing x (Lebesgue density of the next state)."""
        pts = self._points(x)
        ys = self._points(y)
        mean, scale = self.mean_scale(pts)
        if np.any(scale == 0):
            raise ValueError("density undefined at an absorbing point")
        z = (ys - mean) / scale[:, None]
        return np.prod(np.exp(-0.5 * z**2) / (math.sqrt(2 * math.pi) * scale[:, None]), axis=1)

    def cell_probabilities(self, x, grid: StateSpace):
        """Exact probabilities of landing in each grid cell, plus the escaping mass.

        Returns ``(probs, outside)`` with shapes ``(n_points, grid.size)`` and
        ``(n_points,)``. Gaussian rows are products of per-axis CDF
        differences; absorbing points put all mass on their own cell.
        """
        if not grid.is_grid or grid.dim != self.dim:
            raise SpaceMismatch(f"need a {self.dim}D grid")
        pts = self._points(x)
        mean, scale = self.mean_scale(pts)
        absorbing = scale == 0
        safe_scale = np.where(absorbing, 1.0, scale)
        per_axis = []
        for k in range(self.dim):
            e = grid.edges(k)
            z = (e[None, :] - mean[:, k:k + 1]) / safe_scale[:, None]
            a, b = z[:, :-1], z[:, 1:]
            per_axis.append(np.where(a > 0, ndtr(-a) - ndtr(-b), ndtr(b) - ndtr(a)))
        if self.dim == 1:
            probs = per_axis[0]
        else:
            probs = np.einsum("ni,nj->nij", per_axis[0], per_axis[1]).reshape(len(pts), -1)
        if absorbing.any():
            probs[absorbing] = 0.0
            cells = grid.cell_of(pts[absorbing])
            rows = np.flatnonzero(absorbing)
            inside = cells >= 0
            probs[rows[inside], cells[inside]] = 1.0
        outside = np.clip(1.0 - probs.sum(axis=1), 0.0, 1.0)
        return probs, outside

    def transition_prob(self, x, region: Region) -> float:
        probs, _ = self.cell_probabilities(x, region.space)
        return float(probs[0, region.mask].sum())

    def box_prob(self, x, box) -> float:
        """P(x, box) for an axis-aligned box in closed form."""
        pts = self._points(x)[:1]
        if self.is_absorbing(pts)[0]:
            return float(all(lo <= pts[0, k] <= hi for k, (lo, hi) in enumerate(box)))
        mean, scale = self.mean_scale(pts)
        p = 1.0
        for k, (lo, hi) in enumerate(box):
            p *= float(ndtr((hi - mean[0, k]) / scale[0]) - ndtr((lo - mean[0, k]) / scale[0]))
        return p

    def expectation(self, g, x, nodes: int = 80) -> np.ndarray:
        """Pg(x) = E[g(x_1) | x_0 = x] by Gauss-Hermite quadrature."""
        pts = self._points(x)
        mean, scale = self.mean_scale(pts)
        t, w = np.polynomial.hermite_e.hermegauss(nodes)
        w = w / w.sum()
        if self.dim == 1:
            y = mean + scale[:, None] * t[None, :]
            vals = np.asarray(g(y.reshape(-1, 1)), dtype=float).reshape(y.shape)
            return vals @ w
        t1, t2 = np.meshgrid(t, t, indexing="ij")
        ww = np.outer(w, w).ravel()
        out = np.empty(len(pts))
        for i in range(len(pts)):
            y = np.stack([mean[i, 0] + scale[i] * t1.ravel(), mean[i, 1] + scale[i] * t2.ravel()], axis=1)
            out[i] = np.asarray(g(y), dtype=float) @ ww
        return out


class AffineGauss1D(DensityKernel):
    """x' = mu * x + sigma * x * xi with standard normal xi; the origin is absorbing."""

    dim = 1
    absorbing_points = np.zeros((1, 1))

    def __init__(self, mu: float, sigma: float):
        if not sigma > 0:
            raise ValueError("sigma must be positive")
        self.mu = float(mu)
        self.sigma = float(sigma)

    def mean_scale(self, points):
        x = points[:, 0]
        return (self.mu * x)[:, None], self.sigma * np.abs(x)

    def __repr__(self):
        return f"AffineGauss1D(mu={self.mu}, sigma={self.sigma})"


class Nonlinear2D(DensityKernel):
    """Two-dimensional polynomial dynamics with state-dependent isotropic noise.

    x1' = 0.5 x2 (3 x1^2 + 2 x2^2 - 0.5) + 0.6 |x| eta
    x2' = 0.9 x2 (2 x1^2 + 4 x1 x2 + 3 x2^2 - 0.5) + 0.6 |x| zeta
    """

    dim = 2
    absorbing_points = np.zeros((1, 2))

    def mean_scale(self, points):
        x1, x2 = points[:, 0], points[:, 1]
        m1 = 0.5 * x2 * (3 * x1**2 + 2 * x2**2 - 0.5)
        m2 = 0.9 * x2 * (2 * x1**2 + 4 * x1 * x2 + 3 * x2**2 - 0.5)
        return np.stack([m1, m2], axis=1), 0.6 * np.hypot(x1, x2)

    def __repr__(self):
        return "Nonlinear2D()"


def transition_prob(kernel, x, region: Region) -> float:
    return kernel.transition_prob(x, region)


def _std_normal_pdf(t):
    return np.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)


def _check(err, tol, what):
    if not err <= tol:
        raise QuadratureError(f"{what}: quadrature error estimate {err:.2e} exceeds {tol:.0e}")


def affine_gauss_drift(mu: float, sigma: float, tol: float = 1e-8) -> float:
    """h(mu, sigma) = E log|mu + sigma * xi| for standard normal xi.

    The integrand has a log singularity at xi = -mu/sigma; the two unit
    intervals next to it are integrated with QUADPACK's algebraic-log
    weights and the tails with ordinary adaptive quadrature.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    s = -mu / sigma
    ls = math.log(sigma)
    f = lambda t: math.log(abs(mu + sigma * t)) * _std_normal_pdf(t)
    kw = dict(epsabs=tol / 10, epsrel=0.0, limit=200)
    left, e1 = integrate.quad(_std_normal_pdf, s - 1, s, weight="alg-logb", wvar=(0.0, 0.0), **kw)
    right, e2 = integrate.quad(_std_normal_pdf, s, s + 1, weight="alg-loga", wvar=(0.0, 0.0), **kw)
    lo_tail, e3 = integrate.quad(f, -np.inf, s - 1, **kw)
    hi_tail, e4 = integrate.quad(f, s + 1, np.inf, **kw)
    near = ls * float(ndtr(s + 1) - ndtr(s - 1))
    _check(e1 + e2 + e3 + e4, tol, "affine_gauss_drift")
    return left + right + near + lo_tail + hi_tail


def affine_gauss_moment(mu: float, sigma: float, q: float, tol: float = 1e-8) -> float:
    """b(q) = E|mu + sigma * xi|^q, so that P|x|^q = b(q) |x|^q."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if q < 0:
        raise ValueError("q must be non-negative")
    if q == 0:
        return 1.0
    s = -mu / sigma
    f = lambda t: abs(mu + sigma * t) ** q * _std_normal_pdf(t)
    kw = dict(epsabs=tol / 10, epsrel=0.0, limit=200)
    left, e1 = integrate.quad(_std_normal_pdf, s - 1, s, weight="alg", wvar=(0.0, q), **kw)
    right, e2 = integrate.quad(_std_normal_pdf, s, s + 1, weight="alg", wvar=(q, 0.0), **kw)
    lo_tail, e3 = integrate.quad(f, -np.inf, s - 1, **kw)
    hi_tail, e4 = integrate.quad(f, s + 1, np.inf, **kw)
    _check(e1 + e2 + e3 + e4, tol, "affine_gauss_moment")
    return sigma**q * (left + right) + lo_tail + hi_tail


def nonlinear2d_Pg(x1, x2):
    """E|x'|^2 for the 2D system, as a closed-form polynomial in (x1, x2)."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    return (
        144 * x1**2 + 197 * x2**2 - 474 * x1**2 * x2**2 + 1098 * x1**4 * x2**2
        - 648 * x1 * x2**3 + 2592 * x1**3 * x2**3 - 586 * x2**4 + 5136 * x1**2 * x2**4
        + 3888 * x1 * x2**5 + 1658 * x2**6
    ) / 200.0
