"""The scalar system x' = mu x + sigma x xi in its two regimes.

The sign of h = E log|mu + sigma xi| decides everything. With h >= 0
(sigma = 2) trajectories leave [-1, 1] almost surely from anywhere but the
origin, so no locally excessive function can exist. With h < 0
(sigma = 1) |x| is excessive, and excising a small neighbourhood of the
origin turns the non-simple invariance problem into a certified one.
"""

import numpy as np

from pctlverify import AffineGauss1D, Region, StateSpace, discretize
from pctlverify.decompose import (NoExcessiveFunction, decompose_invariance, excision_region, find_power_q,
                                  power_candidate, verify_local_excessivity)
from pctlverify.engine import bounded_invariance
from pctlverify.kernel import affine_gauss_drift, affine_gauss_moment
from pctlverify.montecarlo import estimate_invariance

for sigma in (2.0, 1.0):
    print(f"sigma={sigma}: h = {affine_gauss_drift(0.0, sigma):+.5f}")

# h >= 0: the invariance probability vanishes away from the origin
grid = StateSpace.grid([(-1.0, 1.0)], (512,))
k2 = AffineGauss1D(0.0, 2.0)
ab = discretize(k2, grid, lam=0.0)
u = bounded_invariance(ab.chain, ab.lift(Region.full(grid)), 2000).values[:512]
print(f"sigma=2, grid u_2000 away from 0: max {u[np.abs(grid.centers()[:, 0]) >= 0.1].max():.1e}")
try:
    find_power_q(0.0, 2.0)
except NoExcessiveFunction as exc:
    print("sigma=2, candidate search:", exc)

# h < 0: |x| is excessive with P|x| = b(1)|x|
print(f"sigma=1, b(1) = {affine_gauss_moment(0.0, 1.0, 1.0):.8f}  (sqrt(2/pi) = {np.sqrt(2 / np.pi):.8f})")
grid = StateSpace.grid([(-1.0, 1.0)], (400,))
k1 = AffineGauss1D(0.0, 1.0)
A = Region.full(grid)
cand = power_candidate(k1, grid, 1.0, delta=1.0)
print("sigma=1, local excessivity:", verify_local_excessivity(k1, cand, A).status)
C = excision_region(grid, cand, 0.05)
res = decompose_invariance(discretize(k1, grid, lam=0.0), A, C, eps_claim=0.05)
print(f"excised {C.count} cells; certificate m={res.certificate.m} rho={res.certificate.rho:.3f}; status {res.status}")
for x in (0.0125, 0.2525, 0.5025, 0.9975):
    i = grid.cell_of(np.array([[x]]))[0]
    est = estimate_invariance(k1, A, x, 500, 20_000, seed=i)
    print(f"  x={x:+.4f}  u in [{res.lower.values[i]:.3f}, {res.upper.values[i]:.3f}]   simulated {est.mean:.3f}")
