"""A three-state chain, checked three ways.

State 0 moves to 1; state 1 stays or moves to the absorbing goal 2 with
equal odds. The probability of eventually reaching the goal is 1 from
every state, which the exact linear solve, the certified contraction
sandwich and plain simulation should all agree on.
"""

import numpy as np

from pctlverify import MatrixKernel, Region, solve_reach_avoid_exact, unbounded_reach_avoid
from pctlverify.montecarlo import estimate_reach_avoid

P = np.array([[0.0, 1.0, 0.0], [0.0, 0.5, 0.5], [0.0, 0.0, 1.0]])
kernel = MatrixKernel(P)
A = Region.from_states(kernel.space, [0, 1])
B = Region.from_states(kernel.space, [2])

exact = solve_reach_avoid_exact(kernel, A, B)
print("exact w            ", exact.values)

lo, hi, cert = unbounded_reach_avoid(kernel, A, B, eps=1e-6)
print(f"certificate         m={cert.m} rho={cert.rho} horizon={cert.horizon} tail={cert.tail:.2e}")
print("sandwich lower     ", np.round(lo.values, 8))
print("sandwich upper     ", np.round(hi.values, 8))

est = estimate_reach_avoid(kernel, A, B, 0, cert.horizon, 50_000, seed=1, tail=cert.tail)
print(f"simulated from 0    {est.mean:.4f}  95% interval [{est.lower:.4f}, {est.upper:.4f}]")
