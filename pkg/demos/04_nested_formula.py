"""Nested PCTL on a random finite chain, traced level by level.

Each probabilistic subformula is decided to precision delta. States within
delta of a threshold fall between the inner and outer sets, which is why
some levels show sub_count < super_count.
"""

import numpy as np

from pctlverify import FiniteContext, Region, parse, to_text, verify
from pctlverify.formula import desugar_invariance
from pctlverify.generators import random_chain

rng = np.random.default_rng(2024)
kernel = random_chain(rng, 30, absorbing_rate=0.15)
labels = {name: Region(kernel.space, rng.random(30) < 0.5) for name in ("a", "b", "c")}

f = parse("P[>=0.5](a U P[>0.3](G<=4 !c)) & !P[<0.2](X b)")
print("formula   ", to_text(f))
print("desugared ", to_text(desugar_invariance(f)))

for exact in (True, False):
    trace = []
    delta = 0.0 if exact else 1e-3
    verify(f, FiniteContext(kernel, labels, exact=exact), delta, trace)
    print(f"\n{'exact linear solve' if exact else 'contraction sandwich'} (delta = {delta:g})")
    for e in trace:
        cert = e.certificates[0] if e.certificates else None
        extra = f"  m={cert.m} n={cert.horizon}" if cert is not None and cert.m is not None else ""
        print(f"  {e.result.sub.count:3d} <= {e.result.super.count:3d}   {e.formula}{extra}")
