"""Small fixtures shared by the unit tests."""

import numpy as np
from hypothesis import strategies as st

from pctlverify import MatrixKernel, Region, StateSpace
from pctlverify.generators import random_chain, random_disjoint_regions

# 0 -> 1 surely; 1 stays or moves to 2 with probability 1/2; 2 absorbing
THREE = np.array([[0.0, 1.0, 0.0], [0.0, 0.5, 0.5], [0.0, 0.0, 1.0]])

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def three_state():
    k = MatrixKernel(THREE)
    s = k.space
    return k, Region.from_states(s, [0, 1]), Region.from_states(s, [2])


def chain_and_regions(seed, max_n=25):
    rng = np.random.default_rng(seed)
    k = random_chain(rng, int(rng.integers(2, max_n + 1)))
    A, B = random_disjoint_regions(rng, k.space)
    return k, A, B, rng


def grid1d(cells=8, lo=-1.0, hi=1.0):
    return StateSpace.grid([(lo, hi)], (cells,))
