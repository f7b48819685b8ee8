import numpy as np
import pytest
from hypothesis import given, settings

from helpers import chain_and_regions, seeds, three_state
from pctlverify import MatrixKernel, Region, bounded_reach_avoid, invariance_exact, solve_reach_avoid_exact
from pctlverify import theorem1_battery, uniqueness_iff_trivial
from pctlverify import mclinear
from pctlverify.engine import bellman_residual
from pctlverify.generators import leaky_chain, trapped_chain


def test_three_state_values():
    k, A, B = three_state()
    assert np.allclose(solve_reach_avoid_exact(k, A, B).values, [1, 1, 1])
    assert not solve_reach_avoid_exact(k, A, Region.empty(k.space)).values.any()


def test_trap_has_value_zero():
    k = MatrixKernel([[1.0, 0, 0], [0.3, 0.3, 0.4], [0, 0, 1]])
    w = solve_reach_avoid_exact(k, Region.from_states(k.space, [0, 1]), Region.from_states(k.space, [2])).values
    assert w[0] == 0.0 and w[1] == pytest.approx(0.4 / 0.7)


@settings(max_examples=80, deadline=None)
@given(seeds)
def test_solution_is_the_least_fixpoint(seed):
    k, A, B, _ = chain_and_regions(seed)
    w = solve_reach_avoid_exact(k, A, B)
    assert bellman_residual(k, A, B, w) < 1e-10
    # value iteration from below never passes it
    assert np.all(bounded_reach_avoid(k, A, B, 60).values <= w.values + 1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_iterative_path_matches_direct_solve(seed):
    k, A, B, _ = chain_and_regions(seed)
    direct = solve_reach_avoid_exact(k, A, B).values
    old = mclinear.DIRECT_LIMIT
    mclinear.DIRECT_LIMIT = -1
    try:
        iterative = solve_reach_avoid_exact(k, A, B).values
    finally:
        mclinear.DIRECT_LIMIT = old
    assert np.allclose(direct, iterative, atol=1e-9)


def test_battery_examples():
    rng = np.random.default_rng(3)
    k, A = leaky_chain(rng, 12, 6)
    assert set(theorem1_battery(k, A).to_dict().values()) == {True}
    k, A = trapped_chain(rng, 12, 6)
    assert set(theorem1_battery(k, A).to_dict().values()) == {False}
    assert set(theorem1_battery(k, Region.empty(k.space)).to_dict().values()) == {True}


def test_uniqueness_iff_trivial_examples():
    k = MatrixKernel([[1.0, 0, 0], [0.3, 0.3, 0.4], [0, 0, 1]])
    assert uniqueness_iff_trivial(k, Region.from_states(k.space, [0, 1])) == (False, False)
    assert uniqueness_iff_trivial(k, Region.from_states(k.space, [1])) == (True, True)
    cyc = MatrixKernel([[0, 1, 0], [0, 0, 1], [1, 0, 0]])
    assert uniqueness_iff_trivial(cyc, Region.full(cyc.space)) == (False, False)


def test_near_singular_scalar_block_is_not_unique():
    # 1 - 0.9999999999999999 would look perfectly conditioned to a scale-free rcond
    k = MatrixKernel([[1 - 1e-16, 1e-16], [0, 1]], check=False)
    assert not uniqueness_iff_trivial(k, Region.from_states(k.space, [0]))[0]


def test_invariance_exact_matches_limit():
    rng = np.random.default_rng(11)
    k, A = trapped_chain(rng, 15, 8)
    assert np.allclose(invariance_exact(k, A).values, mclinear.invariance_limit(k, A).values, atol=1e-8)
