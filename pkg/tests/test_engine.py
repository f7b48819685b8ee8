import io

import numpy as np
import pytest
from hypothesis import given, settings

from helpers import THREE, chain_and_regions, seeds, three_state
from pctlverify import MatrixKernel, Region, StateSpace, ValueFn, apply_invariance_op, bounded_invariance, bounded_reach_avoid
from pctlverify import engine
from pctlverify.engine import bellman_residual, reach_avoid_iterates, write_values_csv
from pctlverify.space import SpaceMismatch


def test_operator_on_full_and_empty_sets():
    k, _, _ = three_state()
    s = k.space
    assert np.array_equal(apply_invariance_op(k, Region.full(s), np.ones(3)).values, np.ones(3))
    assert np.array_equal(apply_invariance_op(k, Region.empty(s), np.ones(3)).values, np.zeros(3))


def test_operator_hand_product():
    k, A, _ = three_state()
    f = np.array([0.2, 0.4, 0.8])
    # row 0 -> f(1); row 1 -> (f(1) + f(2)) / 2; row 2 is outside A
    assert np.allclose(apply_invariance_op(k, A, f).values, [0.4, 0.6, 0.0])


def test_reach_avoid_hand_iterations():
    k, A, B = three_state()
    assert np.array_equal(bounded_reach_avoid(k, A, B, 0).values, B.mask.astype(float))
    assert np.allclose(bounded_reach_avoid(k, A, B, 2).values, [0.5, 0.75, 1.0])
    assert np.array_equal(bounded_reach_avoid(k, A, Region.empty(k.space), 7).values, np.zeros(3))


def test_invariance_hand_iterations():
    k, A, _ = three_state()
    assert np.array_equal(bounded_invariance(k, A, 0).values, [1, 1, 0])
    assert np.allclose(bounded_invariance(k, A, 1).values, [1, 0.5, 0])
    assert np.allclose(bounded_invariance(k, A, 2).values, [0.5, 0.25, 0])
    assert np.array_equal(bounded_invariance(k, Region.full(k.space), 9).values, np.ones(3))


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_reach_avoid_is_monotone_and_bounded(seed):
    k, A, B, _ = chain_and_regions(seed)
    ws = list(reach_avoid_iterates(k, A, B, 15))
    for a, b in zip(ws, ws[1:]):
        assert np.all(b >= a) and np.all((b >= 0) & (b <= 1))


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_invariance_is_dual_to_reach_avoid(seed):
    k, A, _, _ = chain_and_regions(seed)
    u = bounded_invariance(k, A, 10).values
    w = bounded_reach_avoid(k, Region.full(k.space), ~A, 10).values
    assert np.allclose(u, 1 - w, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_reach_avoid_against_path_enumeration(seed):
    k, A, B, _ = chain_and_regions(seed, max_n=6)
    P = k.dense()
    n = 4
    # distribution of the stopped walk, kept explicitly
    expect = np.zeros(k.n)
    for x in range(k.n):
        mass = np.zeros(k.n)
        mass[x] = 1.0
        hit = 0.0
        for step in range(n + 1):
            hit += mass[B.mask].sum()
            mass = np.where(A.mask & ~B.mask, mass, 0.0)
            if step < n:
                mass = mass @ P
        expect[x] = hit
    assert np.allclose(bounded_reach_avoid(k, A, B, n).values, expect, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_threads_do_not_change_bits(seed):
    k, A, B, _ = chain_and_regions(seed, max_n=25)
    big = MatrixKernel(np.kron(np.eye(30), k.dense()))
    Ab = Region(big.space, np.tile(A.mask, 30))
    Bb = Region(big.space, np.tile(B.mask, 30))
    one = bounded_reach_avoid(big, Ab, Bb, 12).values
    engine.set_threads(4)
    try:
        four = bounded_reach_avoid(big, Ab, Bb, 12).values
    finally:
        engine.set_threads(1)
    assert np.array_equal(one, four)


def test_bellman_residual_is_zero_at_the_fixpoint():
    k, A, B = three_state()
    assert bellman_residual(k, A, B, np.ones(3)) == pytest.approx(0.0)
    assert bellman_residual(k, A, B, np.array([0.5, 0.75, 1.0])) > 0


def test_value_functions_reject_out_of_range_values():
    s = StateSpace.finite(2)
    with pytest.raises(ValueError):
        ValueFn(s, [0.5, 1.5])
    with pytest.raises(ValueError):
        ValueFn(s, [0.5])


def test_space_mismatch_and_negative_horizon():
    k, A, B = three_state()
    with pytest.raises(SpaceMismatch):
        bounded_reach_avoid(k, Region.full(StateSpace.finite(4)), B, 1)
    with pytest.raises(ValueError):
        bounded_reach_avoid(k, A, B, -1)


def test_values_csv():
    k, A, B = three_state()
    buf = io.StringIO()
    write_values_csv(buf, k.space, bounded_reach_avoid(k, A, B, 2))
    assert buf.getvalue().splitlines() == ["index,x1,lower,upper", "0,0,0.5,0.5", "1,1,0.75,0.75", "2,2,1.0,1.0"]


def test_three_state_fixture_is_stochastic():
    assert np.allclose(THREE.sum(axis=1), 1)
