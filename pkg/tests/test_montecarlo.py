import math

import numpy as np
import pytest
from hypothesis import given, settings

from helpers import chain_and_regions, seeds, three_state
from pctlverify import AffineGauss1D, MatrixKernel, Region, StateSpace, bounded_invariance, bounded_reach_avoid
from pctlverify import estimate_invariance, estimate_reach_avoid, simulate
from pctlverify.montecarlo import BLOCK, Estimate, simulate_paths


def test_origin_path_is_constant():
    assert np.array_equal(simulate(AffineGauss1D(0, 1), 0.0, 20, seed=3).states, np.zeros(21))


def test_deterministic_row_gives_a_unique_path():
    k = MatrixKernel([[0, 1, 0], [0, 0, 1], [1, 0, 0]])
    assert simulate(k, 0, 5, seed=9).states.tolist() == [0, 1, 2, 0, 1, 2]


def test_same_seed_same_path_and_different_seed_differs():
    k = AffineGauss1D(0, 1)
    a, b, c = (simulate(k, 0.4, 50, seed=s).states for s in (1, 1, 2))
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_empty_target_is_exactly_zero():
    k, A, _ = three_state()
    est = estimate_reach_avoid(k, A, Region.empty(k.space), 0, 10, 100, seed=0)
    assert (est.mean, est.lower, est.upper) == (0.0, 0.0, 0.0)


def test_three_state_bounded_until():
    k, A, B = three_state()
    est = estimate_reach_avoid(k, A, B, 0, 2, 100_000, seed=4)
    assert est.lower <= 0.5 <= est.upper


def test_full_set_is_never_left():
    k, _, _ = three_state()
    assert estimate_invariance(k, Region.full(k.space), 1, 30, 1000, seed=0).mean == 1.0


def test_nonnegative_drift_leaves_quickly():
    g = StateSpace.grid([(-1, 1)], (64,))
    est = estimate_invariance(AffineGauss1D(0, 2), Region.full(g), 0.5, 10_000, 20_000, seed=2)
    assert est.mean <= 0.001


def test_negative_drift_keeps_nearby_points_longer():
    g = StateSpace.grid([(-1, 1)], (64,))
    k = AffineGauss1D(0, 1)
    near, far = (estimate_invariance(k, Region.full(g), x, 300, 20_000, seed=3).mean for x in (0.05, 0.8))
    assert near > far and near > 0.5


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_agrees_with_dynamic_programming(seed):
    k, A, B, rng = chain_and_regions(seed, max_n=10)
    x0 = int(rng.integers(k.n))
    exact_w = bounded_reach_avoid(k, A, B, 6).values[x0]
    exact_u = bounded_invariance(k, A, 6).values[x0]
    w = estimate_reach_avoid(k, A, B, x0, 6, 20_000, seed=seed % 1000)
    u = estimate_invariance(k, A, x0, 6, 20_000, seed=seed % 1000)
    # 4.5 standard errors plus a floor for degenerate variance
    for est, exact in ((w, exact_w), (u, exact_u)):
        se = math.sqrt(max(exact * (1 - exact), 1e-4) / est.samples)
        assert abs(est.mean - exact) <= 4.5 * se


def test_thread_count_does_not_change_estimates():
    g = StateSpace.grid([(-1, 1)], (64,))
    k = AffineGauss1D(0, 1)
    n = 3 * BLOCK + 17
    a = estimate_invariance(k, Region.full(g), 0.3, 100, n, seed=5, threads=1)
    b = estimate_invariance(k, Region.full(g), 0.3, 100, n, seed=5, threads=4)
    assert a == b
    assert np.array_equal(simulate_paths(k, 0.3, 10, n, 5, threads=1), simulate_paths(k, 0.3, 10, n, 5, threads=3))


def test_tail_widening_direction():
    k, A, B = three_state()
    w = estimate_reach_avoid(k, A, B, 0, 2, 1000, seed=1, tail=0.1)
    assert w.upper == pytest.approx(min(1.0, w.mean + w.half_width + 0.1))
    u = estimate_invariance(k, A, 0, 2, 1000, seed=1, tail=0.1)
    assert u.lower == pytest.approx(max(0.0, u.mean - u.half_width - 0.1))


def test_hitting_time():
    k = MatrixKernel([[0, 1, 0], [0, 0, 1], [0, 0, 1]])
    path = simulate(k, 0, 4, seed=0)
    assert path.hitting_time(Region.from_states(k.space, [2])) == 2
    assert path.hitting_time(Region.empty(k.space)) == math.inf


def test_estimate_contains_and_serialises():
    e = Estimate(0.5, 0.1, 100, 0, 0.4, 0.6)
    assert e.contains(0.55) and not e.contains(0.65) and e.contains(0.65, z=3.0)
    assert e.to_dict()["samples"] == 100


def test_path_array_shapes():
    assert simulate_paths(AffineGauss1D(0, 1), 0.5, 7, 5, seed=0).shape == (5, 8)
    with pytest.raises(ValueError):
        simulate_paths(AffineGauss1D(0, 1), 0.5, -1, 5, seed=0)
