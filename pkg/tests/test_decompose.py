import numpy as np
import pytest

from pctlverify import AffineGauss1D, MatrixKernel, Nonlinear2D, Region, StateSpace, discretize, las_finite
from pctlverify import invariance_exact, region_from_box, solve_reach_avoid_exact
from pctlverify.decompose import (CERTIFIED, CONDITIONAL, UNCERTIFIED, ExcessiveCandidate, NoExcessiveFunction,
                                  UnverifiedCandidate, builtin_candidate, conditional_excision, decompose_invariance,
                                  decompose_reach_avoid, doob_lower_bound, excessive_set, excision_region,
                                  find_power_q, norm_squared_candidate, power_candidate, verify_local_excessivity)
from pctlverify.generators import random_chain, random_disjoint_regions
from pctlverify.montecarlo import estimate_invariance

NL_GRID = StateSpace.grid([(-0.6, 0.6), (-0.6, 0.6)], (60, 60))


def test_zero_function_is_excessive_everywhere():
    g = StateSpace.grid([(-1, 1)], (10,))
    zero = lambda x: np.zeros(len(np.atleast_1d(x)))  # noqa: E731
    assert excessive_set(AffineGauss1D(0, 1), zero, Region.full(g)).mask.all()


def test_norm_squared_sublevel_is_excessive():
    cand = norm_squared_candidate(NL_GRID)
    sub = Region(NL_GRID, cand.g(NL_GRID.centers()) < 0.25)
    assert sub.issubset(excessive_set(Nonlinear2D(), cand.g, sub, cand.Pg))


def test_absolute_value_is_excessive_for_contracting_affine_system():
    g = StateSpace.grid([(-1, 1)], (50,))
    cand = power_candidate(AffineGauss1D(0, 1), g, 1.0)
    assert excessive_set(AffineGauss1D(0, 1), cand.g, Region.full(g), cand.Pg).mask.all()


def test_nonlinear_candidate_passes_and_large_delta_fails_containment():
    A = Region.full(NL_GRID)
    rep = verify_local_excessivity(Nonlinear2D(), norm_squared_candidate(NL_GRID, 0.25), A)
    assert rep.passed and rep.status == "numerically verified"
    bad = verify_local_excessivity(Nonlinear2D(), norm_squared_candidate(NL_GRID, 10.0), A)
    assert not bad.passed and "sublevel_in_A" in bad.failures


@pytest.mark.parametrize("q", [0.1, 0.5, 1.0, 2.0])
def test_no_power_candidate_when_drift_is_nonnegative(q):
    g = StateSpace.grid([(-1, 1)], (80,))
    k = AffineGauss1D(0, 2)
    rep = verify_local_excessivity(k, power_candidate(k, g, q, delta=1.0), Region.full(g))
    assert "sublevel_in_excessive_set" in rep.failures


def test_power_search():
    q, b = find_power_q(0, 1)
    assert 0 < q < 2 and b < 1 - 1e-3
    with pytest.raises(NoExcessiveFunction):
        find_power_q(0, 2)
    assert builtin_candidate(AffineGauss1D(0, 2), StateSpace.grid([(-1, 1)], (8,))) is None


def test_doob_bound_values_and_guard():
    g = StateSpace.grid([(-1, 1)], (40,))
    k = AffineGauss1D(0, 1)
    cand = power_candidate(k, g, 1.0, delta=1.0)
    rep = verify_local_excessivity(k, cand, Region.full(g))
    assert np.allclose(doob_lower_bound(cand, np.array([0.0, 0.5, 1.0, 3.0]), rep), [1, 0.5, 0, 0])
    with pytest.raises(UnverifiedCandidate):
        doob_lower_bound(cand, np.array([0.1]), None)


@pytest.mark.parametrize("x", [0.2, 0.5])
def test_doob_bound_below_simulation(x):
    g = StateSpace.grid([(-1, 1)], (40,))
    k = AffineGauss1D(0, 1)
    cand = power_candidate(k, g, 1.0, delta=1.0)
    rep = verify_local_excessivity(k, cand, Region.full(g))
    bound = float(doob_lower_bound(cand, np.array([x]), rep)[0])
    # {|x| < 1} versus the closed-open grid differs only on a null set
    est = estimate_invariance(k, Region.full(g), x, 2000, 20000, seed=5)
    assert bound <= est.mean + 3 * np.sqrt(est.mean * (1 - est.mean) / est.samples)


def test_excision_is_rounded_inward():
    cand = norm_squared_candidate(NL_GRID, 0.25)
    C = excision_region(NL_GRID, cand, 0.02)
    assert not C.is_empty()
    half = NL_GRID.widths / 2
    for c in NL_GRID.centers()[C.indices]:
        corners = np.abs(c) + half
        assert corners @ corners <= 0.005 + 1e-12
    assert np.all(np.abs(NL_GRID.centers()[C.indices]) < 0.0707)


def test_finite_excision_of_the_exact_core_is_lossless():
    rng = np.random.default_rng(8)
    for _ in range(100):
        k = random_chain(rng, int(rng.integers(3, 30)), absorbing_rate=0.25)
        A, B = random_disjoint_regions(rng, k.space, p_a=0.7)
        core = las_finite(k, A - B).las
        res = decompose_reach_avoid(k, A, B, core, eps_claim=0.0, eps=1e-6)
        w = solve_reach_avoid_exact(k, A, B).values
        assert np.all(res.lower.values <= w + 1e-12) and np.all(w <= res.upper.values + 1e-12)
        assert res.status == CERTIFIED


def test_decomposition_soundness_with_larger_excision():
    rng = np.random.default_rng(9)
    for _ in range(100):
        k = random_chain(rng, int(rng.integers(3, 30)), absorbing_rate=0.25)
        A, B = random_disjoint_regions(rng, k.space, p_a=0.7)
        core = las_finite(k, A - B).las
        C = core | Region(k.space, (A - B).mask & (rng.random(k.n) < 0.3))
        w = solve_reach_avoid_exact(k, A, B).values
        claim = float(w[C.mask].max(initial=0.0))
        res = decompose_reach_avoid(k, A, B, C, eps_claim=claim, eps=1e-6)
        assert np.all(res.lower.values <= w + 1e-12) and np.all(w <= res.upper.values + 1e-12)

        Ainv = A | B
        Cinv = las_finite(k, Ainv).las | Region(k.space, Ainv.mask & (rng.random(k.n) < 0.2))
        u = invariance_exact(k, Ainv).values
        claim_u = float((1 - u[Cinv.mask]).max(initial=0.0))
        inv = decompose_invariance(k, Ainv, Cinv, eps_claim=claim_u, eps=1e-6)
        assert np.all(inv.lower.values <= u + 1e-9) and np.all(u <= inv.upper.values + 1e-9)


def test_whole_set_excised_leaves_the_target_only():
    k = MatrixKernel([[0.5, 0.5, 0], [0, 0.5, 0.5], [0, 0, 1]])
    A, B = Region.from_states(k.space, [0, 1]), Region.from_states(k.space, [2])
    res = decompose_reach_avoid(k, A, B, A, eps_claim=1.0)
    assert np.array_equal(res.inner_lower.values, [0, 0, 1]) and np.array_equal(res.upper.values, [1, 1, 1])


def test_missing_claim_is_uncertified_and_conditional_branding():
    k = MatrixKernel([[1.0, 0, 0], [0.3, 0.3, 0.4], [0, 0, 1]])
    A, B = Region.from_states(k.space, [0, 1]), Region.from_states(k.space, [2])
    C = Region.from_states(k.space, [0])
    res = decompose_reach_avoid(k, A, B, C)
    assert res.status == UNCERTIFIED and res.excision_error == 1.0 and res.ledger.total == 1.0
    assert decompose_reach_avoid(k, A, B, C, eps_claim=0.0, conditional=True).status == CONDITIONAL
    with pytest.raises(ValueError):
        decompose_reach_avoid(k, A, B, B)


def test_conditional_excision_covers_the_core():
    k = MatrixKernel([[1.0, 0, 0], [0.3, 0.3, 0.4], [0, 0, 1]])
    A = Region.from_states(k.space, [0, 1])
    C, conditional = conditional_excision(k, A, 1e-3)
    assert las_finite(k, A).las.issubset(C) and conditional


def test_grid_invariance_decomposition_is_certified():
    g = StateSpace.grid([(-1, 1)], (200,))
    k = AffineGauss1D(0, 1)
    cand = power_candidate(k, g, 1.0)
    C = excision_region(g, cand, 0.05)
    res = decompose_invariance(discretize(k, g, lam=0.0), Region.full(g), C, eps_claim=0.05)
    assert res.lower.space == g and res.status == CERTIFIED and res.certificate.m == 1
    assert np.all(res.lower.values <= res.upper.values)
    # the origin keeps the process inside with high probability
    assert res.upper.values[100] > 0.9


def test_candidate_needs_positive_delta():
    with pytest.raises(ValueError):
        ExcessiveCandidate(g=lambda x: x, delta=0.0, zero_set=Region.empty(StateSpace.finite(1)))


def test_inner_box_differs_from_excision_on_the_nonlinear_grid():
    # the fixed box (-0.05, 0.05)^2 sits well inside the excision disc
    B = region_from_box(NL_GRID, [(-0.05, 0.05)] * 2, mode="inner")
    C = excision_region(NL_GRID, norm_squared_candidate(NL_GRID), 0.02)
    assert B.issubset(C)
