import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import chain_and_regions, seeds, three_state
from pctlverify import MatrixKernel, NonContractive, Region, compute_m_rho, plan_horizon, tail_bound, unbounded_reach_avoid
from pctlverify import solve_reach_avoid_exact
from pctlverify.engine import bounded_invariance
from pctlverify.horizon import raw_tail_bound
from pctlverify.absorbing import las_finite


def test_m_rho_examples():
    k, A, _ = three_state()
    empty = compute_m_rho(k, Region.empty(k.space))
    assert (empty.m, empty.rho) == (0, 0.0)
    leaky = compute_m_rho(k, Region.from_states(k.space, [1]))
    assert (leaky.m, leaky.rho) == (1, 0.5)
    # state 0 needs two steps to leave {0, 1} with positive probability
    assert (compute_m_rho(k, A).m, compute_m_rho(k, A).rho) == (2, 0.5)


def test_absorbing_state_gives_unknown():
    k, _, _ = three_state()
    A = Region.from_states(k.space, [1, 2])
    cert = compute_m_rho(k, A, m_max=50)
    assert not cert.certified and cert.m is None
    assert not las_finite(k, A).las.is_empty()


def test_tail_bound_examples():
    assert tail_bound(1, 0.0, 3) == 0.0
    assert tail_bound(1, 0.5, 10) == pytest.approx(2 * 2**-10)
    assert tail_bound(1, 0.957, 50) == 1.0
    assert raw_tail_bound(1, 0.957, 50) == pytest.approx(2.59, abs=0.01)


def test_plan_examples():
    assert plan_horizon(1, 0.5, 0.01) == 8
    assert plan_horizon(3, 0.0, 0.01) == 3
    assert plan_horizon(2, 0.9, 0.1) == 102


@given(st.integers(1, 6), st.floats(0.01, 0.99), st.floats(1e-6, 0.5))
def test_plan_is_the_smallest_sufficient_horizon(m, rho, eps):
    n = plan_horizon(m, rho, eps)
    assert tail_bound(m, rho, n) <= eps
    assert n % m == 0
    assert n == 0 or tail_bound(m, rho, n - 1) > eps


@given(st.integers(1, 6), st.floats(0.0, 0.99), st.integers(0, 200))
def test_tail_bound_is_monotone_and_capped(m, rho, n):
    assert 0 <= tail_bound(m, rho, n + 1) <= tail_bound(m, rho, n) <= 1


@pytest.mark.parametrize("args", [(0, 0.5, 1), (1, 1.0, 1), (1, 0.5, -1)])
def test_tail_bound_domain(args):
    with pytest.raises(ValueError):
        tail_bound(*args)


def test_sandwich_on_three_state_chain():
    k, A, B = three_state()
    lo, hi, cert = unbounded_reach_avoid(k, A, B, 1e-6)
    assert np.all(lo.values <= 1.0) and np.all(hi.values >= 1.0 - 1e-15)
    assert cert.tail <= 1e-6


def test_empty_target_is_exactly_zero():
    k, A, _ = three_state()
    lo, hi, cert = unbounded_reach_avoid(k, A, Region.empty(k.space), 1e-3)
    assert not lo.values.any() and not hi.values.any() and cert.tail == 0


def test_absorbing_state_in_A_raises():
    k = MatrixKernel([[1.0, 0, 0], [0.5, 0, 0.5], [0, 0, 1]])
    A = Region.from_states(k.space, [0, 1])
    with pytest.raises(NonContractive) as exc:
        unbounded_reach_avoid(k, A, Region.from_states(k.space, [2]), 1e-3)
    assert exc.value.diagnose().las.indices.tolist() == [0]


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_sandwich_contains_exact_value(seed):
    k, A, B, _ = chain_and_regions(seed)
    A = A - las_finite(k, A - B).las
    lo, hi, cert = unbounded_reach_avoid(k, A, B, 1e-4)
    w = solve_reach_avoid_exact(k, A, B).values
    assert np.all(lo.values <= w + 1e-12) and np.all(w <= hi.values + 1e-12)
    assert np.max(hi.values - lo.values) <= 1e-4 + 1e-15


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_geometric_decay_of_invariance(seed):
    k, A, _, _ = chain_and_regions(seed)
    A = A - las_finite(k, A).las
    cert = compute_m_rho(k, A)
    if cert.m == 0:
        return
    for n in range(0, 4 * cert.m + 1):
        assert bounded_invariance(k, A, n).values.max() <= cert.rho ** (n // cert.m) + 1e-12


def test_certificate_serialises_without_infinities():
    k, _, _ = three_state()
    d = compute_m_rho(k, Region.from_states(k.space, [1, 2]), m_max=3).to_dict()
    assert d["raw_tail"] is None and d["status"] == "Unknown"
    assert not math.isinf(compute_m_rho(k, Region.from_states(k.space, [1])).at_horizon(4).to_dict()["tail"])
