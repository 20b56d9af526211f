import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmp_audit.core import ParentSet
from pmp_audit.exceptions import UnsupportedDimensionError
from pmp_audit.gaussmech import (
    EPS_ATOL,
    GaussAudit,
    GaussConfig,
    SumQuery,
    calibrate_sigma,
    dp_delta_given,
    eps_given_delta,
    gauss_dpX_param,
    gauss_pmp_param,
    gauss_worst_eps,
    mean_query,
    mixture_divergence_oracle_1d,
    pmp_bound_delta_fast,
    pmp_bound_delta_general,
    std_normal_cdf,
)

# reference values from 40-digit mpmath evaluations of the closed forms
PHI_1 = 0.8413447460685429486
DELTA_1_1_0 = 0.3829249225480262073
DELTA_1_1_1 = 0.1269367375066439458
DELTA_1_HALF_2 = 0.3318979987768293936
SIGMA_1_1_1EM2 = 1.877875560907386025
SIGMA_2_3_1EM5 = 2.781186913349073495
EPS_1_HALF_1EM2 = 5.997892529818919870


def identity(x):
    return np.asarray(x, dtype=float)


def test_std_normal_cdf():
    assert std_normal_cdf(0.0) == 0.5
    assert std_normal_cdf(math.inf) == 1.0 and std_normal_cdf(-math.inf) == 0.0
    assert std_normal_cdf(1.0) == pytest.approx(PHI_1, abs=1e-15)
    with pytest.raises(FloatingPointError):
        std_normal_cdf(math.nan)


@pytest.mark.parametrize("Delta, sigma, eps, want", [
    (1.0, 1.0, 0.0, DELTA_1_1_0),
    (1.0, 1.0, 1.0, DELTA_1_1_1),
    (1.0, 0.5, 2.0, DELTA_1_HALF_2),
])
def test_dp_delta_given_reference(Delta, sigma, eps, want):
    assert dp_delta_given(Delta, sigma, eps) == pytest.approx(want, abs=1e-14)


def test_dp_delta_given_edges():
    assert dp_delta_given(0.0, 1.0, 0.3) == 0.0
    assert dp_delta_given(1.0, 1.0, math.inf) == 0.0
    assert dp_delta_given(1.0, 1.0, 200.0) == 0.0
    with pytest.raises(ValueError):
        dp_delta_given(1.0, 0.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-2, 10), st.floats(1e-2, 10), st.floats(0, 5), st.floats(1e-3, 1e3))
def test_dp_delta_scale_invariance(Delta, sigma, eps, c):
    assert dp_delta_given(c * Delta, c * sigma, eps) == pytest.approx(dp_delta_given(Delta, sigma, eps), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 5), st.floats(0.1, 5), st.lists(st.floats(0, 8), min_size=2, max_size=5))
def test_dp_delta_non_increasing_in_eps(Delta, sigma, eps):
    vals = [dp_delta_given(Delta, sigma, e) for e in sorted(eps)]
    assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))


def test_calibrate_sigma_inverts_eps0():
    assert calibrate_sigma(1.0, 0.0, DELTA_1_1_0) == pytest.approx(1.0, rel=1e-8)


@pytest.mark.parametrize("Delta, eps, delta, want", [
    (1.0, 1.0, 1e-2, SIGMA_1_1_1EM2),
    (2.0, 3.0, 1e-5, SIGMA_2_3_1EM5),
])
def test_calibrate_sigma_reference(Delta, eps, delta, want):
    assert calibrate_sigma(Delta, eps, delta) == pytest.approx(want, rel=1e-8)


def test_calibrate_sigma_grid_scan():
    grid = np.linspace(1.8, 1.95, 150001)
    ok = grid[[dp_delta_given(1.0, s, 1.0) <= 1e-2 for s in grid]]
    assert calibrate_sigma(1.0, 1.0, 1e-2) == pytest.approx(ok.min(), abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 20), st.floats(0.0, 10), st.floats(1e-6, 0.3))
def test_calibration_residual(Delta, eps, delta):
    got = dp_delta_given(Delta, calibrate_sigma(Delta, eps, delta), eps)
    assert delta * (1 - 1e-6) <= got <= delta


def test_eps_given_delta_reference():
    assert eps_given_delta(1.0, 0.5, 1e-2) == pytest.approx(EPS_1_HALF_1EM2, abs=2 * EPS_ATOL)


def test_sum_query_and_mean():
    q = mean_query(2)
    assert np.allclose(q([[1.0, 2.0], [3.0, 4.0]]), [2.0, 3.0])
    assert SumQuery(lambda x: x * 0 + 1)([[5.0], [6.0]])[0] == 2.0


def test_gauss_config_validation():
    with pytest.raises(ValueError):
        GaussConfig(0.0, 0.1, 1.0, 2)
    with pytest.raises(ValueError):
        GaussConfig(1.0, 1.0, 1.0, 2)


def test_bound_n1_is_single_term():
    parent = ParentSet([[0.0], [0.7]])
    assert pmp_bound_delta_fast(parent, 0, identity, 0.5, 1.0) == pytest.approx(dp_delta_given(0.7, 0.5, 1.0), abs=1e-15)


def test_bound_zero_when_map_constant():
    parent = ParentSet(np.arange(6.0))
    assert pmp_bound_delta_fast(parent, 2, lambda x: np.zeros(1), 1.0, 0.0) == 0.0
    assert GaussAudit(parent, lambda x: np.zeros(1)).eps_tilde(1.0, 0.01) == 0.0
    assert GaussAudit(parent, lambda x: np.zeros(1)).eps_X(1.0, 0.01) == 0.0


def test_bound_outlier_dominates():
    pts = np.array([[0.0], [0.01], [0.02], [0.03], [0.04], [100.0]])
    parent = ParentSet(pts)
    got = pmp_bound_delta_fast(parent, 0, identity, 1.0, 1.0)
    assert got == pytest.approx(1.0 / 5, abs=2e-4)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_fast_path_identity(n):
    rng = np.random.default_rng(n)
    parent = ParentSet(rng.normal(size=(2 * n, 2)))
    for target in range(2 * n):
        a = pmp_bound_delta_fast(parent, target, mean_query(n), 0.3, 0.5)
        b = pmp_bound_delta_general(parent, target, mean_query(n), 0.3, 0.5)
        assert a == pytest.approx(b, abs=1e-12)


def test_oracle_n1_matches_closed_form():
    parent = ParentSet([[0.0], [0.8]])
    got = mixture_divergence_oracle_1d(parent, 0, identity, 0.5, 0.7)
    assert got == pytest.approx(dp_delta_given(0.8, 0.5, 0.7), abs=1e-6)


def test_oracle_identical_mixtures():
    parent = ParentSet(np.arange(4.0))
    assert mixture_divergence_oracle_1d(parent, 1, lambda x: np.zeros(1), 1.0, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_oracle_dimension_guard():
    with pytest.raises(UnsupportedDimensionError):
        mixture_divergence_oracle_1d(ParentSet(np.eye(2)), 0, identity, 1.0, 0.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.floats(0.1, 1.0), st.floats(0, 2))
def test_bound_soundness(seed, n, sigma, eps):
    rng = np.random.default_rng(seed)
    parent = ParentSet(rng.normal(size=(2 * n, 1)))
    target = int(rng.integers(2 * n))
    oracle = mixture_divergence_oracle_1d(parent, target, mean_query(n), sigma, eps)
    assert oracle <= pmp_bound_delta_fast(parent, target, mean_query(n), sigma, eps) + 1e-6


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 20), st.integers(1, 6), st.floats(0.05, 3))
def test_ordering_chain(seed, n, d, rel_sigma):
    rng = np.random.default_rng(seed)
    C = 5.0
    pts = rng.normal(size=(2 * n, d))
    pts *= np.minimum(1.0, C / np.linalg.norm(pts, axis=1, keepdims=True))
    parent = ParentSet(pts)
    sigma = rel_sigma * 2 * C / n
    et = gauss_pmp_param(parent, mean_query(n), sigma, 1e-3).eps
    ex = gauss_dpX_param(parent, mean_query(n), sigma, 1e-3).eps
    ew = gauss_worst_eps(C, n, sigma, 1e-3).eps
    assert et <= ex + 1e-12
    assert ex <= ew + 2 * EPS_ATOL


def test_antipodal_parent_reaches_worst_case():
    C, n = 3.0, 2
    parent = ParentSet([[C, 0.0], [-C, 0.0], [0.0, 1.0], [0.5, 0.5]])
    sigma = 1.3
    got = gauss_dpX_param(parent, mean_query(n), sigma, 1e-2).eps
    assert got == pytest.approx(gauss_worst_eps(C, n, sigma, 1e-2).eps, abs=1e-9)


def test_round_trip_through_dpX():
    for Delta, eps, delta in [(0.1, 0.5, 1e-5), (1.0, 2.0, 1e-3), (10.0, 8.0, 1e-1)]:
        sigma = calibrate_sigma(Delta, eps, delta)
        parent = ParentSet([[0.0], [Delta]])
        assert gauss_dpX_param(parent, identity, sigma, delta).eps == pytest.approx(eps, abs=1e-5)


def test_worst_eps_shrinks_with_clip():
    vals = [gauss_worst_eps(C, 10, 1.0, 1e-2).eps for C in (10.0, 1.0, 0.1, 1e-3)]
    assert vals == sorted(vals, reverse=True)
    assert vals[-1] < 1e-3
