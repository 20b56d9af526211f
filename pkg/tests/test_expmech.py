import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmp_audit.core import DiscretePMF, ParentSet, dpX_exact_pure, pmp_exact_pure
from pmp_audit.exceptions import CalibrationError, ShapeError
from pmp_audit.expmech import (
    CandidateSet,
    ExpMechAudit,
    ExpMechConfig,
    calibrate_expmech_to_dpX,
    expmech_dpX,
    expmech_dpX_sensitivity,
    expmech_pmf,
    expmech_pmp,
    geomedian_loss,
    loss_sensitivity,
)
from pmp_audit.synthdata import GenSpec, generate


def random_instance(seed, n, m, d=2, C=5.0, eps=3.0):
    rng = np.random.default_rng(seed)
    cands = rng.normal(size=(m, d))
    cands /= np.linalg.norm(cands, axis=1, keepdims=True)
    parent = ParentSet(rng.uniform(-C / 2, C / 2, size=(2 * n, d)))
    cs = CandidateSet(cands)
    return parent, cs, ExpMechConfig(eps, loss_sensitivity(C, cs, n), C)


def test_candidate_set_requires_unit_norm():
    with pytest.raises(ValueError):
        CandidateSet([[1.0, 0.0], [0.5, 0.0]])
    with pytest.raises(ShapeError):
        CandidateSet([[1.0, 0.0]])


def test_config_rejects_nonpositive():
    with pytest.raises(ValueError):
        ExpMechConfig(0.0, 1.0, 1.0)


def test_geomedian_loss_examples():
    assert geomedian_loss([0.0], [[0.0]]) == 0.0
    assert geomedian_loss([0.0], [[1.0], [-1.0]]) == 1.0
    got = geomedian_loss([1.0, 0.0], [[0.0, 0.0], [0.0, 1.0], [2.0, 0.0]])
    assert got == pytest.approx((1 + math.sqrt(2) + 1) / 3, abs=1e-15)
    with pytest.raises(ShapeError):
        geomedian_loss([1.0, 0.0], np.zeros((2, 3)))


@pytest.mark.parametrize("C, n, want", [(10.0, 6, 11 / 6), (1.0, 1, 2.0)])
def test_loss_sensitivity_unit_candidates(C, n, want):
    cands = CandidateSet([[1.0, 0.0], [0.0, 1.0]])
    assert loss_sensitivity(C, cands, n) == pytest.approx(want, abs=1e-15)


def test_loss_sensitivity_degenerate_candidate():
    assert loss_sensitivity(5.0, np.zeros((1, 2)), 1) == 5.0


def test_loss_sensitivity_grid_cross_check():
    # oracle: scan distances from w to a fine grid over the clipped 2-d ball
    w, C, n = np.array([1.0, 0.0]), 3.0, 2
    r = np.linspace(0, C, 301)
    th = np.linspace(0, 2 * np.pi, 721)
    pts = np.stack([np.outer(r, np.cos(th)).ravel(), np.outer(r, np.sin(th)).ravel()], axis=1)
    dist = np.linalg.norm(pts - w, axis=1)
    grid = (dist.max() - dist.min()) / n
    assert loss_sensitivity(C, w[None, :], n) == pytest.approx(grid, abs=1e-6)


def test_two_candidate_softmax():
    # candidates +-1 in 1-d, data at +1: losses 0 and 2, sensitivity 1 so 2*sens == loss gap
    cfg = ExpMechConfig(eps_dp=1.0, sensitivity=1.0, clip=1.0)
    pmf = expmech_pmf([[1.0]], CandidateSet([[1.0], [-1.0]]), cfg)
    e = math.e
    np.testing.assert_allclose(pmf.mass, [e / (e + 1), 1 / (e + 1)], atol=1e-15)


def test_tiny_eps_is_uniform():
    parent, cs, _ = random_instance(0, 2, 5)
    cfg = ExpMechConfig(1e-12, 1.0, 5.0)
    np.testing.assert_allclose(expmech_pmf(parent.points[:2], cs, cfg).mass, 0.2, atol=1e-9)


def test_equidistant_candidates_uniform():
    cs = CandidateSet([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    cfg = ExpMechConfig(5.0, 0.5, 1.0)
    np.testing.assert_allclose(expmech_pmf([[0.0, 0.0]], cs, cfg).mass, 0.25, atol=1e-15)


def test_pmf_nonfinite_loss():
    cfg = ExpMechConfig(1.0, 1.0, 1.0)
    with pytest.raises(FloatingPointError):
        expmech_pmf([[np.inf]], CandidateSet([[1.0], [-1.0]]), cfg)


def test_nearly_identical_parent_is_private():
    base = np.array([0.3, -0.2])
    pts = base + 1e-15 * np.arange(6)[:, None] * np.array([1.0, 0.0])
    parent = ParentSet(pts)
    cs = CandidateSet([[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]])
    cfg = ExpMechConfig(5.0, loss_sensitivity(1.0, cs, 3), 1.0)
    assert expmech_pmp(parent, cs, cfg).eps <= 1e-9
    assert expmech_dpX(parent, cs, cfg).eps <= 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_n1_pmp_equals_dpX(seed):
    parent, cs, cfg = random_instance(seed, 1, 3)
    assert expmech_pmp(parent, cs, cfg).eps == pytest.approx(expmech_dpX(parent, cs, cfg).eps, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(2, 4), st.floats(0.1, 20))
def test_bruteforce_agreement(seed, n, m, eps):
    parent, cs, cfg = random_instance(seed, n, m, eps=eps)

    def mech(D):
        return expmech_pmf(D, cs, cfg)

    assert expmech_pmp(parent, cs, cfg).eps == pytest.approx(pmp_exact_pure(mech, parent).eps, abs=1e-10)
    assert expmech_dpX(parent, cs, cfg).eps == pytest.approx(dpX_exact_pure(mech, parent).eps, abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(2, 8), st.floats(0.1, 50))
def test_ordering_chain(seed, n, m, eps):
    parent, cs, cfg = random_instance(seed, n, m, eps=eps)
    audit = ExpMechAudit(parent, cs)
    et, ex, es = audit.eps_tilde(cfg.scale), audit.eps_X(cfg.scale), audit.eps_X_sensitivity(cfg.scale)
    assert et <= ex + 1e-12
    assert ex <= es + 1e-12
    assert es <= cfg.eps_dp + 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_loss_scale_invariance(seed, c):
    parent, cs, cfg = random_instance(seed, 3, 5)
    audit = ExpMechAudit(parent, cs)
    base = (audit.eps_tilde(cfg.scale), audit.eps_X(cfg.scale), np.exp(audit.log_pmf(cfg.scale)))
    audit.loss = audit.loss * c
    after = (audit.eps_tilde(cfg.scale / c), audit.eps_X(cfg.scale / c), np.exp(audit.log_pmf(cfg.scale / c)))
    assert after[0] == pytest.approx(base[0], abs=1e-10)
    assert after[1] == pytest.approx(base[1], abs=1e-10)
    np.testing.assert_allclose(after[2], base[2], atol=1e-10)


def test_sensitivity_form_matches_function():
    parent, cs, cfg = random_instance(3, 2, 4)
    assert expmech_dpX_sensitivity(parent, cs, cfg).eps == pytest.approx(
        ExpMechAudit(parent, cs).eps_X_sensitivity(cfg.scale), rel=1e-15)


def test_calibration_round_trip():
    parent, cs, cfg = random_instance(11, 3, 6, eps=7.0)
    measured = expmech_dpX(parent, cs, cfg).eps
    got = calibrate_expmech_to_dpX(parent, cs, cfg.clip, measured)
    assert got.eps_dp == pytest.approx(cfg.eps_dp, abs=1e-5)
    got = calibrate_expmech_to_dpX(parent, cs, cfg.clip, expmech_dpX_sensitivity(parent, cs, cfg).eps,
                                   mode="sensitivity")
    assert got.eps_dp == pytest.approx(cfg.eps_dp, rel=1e-12)


def test_calibration_on_dim_sweep_instance():
    cands, parent = generate(GenSpec(n=6, d=4, m=10, sigma_data=1.0, clip=10.0, seed=5))
    cfg = calibrate_expmech_to_dpX(parent, cands, 10.0, 2.0)
    assert 0 < cfg.eps_dp < math.inf
    assert abs(expmech_dpX(parent, cands, cfg).eps - 2.0) < 1e-6


def test_calibration_unreachable_target():
    # both parent points sit at the same distance from every candidate
    parent = ParentSet([[0.0, 1.0], [0.0, -1.0]])
    cs = CandidateSet([[1.0, 0.0], [-1.0, 0.0]])
    with pytest.raises(CalibrationError):
        calibrate_expmech_to_dpX(parent, cs, 2.0, 1.0)
    with pytest.raises(CalibrationError):
        calibrate_expmech_to_dpX(parent, cs, 2.0, 1.0, mode="sensitivity")


def test_pmf_is_discrete_pmf():
    parent, cs, cfg = random_instance(1, 2, 3)
    pmf = expmech_pmf(parent.points[:2], cs, cfg)
    assert isinstance(pmf, DiscretePMF) and pmf.alphabet == (0, 1, 2)
