"""Gaussian mechanism: exact DP curve, sigma calibration and the PMP bound.

The PMP side never evaluates the mixture divergence directly.  It upper
bounds it by averaging the exact pairwise Gaussian curve over adjacent
(in, out) dataset pairs; for sum queries that average collapses to one over
the other parent points ``x' != x``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import log_ndtr, ndtr

from .core import ParentSet, PrivacyParams, adjacent_out_neighbors, split_in_out
from .exceptions import CalibrationError, UnsupportedDimensionError

SIGMA_RTOL = 1e-9
EPS_TILDE_ATOL = 1e-6
EPS_ATOL = 1e-10


@dataclass(frozen=True)
class SumQuery:
    """``q(D) = sum_{x in D} f(x)``."""

    per_sample_map: Callable[[np.ndarray], np.ndarray]
    label: str = "sum"

    def __call__(self, D) -> np.ndarray:
        D = np.asarray(D, dtype=float)
        return np.sum([np.atleast_1d(self.per_sample_map(x)) for x in D], axis=0)


def mean_query(n: int) -> SumQuery:
    return SumQuery(lambda x: np.asarray(x, dtype=float) / n, label=f"mean(n={n})")


@dataclass(frozen=True)
class GaussConfig:
    sigma: float
    delta: float
    clip: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError("sigma must be finite and positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")


def std_normal_cdf(t):
    """Standard normal CDF."""
    if np.any(np.isnan(t)):
        raise FloatingPointError("NaN passed to the normal CDF")
    out = ndtr(t)
    return float(out) if np.ndim(out) == 0 else out


def _delta_curve(gaps, sigma: float, eps: float) -> np.ndarray:
    """Vectorized ``Phi(g/2s - eps s/g) - e^eps Phi(-g/2s - eps s/g)``; 0 where ``g == 0``."""
    gaps = np.asarray(gaps, dtype=float)
    out = np.zeros_like(gaps)
    if math.isinf(eps):
        return out
    pos = gaps > 0
    g = gaps[pos]
    a = g / (2.0 * sigma)
    b = eps * sigma / g
    val = ndtr(a - b) - np.exp(eps + log_ndtr(-a - b))
    out[pos] = np.clip(val, 0.0, 1.0)
    return out


def dp_delta_given(Delta: float, sigma: float, eps: float) -> float:
    """Smallest delta for which the Gaussian mechanism with L2 sensitivity ``Delta`` is (eps, delta)-DP."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if Delta < 0 or eps < 0:
        raise ValueError("Delta and eps must be nonnegative")
    return float(_delta_curve(np.array([Delta]), sigma, eps)[0])


def calibrate_sigma(Delta: float, eps: float, delta: float) -> float:
    """Smallest noise scale with ``dp_delta_given(Delta, sigma, eps) <= delta``."""
    if Delta <= 0:
        raise ValueError("Delta must be positive")
    if eps < 0 or not 0 < delta < 1:
        raise ValueError("need eps >= 0 and delta in (0, 1)")

    def ok(s):
        return dp_delta_given(Delta, s, eps) <= delta

    hi = Delta
    for _ in range(200):
        if ok(hi):
            break
        hi *= 2.0
    else:
        raise CalibrationError("could not find a large enough sigma")
    lo = hi
    for _ in range(200):
        if not ok(lo):
            break
        lo /= 2.0
    else:
        raise CalibrationError("could not find a violating sigma")
    while hi - lo > SIGMA_RTOL * hi * 0.5:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _smallest_eps(cond, atol: float, start: float = 1.0) -> float:
    """Smallest ``eps >= 0`` with ``cond(eps)`` true, assuming monotonicity."""
    if cond(0.0):
        return 0.0
    lo, hi = 0.0, start
    while not cond(hi):
        lo, hi = hi, 2.0 * hi
        if hi > 1e6:
            raise CalibrationError("eps search diverged")
    while hi - lo > atol:
        mid = 0.5 * (lo + hi)
        if cond(mid):
            hi = mid
        else:
            lo = mid
    return hi


def eps_given_delta(Delta: float, sigma: float, delta: float, atol: float = EPS_ATOL) -> float:
    """Inverse of :func:`dp_delta_given` in ``eps``."""
    return _smallest_eps(lambda e: dp_delta_given(Delta, sigma, e) <= delta, atol)


def _as_map(f):
    if isinstance(f, SumQuery):
        return f.per_sample_map
    return f


def _mapped(parent: ParentSet, f) -> np.ndarray:
    f = _as_map(f)
    return np.array([np.atleast_1d(f(x)) for x in parent.points], dtype=float)


def _pairwise_gaps(fx: np.ndarray) -> np.ndarray:
    diff = fx[:, None, :] - fx[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def pmp_bound_delta_general(parent: ParentSet, target: int, q: SumQuery, sigma: float, eps: float) -> float:
    """Average pairwise Gaussian curve over every adjacent (in, out) dataset pair.

    This is the exponential-time reference form; it evaluates ``q`` on each
    dataset rather than exploiting the sum structure.
    """
    subs_in, _ = split_in_out(parent, target)
    gaps = []
    for D in subs_in:
        qD = q(parent.dataset(D))
        for Dp in adjacent_out_neighbors(D, parent, target):
            gaps.append(np.linalg.norm(qD - q(parent.dataset(Dp))))
    total = math.fsum(_delta_curve(np.array(gaps), sigma, eps))
    return total / (parent.n * len(subs_in))


def pmp_bound_delta_fast(parent: ParentSet, target: int, f, sigma: float, eps: float) -> float:
    """Same bound for sum queries: an average over the other ``2n - 1`` points."""
    fx = _mapped(parent, f)
    gaps = np.linalg.norm(fx - fx[target], axis=1)
    gaps = np.delete(gaps, target)
    return math.fsum(_delta_curve(gaps, sigma, eps)) / (len(parent) - 1)


class GaussAudit:
    """Pairwise gaps of one parent set under a per-sample map, cached."""

    def __init__(self, parent: ParentSet, f):
        self.parent = parent
        self.gaps = _pairwise_gaps(_mapped(parent, f))
        k = len(parent)
        self._offdiag = ~np.eye(k, dtype=bool)

    @property
    def max_gap(self) -> float:
        return float(self.gaps.max())

    def bound(self, sigma: float, eps: float) -> float:
        """Largest per-target bound over the parent."""
        k = len(self.parent)
        vals = _delta_curve(self.gaps[self._offdiag].reshape(k, k - 1), sigma, eps)
        return float(vals.sum(axis=1).max() / (k - 1))

    def eps_tilde(self, sigma: float, delta: float) -> float:
        if self.bound(sigma, 0.0) <= delta:
            return 0.0
        # every gap is at most max_gap, so eps_X is already a certified value
        lo, hi = 0.0, max(self.eps_X(sigma, delta), EPS_TILDE_ATOL)
        while self.bound(sigma, hi) > delta:
            lo, hi = hi, 2.0 * hi
            if hi > 1e6:
                raise CalibrationError("PMP bound never drops below delta")
        if self.bound(sigma, hi) > self.bound(sigma, lo):
            raise CalibrationError("PMP bound is not non-increasing over the bracket")
        while hi - lo > EPS_TILDE_ATOL:
            mid = 0.5 * (lo + hi)
            if self.bound(sigma, mid) <= delta:
                hi = mid
            else:
                lo = mid
        return hi

    def eps_X(self, sigma: float, delta: float) -> float:
        return eps_given_delta(self.max_gap, sigma, delta)


def gauss_pmp_param(parent: ParentSet, f, sigma: float, delta: float) -> PrivacyParams:
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    return PrivacyParams(GaussAudit(parent, f).eps_tilde(sigma, delta), delta)


def gauss_dpX_param(parent: ParentSet, f, sigma: float, delta: float) -> PrivacyParams:
    return PrivacyParams(GaussAudit(parent, f).eps_X(sigma, delta), delta)


def gauss_worst_eps(C: float, n: int, sigma: float, delta: float) -> PrivacyParams:
    """DP parameter of the mean query over the radius-``C`` ball (sensitivity ``2C/n``)."""
    return PrivacyParams(eps_given_delta(2.0 * C / n, sigma, delta), delta)


def mixture_divergence_oracle_1d(parent: ParentSet, target: int, f, sigma: float, eps: float) -> float:
    """Hockey-stick divergence between the exact 1-d in/out Gaussian mixtures, by quadrature."""
    if parent.d != 1:
        raise UnsupportedDimensionError("the quadrature oracle only handles d == 1")
    fmap = _as_map(f)
    subs_in, subs_out = split_in_out(parent, target)

    def q(S):
        return sum(float(np.atleast_1d(fmap(parent.points[i]))[0]) for i in sorted(S))

    mu_in = np.array([q(S) for S in subs_in])
    mu_out = np.array([q(S) for S in subs_out])
    lo = min(mu_in.min(), mu_out.min()) - 12 * sigma
    hi = max(mu_in.max(), mu_out.max()) + 12 * sigma
    num = max(40001, int((hi - lo) / sigma * 800) + 1)
    t = np.linspace(lo, hi, num)

    def density(mus):
        z = (t[:, None] - mus[None, :]) / sigma
        return np.exp(-0.5 * z * z).mean(axis=1) / (sigma * math.sqrt(2 * math.pi))

    p_in, p_out = density(mu_in), density(mu_out)
    scale = math.exp(eps)
    fwd = trapezoid(np.maximum(0.0, p_in - scale * p_out), t)
    bwd = trapezoid(np.maximum(0.0, p_out - scale * p_in), t)
    return float(max(fwd, bwd))
