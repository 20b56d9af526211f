"""Exponential mechanism with the geometric-median loss.

The exact PMP parameter over a parent set is computed by enumerating every
half-subset once, caching per-subset log normalizers, and then forming the
in/out mixtures in the log domain.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .core import DiscretePMF, ParentSet, PrivacyParams
from .exceptions import CalibrationError, ShapeError

UNIT_NORM_ATOL = 1e-12


class CandidateSet:
    """A finite set of unit-norm candidate outputs ``w_1, ..., w_m``."""

    def __init__(self, candidates):
        c = np.asarray(candidates, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        if c.ndim != 2 or c.shape[0] < 2:
            raise ShapeError("need at least two candidates as an (m, d) array")
        norms = np.linalg.norm(c, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_NORM_ATOL):
            raise ValueError("candidates must have unit l2 norm")
        c.setflags(write=False)
        self.candidates = c

    @property
    def m(self) -> int:
        return self.candidates.shape[0]

    @property
    def d(self) -> int:
        return self.candidates.shape[1]

    def __len__(self):
        return self.m


@dataclass(frozen=True)
class ExpMechConfig:
    eps_dp: float
    sensitivity: float
    clip: float

    def __post_init__(self):
        if not (self.eps_dp > 0 and self.sensitivity > 0 and self.clip > 0):
            raise ValueError("eps_dp, sensitivity and clip must all be positive")
        if not math.isfinite(self.scale) or self.scale <= 0:
            raise ValueError("eps_dp / (2 * sensitivity) must be finite and positive")

    @property
    def scale(self) -> float:
        return self.eps_dp / (2.0 * self.sensitivity)


def _as_candidates(cands) -> np.ndarray:
    if isinstance(cands, CandidateSet):
        return cands.candidates
    c = np.asarray(cands, dtype=float)
    return c[:, None] if c.ndim == 1 else c


def geomedian_loss(w, D) -> float:
    """Mean Euclidean distance from ``w`` to the rows of ``D``."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    D = np.asarray(D, dtype=float)
    if D.ndim == 1:
        D = D[:, None] if w.shape[0] == 1 else D[None, :]
    if D.shape[1] != w.shape[0]:
        raise ShapeError(f"point dimension {D.shape[1]} != candidate dimension {w.shape[0]}")
    return float(np.linalg.norm(D - w, axis=1).mean())


def loss_sensitivity(clip: float, cands, n: int) -> float:
    """Sensitivity of the geometric-median loss over the radius-``clip`` ball.

    For each candidate the distance to a point in the ball ranges over
    ``[max(0, |w| - C), |w| + C]``; one swap moves the mean by at most that
    range divided by ``n``.
    """
    if clip <= 0:
        raise ValueError("clip must be positive")
    norms = np.linalg.norm(_as_candidates(cands), axis=1)
    spread = (norms + clip) - np.maximum(0.0, norms - clip)
    return float(spread.max() / n)


def _losses(points: np.ndarray, cands: np.ndarray) -> np.ndarray:
    # distance from every point to every candidate, (num_points, m)
    return np.linalg.norm(points[:, None, :] - cands[None, :, :], axis=2)


def expmech_pmf(D, cands, cfg: ExpMechConfig) -> DiscretePMF:
    c = _as_candidates(cands)
    D = np.asarray(D, dtype=float)
    if D.ndim == 1:
        D = D[:, None]
    if D.shape[1] != c.shape[1]:
        raise ShapeError("data and candidates differ in dimension")
    loss = _losses(D, c).mean(axis=0)
    if not np.all(np.isfinite(loss)):
        raise FloatingPointError("non-finite loss")
    logw = -cfg.scale * loss
    logp = logw - logsumexp(logw)
    return DiscretePMF(range(c.shape[0]), np.exp(logp))


class ExpMechAudit:
    """Cached per-subset losses for one (parent, candidates) instance.

    Building the audit costs one pass over the ``C(2n, n)`` subsets; every
    subsequent evaluation at a new mechanism scale is a handful of
    vectorized reductions.
    """

    def __init__(self, parent: ParentSet, cands):
        self.parent = parent
        c = _as_candidates(cands)
        if c.shape[1] != parent.d:
            raise ShapeError("parent and candidates differ in dimension")
        k, n = len(parent), parent.n
        combos = np.array(list(itertools.combinations(range(k), n)), dtype=np.int64)
        self.membership = np.zeros((len(combos), k), dtype=bool)
        np.put_along_axis(self.membership, combos, True, axis=1)
        dist = _losses(parent.points, c)
        # (num_subsets, m) geometric-median loss of every candidate on every subset
        self.loss = self.membership.astype(float) @ dist / n
        # loss sensitivity restricted to swaps inside the parent
        self.sensitivity_X = float((dist.max(axis=0) - dist.min(axis=0)).max() / n)
        self._pairs = self._adjacent_pairs(combos, k)

    @staticmethod
    def _adjacent_pairs(combos, k):
        bits = (1 << combos).sum(axis=1)
        lookup = np.full(1 << k, -1, dtype=np.int64)
        lookup[bits] = np.arange(len(bits))
        left, right = [], []
        member = np.zeros((len(bits), k), dtype=bool)
        np.put_along_axis(member, combos, True, axis=1)
        for i in range(k):
            for j in range(i + 1, k):
                rows = np.nonzero(member[:, i] & ~member[:, j])[0]
                swapped = bits[rows] ^ (1 << i) ^ (1 << j)
                left.append(rows)
                right.append(lookup[swapped])
        return np.concatenate(left), np.concatenate(right)

    def log_pmf(self, scale: float) -> np.ndarray:
        logw = -scale * self.loss
        return logw - logsumexp(logw, axis=1, keepdims=True)

    def eps_tilde(self, scale: float) -> float:
        logp = self.log_pmf(scale)
        worst = 0.0
        for x in range(len(self.parent)):
            mem = self.membership[:, x]
            lin = logsumexp(logp[mem], axis=0)
            lout = logsumexp(logp[~mem], axis=0)
            worst = max(worst, float(np.max(np.abs(lin - lout))))
        return worst

    def eps_X(self, scale: float) -> float:
        logp = self.log_pmf(scale)
        a, b = self._pairs
        return float(np.max(np.abs(logp[a] - logp[b])))

    def eps_X_sensitivity(self, scale: float) -> float:
        """DP parameter implied by the within-parent loss sensitivity, ``2 * scale * sens_X``.

        This upper-bounds :meth:`eps_X` and equals the worst-case ``eps`` scaled
        by ``sens_X / sens``.
        """
        return 2.0 * scale * self.sensitivity_X


def expmech_pmp(parent: ParentSet, cands, cfg: ExpMechConfig) -> PrivacyParams:
    return PrivacyParams(ExpMechAudit(parent, cands).eps_tilde(cfg.scale))


def expmech_dpX(parent: ParentSet, cands, cfg: ExpMechConfig) -> PrivacyParams:
    return PrivacyParams(ExpMechAudit(parent, cands).eps_X(cfg.scale))


def expmech_dpX_sensitivity(parent: ParentSet, cands, cfg: ExpMechConfig) -> PrivacyParams:
    return PrivacyParams(ExpMechAudit(parent, cands).eps_X_sensitivity(cfg.scale))


def calibrate_expmech_to_dpX(parent, cands, clip: float, target_epsX: float,
                             rtol: float = 1e-6, audit: ExpMechAudit | None = None,
                             mode: str = "exact") -> ExpMechConfig:
    """Find the mechanism ``eps`` whose within-parent DP parameter hits ``target_epsX``.

    ``mode="exact"`` inverts :func:`expmech_dpX` by bracketing and bisection;
    ``mode="sensitivity"`` inverts the within-parent sensitivity form, which
    is linear in ``eps``.
    """
    if target_epsX <= 0:
        raise ValueError("target_epsX must be positive")
    if mode not in ("exact", "sensitivity"):
        raise ValueError(f"unknown calibration mode {mode!r}")
    audit = audit or ExpMechAudit(parent, cands)
    sens = loss_sensitivity(clip, cands, parent.n)
    if mode == "sensitivity":
        if audit.sensitivity_X <= 0:
            raise CalibrationError("parent points are indistinguishable to every candidate")
        return ExpMechConfig(eps_dp=target_epsX * sens / audit.sensitivity_X, sensitivity=sens, clip=clip)

    def eps_x(eps):
        return audit.eps_X(eps / (2.0 * sens))

    # eps_X <= eps always, so the search starts at the target
    hi = target_epsX
    while eps_x(hi) < target_epsX:
        hi *= 2.0
        if hi > 2.0 ** 60:
            raise CalibrationError(f"eps_X never reaches {target_epsX}")
    lo = hi / 2.0
    while lo > 0 and eps_x(lo) >= target_epsX:
        lo /= 2.0
        if lo < 2.0 ** -60:
            lo = 0.0
    f_lo, f_hi = (eps_x(lo) if lo > 0 else 0.0), eps_x(hi)
    if not f_lo <= target_epsX <= f_hi:
        raise CalibrationError("eps_X is not monotone over the bracket")

    while hi - lo > 1e-13 * hi:
        mid = 0.5 * (lo + hi)
        if eps_x(mid) < target_epsX:
            lo = mid
        else:
            hi = mid
    if abs(eps_x(hi) - target_epsX) > rtol * target_epsX:
        raise CalibrationError(f"bisection stalled: eps_X={eps_x(hi)} vs target {target_epsX}")
    return ExpMechConfig(eps_dp=hi, sensitivity=sens, clip=clip)
