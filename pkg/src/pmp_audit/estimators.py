"""Estimator-style front ends: ``fit`` an auditor on a parent set, read the parameters.

    >>> auditor = GaussianPMPAuditor(clip=50.0, delta=1e-2, target_eps_X=2.0)
    >>> auditor.fit(X).eps_tilde_          # doctest: +SKIP

The fitted attributes follow the usual trailing-underscore convention, and
``get_params``/``set_params``/``clone`` work because every constructor
argument is stored verbatim.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .core import ParentSet, mia_success_bound
from .expmech import CandidateSet, ExpMechAudit, ExpMechConfig, calibrate_expmech_to_dpX, loss_sensitivity
from .gaussmech import GaussAudit, calibrate_sigma, gauss_worst_eps


def _check_parent(X) -> ParentSet:
    X = check_array(X, ensure_min_samples=2)
    if X.shape[0] % 2:
        raise ValueError(f"a parent set needs an even number of rows, got {X.shape[0]}")
    return ParentSet(X)


class ExpMechPMPAuditor(BaseEstimator):
    """Audit the exponential mechanism (geometric-median loss) on a parent set.

    Parameters
    ----------
    candidates : array-like of shape (m, d)
        Unit-norm candidate outputs.
    clip : float
        Radius of the data domain, used for the worst-case loss sensitivity.
    eps : float, optional
        Worst-case DP parameter of the mechanism.  Exactly one of ``eps`` and
        ``target_eps_X`` must be given.
    target_eps_X : float, optional
        Calibrate ``eps`` so that the within-parent DP parameter equals this.
    eps_X_mode : {"exact", "sensitivity"}
        How the within-parent DP parameter is measured: the largest log
        ratio over adjacent subsets of the parent, or the worst-case ``eps``
        rescaled by the loss sensitivity restricted to the parent.
    """

    def __init__(self, candidates=None, clip=10.0, eps=None, target_eps_X=None, eps_X_mode="exact"):
        self.candidates = candidates
        self.clip = clip
        self.eps = eps
        self.target_eps_X = target_eps_X
        self.eps_X_mode = eps_X_mode

    def fit(self, X, y=None):
        if (self.eps is None) == (self.target_eps_X is None):
            raise ValueError("give exactly one of eps and target_eps_X")
        if self.candidates is None:
            raise ValueError("candidates are required")
        parent = _check_parent(X)
        cands = self.candidates if isinstance(self.candidates, CandidateSet) else CandidateSet(self.candidates)
        audit = ExpMechAudit(parent, cands)
        if self.target_eps_X is not None:
            cfg = calibrate_expmech_to_dpX(parent, cands, self.clip, self.target_eps_X,
                                           audit=audit, mode=self.eps_X_mode)
        else:
            cfg = ExpMechConfig(self.eps, loss_sensitivity(self.clip, cands, parent.n), self.clip)

        self.config_ = cfg
        self.eps_ = cfg.eps_dp
        self.eps_tilde_ = audit.eps_tilde(cfg.scale)
        if self.eps_X_mode == "exact":
            self.eps_X_ = audit.eps_X(cfg.scale)
        else:
            self.eps_X_ = audit.eps_X_sensitivity(cfg.scale)
        self.n_features_in_ = parent.d
        return self

    @property
    def attack_success_bound_(self) -> float:
        check_is_fitted(self, "eps_tilde_")
        return mia_success_bound(self.eps_tilde_)


class GaussianPMPAuditor(BaseEstimator):
    """Audit the Gaussian mechanism releasing the empirical mean of a parent half.

    Exactly one of ``sigma``, ``target_eps_X`` and ``target_eps`` fixes the
    noise scale; the other two privacy parameters are then derived from it.
    """

    def __init__(self, clip=50.0, delta=1e-2, sigma=None, target_eps_X=None, target_eps=None):
        self.clip = clip
        self.delta = delta
        self.sigma = sigma
        self.target_eps_X = target_eps_X
        self.target_eps = target_eps

    def fit(self, X, y=None):
        given = [v is not None for v in (self.sigma, self.target_eps_X, self.target_eps)]
        if sum(given) != 1:
            raise ValueError("give exactly one of sigma, target_eps_X and target_eps")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        parent = _check_parent(X)
        n = parent.n
        audit = GaussAudit(parent, lambda x: np.asarray(x) / n)
        if self.sigma is not None:
            sigma = float(self.sigma)
        elif self.target_eps_X is not None:
            sigma = calibrate_sigma(audit.max_gap, self.target_eps_X, self.delta)
        else:
            sigma = calibrate_sigma(2.0 * self.clip / n, self.target_eps, self.delta)

        self.sigma_ = sigma
        self.eps_X_ = audit.eps_X(sigma, self.delta)
        self.eps_tilde_ = audit.eps_tilde(sigma, self.delta)
        self.eps_ = gauss_worst_eps(self.clip, n, sigma, self.delta).eps
        self.n_features_in_ = parent.d
        return self
