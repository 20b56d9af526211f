"""Practical membership privacy (PMP) auditing.

Exact PMP and dataset-specific DP parameters for finite-output mechanisms,
the exponential mechanism with a geometric-median loss, a certified PMP bound
for the Gaussian mechanism, exact membership-inference attacks, and seeded
synthetic sweeps.
"""
from .attacks import AttackReport, bayes_practical_mia, mod6_mechanism, worst_case_mia
from .core import (
    DiscretePMF,
    MixturePair,
    ParentSet,
    PrivacyParams,
    adjacent_out_neighbors,
    all_subsets,
    build_mixtures,
    dpX_exact_pure,
    hockey_stick,
    mia_success_bound,
    pmp_delta_at_eps,
    pmp_exact_pure,
    pmp_to_mip_eta,
    split_in_out,
)
from .estimators import ExpMechPMPAuditor, GaussianPMPAuditor
from .exceptions import CalibrationError, ContractError, ShapeError, UnsupportedDimensionError
from .expmech import (
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
from .gaussmech import (
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
from .synthdata import GenSpec, RngStream, clip, derive_seed, gen_candidates, gen_parent, generate, inject_outliers

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
