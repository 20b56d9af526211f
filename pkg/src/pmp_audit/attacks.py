"""Exact membership-inference attacks on finite-output mechanisms."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DiscretePMF,
    Mechanism,
    ParentSet,
    build_mixtures,
    mia_success_bound,
    pmp_exact_pure,
)
from .exceptions import ContractError, ShapeError

MOD6_ALPHABET = tuple(range(6))


@dataclass
class AttackReport:
    target_index: int
    success_prob: float
    bound: float
    decision_rule: dict = field(default_factory=dict)


def mod6_mechanism(D) -> DiscretePMF:
    """Deterministic ``sum(D) mod 6`` over entries in ``{0, ..., 5}``."""
    vals = np.asarray(D, dtype=float).ravel()
    if np.any(vals != np.round(vals)) or np.any((vals < 0) | (vals > 5)):
        raise ValueError("mod-6 mechanism entries must be integers in {0, ..., 5}")
    return DiscretePMF.point_mass(MOD6_ALPHABET, int(vals.sum()) % 6)


def bayes_practical_mia(mech: Mechanism, parent: ParentSet, target: int) -> AttackReport:
    """Bayes-optimal attacker who knows the parent set but not the other members.

    With the uniform prior on membership the optimal rule compares the two
    mixture masses per outcome; ties go to "in".
    """
    mix = build_mixtures(mech, parent, target)
    p_in, p_out = mix.p_in.mass, mix.p_out.mass
    rule = {a: ("in" if pi >= po else "out") for a, pi, po in zip(mix.p_in.alphabet, p_in, p_out)}
    success = 0.5 * float(np.maximum(p_in, p_out).sum())
    bound = mia_success_bound(pmp_exact_pure(mech, parent).eps)
    return AttackReport(target, min(success, 1.0), bound, rule)


def _rows(D):
    D = np.asarray(D, dtype=float)
    if D.ndim == 1:
        D = D[:, None]
    return D


def _are_adjacent(D, Dp) -> bool:
    if D.shape != Dp.shape:
        return False
    a = Counter(map(tuple, D.tolist()))
    b = Counter(map(tuple, Dp.tolist()))
    return sum((a - b).values()) == 1


def worst_case_mia(mech: Mechanism, D, Dprime) -> float:
    """Optimal success distinguishing two known adjacent worlds with equal prior."""
    D, Dprime = _rows(D), _rows(Dprime)
    if not _are_adjacent(D, Dprime):
        raise ContractError("datasets are not adjacent")
    p, q = mech(D), mech(Dprime)
    if p.alphabet != q.alphabet:
        raise ShapeError("PMFs are defined over different alphabets")
    return min(1.0, 0.5 * float(np.maximum(p.mass, q.mass).sum()))
