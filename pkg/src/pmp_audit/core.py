"""Subset enumeration, mixture construction and exact PMP/DP parameters.

Everything here works on finite-output mechanisms: a mechanism is any
callable mapping a dataset (an ``(n, d)`` array of points) to a
:class:`DiscretePMF`.  The parent set ``X`` holds ``2n`` distinct points and
the private dataset is a uniformly random half of it.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Hashable, Sequence

import numpy as np

from .exceptions import ContractError, ShapeError

PMF_ATOL = 1e-12


@dataclass(frozen=True)
class PrivacyParams:
    """An ``(eps, delta)`` pair; ``eps`` may be ``inf``."""

    eps: float
    delta: float = 0.0

    def __post_init__(self):
        if math.isnan(self.eps) or self.eps < 0:
            raise ValueError(f"eps must be >= 0 or inf, got {self.eps}")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must lie in [0, 1), got {self.delta}")


class ParentSet:
    """The ``2n`` distinct points a practical attacker knows."""

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise ShapeError(f"points must be a 2-d array, got ndim={pts.ndim}")
        if pts.shape[0] < 2 or pts.shape[0] % 2:
            raise ShapeError(f"a parent set needs an even number >= 2 of points, got {pts.shape[0]}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("parent points must be finite")
        if len(np.unique(pts, axis=0)) != len(pts):
            raise ValueError("parent points must be pairwise distinct")
        pts.setflags(write=False)
        self.points = pts

    @property
    def n(self) -> int:
        return self.points.shape[0] // 2

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def dataset(self, selector) -> np.ndarray:
        return self.points[sorted(selector)]

    def __repr__(self):
        return f"ParentSet(n={self.n}, d={self.d})"


class DiscretePMF:
    """Probability mass over a finite list of outcome labels."""

    def __init__(self, alphabet: Sequence[Hashable], mass):
        mass = np.asarray(mass, dtype=float)
        alphabet = tuple(alphabet)
        if mass.shape != (len(alphabet),):
            raise ShapeError(f"got {mass.shape[0] if mass.ndim else 0} masses for {len(alphabet)} outcomes")
        if np.any(mass < 0) or not np.all(np.isfinite(mass)):
            raise ValueError("masses must be finite and nonnegative")
        if abs(mass.sum() - 1.0) > PMF_ATOL:
            raise ValueError(f"masses sum to {mass.sum()!r}, not 1")
        mass.setflags(write=False)
        self.alphabet = alphabet
        self.mass = mass

    @classmethod
    def point_mass(cls, alphabet, outcome):
        alphabet = tuple(alphabet)
        mass = np.zeros(len(alphabet))
        mass[alphabet.index(outcome)] = 1.0
        return cls(alphabet, mass)

    def __getitem__(self, outcome):
        return self.mass[self.alphabet.index(outcome)]

    def __repr__(self):
        return f"DiscretePMF({dict(zip(self.alphabet, self.mass.tolist()))})"


@dataclass(frozen=True)
class MixturePair:
    p_in: DiscretePMF
    p_out: DiscretePMF
    target_index: int


Mechanism = Callable[[np.ndarray], DiscretePMF]


# -- enumeration -------------------------------------------------------------

def _check_target(parent: ParentSet, target: int):
    if not 0 <= target < len(parent):
        raise IndexError(f"target {target} outside [0, {len(parent)})")


def all_subsets(parent: ParentSet) -> list[frozenset]:
    """Every size-``n`` subset of the parent, in lexicographic index order."""
    return [frozenset(c) for c in itertools.combinations(range(len(parent)), parent.n)]


def split_in_out(parent: ParentSet, target: int):
    """Partition the size-``n`` subsets into those containing ``target`` and the rest."""
    _check_target(parent, target)
    subs_in, subs_out = [], []
    for s in all_subsets(parent):
        (subs_in if target in s else subs_out).append(s)
    return subs_in, subs_out


def adjacent_out_neighbors(D, parent: ParentSet, target: int) -> list[frozenset]:
    """Datasets obtained from ``D`` by swapping ``target`` for a point of ``X \\ D``."""
    _check_target(parent, target)
    D = frozenset(D)
    if target not in D:
        raise ContractError(f"dataset {sorted(D)} does not contain target {target}")
    rest = D - {target}
    return [rest | {j} for j in range(len(parent)) if j not in D]


def adjacent_pairs(parent: ParentSet):
    """Yield every unordered adjacent pair ``(D, D')`` of subsets of the parent."""
    seen = set()
    for D in all_subsets(parent):
        for i in D:
            for j in range(len(parent)):
                if j in D:
                    continue
                Dp = (D - {i}) | {j}
                key = frozenset((D, Dp))
                if key not in seen:
                    seen.add(key)
                    yield D, Dp


# -- divergences and mixtures -------------------------------------------------

def _shared_alphabet(pmfs: Sequence[DiscretePMF]):
    alphabet = pmfs[0].alphabet
    for p in pmfs[1:]:
        if p.alphabet != alphabet:
            raise ShapeError("PMFs are defined over different alphabets")
    return alphabet


def hockey_stick(P: DiscretePMF, Q: DiscretePMF, eps: float) -> float:
    """``sum_a max(0, p(a) - e^eps q(a))``."""
    _shared_alphabet([P, Q])
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if math.isinf(eps):
        return float(P.mass[Q.mass == 0].sum())
    val = np.maximum(0.0, P.mass - math.exp(eps) * Q.mass).sum()
    return float(min(1.0, val))


def subset_pmf_table(mech: Mechanism, parent: ParentSet, subsets=None):
    """Evaluate ``mech`` on each subset; return ``(alphabet, subsets, table)``."""
    if subsets is None:
        subsets = all_subsets(parent)
    pmfs = [mech(parent.dataset(s)) for s in subsets]
    alphabet = _shared_alphabet(pmfs)
    return alphabet, subsets, np.array([p.mass for p in pmfs])


def _mixtures_from_table(table, subsets, target):
    member = np.array([target in s for s in subsets])
    p_in = table[member].mean(axis=0)
    p_out = table[~member].mean(axis=0)
    return p_in / p_in.sum(), p_out / p_out.sum()


def build_mixtures(mech: Mechanism, parent: ParentSet, target: int) -> MixturePair:
    _check_target(parent, target)
    alphabet, subsets, table = subset_pmf_table(mech, parent)
    expected = math.comb(len(parent), parent.n) // 2
    n_in = sum(target in s for s in subsets)
    assert n_in == expected and len(subsets) - n_in == expected
    p_in, p_out = _mixtures_from_table(table, subsets, target)
    return MixturePair(DiscretePMF(alphabet, p_in), DiscretePMF(alphabet, p_out), target)


def max_abs_log_ratio(p, q) -> float:
    """Largest ``|ln(p/q)|`` over atoms; 0/0 atoms are skipped, c/0 gives inf."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    both = (p > 0) & (q > 0)
    if np.any((p > 0) != (q > 0)):
        return math.inf
    if not both.any():
        return 0.0
    return float(np.max(np.abs(np.log(p[both]) - np.log(q[both]))))


def pmp_exact_pure(mech: Mechanism, parent: ParentSet) -> PrivacyParams:
    """Smallest pure PMP parameter of ``mech`` with respect to ``parent``.

    For a ratio of two PMFs the worst event is a single outcome, so the
    supremum over events reduces to a maximum over atoms.
    """
    _, subsets, table = subset_pmf_table(mech, parent)
    eps = 0.0
    for x in range(len(parent)):
        p_in, p_out = _mixtures_from_table(table, subsets, x)
        eps = max(eps, max_abs_log_ratio(p_in, p_out))
    return PrivacyParams(eps)


def pmp_delta_at_eps(mech: Mechanism, parent: ParentSet, eps: float) -> float:
    """Smallest ``delta`` such that ``mech`` is ``(eps, delta)``-PMP w.r.t. ``parent``."""
    alphabet, subsets, table = subset_pmf_table(mech, parent)
    worst = 0.0
    for x in range(len(parent)):
        p_in, p_out = (DiscretePMF(alphabet, p) for p in _mixtures_from_table(table, subsets, x))
        worst = max(worst, hockey_stick(p_in, p_out, eps), hockey_stick(p_out, p_in, eps))
    return worst


def dpX_exact_pure(mech: Mechanism, parent: ParentSet) -> PrivacyParams:
    """Pure DP parameter restricted to adjacent datasets drawn from ``parent``."""
    _, subsets, table = subset_pmf_table(mech, parent)
    row = {s: i for i, s in enumerate(subsets)}
    eps = 0.0
    for D, Dp in adjacent_pairs(parent):
        eps = max(eps, max_abs_log_ratio(table[row[D]], table[row[Dp]]))
        if math.isinf(eps):
            break
    return PrivacyParams(eps)


def mia_success_bound(eps: float) -> float:
    """Ceiling on any practical MIA's success under ``eps``-PMP."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    return 1.0 / (1.0 + math.exp(-eps))


def pmp_to_mip_eta(eps: float) -> float:
    """MIP parameter implied by ``eps``-PMP."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    return -math.expm1(-eps) / 2.0
