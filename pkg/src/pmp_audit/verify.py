"""Brute-force property suites for the auditing library.

Each property draws its own random instances from a fixed seed and returns a
:class:`PropertyResult`.  :func:`run_suite` prints one ``PASS``/``FAIL`` line
per property followed by a ``SUMMARY`` line of ``key=value`` pairs.
"""
from __future__ import annotations

import itertools
import math
import sys
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import spearmanr

from .attacks import bayes_practical_mia, mod6_mechanism, worst_case_mia
from .core import (
    DiscretePMF,
    ParentSet,
    adjacent_out_neighbors,
    all_subsets,
    dpX_exact_pure,
    hockey_stick,
    mia_success_bound,
    pmp_exact_pure,
    split_in_out,
)
from .expmech import (
    CandidateSet,
    ExpMechAudit,
    ExpMechConfig,
    expmech_dpX,
    expmech_pmf,
    expmech_pmp,
    loss_sensitivity,
)
from .gaussmech import (
    EPS_ATOL,
    GaussAudit,
    calibrate_sigma,
    dp_delta_given,
    gauss_dpX_param,
    gauss_worst_eps,
    mean_query,
    mixture_divergence_oracle_1d,
    pmp_bound_delta_fast,
    pmp_bound_delta_general,
)
from .synthdata import GenSpec, _make_distinct, clip, derive_seed, generate

INSTANCES = 100
SEED = 20240607


@dataclass
class PropertyResult:
    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0


class TabularMechanism:
    """A finite mechanism given by one PMF per subset of a parent set."""

    def __init__(self, parent: ParentSet, alphabet, table: dict):
        self.parent = parent
        self.alphabet = tuple(alphabet)
        self.table = table
        self._index = {tuple(p): i for i, p in enumerate(parent.points.tolist())}

    def subset_of(self, D) -> frozenset:
        return frozenset(self._index[tuple(row)] for row in np.asarray(D, dtype=float).tolist())

    def __call__(self, D) -> DiscretePMF:
        return DiscretePMF(self.alphabet, self.table[self.subset_of(D)])

    def merged(self, labels) -> "TabularMechanism":
        """Post-process by relabelling outcome ``a`` as ``labels[a]``."""
        new_alpha = sorted(set(labels))
        pos = {a: i for i, a in enumerate(new_alpha)}
        table = {}
        for S, mass in self.table.items():
            out = np.zeros(len(new_alpha))
            for a, p in zip(range(len(self.alphabet)), mass):
                out[pos[labels[a]]] += p
            table[S] = out
        return TabularMechanism(self.parent, new_alpha, table)


def random_parent(rng: np.random.Generator, n: int, d: int = 1) -> ParentSet:
    return ParentSet(rng.normal(size=(2 * n, d)))


def random_mechanism(rng: np.random.Generator, n: int, k: int, sparsity: float = 0.2) -> TabularMechanism:
    """Random PMFs with occasional exact zeros, so infinite log ratios get exercised."""
    parent = random_parent(rng, n)
    table = {}
    for S in all_subsets(parent):
        w = rng.exponential(size=k)
        w[rng.random(k) < sparsity] = 0.0
        if w.sum() == 0:
            w[rng.integers(k)] = 1.0
        table[S] = w / w.sum()
    return TabularMechanism(parent, range(k), table)


def _log_ratio(a: float, b: float) -> float:
    if a == 0 and b == 0:
        return 0.0
    if a == 0 or b == 0:
        return math.inf
    return abs(math.log(a) - math.log(b))


def _events(k: int):
    for r in range(1, k + 1):
        yield from itertools.combinations(range(k), r)


def event_forms(mech: TabularMechanism) -> tuple[float, float, float]:
    """Pure PMP parameter three ways, each by enumerating every event.

    * posterior odds of membership given the event, under the uniform prior
      over halves of the parent;
    * probability of the event conditioned on membership versus absence;
    * mass of the event under the in and out mixtures.
    """
    parent = mech.parent
    subsets = all_subsets(parent)
    k = len(mech.alphabet)
    N = len(subsets)
    a = b = c = 0.0
    for x in range(len(parent)):
        has_x = [x in S for S in subsets]
        p_member = sum(has_x) / N
        for ev in _events(k):
            mass = [float(np.sum(mech.table[S][list(ev)])) for S in subsets]
            joint_in = sum(m for m, h in zip(mass, has_x) if h) / N
            joint_out = sum(m for m, h in zip(mass, has_x) if not h) / N
            total = joint_in + joint_out
            if total > 0:
                a = max(a, _log_ratio(joint_in / total, joint_out / total))
            b = max(b, _log_ratio(joint_in / p_member, joint_out / (1 - p_member)))
            s_in = math.fsum(m for m, h in zip(mass, has_x) if h)
            s_out = math.fsum(m for m, h in zip(mass, has_x) if not h)
            c = max(c, _log_ratio(s_in / (N / 2), s_out / (N / 2)))
    return a, b, c


def _close(x: float, y: float, tol: float) -> bool:
    if math.isinf(x) or math.isinf(y):
        return x == y
    return abs(x - y) <= tol


def _leq(x: float, y: float, tol: float) -> bool:
    if math.isinf(y):
        return True
    return x <= y + tol


def _count(name: str, fails: list, total: int) -> PropertyResult:
    detail = f"{total - len(fails)}/{total} instances"
    if fails:
        detail += f"; first failure: {fails[0]}"
    return PropertyResult(name, not fails, detail)


# core ----------------------------------------------------------------------

def prop_partition(max_n: int = 8) -> PropertyResult:
    fails = []
    for n in range(1, max_n + 1):
        parent = ParentSet(np.arange(2 * n, dtype=float)[:, None])
        half = math.comb(2 * n, n) // 2
        for x in range(2 * n):
            ins, outs = split_in_out(parent, x)
            if len(ins) != half or len(outs) != half:
                fails.append((n, x, len(ins), len(outs)))
    return _count("core.partition", fails, max_n)


def prop_neighbor_count(max_n: int = 5) -> PropertyResult:
    fails = []
    for n in range(1, max_n + 1):
        parent = ParentSet(np.arange(2 * n, dtype=float)[:, None])
        for x in range(2 * n):
            ins, outs = split_in_out(parent, x)
            hits = dict.fromkeys(outs, 0)
            for D in ins:
                nb = adjacent_out_neighbors(D, parent, x)
                if len(nb) != n:
                    fails.append((n, x, sorted(D)))
                for Dp in nb:
                    hits[Dp] += 1
            if any(v != n for v in hits.values()):
                fails.append((n, x, "reach"))
    return _count("core.neighbor_count", fails, max_n)


def prop_event_forms(instances: int = INSTANCES, seed: int = SEED) -> PropertyResult:
    rng = np.random.default_rng(seed)
    fails = []
    for i in range(instances):
        mech = random_mechanism(rng, int(rng.integers(1, 4)), int(rng.integers(2, 5)))
        ref = pmp_exact_pure(mech, mech.parent).eps
        forms = event_forms(mech)
        if not all(_close(ref, f, 1e-12) for f in forms):
            fails.append((i, ref, forms))
    return _count("core.event_form_equivalence", fails, instances)


def prop_single_pair(instances: int = INSTANCES, seed: int = SEED + 1) -> PropertyResult:
    rng = np.random.default_rng(seed)
    fails = []
    for i in range(instances):
        mech = random_mechanism(rng, 1, int(rng.integers(2, 6)))
        a = pmp_exact_pure(mech, mech.parent).eps
        b = dpX_exact_pure(mech, mech.parent).eps
        if not _close(a, b, 1e-12):
            fails.append((i, a, b))
    return _count("core.single_pair_equality", fails, instances)


def prop_pmp_below_dpX(instances: int = INSTANCES, seed: int = SEED + 2) -> PropertyResult:
    rng = np.random.default_rng(seed)
    fails = []
    for i in range(instances):
        mech = random_mechanism(rng, int(rng.integers(1, 4)), int(rng.integers(2, 5)))
        a = pmp_exact_pure(mech, mech.parent).eps
        b = dpX_exact_pure(mech, mech.parent).eps
        if not _leq(a, b, 1e-12):
            fails.append((i, a, b))
    return _count("core.pmp_below_dpX", fails, instances)


def prop_post_processing(instances: int = INSTANCES, seed: int = SEED + 3) -> PropertyResult:
    rng = np.random.default_rng(seed)
    fails = []
    for i in range(instances):
        k = int(rng.integers(2, 6))
        mech = random_mechanism(rng, int(rng.integers(1, 4)), k)
        j = int(rng.integers(1, k + 1))
        # surjective: the first j labels cover every target label
        labels = list(range(j)) + [int(v) for v in rng.integers(0, j, size=k - j)]
        labels = [labels[p] for p in rng.permutation(k)]
        before = pmp_exact_pure(mech, mech.parent).eps
        after = pmp_exact_pure(mech.merged(labels), mech.parent).eps
        if not _leq(after, before, 1e-12):
            fails.append((i, labels, before, after))
    return _count("core.post_processing", fails, instances)


def prop_hockey_stick(instances: int = INSTANCES, seed: int = SEED + 4) -> PropertyResult:
    rng = np.random.default_rng(seed)
    fails = []
    grid = [0.0, 0.1, 0.5, 1.0, 2.0, 5.0, math.inf]
    for i in range(instances):
        k = int(rng.integers(2, 8))
        P = DiscretePMF(range(k), rng.dirichlet(np.ones(k)))
        Q = DiscretePMF(range(k), rng.dirichlet(np.ones(k)))
        vals = [hockey_stick(P, Q, e) for e in grid]
        if any(b > a + 1e-15 for a, b in zip(vals, vals[1:])) or hockey_stick(P, P, 0.0) != 0.0:
            fails.append((i, vals))
    return _count("core.hockey_stick_monotone", fails, instances)


# expmech -------------------------------------------------------------------

def _random_expmech(rng, n_max=3, m_max=4, d_max=3, clip_range=(1.0, 10.0)):
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(2, m_max + 1))
    d = int(rng.integers(1, d_max + 1))
    C = float(rng.uniform(*clip_range))
    cands = rng.normal(size=(m, d))
    cands /= np.linalg.norm(cands, axis=1, keepdims=True)
    parent = ParentSet(_make_distinct(clip(rng.normal(scale=C / 2, size=(2 * n, d)), C)))
    cs = CandidateSet(cands)
    cfg = ExpMechConfig(float(rng.uniform(0.1, 20.0)), loss_sensitivity(C, cs, n), C)
    return parent, cs, cfg


def prop_expmech_ordering(instances: int = INSTANCES, seed: int = SEED + 10) -> PropertyResult:
    rng = np.random.default_rng(seed)
    fails = []
    for i in range(instances):
        parent, cs, cfg = _random_expmech(rng, n_max=5, m_max=10)
        audit = ExpMechAudit(parent, cs)
        et, ex = audit.eps_tilde(cfg.scale), audit.eps_X(cfg.scale)
        if not (et <= ex + 1e-12 and ex <= cfg.eps_dp + 1e-12):
            fails.append((i, et, ex, cfg.eps_dp))
    return _count("expmech.ordering", fails, instances)


def prop_expmech_bruteforce(instances: int = INSTANCES, seed: int = SEED + 11) -> PropertyResult:
    rng = np.random.default_rng(seed)
    fails = []
    for i in range(instances):
        parent, cs, cfg = _random_expmech(rng)

        def mech(D):
            return expmech_pmf(D, cs, cfg)

        a, b = expmech_pmp(parent, cs, cfg).eps, pmp_exact_pure(mech, parent).eps
        c, e = expmech_dpX(parent, cs, cfg).eps, dpX_exact_pure(mech, parent).eps
        if not (_close(a, b, 1e-10) and _close(c, e, 1e-10)):
            fails.append((i, a, b, c, e))
    return _count("expmech.bruteforce_agreement", fails, instances)


def prop_expmech_scale_invariance(instances: int = INSTANCES, seed: int = SEED + 12) -> PropertyResult:
    rng = np.random.default_rng(seed)
    fails = []
    for i in range(instances):
        parent, cs, cfg = _random_expmech(rng, n_max=4, m_max=8)
        audit = ExpMechAudit(parent, cs)
        base = (audit.log_pmf(cfg.scale), audit.eps_tilde(cfg.scale), audit.eps_X(cfg.scale))
        c = float(10.0 ** rng.uniform(-3, 3))
        audit.loss = audit.loss * c
        scaled = (audit.log_pmf(cfg.scale / c), audit.eps_tilde(cfg.scale / c), audit.eps_X(cfg.scale / c))
        ok = (np.allclose(np.exp(base[0]), np.exp(scaled[0]), rtol=0, atol=1e-10)
              and abs(base[1] - scaled[1]) <= 1e-10 and abs(base[2] - scaled[2]) <= 1e-10)
        if not ok:
            fails.append((i, c, base[1:], scaled[1:]))
    return _count("expmech.scale_invariance", fails, instances)


SIGMA_GRID = (0.01, 0.03, 0.1, 0.3, 1.0, 3.0)


def prop_expmech_sigma_trend(trials: int = 20, seed: int = 2024) -> PropertyResult:
    """Averaged ratio over the default sigma grid rises with sigma."""
    from .estimators import ExpMechPMPAuditor

    curve = []
    for s in SIGMA_GRID:
        ratios = []
        for t in range(trials):
            spec = GenSpec(n=6, d=1, m=10, sigma_data=s, clip=10.0, seed=derive_seed(seed, t))
            cands, parent = generate(spec)
            est = ExpMechPMPAuditor(cands, clip=10.0, target_eps_X=5.0, eps_X_mode="sensitivity")
            est.fit(parent.points)
            ratios.append(est.eps_tilde_ / est.eps_)
        curve.append(float(np.mean(ratios)))
    rho = spearmanr(SIGMA_GRID, curve).statistic
    return PropertyResult("expmech.sigma_trend", bool(rho > 0.9),
                          f"spearman={rho:.3f} curve={[round(v, 4) for v in curve]}")


# gauss ---------------------------------------------------------------------

def prop_gauss_soundness(instances: int = INSTANCES, seed: int = SEED + 20) -> PropertyResult:
    rng = np.random.default_rng(seed)
    fails = []
    for i in range(instances):
        n = int(rng.integers(1, 5))
        parent = ParentSet(rng.normal(size=(2 * n, 1)))
        f = mean_query(n)
        sigma = float(rng.uniform(0.05, 1.0))
        eps = float(rng.uniform(0.0, 3.0))
        target = int(rng.integers(2 * n))
        oracle = mixture_divergence_oracle_1d(parent, target, f, sigma, eps)
        bound = pmp_bound_delta_fast(parent, target, f, sigma, eps)
        if oracle > bound + 1e-6:
            fails.append((i, oracle, bound))
    return _count("gauss.bound_soundness", fails, instances)


def prop_gauss_fast_path(instances: int = 30, seed: int = SEED + 21) -> PropertyResult:
    rng = np.random.default_rng(seed)
    fails = []
    for i in range(instances):
        n = int(rng.integers(1, 7))
        d = int(rng.integers(1, 4))
        parent = ParentSet(rng.normal(size=(2 * n, d)))
        f = mean_query(n)
        sigma, eps = float(rng.uniform(0.05, 1.0)), float(rng.uniform(0.0, 3.0))
        target = int(rng.integers(2 * n))
        a = pmp_bound_delta_fast(parent, target, f, sigma, eps)
        b = pmp_bound_delta_general(parent, target, f, sigma, eps)
        if abs(a - b) > 1e-12:
            fails.append((i, n, a, b))
    return _count("gauss.fast_path_identity", fails, instances)


def prop_gauss_ordering(instances: int = INSTANCES, seed: int = SEED + 22) -> PropertyResult:
    rng = np.random.default_rng(seed)
    fails = []
    for i in range(instances):
        n = int(rng.integers(1, 30))
        d = int(rng.integers(1, 10))
        C = float(rng.uniform(1.0, 50.0))
        parent = ParentSet(_make_distinct(clip(rng.normal(scale=C / 2, size=(2 * n, d)), C)))
        delta = float(10 ** rng.uniform(-5, -1))
        sigma = float(rng.uniform(0.05, 3.0)) * 2 * C / n
        audit = GaussAudit(parent, mean_query(n))
        et, ex = audit.eps_tilde(sigma, delta), audit.eps_X(sigma, delta)
        ew = gauss_worst_eps(C, n, sigma, delta).eps
        # both sides come from the same bisection, so compare at its resolution
        if not (et <= ex + 1e-12 and ex <= ew + 2 * EPS_ATOL):
            fails.append((i, et, ex, ew))
    return _count("gauss.ordering", fails, instances)


CAL_GRID = list(itertools.product((0.1, 1.0, 10.0), (0.5, 2.0, 8.0), (1e-5, 1e-3, 1e-1)))


def prop_gauss_calibration() -> PropertyResult:
    fails = []
    for Delta, eps, delta in CAL_GRID:
        sigma = calibrate_sigma(Delta, eps, delta)
        got = dp_delta_given(Delta, sigma, eps)
        if not delta * (1 - 1e-6) <= got <= delta:
            fails.append((Delta, eps, delta, got))
    return _count("gauss.calibration_residual", fails, len(CAL_GRID))


def prop_gauss_round_trip() -> PropertyResult:
    fails = []
    for Delta, eps, delta in CAL_GRID:
        sigma = calibrate_sigma(Delta, eps, delta)
        parent = ParentSet(np.array([[0.0], [Delta]]))
        got = gauss_dpX_param(parent, lambda x: x, sigma, delta).eps
        if abs(got - eps) > 1e-5:
            fails.append((Delta, eps, delta, got))
    return _count("gauss.calibration_round_trip", fails, len(CAL_GRID))


def prop_gauss_scale_invariance(instances: int = INSTANCES, seed: int = SEED + 23) -> PropertyResult:
    rng = np.random.default_rng(seed)
    fails = []
    for i in range(instances):
        Delta, sigma = float(rng.uniform(0.01, 10)), float(rng.uniform(0.01, 10))
        eps, c = float(rng.uniform(0, 5)), float(10 ** rng.uniform(-3, 3))
        a, b = dp_delta_given(Delta, sigma, eps), dp_delta_given(c * Delta, c * sigma, eps)
        if abs(a - b) > 1e-12:
            fails.append((i, a, b))
    return _count("gauss.scale_invariance", fails, instances)


# attacks -------------------------------------------------------------------

def prop_mod6() -> PropertyResult:
    parent = ParentSet(np.arange(6, dtype=float)[:, None])
    a = pmp_exact_pure(mod6_mechanism, parent).eps
    b = dpX_exact_pure(mod6_mechanism, parent).eps
    ok = abs(a - math.log(2)) <= 1e-12 and math.isinf(b)
    return PropertyResult("attacks.mod6_exactness", ok, f"pmp={a!r} dpX={b!r}")


def prop_attack_ceiling(instances: int = INSTANCES, seed: int = SEED + 30) -> PropertyResult:
    rng = np.random.default_rng(seed)
    fails = []
    for i in range(instances):
        mech = random_mechanism(rng, int(rng.integers(1, 4)), int(rng.integers(2, 6)), sparsity=0.05)
        eps = pmp_exact_pure(mech, mech.parent).eps
        for x in range(len(mech.parent)):
            rep = bayes_practical_mia(mech, mech.parent, x)
            if rep.success_prob > mia_success_bound(eps) + 1e-12:
                fails.append((i, x, rep.success_prob, eps))
    return _count("attacks.success_ceiling", fails, instances)


def prop_dominance(instances: int = INSTANCES, seed: int = SEED + 31) -> PropertyResult:
    rng = np.random.default_rng(seed)
    fails = []
    for i in range(instances):
        mech = random_mechanism(rng, int(rng.integers(1, 4)), int(rng.integers(2, 5)))
        parent = mech.parent
        x = int(rng.integers(len(parent)))
        ins, _ = split_in_out(parent, x)
        best = max(worst_case_mia(mech, parent.dataset(D), parent.dataset(Dp))
                   for D in ins for Dp in adjacent_out_neighbors(D, parent, x))
        bayes = bayes_practical_mia(mech, parent, x).success_prob
        if best < bayes - 1e-12:
            fails.append((i, best, bayes))
    return _count("attacks.dominance", fails, instances)


def prop_bayes_optimal(instances: int = 50, seed: int = SEED + 32) -> PropertyResult:
    from .core import build_mixtures

    rng = np.random.default_rng(seed)
    fails = []
    for i in range(instances):
        k = int(rng.integers(2, 13))
        mech = random_mechanism(rng, int(rng.integers(1, 3)), k)
        x = int(rng.integers(len(mech.parent)))
        rep = bayes_practical_mia(mech, mech.parent, x)
        mix = build_mixtures(mech, mech.parent, x)
        p_in, p_out = mix.p_in.mass, mix.p_out.mass
        # each rule says "in" on a subset of outcomes; success = (P_in(S) + P_out(S^c)) / 2
        rules = np.array(list(itertools.product((0, 1), repeat=k)), dtype=float)
        best = float((0.5 * (rules @ p_in + (1 - rules) @ p_out)).max())
        if best > rep.success_prob + 1e-12:
            fails.append((i, k, best, rep.success_prob))
    return _count("attacks.bayes_optimality", fails, instances)


SUITES: dict[str, list[Callable[[], PropertyResult]]] = {
    "core": [prop_partition, prop_neighbor_count, prop_event_forms, prop_single_pair,
             prop_pmp_below_dpX, prop_post_processing, prop_hockey_stick],
    "expmech": [prop_expmech_ordering, prop_expmech_bruteforce, prop_expmech_scale_invariance,
                prop_expmech_sigma_trend],
    "gauss": [prop_gauss_soundness, prop_gauss_fast_path, prop_gauss_ordering,
              prop_gauss_calibration, prop_gauss_round_trip, prop_gauss_scale_invariance],
    "attacks": [prop_mod6, prop_attack_ceiling, prop_dominance, prop_bayes_optimal],
}
SUITE_NAMES = (*SUITES, "all")


def collect(suite: str) -> list[Callable[[], PropertyResult]]:
    if suite == "all":
        return [p for props in SUITES.values() for p in props]
    if suite not in SUITES:
        raise KeyError(f"unknown suite {suite!r}; choose from {', '.join(SUITE_NAMES)}")
    return SUITES[suite]


def run_suite(suite: str, out=None) -> list[PropertyResult]:
    out = out or sys.stdout
    results = []
    for prop in collect(suite):
        t0 = time.perf_counter()
        try:
            res = prop()
        except Exception as exc:  # a crash is a failed property, not a crashed run
            res = PropertyResult(prop.__name__, False, f"raised {type(exc).__name__}: {exc}")
        res.seconds = time.perf_counter() - t0
        results.append(res)
        print(f"{'PASS' if res.passed else 'FAIL'} {res.name} ({res.seconds:.2f}s) {res.detail}", file=out)
    passed = sum(r.passed for r in results)
    print(f"SUMMARY suite={suite} passed={passed} failed={len(results) - passed} total={len(results)}", file=out)
    return results
