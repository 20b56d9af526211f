"""Seedable synthetic parent and candidate sets.

Randomness comes from a splitmix64 stream so the same seed produces the
same bits in any implementation.  Uniforms take the top 53 bits of each
output; normals use the cosine branch of Box-Muller on two consecutive
uniforms, the first mapped into (0, 1] so the logarithm stays finite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ParentSet
from .expmech import CandidateSet

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
DUPLICATE_NUDGE = 1e-12


def mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class RngStream:
    """splitmix64 generator."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def uniform(self) -> float:
        """Uniform on [0, 1)."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def uniform_open0(self) -> float:
        """Uniform on (0, 1]."""
        return ((self.next_u64() >> 11) + 1) * 2.0 ** -53

    def normal(self) -> float:
        u1 = self.uniform_open0()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def normals(self, shape) -> np.ndarray:
        size = int(np.prod(shape))
        return np.array([self.normal() for _ in range(size)]).reshape(shape)

    def randbelow(self, k: int) -> int:
        return (self.next_u64() * k) >> 64


def derive_seed(seed: int, index: int) -> int:
    """Seed of an independent per-trial stream."""
    return RngStream(seed ^ index).next_u64()


@dataclass(frozen=True)
class GenSpec:
    n: int
    d: int
    m: int = 10
    sigma_data: float = 1.0
    clip: float = 10.0
    outlier_count: int = 0
    outlier_factor: float = 1.0
    center: str = "candidate_1"
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be positive")
        if self.sigma_data <= 0 or self.clip <= 0:
            raise ValueError("sigma_data and clip must be positive")
        if not 0 <= self.outlier_count <= 2 * self.n:
            raise ValueError("outlier_count must lie in [0, 2n]")
        if self.outlier_factor < 1:
            raise ValueError("outlier_factor must be >= 1")
        if self.center not in ("candidate_1", "origin"):
            raise ValueError(f"unknown center {self.center!r}")


def gen_candidates(spec: GenSpec, rng: RngStream | None = None) -> CandidateSet:
    if spec.m < 2:
        raise ValueError("need m >= 2 candidates")
    rng = rng or RngStream(spec.seed)
    rows = []
    while len(rows) < spec.m:
        v = rng.normals(spec.d)
        norm = np.linalg.norm(v)
        if norm == 0.0:
            continue
        rows.append(v / norm)
    return CandidateSet(np.array(rows))


def inject_outliers(points, k: int, factor: float, rng: RngStream) -> np.ndarray:
    """Scale ``k`` distinct, uniformly chosen rows by ``factor``."""
    pts = np.array(points, dtype=float)
    if not 0 <= k <= len(pts):
        raise ValueError(f"cannot pick {k} outliers from {len(pts)} points")
    idx = list(range(len(pts)))
    # partial Fisher-Yates
    for i in range(k):
        j = i + rng.randbelow(len(idx) - i)
        idx[i], idx[j] = idx[j], idx[i]
    pts[idx[:k]] *= factor
    return pts


def clip(points, C: float) -> np.ndarray:
    """Project every row with norm above ``C`` onto the sphere of radius ``C``."""
    if C <= 0:
        raise ValueError("clip threshold must be positive")
    pts = np.array(points, dtype=float)
    norms = np.linalg.norm(pts, axis=-1, keepdims=True)
    scale = np.where(norms > C, C / np.where(norms > 0, norms, 1.0), 1.0)
    return pts * scale


def _make_distinct(pts: np.ndarray) -> np.ndarray:
    seen = set()
    for i in range(len(pts)):
        while tuple(pts[i]) in seen:
            old = pts[i, 0]
            pts[i, 0] = old + DUPLICATE_NUDGE * max(i, 1)
            if pts[i, 0] == old:
                pts[i, 0] = np.nextafter(old, np.inf)
        seen.add(tuple(pts[i]))
    return pts


def gen_parent(spec: GenSpec, cands: CandidateSet | None = None, rng: RngStream | None = None) -> ParentSet:
    """Sample ``2n`` points around the configured center, then outliers, then clip."""
    rng = rng or RngStream(spec.seed)
    if spec.center == "candidate_1":
        if cands is None:
            raise ValueError("center='candidate_1' needs a candidate set")
        center = cands.candidates[0]
    else:
        center = np.zeros(spec.d)
    pts = center + spec.sigma_data * rng.normals((2 * spec.n, spec.d))
    if spec.outlier_count:
        pts = inject_outliers(pts, spec.outlier_count, spec.outlier_factor, rng)
    pts = clip(pts, spec.clip)
    return ParentSet(_make_distinct(pts))


def generate(spec: GenSpec):
    """Candidates (when ``m`` is used) and parent from one stream, in that order."""
    rng = RngStream(spec.seed)
    cands = gen_candidates(spec, rng) if spec.center == "candidate_1" else None
    return cands, gen_parent(spec, cands, rng)
