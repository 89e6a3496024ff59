"""Treatment assignment, exposure classification, and its misclassification law.

Level order everywhere is (c11, c10, c01, c00): own treatment crossed with
whether the treated-neighbor count clears the threshold (one by default).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence

import numpy as np

from .graphs import Graph
from .noise import NoiseParams

LEVEL_NAMES = ("c11", "c10", "c01", "c00")


class ExposureLevel(IntEnum):
    C11 = 0
    C10 = 1
    C01 = 2
    C00 = 3


@dataclass(frozen=True, eq=False)
class Treatment:
    """Bernoulli(p) assignment vector."""

    p: float
    z: np.ndarray

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise ValueError("treatment probability must lie in (0, 1)")
        z = np.asarray(self.z, dtype=bool)
        z.flags.writeable = False
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return int(self.z.size)


def assign_treatment(n: int, p: float, rng: np.random.Generator) -> Treatment:
    """Independent Bernoulli(p) assignment for ``n`` units."""
    if not (0.0 < p < 1.0):
        raise ValueError("treatment probability must lie in (0, 1)")
    if n < 1:
        raise ValueError("need at least one unit")
    return Treatment(p, rng.random(n) < p)


def treated_neighbor_counts(g: Graph, z: np.ndarray) -> np.ndarray:
    """Number of treated neighbors per vertex."""
    z = np.asarray(z, dtype=bool)
    if z.size != g.n_v:
        raise ValueError("assignment length does not match vertex count")
    zf = z.astype(np.float64)
    cnt = np.bincount(g.edge_i, weights=zf[g.edge_j], minlength=g.n_v)
    cnt += np.bincount(g.edge_j, weights=zf[g.edge_i], minlength=g.n_v)
    return cnt.astype(np.int64)


def _levels_from_counts(z: np.ndarray, cnt: np.ndarray, threshold) -> np.ndarray:
    hit = cnt >= threshold
    return np.where(z, np.where(hit, 0, 1), np.where(hit, 2, 3)).astype(np.int64)


def exposure_levels(t: Treatment, g: Graph) -> np.ndarray:
    """Exposure level code per vertex (0..3 in ``LEVEL_NAMES`` order)."""
    return _levels_from_counts(t.z, treated_neighbor_counts(g, t.z), 1)


def exposure_level(t: Treatment, g: Graph, i: int) -> ExposureLevel:
    g._check_vertex(i)
    return ExposureLevel(int(exposure_levels(t, g)[i]))


@dataclass(frozen=True)
class GeneralizedExposureConfig:
    """Treated-neighbor threshold: absolute count ``m`` or fraction ``q`` of degree.

    Fractional thresholds round up and never drop below one, so ``q = 0``
    reduces to the default any-treated-neighbor classification.
    """

    m: int | Sequence[int] | None = None
    q: float | None = None

    def __post_init__(self):
        if (self.m is None) == (self.q is None):
            raise ValueError("specify exactly one of m and q")
        if self.q is not None and not (0.0 <= self.q <= 1.0):
            raise ValueError("fraction q must lie in [0, 1]")

    def thresholds(self, g: Graph) -> np.ndarray:
        if self.m is not None:
            m = np.asarray(self.m, dtype=np.int64)
            if m.ndim == 0:
                m = np.full(g.n_v, int(m), dtype=np.int64)
            elif m.size != g.n_v:
                raise ValueError("per-node threshold length does not match vertex count")
            if m.size and m.min() < 1:
                raise ValueError("absolute thresholds must be at least 1")
            return m
        return np.maximum(1, np.ceil(self.q * g.degrees).astype(np.int64))


def exposure_levels_generalized(
    t: Treatment, g: Graph, cfg: GeneralizedExposureConfig
) -> np.ndarray:
    return _levels_from_counts(t.z, treated_neighbor_counts(g, t.z), cfg.thresholds(g))


def exposure_level_generalized(
    t: Treatment, g: Graph, i: int, cfg: GeneralizedExposureConfig
) -> ExposureLevel:
    g._check_vertex(i)
    return ExposureLevel(int(exposure_levels_generalized(t, g, cfg)[i]))


# -- closed-form exposure probabilities -----------------------------------


@dataclass(frozen=True)
class ExposureProbabilities:
    c11: float
    c10: float
    c01: float
    c00: float

    def as_array(self) -> np.ndarray:
        return np.array([self.c11, self.c10, self.c01, self.c00])

    def __getitem__(self, level) -> float:
        return float(self.as_array()[int(level)])


def exposure_probabilities(d: float, p: float) -> ExposureProbabilities:
    """Level probabilities for a vertex of (possibly non-integer) degree ``d``.

    Real degrees arise when noise-corrected degree estimates are plugged in;
    the closed forms extend by real exponentiation.
    """
    if not (0.0 < p < 1.0):
        raise ValueError("treatment probability must lie in (0, 1)")
    if not (d >= 0.0):
        raise ValueError("degree must be nonnegative")
    q = (1.0 - p) ** d
    return ExposureProbabilities(p * (1.0 - q), p * q, (1.0 - p) * (1.0 - q), (1.0 - p) * q)


def _level_probability_matrix(d: np.ndarray, p: float) -> np.ndarray:
    q = (1.0 - p) ** np.asarray(d, dtype=np.float64)
    return np.stack([p * (1.0 - q), p * q, (1.0 - p) * (1.0 - q), (1.0 - p) * q], axis=1)


def _binomial_head(d: int, p: float, kmax: int) -> float:
    # P(Binomial(d, p) <= kmax), summed term by term
    term = (1.0 - p) ** d
    total = term
    for x in range(kmax):
        term *= (d - x) / (x + 1) * (p / (1.0 - p))
        total += term
    return min(total, 1.0)


def exposure_probabilities_generalized(d: int, p: float, m: int) -> ExposureProbabilities:
    """Level probabilities when the neighbor threshold is ``m`` instead of 1."""
    if not (0.0 < p < 1.0):
        raise ValueError("treatment probability must lie in (0, 1)")
    d, m = int(d), int(m)
    if d < 0:
        raise ValueError("degree must be nonnegative")
    if m < 1:
        raise ValueError("threshold must be at least 1")
    head = _binomial_head(d, p, min(m - 1, d))
    tail = 1.0 - head if m <= d else 0.0
    return ExposureProbabilities(p * tail, p * head, (1.0 - p) * tail, (1.0 - p) * head)


# -- expected confusion between observed and true levels ------------------


class SingularConfusionError(ValueError):
    """Treated-block determinant at or below the floor; correction must fall back."""


DET_FLOOR = 1e-12


def _s_entries(d, n_v, p, alpha, beta):
    # treated-arm joint probabilities of (observed level, true level) for a
    # vertex of true degree d; vector-safe in d
    d = np.asarray(d, dtype=np.float64)
    a = (1.0 - alpha * p) ** (n_v - 1 - d)
    b = (1.0 - (1.0 - beta) * p) ** d
    qd = (1.0 - p) ** d
    s11 = p * (1.0 - qd - a * (b - qd))
    s12 = p * qd * (1.0 - a)
    s21 = p * a * (b - qd)
    s22 = p * qd * a
    return s11, s12, s21, s22


def _s_inverse_entries(d, n_v, p, alpha, beta):
    # closed-form inverse of the treated block, plus its determinant
    d = np.asarray(d, dtype=np.float64)
    a = (1.0 - alpha * p) ** (n_v - 1 - d)
    b = (1.0 - (1.0 - beta) * p) ** d
    qd = (1.0 - p) ** d
    det = p * p * qd * a * (1.0 - b)
    denom = p * (1.0 - b)
    i11 = 1.0 / denom
    i12 = -(1.0 - a) / (a * denom)
    i21 = -(b - qd) / (qd * denom)
    i22 = (1.0 - qd - a * (b - qd)) / (qd * a * denom)
    return i11, i12, i21, i22, det


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Expected joint classification of observed vs. true exposure levels.

    ``s`` is the treated arm (rows = observed c11, c10; columns = true) and
    ``q`` the control arm; the two arms are proportional because edge noise
    never touches treatment status.
    """

    s: np.ndarray
    q: np.ndarray
    d: float
    n_v: int
    p: float
    alpha: float
    beta: float

    def full(self) -> np.ndarray:
        out = np.zeros((4, 4))
        out[:2, :2] = self.s
        out[2:, 2:] = self.q
        return out


def confusion_matrix(d: float, n_v: int, p: float, noise: NoiseParams) -> ConfusionMatrix:
    if not (0.0 < p < 1.0):
        raise ValueError("treatment probability must lie in (0, 1)")
    if not (0.0 <= d <= n_v - 1):
        raise ValueError("degree must lie in [0, n_v - 1]")
    s11, s12, s21, s22 = _s_entries(float(d), n_v, p, noise.alpha, noise.beta)
    s = np.array([[s11, s12], [s21, s22]])
    q = (1.0 - p) / p * s
    return ConfusionMatrix(s=s, q=q, d=float(d), n_v=int(n_v), p=p,
                           alpha=noise.alpha, beta=noise.beta)


@dataclass(frozen=True, eq=False)
class ConfusionInverse:
    s_inv: np.ndarray
    q_inv: np.ndarray
    det_s: float


def invert_confusion(cm: ConfusionMatrix, det_floor: float = DET_FLOOR) -> ConfusionInverse:
    """Closed-form inverse of both confusion blocks.

    Raises ``SingularConfusionError`` when the treated-block determinant is
    not safely positive, which happens as the degree approaches zero.
    """
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        i11, i12, i21, i22, det = _s_inverse_entries(cm.d, cm.n_v, cm.p, cm.alpha, cm.beta)
    if not (det > det_floor and math.isfinite(det)):
        raise SingularConfusionError(f"treated confusion block is singular (det={det:.3e})")
    s_inv = np.array([[i11, i12], [i21, i22]])
    q_inv = cm.p / (1.0 - cm.p) * s_inv
    return ConfusionInverse(s_inv=s_inv, q_inv=q_inv, det_s=float(det))
