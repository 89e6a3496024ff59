"""Closed-form predictions and diagnostics used to validate simulation output."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimators import OutcomeTable
from .exposure import LEVEL_NAMES, _level_probability_matrix
from .graphs import Graph
from .noise import NoiseParams


@dataclass(frozen=True, eq=False)
class BiasPrediction:
    """Predicted bias of the uncorrected observed-graph estimator per level.

    The c10 and c00 components are exact; the c11 and c01 components drop a
    vanishing remainder (``exact`` flags which is which). ``per_node`` holds
    the per-vertex terms whose average gives ``values``.
    """

    values: np.ndarray
    per_node: np.ndarray
    exact: tuple[bool, bool, bool, bool] = (False, True, False, True)


def naive_estimator_bias(
    degrees,
    table: OutcomeTable,
    noise: NoiseParams,
    p: float,
    n_v: int | None = None,
) -> BiasPrediction:
    """Predicted bias of plain inverse-probability weighting on a noisy graph.

    ``degrees`` are true degrees; ``n_v`` defaults to their count but can be
    set independently to evaluate per-node terms inside a larger graph.
    Missed edges alone inflate the no-treated-neighbor levels (c10, c00),
    while the any-treated-neighbor levels (c11, c01) are deflated by a
    degree-dependent misclassification share.
    """
    if not (0.0 < p < 1.0):
        raise ValueError("treatment probability must lie in (0, 1)")
    d = np.asarray(degrees, dtype=np.float64)
    if d.ndim != 1 or d.size == 0:
        raise ValueError("degrees must be a nonempty vector")
    if table.n_v != d.size:
        raise ValueError("outcome table size does not match degree count")
    if n_v is None:
        n_v = d.size
    y = table.values
    tau_t = y[:, 0] - y[:, 1]
    tau_c = y[:, 2] - y[:, 3]

    miss = 1.0 - (1.0 - noise.beta * p) ** d
    a = (1.0 - noise.alpha * p) ** (n_v - 1 - d)
    b = (1.0 - (1.0 - noise.beta) * p) ** d
    qd = (1.0 - p) ** d
    num = qd * (1.0 - a)
    den = 1.0 - a * b
    ratio = np.divide(num, den, out=np.zeros_like(num), where=den != 0.0)

    per_node = np.empty((d.size, 4))
    per_node[:, 0] = -ratio * tau_t
    per_node[:, 1] = miss * tau_t
    per_node[:, 2] = -ratio * tau_c
    per_node[:, 3] = miss * tau_c
    return BiasPrediction(values=per_node.mean(axis=0), per_node=per_node)


@dataclass(frozen=True)
class ObservedDegreeMoments:
    """Moments of (1-p) raised to the observed degree of a fixed vertex."""

    mean_decay: float
    mean_growth: float
    var_decay: float


def observed_degree_moments(
    d: int, n_v: int, p: float, noise: NoiseParams
) -> ObservedDegreeMoments:
    """Closed-form moments of the observed-degree weight factors.

    For a vertex of true degree ``d`` the observed degree is a sum of two
    binomials (surviving true edges plus false edges), which makes these
    expectations products of per-pair factors.
    """
    if not (0.0 < p < 1.0):
        raise ValueError("treatment probability must lie in (0, 1)")
    if not (0 <= d <= n_v - 1):
        raise ValueError("degree must lie in [0, n_v - 1]")
    a, b = noise.alpha, noise.beta
    k = n_v - 1 - d
    mean_decay = (1.0 - a * p) ** k * (1.0 - (1.0 - b) * p) ** d
    mean_growth = (1.0 + a * p / (1.0 - p)) ** k * (1.0 + (1.0 - b) * p / (1.0 - p)) ** d
    var_decay = (1.0 - a * p * (2.0 - p)) ** k * (
        1.0 - (1.0 - b) * p * (2.0 - p)
    ) ** d - mean_decay**2
    return ObservedDegreeMoments(
        mean_decay=float(mean_decay),
        mean_growth=float(mean_growth),
        var_decay=float(var_decay),
    )


@dataclass(frozen=True, eq=False)
class ConditionDiagnostics:
    """Finite-sample consistency diagnostics.

    ``inverse_prob_sums`` holds the per-level sums of reciprocal exposure
    probabilities normalized by n_v squared (zero-degree vertices are
    excluded from the c11/c01 sums and counted separately);
    ``dependency_fraction`` is the share of ordered vertex pairs whose
    exposures can be dependent (shared edge or common neighbor). Values far
    below 1 indicate the regime where the estimators concentrate.
    """

    inverse_prob_sums: dict[str, float]
    dependency_fraction: float
    zero_degree_nodes: int


def condition_diagnostics(g: Graph, p: float) -> ConditionDiagnostics:
    if not (0.0 < p < 1.0):
        raise ValueError("treatment probability must lie in (0, 1)")
    n = g.n_v
    if n < 1:
        raise ValueError("graph has no vertices")
    pm = _level_probability_matrix(g.degrees, p)
    pos = g.degrees > 0
    sums = {
        LEVEL_NAMES[0]: float((1.0 / pm[pos, 0]).sum()),
        LEVEL_NAMES[1]: float((1.0 / pm[:, 1]).sum()),
        LEVEL_NAMES[2]: float((1.0 / pm[pos, 2]).sum()),
        LEVEL_NAMES[3]: float((1.0 / pm[:, 3]).sum()),
    }
    norm = {k: v / n**2 for k, v in sums.items()}

    adj = g.adjacency
    af = adj.astype(np.float32)
    dep = ((af @ af) > 0.5) | adj
    np.fill_diagonal(dep, False)
    frac = float(dep.sum()) / n**2
    return ConditionDiagnostics(
        inverse_prob_sums=norm,
        dependency_fraction=frac,
        zero_degree_nodes=int((~pos).sum()),
    )
