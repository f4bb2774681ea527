"""Influence metrics built on the borrowing decomposition.

Average Cook's distance per cluster, the retrospective value of sample
information (the squared change in one estimate from deleting one
cluster), Pena's S_i (aggregating all single-deletion changes of one
estimate), and boxplot summaries of the weight placed on a designated
influential set within each relationship group.

All weights used here are unconditioned rows of W; the functions pull
what they need from the decomposition's factorization directly, so a
conditioned decomposition can be passed without harm.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .decompose import BorrowingDecomposition
from .errors import (
    DegeneratePooling,
    DimensionError,
    EmptySet,
    IndexOutOfRange,
    LeverageWarning,
    LeverageZero,
)

__all__ = [
    "InfluenceReport",
    "BoxStats",
    "ImpactSummary",
    "avg_cooks_distance",
    "rvsi",
    "pena_si",
    "impact_summary",
    "build_influence_report",
]

_LEVERAGE_TOL = 1e-10


def _full_fitted(model, scale, y):
    beta = scale.solve(model.design.T @ (y / model.noise_variances))
    return model.design @ beta


def _self_weights(model, scale, clusters) -> np.ndarray:
    """w_jj for each cluster representative."""
    reps = clusters.reps
    out = np.empty(len(reps))
    for k, r in enumerate(reps):
        x = model.design_row(int(r))
        out[k] = float(x @ scale.solve(x)) / model.noise_variances[r]
    return out


def _residual_scale(model, e: np.ndarray) -> float:
    dof = model.n_obs - model.p_total
    if dof <= 0:
        raise DimensionError(
            f"residual degrees of freedom N - P = {dof} <= 0; "
            "Cook/Pena metrics are undefined for this model"
        )
    return float(e @ e) / dof


def avg_cooks_distance(model, decomp: BorrowingDecomposition, y) -> np.ndarray:
    """Mean single-deletion Cook's distance per cluster.

    D-bar_j = (e-bar_j^2 / (p s^2)) * w_jj / (1 - w_jj)^2. Clusters whose
    self-weight is numerically one get NaN with a warning; the metric is
    undefined there.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    clusters = decomp.clusters
    scale = decomp.scale
    yhat = _full_fitted(decomp.model, scale, y)
    e = y - yhat
    s2 = _residual_scale(decomp.model, e)
    p = decomp.model.p_total
    wjj = _self_weights(decomp.model, scale, clusters)

    out = np.empty(clusters.n_clusters)
    for j in range(clusters.n_clusters):
        members = clusters.members[j]
        ebar2 = float(e[members] @ e[members]) / len(members)
        if abs(1.0 - wjj[j]) < _LEVERAGE_TOL:
            warnings.warn(
                f"cluster {j} has self-weight 1; Cook's distance undefined",
                LeverageWarning,
            )
            out[j] = np.nan
            continue
        out[j] = (ebar2 / (p * s2)) * wjj[j] / (1.0 - wjj[j]) ** 2
    return out


def rvsi(model, decomp: BorrowingDecomposition, y, j: int, i: int) -> float:
    """Squared change in Yhat_i when lender cluster j is deleted.

    Computed in closed form as (n_j w_ij / b_jLj)^2 * (Yhat_j - Ybar_j)^2,
    i.e. PSSBF_ij / b_jLj^2 times n_j (Yhat_j - Ybar_j)^2.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    clusters = decomp.clusters
    if not (0 <= j < clusters.n_clusters):
        raise IndexOutOfRange(f"cluster index {j} outside 0..{clusters.n_clusters - 1}")
    if not (0 <= i < model.n_obs):
        raise IndexOutOfRange(f"target index {i} outside 0..{model.n_obs - 1}")
    scale = decomp.scale
    members = clusters.members[j]
    n_j = len(members)
    rep = int(clusters.reps[j])
    x_j = model.design_row(rep)
    vx_j = scale.solve(x_j)
    w_jj = float(x_j @ vx_j) / model.noise_variances[rep]
    pool_j = 1.0 - n_j * w_jj
    if abs(pool_j) <= 1e-12:
        raise DegeneratePooling(f"cluster {j} has pooling factor ~ 0")
    w_ij = float(model.design_row(i) @ vx_j) / model.noise_variances[rep]
    yhat = _full_fitted(model, scale, y)
    resid = float(yhat[rep] - y[members].mean())
    return (n_j * w_ij / pool_j) ** 2 * resid**2


def pena_si(model, decomp: BorrowingDecomposition, y, i: int) -> float:
    """Pena's S_i: normalized squared norm of all single-deletion changes.

    S_i = sum_j (PSSBF_ij / (w_ii w_jj)) D-bar_j with PSSBF_ij = n_j w_ij^2,
    the sum running over every cluster including i's own.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    if not (0 <= i < model.n_obs):
        raise IndexOutOfRange(f"target index {i} outside 0..{model.n_obs - 1}")
    clusters = decomp.clusters
    scale = decomp.scale
    dbar = avg_cooks_distance(model, decomp, y)

    x_i = model.design_row(i)
    v_i = scale.solve(x_i)
    w_ii = float(x_i @ v_i) / model.noise_variances[i]
    if w_ii <= 1e-12:
        raise LeverageZero(f"observation {i} has numerically zero self-weight")
    wjj = _self_weights(model, scale, clusters)

    total = 0.0
    for j in range(clusters.n_clusters):
        rep = int(clusters.reps[j])
        n_j = len(clusters.members[j])
        w_ij = float(model.design_row(rep) @ v_i) / model.noise_variances[rep]
        total += (n_j * w_ij**2 / (w_ii * wjj[j])) * dbar[j]
    return total


@dataclass(frozen=True)
class BoxStats:
    """Five-number summary with the population size behind it."""

    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    n: int

    @classmethod
    def of(cls, values: np.ndarray) -> "BoxStats":
        if values.size == 0:
            return cls(0.0, 0.0, 0.0, 0.0, 0.0, 0)
        q1, med, q3 = np.quantile(values, [0.25, 0.5, 0.75])
        return cls(
            minimum=float(values.min()),
            q1=float(q1),
            median=float(med),
            q3=float(q3),
            maximum=float(values.max()),
            n=int(values.size),
        )


@dataclass(frozen=True)
class ImpactSummary:
    """Per-relationship-group boxplot statistics of influential weight."""

    groups: dict
    points: tuple


@dataclass(frozen=True)
class InfluenceReport:
    """Bundle of influence metrics for reporting."""

    avg_cooks: np.ndarray
    rvsi: dict
    pena_s: dict
    residuals: np.ndarray
    s2: float


def _influential_columns(decomp: BorrowingDecomposition, influential) -> np.ndarray:
    """Columns of W for the influential observations, as an N x m block."""
    model = decomp.model
    if decomp.weight_matrix is not None and not decomp.condition_on:
        return decomp.weight_matrix[:, influential]
    scale = decomp.scale
    rhs = np.stack([model.design_row(int(s)) for s in influential], axis=1)
    cols = model.design @ scale.solve(rhs)
    return cols / model.noise_variances[influential][None, :]


def impact_summary(
    decomp: BorrowingDecomposition, influential, partition=None
) -> ImpactSummary:
    """Summarize |weight| placed on the influential set, by group.

    For each estimate the absolute weights on influential lenders are
    summed within each relationship group; a group's boxplot covers the
    estimates whose lender set actually meets the influential set in
    that group (estimates with no influential lenders there carry no
    information about it). An empty influential set yields all-zero
    summaries.
    """
    partition = partition if partition is not None else decomp.partition
    clusters = decomp.clusters
    n = decomp.n_obs
    influential = np.asarray(sorted(set(int(s) for s in np.atleast_1d(influential))), dtype=np.int64) \
        if np.size(influential) else np.empty(0, dtype=np.int64)
    if influential.size and (influential.min() < 0 or influential.max() >= n):
        raise EmptySet(f"influential indices must lie in 0..{n - 1}")

    labels = partition.labels
    if influential.size == 0:
        return ImpactSummary(
            groups={lab: BoxStats.of(np.empty(0)) for lab in labels}, points=()
        )

    cols = np.abs(_influential_columns(decomp, influential))
    # label of (estimate i, influential s) pairs via i's cluster row
    codes = partition.codes[clusters.cluster_of][:, influential]

    groups = {}
    any_population = False
    for g, lab in enumerate(labels):
        mask = codes == g
        rows = mask.any(axis=1)
        if not rows.any():
            groups[lab] = BoxStats.of(np.empty(0))
            continue
        any_population = True
        sums = (cols * mask).sum(axis=1)[rows]
        groups[lab] = BoxStats.of(sums)
    if not any_population:
        raise EmptySet("influential set lends to no estimate in any group")
    return ImpactSummary(groups=groups, points=tuple(int(s) for s in influential))


def build_influence_report(model, decomp: BorrowingDecomposition, y) -> InfluenceReport:
    """Cook/RVSI/Pena metrics for every cluster, at its representative.

    Shares one rep-by-rep weight block across all clusters instead of
    re-solving per pair, so the cost is K solves rather than K^2.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    clusters = decomp.clusters
    scale = decomp.scale
    yhat = _full_fitted(model, scale, y)
    e = y - yhat
    s2 = _residual_scale(model, e)
    p = model.p_total

    reps = [int(r) for r in clusters.reps]
    sizes = np.array([len(m) for m in clusters.members])
    x_reps = np.stack([model.design_row(r) for r in reps], axis=1)
    v_reps = scale.solve(x_reps)
    # w_rep[i, j]: weight estimate at rep i places on one member of cluster j
    w_rep = (x_reps.T @ v_reps) / np.array([model.noise_variances[r] for r in reps])[None, :]
    wjj = np.diag(w_rep).copy()

    dbar = np.empty(clusters.n_clusters)
    resid_bar = np.empty(clusters.n_clusters)
    for j in range(clusters.n_clusters):
        members = clusters.members[j]
        ebar2 = float(e[members] @ e[members]) / sizes[j]
        resid_bar[j] = yhat[reps[j]] - y[members].mean()
        if abs(1.0 - wjj[j]) < _LEVERAGE_TOL:
            warnings.warn(
                f"cluster {j} has self-weight 1; Cook's distance undefined",
                LeverageWarning,
            )
            dbar[j] = np.nan
        else:
            dbar[j] = (ebar2 / (p * s2)) * wjj[j] / (1.0 - wjj[j]) ** 2

    rv = {}
    pena = {}
    for j in range(clusters.n_clusters):
        pool_j = 1.0 - sizes[j] * wjj[j]
        if abs(pool_j) <= 1e-12:
            rv[(j, reps[j])] = float("nan")
        else:
            rv[(j, reps[j])] = (sizes[j] * wjj[j] / pool_j) ** 2 * resid_bar[j] ** 2
        if wjj[j] <= 1e-12:
            raise LeverageZero(f"cluster {j} has numerically zero self-weight")
        pena[reps[j]] = float(
            np.sum(sizes * w_rep[j] ** 2 / (wjj[j] * wjj) * dbar)
        )
    return InfluenceReport(avg_cooks=dbar, rvsi=rv, pena_s=pena, residuals=e, s2=s2)
