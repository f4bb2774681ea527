"""Independent reference implementations used to validate the engine.

Everything here is deliberately literal and slow: dense inversion, no
reuse of the engine's factorizations. The one-way closed form, the
brute-force dense W, Sherman-Morrison case deletion with its refit
counterpart, and the hat-matrix decomposition behind the row-sum
theorem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import (
    DimensionError,
    FlatPriorRequired,
    IndexOutOfRange,
    NotPositiveDefinite,
    SingularAfterDeletion,
    SizeGuard,
)
from .model import ClusterIndex, ValidatedModel, detect_clusters

__all__ = [
    "OneWayProblem",
    "OneWayWeights",
    "HatDecomposition",
    "oneway_weights",
    "dense_weights",
    "case_deleted_fit",
    "deleted_coefficients",
    "refit_without_rows",
    "hat_decomposition",
]

_DENSE_MAX_N = 3000


@dataclass(frozen=True)
class OneWayProblem:
    """One-way layout: J clusters, sizes n_j, noise phi_j^2, between sigma^2.

    ``a0`` is the reference prior mean of the cluster effects; it does
    not enter the weights (the grand mean is estimated with a flat
    prior) and is carried only for bookkeeping.
    """

    sizes: tuple
    phi2: tuple
    sigma2: float
    a0: float | None = None

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.sizes)
        phi2 = tuple(float(p) for p in self.phi2)
        if len(sizes) != len(phi2):
            raise DimensionError("sizes and phi2 must have equal length")
        if any(n < 1 for n in sizes):
            raise DimensionError("cluster sizes must be >= 1")
        if any(p <= 0 for p in phi2) or self.sigma2 <= 0:
            raise DimensionError("variances must be > 0")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "phi2", phi2)

    @property
    def n_clusters(self) -> int:
        return len(self.sizes)

    @property
    def n_obs(self) -> int:
        return sum(self.sizes)


@dataclass(frozen=True)
class OneWayWeights:
    """Closed-form one-way weights.

    tau_j measures how informative cluster j's mean is; lambda_i is the
    pooling factor of cluster i; rho[i, j] the share of lambda_i spent
    on cluster j's mean.
    """

    tau: np.ndarray
    lam: np.ndarray
    rho: np.ndarray

    @property
    def shrinkage(self) -> np.ndarray:
        return 1.0 - self.lam + np.diag(self.rho)

    @property
    def pooling(self) -> np.ndarray:
        return self.lam - np.diag(self.rho)

    def observation_matrix(self, p: OneWayProblem) -> np.ndarray:
        """Expand cluster-level weights to the N x N observation weight matrix."""
        sizes = np.asarray(p.sizes)
        n = sizes.sum()
        cluster_of = np.repeat(np.arange(p.n_clusters), sizes)
        w = np.empty((n, n))
        for i in range(p.n_clusters):
            row = self.rho[i] / sizes  # per-observation share of each cluster mean
            row = row[cluster_of]
            own = cluster_of == i
            row[own] = self.shrinkage[i] / sizes[i]
            w[own] = row
        return w


def oneway_weights(p: OneWayProblem) -> OneWayWeights:
    """tau/lambda/rho of the one-way closed form."""
    n = np.asarray(p.sizes, dtype=np.float64)
    phi2 = np.asarray(p.phi2, dtype=np.float64)
    tau = n / (n * p.sigma2 + phi2)
    lam = phi2 / (n * p.sigma2 + phi2)
    rho = lam[:, None] * (tau / tau.sum())[None, :]
    return OneWayWeights(tau=tau, lam=lam, rho=rho)


def dense_weights(model: ValidatedModel) -> np.ndarray:
    """W by literal dense inversion of V^-1. Refuses N > 3000."""
    if model.n_obs > _DENSE_MAX_N:
        raise SizeGuard(f"dense oracle capped at N = {_DENSE_MAX_N}, got {model.n_obs}")
    x = model.design.toarray()
    phi_inv = 1.0 / model.noise_variances
    vinv = x.T @ (x * phi_inv[:, None]) + model.prior_block().toarray()
    v = np.linalg.inv(vinv)
    return x @ v @ x.T * phi_inv[None, :]


def deleted_coefficients(model, scale, y, rows) -> np.ndarray:
    """Posterior coefficient mean after deleting same-design rows.

    ``rows`` must all lie in one borrower cluster (identical design row
    and noise variance); the update is the rank-one Sherman-Morrison
    step with c = m/phi^2 and the deleted rows' mean.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise DimensionError("no rows to delete")
    if rows.min() < 0 or rows.max() >= model.n_obs:
        raise IndexOutOfRange("deletion row outside 0..N-1")
    x_j = model.design_row(int(rows[0]))
    for r in rows[1:]:
        if not np.array_equal(model.design_row(int(r)), x_j) or (
            model.noise_variances[r] != model.noise_variances[rows[0]]
        ):
            raise DimensionError("deleted rows must share design row and variance")
    phi2 = float(model.noise_variances[rows[0]])
    m = rows.size
    c = m / phi2

    beta = scale.solve(model.design.T @ (y / model.noise_variances))
    vx = scale.solve(x_j)
    yhat_j = float(x_j @ beta)
    ybar_j = float(y[rows].mean())
    denom = 1.0 - c * float(x_j @ vx)
    if abs(denom) < 1e-12:
        raise SingularAfterDeletion(
            "deletion leaves the remaining precision singular (pooling factor ~ 0)"
        )
    return beta + (c * (yhat_j - ybar_j) / denom) * vx


def case_deleted_fit(model, scale, y, j: int, clusters: ClusterIndex | None = None):
    """Delete borrower cluster j; return (deleted beta, deleted fitted values).

    Fitted values are evaluated at every original design row, including
    the deleted ones.
    """
    if clusters is None:
        clusters = detect_clusters(model)
    if not (0 <= j < clusters.n_clusters):
        raise IndexOutOfRange(f"cluster index {j} outside 0..{clusters.n_clusters - 1}")
    beta = deleted_coefficients(model, scale, y, clusters.members[j])
    return beta, model.design @ beta


def refit_without_rows(model: ValidatedModel, y, rows):
    """Literal refit with the given rows removed; the slow dual path.

    Returns (beta, fitted values at all original rows). No sharing with
    the Sherman-Morrison route: the reduced precision is rebuilt and
    inverted densely.
    """
    if model.n_obs > _DENSE_MAX_N:
        raise SizeGuard(f"refit oracle capped at N = {_DENSE_MAX_N}")
    y = np.asarray(y, dtype=np.float64).ravel()
    keep = np.setdiff1d(np.arange(model.n_obs), np.asarray(rows, dtype=np.int64))
    x = model.design.toarray()
    xk = x[keep]
    phik = model.noise_variances[keep]
    vinv = xk.T @ (xk / phik[:, None]) + model.prior_block().toarray()
    try:
        np.linalg.cholesky(vinv)
    except np.linalg.LinAlgError:
        raise SingularAfterDeletion(
            "remaining precision is not positive definite after deletion"
        ) from None
    beta = np.linalg.solve(vinv, xk.T @ (y[keep] / phik))
    return beta, x @ beta


@dataclass(frozen=True)
class HatDecomposition:
    """Pieces of the identity W = H + H2 (I - H) for flat-prior models.

    H is the generalized hat matrix of X1 under the whitened inner
    product Phi-tilde^-1 = Phi^-1 (I - H2); H1 the plain Phi^-1 hat of
    X1; H2 the ridge hat of X2.
    """

    h: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    phi_tilde_inv: np.ndarray

    def weight_matrix(self) -> np.ndarray:
        n = self.h.shape[0]
        return self.h + self.h2 @ (np.eye(n) - self.h)


def hat_decomposition(model: ValidatedModel) -> HatDecomposition:
    """Build H, H1, H2, Phi-tilde^-1 densely and return them.

    Only defined under a flat fixed-effect prior; with a proper prior
    the outer factor is no longer a projection.
    """
    if model.n_obs > _DENSE_MAX_N:
        raise SizeGuard(f"hat oracle capped at N = {_DENSE_MAX_N}, got {model.n_obs}")
    if not model.flat_fixed_prior:
        raise FlatPriorRequired("hat decomposition requires C^-1 = 0")
    n = model.n_obs
    x1 = model.x1
    x2 = model.x2.toarray()
    phi_inv = 1.0 / model.noise_variances

    if model.p_random:
        m_inv = x2.T @ (x2 * phi_inv[:, None]) + model.sigma_inv.toarray()
        try:
            m = np.linalg.inv(m_inv)
        except np.linalg.LinAlgError:
            raise NotPositiveDefinite("X2' Phi^-1 X2 + Sigma^-1 is singular") from None
        h2 = x2 @ m @ (x2 * phi_inv[:, None]).T
    else:
        h2 = np.zeros((n, n))
    phi_tilde_inv = phi_inv[:, None] * (np.eye(n) - h2)

    g1 = x1.T @ (x1 * phi_inv[:, None])
    h1 = x1 @ np.linalg.solve(g1, (x1 * phi_inv[:, None]).T)
    g = x1.T @ phi_tilde_inv @ x1
    h = x1 @ np.linalg.solve(g, x1.T @ phi_tilde_inv)
    return HatDecomposition(h=h, h1=h1, h2=h2, phi_tilde_inv=phi_tilde_inv)
