"""Restricted-likelihood estimation of variance components.

Fits a scalar between-cluster variance, a scalar noise multiplier, and
optionally the dependence parameters of a CAR or space-time structure,
by Nelder-Mead on log/logit-transformed parameters. The restricted
likelihood profiles out the fixed effects; its constant convention is
-(N - P1)/2 log(2 pi) plus the usual determinant terms.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.optimize as sopt
import scipy.sparse as sp

from .covariance import CAR, CovarianceStructure, IIDBlocks, SpaceTimeAR
from .errors import (
    BoundaryWarning,
    DimensionError,
    FlatPriorRequired,
    NonConvergence,
    NotPositiveDefinite,
    SizeGuard,
)
from .model import ValidatedModel, validate_spec

__all__ = ["VarianceEstimates", "fit_variance_reml", "restricted_log_likelihood"]

_MAX_DENSE_P2 = 4000
_BOUNDARY_TOL = 1e-6


@dataclass(frozen=True)
class VarianceEstimates:
    """Fitted (or echoed) variance components and the attained objective."""

    sigma2: float | None
    phi_scale: float
    rho_s: float | None
    rho_t: float | None
    log_restricted_likelihood: float
    converged: bool
    boundary: tuple
    n_iter: int
    structure: CovarianceStructure | None

    @property
    def phi_at_boundary(self) -> bool:
        return "phi" in self.boundary


class _RemlWork:
    """Base cross-products reused across objective evaluations."""

    def __init__(self, model: ValidatedModel, y: np.ndarray):
        if model.p_random > _MAX_DENSE_P2:
            raise SizeGuard(f"REML capped at P2 = {_MAX_DENSE_P2}")
        if not model.flat_fixed_prior:
            # REML profiles the fixed effects under a flat prior; a proper
            # prior would make this a different (MAP) objective
            raise FlatPriorRequired("REML requires the flat fixed-effect prior")
        d = 1.0 / model.noise_variances
        x1 = model.x1
        x2 = model.x2
        self.n = model.n_obs
        self.p1 = model.p_fixed
        self.p2 = model.p_random
        self.logdet_base = float(np.log(model.noise_variances).sum())
        self.g11 = x1.T @ (x1 * d[:, None])
        self.u1 = x1.T @ (y * d)
        self.yy = float(y @ (y * d))
        if self.p2:
            self.g22 = (x2.T @ sp.diags(d) @ x2).toarray()
            self.c = (x2.T @ sp.diags(d) @ sp.csr_matrix(x1)).toarray()
            self.u2 = x2.T @ (y * d)

    def neg_restricted_ll(self, structure, phi_scale: float) -> float:
        """-2 is not folded in: this is the negative log restricted likelihood."""
        s = phi_scale
        if not (s > 0) or not math.isfinite(s):
            return math.inf
        n, p1 = self.n, self.p1
        logdet_vy = n * math.log(s) + self.logdet_base
        if self.p2:
            sigma_inv = structure.precision().matrix.toarray()
            sign, logdet_sig = np.linalg.slogdet(sigma_inv)
            if sign <= 0:
                return math.inf
            minv = self.g22 / s + sigma_inv
            try:
                l = np.linalg.cholesky(minv)
            except np.linalg.LinAlgError:
                return math.inf
            logdet_m = 2.0 * float(np.log(np.diag(l)).sum())
            logdet_vy += logdet_m - logdet_sig
            # M applied through the Cholesky factor
            rhs = np.concatenate([self.c / s, (self.u2 / s)[:, None]], axis=1)
            z = sla.solve_triangular(l, rhs, lower=True)
            cc = z[:, : p1].T @ z[:, : p1]
            cu = z[:, : p1].T @ z[:, p1]
            uu = float(z[:, p1] @ z[:, p1])
            g = self.g11 / s - cc
            b = self.u1 / s - cu
            quad_full = self.yy / s - uu
        else:
            g = self.g11 / s
            b = self.u1 / s
            quad_full = self.yy / s
        sign_g, logdet_g = np.linalg.slogdet(g)
        if sign_g <= 0:
            return math.inf
        try:
            coef = np.linalg.solve(g, b)
        except np.linalg.LinAlgError:
            return math.inf
        quad = quad_full - float(b @ coef)
        ll = -0.5 * ((n - p1) * math.log(2 * math.pi) + logdet_vy + logdet_g + quad)
        return -ll


def _structure_sigma2(structure) -> float | None:
    if isinstance(structure, IIDBlocks):
        return structure.variances[0] if structure.variances else None
    if isinstance(structure, (CAR, SpaceTimeAR)):
        return structure.sigma2
    return None


def _logit(p: float) -> float:
    p = min(max(p, 1e-4), 1 - 1e-4)
    return math.log(p / (1 - p))


def _expit(t: float) -> float:
    return 1.0 / (1.0 + math.exp(-t))


def restricted_log_likelihood(model: ValidatedModel, y) -> float:
    """Restricted log likelihood of the model at its own parameters."""
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != model.n_obs:
        raise DimensionError(f"y has length {y.shape[0]}, expected {model.n_obs}")
    work = _RemlWork(model, y)
    return -work.neg_restricted_ll(model.random_structure, 1.0)


def fit_variance_reml(
    spec,
    y,
    structure: CovarianceStructure | None = None,
    *,
    fit_sigma: bool | None = None,
    fit_phi: bool = True,
    fit_rho_s: bool = False,
    fit_rho_t: bool = False,
    max_iter: int = 500,
) -> VarianceEstimates:
    """Maximize the restricted likelihood over the requested components.

    ``spec`` may be a ModelSpec or an already validated model; its noise
    variances act as the base that ``phi_scale`` multiplies. Flags
    select which components are free; the rest stay at the structure's
    current values. Non-convergence and boundary estimates are reported
    through warnings and the returned flags, never as exceptions.
    """
    model = spec if isinstance(spec, ValidatedModel) else validate_spec(spec)
    structure = structure if structure is not None else model.random_structure
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != model.n_obs:
        raise DimensionError(f"y has length {y.shape[0]}, expected {model.n_obs}")

    if fit_sigma is None:
        fit_sigma = model.p_random > 0 and _structure_sigma2(structure) is not None
    if fit_sigma and _structure_sigma2(structure) is None:
        raise DimensionError("structure has no scalar variance to fit")
    if fit_rho_s and not isinstance(structure, (CAR, SpaceTimeAR)):
        raise DimensionError("rho_s is only defined for CAR/space-time structures")
    if fit_rho_t and not isinstance(structure, SpaceTimeAR):
        raise DimensionError("rho_t is only defined for space-time structures")

    work = _RemlWork(model, y)

    names = []
    init = []
    if fit_sigma:
        names.append("sigma2")
        init.append(math.log(max(_structure_sigma2(structure), 1e-8)))
    if fit_phi:
        names.append("phi")
        init.append(0.0)
    if fit_rho_s:
        names.append("rho_s")
        rho0 = structure.rho if isinstance(structure, CAR) else structure.rho_space
        init.append(_logit(rho0 if rho0 > 0 else 0.5))
    if fit_rho_t:
        names.append("rho_t")
        init.append(_logit(structure.rho_time if structure.rho_time > 0 else 0.5))

    def unpack(theta):
        vals = dict(zip(names, theta))
        kw = {}
        if "sigma2" in vals:
            kw["sigma2"] = math.exp(vals["sigma2"])
        if "rho_s" in vals:
            kw["rho_s"] = _expit(vals["rho_s"])
        if "rho_t" in vals:
            kw["rho_t"] = _expit(vals["rho_t"])
        phi_scale = math.exp(vals["phi"]) if "phi" in vals else 1.0
        return structure.with_params(**kw), phi_scale

    if not names:
        ll = -work.neg_restricted_ll(structure, 1.0)
        return VarianceEstimates(
            sigma2=_structure_sigma2(structure),
            phi_scale=1.0,
            rho_s=getattr(structure, "rho", getattr(structure, "rho_space", None)),
            rho_t=getattr(structure, "rho_time", None),
            log_restricted_likelihood=ll,
            converged=True,
            boundary=(),
            n_iter=0,
            structure=structure,
        )

    def objective(theta):
        st, s = unpack(theta)
        try:
            return work.neg_restricted_ll(st, s)
        except (NotPositiveDefinite, np.linalg.LinAlgError):
            return math.inf

    f0 = objective(np.asarray(init))
    res = sopt.minimize(
        objective,
        np.asarray(init),
        method="Nelder-Mead",
        options={
            "maxiter": max_iter,
            "fatol": 1e-9 * max(1.0, abs(f0) if math.isfinite(f0) else 1.0),
            "xatol": 1e-7,
        },
    )
    fitted_structure, phi_scale = unpack(res.x)
    converged = bool(res.success)
    if not converged:
        warnings.warn(
            f"REML stopped at the {max_iter}-iteration cap; returning best point",
            NonConvergence,
        )

    sigma2 = _structure_sigma2(fitted_structure)
    rho_s = getattr(fitted_structure, "rho", getattr(fitted_structure, "rho_space", None))
    rho_t = getattr(fitted_structure, "rho_time", None)
    boundary = []
    if fit_sigma and sigma2 is not None and sigma2 < _BOUNDARY_TOL:
        boundary.append("sigma2")
    if fit_phi and phi_scale < _BOUNDARY_TOL:
        boundary.append("phi")
    if fit_rho_s and rho_s is not None and rho_s > 1 - _BOUNDARY_TOL:
        boundary.append("rho_s")
    if fit_rho_t and rho_t is not None and rho_t > 1 - _BOUNDARY_TOL:
        boundary.append("rho_t")
    for name in boundary:
        warnings.warn(f"REML estimate of {name} is at its boundary", BoundaryWarning)

    return VarianceEstimates(
        sigma2=sigma2,
        phi_scale=float(phi_scale),
        rho_s=rho_s,
        rho_t=rho_t,
        log_restricted_likelihood=float(-res.fun),
        converged=converged,
        boundary=tuple(boundary),
        n_iter=int(res.nit),
        structure=fitted_structure,
    )
