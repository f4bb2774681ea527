"""Model specification, validation, and borrower-cluster detection.

The model is Y ~ N(X1 b1 + X2 b2, Phi) with Phi diagonal, a (possibly
flat) Gaussian prior on b1 and a Gaussian prior N(0, Sigma) on b2. A
borrower cluster collects the observations that share an identical
design row and noise variance; everything outside the cluster is a
lender.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .covariance import CovarianceStructure, DensePrecision, PrecisionMatrix
from .errors import DimensionError, NotPositiveDefinite, SpanError

__all__ = ["ModelSpec", "ValidatedModel", "ClusterIndex", "validate_spec", "detect_clusters"]


@dataclass
class ModelSpec:
    """Unvalidated model description.

    fixed_prior_precision may be None for the flat-prior convention
    (equivalent to an all-zero matrix).
    """

    n_obs: int
    fixed_design: object
    random_design: object
    noise_variances: object
    random_structure: CovarianceStructure
    fixed_prior_precision: object = None


@dataclass(frozen=True)
class ClusterIndex:
    """Partition of observations into borrower clusters.

    Clusters are numbered by first occurrence; ``members[k]`` holds the
    observation indices of cluster k and ``reps[k]`` its first member.
    """

    cluster_of: np.ndarray
    members: tuple
    sizes: np.ndarray
    reps: np.ndarray

    @property
    def n_clusters(self) -> int:
        return len(self.members)


class ValidatedModel:
    """Immutable, dimension-checked model handle.

    Construct through :func:`validate_spec`. X1 is held dense, X2 sparse;
    the stacked design X = [X1 X2] is materialized sparsely on first use.
    """

    def __init__(self, x1, x2, phi2, cinv, structure, sigma_inv):
        self._x1 = x1
        self._x2 = x2
        self._phi2 = phi2
        self._cinv = cinv
        self._structure = structure
        self._sigma_inv = sigma_inv

    @property
    def n_obs(self) -> int:
        return self._x1.shape[0]

    @property
    def p_fixed(self) -> int:
        return self._x1.shape[1]

    @property
    def p_random(self) -> int:
        return self._x2.shape[1]

    @property
    def p_total(self) -> int:
        return self.p_fixed + self.p_random

    @property
    def x1(self) -> np.ndarray:
        return self._x1

    @property
    def x2(self) -> sp.csr_matrix:
        return self._x2

    @property
    def noise_variances(self) -> np.ndarray:
        return self._phi2

    @property
    def fixed_prior_precision(self) -> np.ndarray:
        return self._cinv

    @property
    def random_structure(self) -> CovarianceStructure:
        return self._structure

    @property
    def sigma_inv(self) -> sp.csr_matrix:
        return self._sigma_inv

    @cached_property
    def design(self) -> sp.csr_matrix:
        """Stacked design [X1 X2] as CSR."""
        x = sp.hstack([sp.csr_matrix(self._x1), self._x2], format="csr")
        x.eliminate_zeros()
        x.sum_duplicates()
        return x

    def design_row(self, i: int) -> np.ndarray:
        """Dense row i of the stacked design."""
        row = np.empty(self.p_total)
        row[: self.p_fixed] = self._x1[i]
        row[self.p_fixed :] = self._x2[i].toarray().ravel()
        return row

    @property
    def flat_fixed_prior(self) -> bool:
        return not self._cinv.any()

    def prior_block(self) -> sp.csr_matrix:
        """blockdiag(C^-1, Sigma^-1) as a sparse P x P matrix."""
        return sp.block_diag(
            [sp.csr_matrix(self._cinv), self._sigma_inv], format="csr"
        )

    def with_structure(self, structure: CovarianceStructure) -> "ValidatedModel":
        """Revalidated copy with a replaced random structure (same shapes)."""
        return validate_spec(
            ModelSpec(
                n_obs=self.n_obs,
                fixed_design=self._x1,
                random_design=self._x2,
                noise_variances=self._phi2,
                random_structure=structure,
                fixed_prior_precision=self._cinv if self._cinv.any() else None,
            )
        )

    def with_noise_scale(self, scale: float) -> "ValidatedModel":
        """Revalidated copy with all noise variances multiplied by ``scale``."""
        return validate_spec(
            ModelSpec(
                n_obs=self.n_obs,
                fixed_design=self._x1,
                random_design=self._x2,
                noise_variances=self._phi2 * float(scale),
                random_structure=self._structure,
                fixed_prior_precision=self._cinv if self._cinv.any() else None,
            )
        )


def _canonical(a: np.ndarray) -> np.ndarray:
    # +0.0 folds signed zeros so -0.0 and 0.0 hash identically
    return np.asarray(a, dtype=np.float64) + 0.0


def validate_spec(spec: ModelSpec) -> ValidatedModel:
    """Check dimensions, span, positivity; return an immutable handle.

    Raises SpanError if the ones vector is not (numerically) in the span
    of X1, NotPositiveDefinite for nonpositive noise variances or a
    degenerate assembled precision, DimensionError on shape mismatch.
    """
    n = int(spec.n_obs)
    x1 = _canonical(np.atleast_2d(np.asarray(
        spec.fixed_design.toarray() if sp.issparse(spec.fixed_design) else spec.fixed_design,
        dtype=np.float64,
    )))
    if x1.shape[0] != n:
        raise DimensionError(f"fixed_design has {x1.shape[0]} rows, expected {n}")
    x2 = sp.csr_matrix(spec.random_design, dtype=np.float64, copy=True)
    x2.eliminate_zeros()
    x2.sum_duplicates()
    x2.data = _canonical(x2.data)
    if x2.shape[0] != n:
        raise DimensionError(f"random_design has {x2.shape[0]} rows, expected {n}")
    phi2 = np.asarray(spec.noise_variances, dtype=np.float64).ravel()
    if phi2.shape[0] != n:
        raise DimensionError(f"noise_variances has length {phi2.shape[0]}, expected {n}")
    if not np.all(phi2 > 0):
        raise NotPositiveDefinite("all noise variances must be strictly positive")

    p1 = x1.shape[1]
    if spec.fixed_prior_precision is None:
        cinv = np.zeros((p1, p1))
    else:
        cinv = np.asarray(
            spec.fixed_prior_precision.toarray()
            if sp.issparse(spec.fixed_prior_precision)
            else spec.fixed_prior_precision,
            dtype=np.float64,
        )
        if cinv.shape != (p1, p1):
            raise DimensionError(
                f"fixed_prior_precision is {cinv.shape}, expected {(p1, p1)}"
            )
        if not np.allclose(cinv, cinv.T, atol=1e-12):
            raise DimensionError("fixed_prior_precision must be symmetric")

    structure = spec.random_structure
    if structure is None:
        structure = DensePrecision.zero(x2.shape[1])
    sigma_inv = structure.precision()
    if not isinstance(sigma_inv, PrecisionMatrix):
        raise DimensionError("random_structure.precision() must return a PrecisionMatrix")
    if sigma_inv.dim != x2.shape[1]:
        raise DimensionError(
            f"random structure has dimension {sigma_inv.dim}, "
            f"random_design has {x2.shape[1]} columns"
        )

    # ones-in-span via least squares on X1
    ones = np.ones(n)
    if p1 == 0:
        raise SpanError("fixed design has no columns; ones cannot be spanned")
    resid = ones - x1 @ np.linalg.lstsq(x1, ones, rcond=None)[0]
    if np.linalg.norm(resid) >= 1e-8 * np.sqrt(n):
        raise SpanError(
            "the ones vector is not in the column span of the fixed design"
        )

    model = ValidatedModel(x1, x2, phi2, cinv, structure, sigma_inv.matrix)

    # assembled posterior precision must admit a Cholesky factorization
    x = model.design
    gram = (x.T @ sp.diags(1.0 / phi2) @ x).toarray()
    gram += model.prior_block().toarray()
    try:
        np.linalg.cholesky(gram)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(
            "X' Phi^-1 X + blockdiag(C^-1, Sigma^-1) is not positive definite"
        ) from None
    return model


def detect_clusters(model: ValidatedModel) -> ClusterIndex:
    """Group observations with identical design rows and noise variance.

    Equality is exact on float values (signed zeros canonicalized at
    validation); clusters are numbered by first occurrence.
    """
    x = model.design
    phi2 = model.noise_variances
    indptr, indices, data = x.indptr, x.indices, x.data
    key_to_id: dict = {}
    cluster_of = np.empty(model.n_obs, dtype=np.int64)
    members: list[list[int]] = []
    for i in range(model.n_obs):
        lo, hi = indptr[i], indptr[i + 1]
        key = (
            indices[lo:hi].tobytes(),
            data[lo:hi].tobytes(),
            np.float64(phi2[i]).tobytes(),
        )
        cid = key_to_id.get(key)
        if cid is None:
            cid = len(members)
            key_to_id[key] = cid
            members.append([])
        members[cid].append(i)
        cluster_of[i] = cid
    member_arrays = tuple(np.asarray(m, dtype=np.int64) for m in members)
    sizes = np.asarray([len(m) for m in members], dtype=np.int64)
    reps = np.asarray([m[0] for m in member_arrays], dtype=np.int64)
    return ClusterIndex(cluster_of=cluster_of, members=member_arrays, sizes=sizes, reps=reps)
