"""Random-effect precision builders.

Three families are supported: independent blocks, the Leroux-form
conditional autoregressive (CAR) precision on a graph, and the
spatio-temporal construction that chains a CAR precision through a
lag-one autoregression. All builders return sparse symmetric
positive-definite matrices wrapped in :class:`PrecisionMatrix`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .errors import (
    AsymmetricAdjacency,
    DimensionError,
    NotPositiveDefinite,
    RhoOutOfRange,
)

__all__ = [
    "PrecisionMatrix",
    "ShiftMatrix",
    "CovarianceStructure",
    "IIDBlocks",
    "DensePrecision",
    "CAR",
    "SpaceTimeAR",
    "validate_adjacency",
    "build_block_precision",
    "build_car_precision",
    "build_spacetime_precision",
]

# Dense Cholesky for the definiteness check is cheap at the dimensions this
# package targets (<= a few thousand); above this we trust the constructor.
_PD_CHECK_MAX_DIM = 4000


def _check_symmetric(m: sp.spmatrix, tol: float = 1e-12) -> None:
    d = abs(m - m.T)
    if d.nnz and d.max() > tol * max(1.0, abs(m).max()):
        raise AsymmetricAdjacency("matrix is not symmetric")


@dataclass(frozen=True)
class PrecisionMatrix:
    """A sparse symmetric precision matrix with its dimension.

    ``strict`` records whether positive definiteness was verified at
    construction. Semidefinite precisions (e.g. the all-zero matrix used
    for the no-shrinkage route) are legal with ``strict=False``; strict
    definiteness is then enforced where it matters, on the assembled
    posterior precision.
    """

    matrix: sp.csr_matrix
    dim: int
    strict: bool = True

    @classmethod
    def from_matrix(cls, m, strict: bool = True) -> "PrecisionMatrix":
        m = sp.csr_matrix(m, dtype=np.float64)
        if m.shape[0] != m.shape[1]:
            raise DimensionError(f"precision must be square, got {m.shape}")
        _check_symmetric(m)
        dim = m.shape[0]
        if strict and dim and dim <= _PD_CHECK_MAX_DIM:
            try:
                np.linalg.cholesky(m.toarray())
            except np.linalg.LinAlgError:
                raise NotPositiveDefinite(
                    "precision matrix is not positive definite"
                ) from None
        return cls(matrix=m, dim=dim, strict=strict)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass(frozen=True)
class ShiftMatrix:
    """Lag-one block shift H on T stacked blocks of size J.

    With time-major stacking (period t outermost), (H a)_t = a_{t-1} for
    t >= 2 and zero for t = 1.
    """

    block_size: int
    periods: int

    @property
    def matrix(self) -> sp.csr_matrix:
        j, t = self.block_size, self.periods
        if t == 1:
            return sp.csr_matrix((j, j))
        sub = sp.diags([np.ones(t - 1)], [-1], shape=(t, t))
        return sp.csr_matrix(sp.kron(sub, sp.identity(j)))


def validate_adjacency(a) -> sp.csr_matrix:
    """Check and canonicalize a 0/1 adjacency matrix.

    Must be square, symmetric, zero-diagonal, with entries in {0, 1}.
    """
    a = sp.csr_matrix(a, dtype=np.float64)
    if a.shape[0] != a.shape[1]:
        raise AsymmetricAdjacency(f"adjacency must be square, got {a.shape}")
    if a.nnz:
        if a.diagonal().any():
            raise AsymmetricAdjacency("adjacency has nonzero diagonal (self-loop)")
        vals = np.unique(a.data)
        if not np.all(np.isin(vals, (0.0, 1.0))):
            raise AsymmetricAdjacency("adjacency entries must be 0 or 1")
        if (a != a.T).nnz:
            raise AsymmetricAdjacency("adjacency is not symmetric")
    a.eliminate_zeros()
    return a


def build_block_precision(blocks) -> PrecisionMatrix:
    """Block-diagonal precision from (size, sigma2) pairs.

    Each block contributes ``size`` diagonal entries equal to 1/sigma2.
    """
    sizes = []
    precs = []
    for size, sigma2 in blocks:
        if int(size) != size or size < 1:
            raise DimensionError(f"block size must be a positive integer, got {size}")
        if not (sigma2 > 0):
            raise DimensionError(f"block variance must be > 0, got {sigma2}")
        sizes.append(int(size))
        precs.append(1.0 / float(sigma2))
    diag = np.repeat(np.asarray(precs, dtype=np.float64), sizes)
    return PrecisionMatrix.from_matrix(sp.diags(diag, format="csr"), strict=True)


def build_car_precision(rho: float, adjacency, sigma2: float = 1.0) -> PrecisionMatrix:
    """Leroux CAR precision Q(rho, A)/sigma2.

    Q = rho * (diag(A 1) - A) + (1 - rho) * I, a convex mix of the graph
    Laplacian and the identity; positive definite for rho in [0, 1).
    """
    if not (0.0 <= rho < 1.0):
        raise RhoOutOfRange(f"rho must lie in [0, 1), got {rho}")
    if not (sigma2 > 0):
        raise DimensionError(f"sigma2 must be > 0, got {sigma2}")
    a = validate_adjacency(adjacency)
    n = a.shape[0]
    degree = np.asarray(a.sum(axis=1)).ravel()
    q = rho * (sp.diags(degree) - a) + (1.0 - rho) * sp.identity(n)
    return PrecisionMatrix.from_matrix(q / sigma2, strict=True)


def build_spacetime_precision(
    rho_time: float, q: PrecisionMatrix, periods: int, sigma2: float = 1.0
) -> PrecisionMatrix:
    """Space-time precision sigma^-2 (I - rho H)' blockdiag(Q,...,Q) (I - rho H).

    ``q`` is the per-period spatial precision (typically a CAR build) and H
    the lag-one block shift; the transposed-sandwich form is the Gaussian
    chain precision of the AR(1) evolution and is symmetric by construction.
    """
    if not (0.0 <= rho_time < 1.0):
        raise RhoOutOfRange(f"rho_time must lie in [0, 1), got {rho_time}")
    if int(periods) != periods or periods < 1:
        raise DimensionError(f"periods must be a positive integer, got {periods}")
    if not (sigma2 > 0):
        raise DimensionError(f"sigma2 must be > 0, got {sigma2}")
    periods = int(periods)
    j = q.dim
    blk = sp.block_diag([q.matrix] * periods, format="csr")
    h = ShiftMatrix(block_size=j, periods=periods).matrix
    eye = sp.identity(j * periods, format="csr")
    f = eye - rho_time * h
    out = (f.T @ blk @ f) / sigma2
    # the product is symmetric up to roundoff; symmetrize so downstream
    # exact-symmetry checks are not at the mercy of sparse kernel ordering
    out = (out + out.T) * 0.5
    return PrecisionMatrix.from_matrix(out, strict=True)


class CovarianceStructure:
    """Base for random-effect covariance descriptions.

    Subclasses expose ``dim``, ``precision()`` and parameter-replacement
    helpers used by the variance fitter.
    """

    def precision(self) -> PrecisionMatrix:
        raise NotImplementedError

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def with_params(self, **kw) -> "CovarianceStructure":
        """Return a copy with the given hyperparameters replaced."""
        raise NotImplementedError


@dataclass(frozen=True)
class IIDBlocks(CovarianceStructure):
    """Independent random-effect blocks with per-block variances."""

    sizes: tuple
    variances: tuple

    def __post_init__(self):
        if len(self.sizes) != len(self.variances):
            raise DimensionError("sizes and variances must have equal length")
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        object.__setattr__(self, "variances", tuple(float(v) for v in self.variances))

    @property
    def dim(self) -> int:
        return sum(self.sizes)

    def precision(self) -> PrecisionMatrix:
        return build_block_precision(zip(self.sizes, self.variances))

    def with_params(self, sigma2=None, **_ignored) -> "IIDBlocks":
        if sigma2 is None:
            return self
        return replace(self, variances=tuple(float(sigma2) for _ in self.sizes))


@dataclass(frozen=True)
class DensePrecision(CovarianceStructure):
    """An explicitly supplied precision, held fixed.

    Used both for precomputed structures and for the semidefinite
    no-shrinkage route (an all-zero precision).
    """

    value: PrecisionMatrix

    @classmethod
    def from_matrix(cls, m, strict: bool = False) -> "DensePrecision":
        return cls(PrecisionMatrix.from_matrix(m, strict=strict))

    @classmethod
    def zero(cls, dim: int) -> "DensePrecision":
        return cls(PrecisionMatrix(sp.csr_matrix((dim, dim)), dim, strict=False))

    @property
    def dim(self) -> int:
        return self.value.dim

    def precision(self) -> PrecisionMatrix:
        return self.value

    def with_params(self, **_ignored) -> "DensePrecision":
        return self


@dataclass(frozen=True)
class CAR(CovarianceStructure):
    """Leroux CAR structure over a fixed graph."""

    adjacency: object
    rho: float
    sigma2: float = 1.0

    @property
    def dim(self) -> int:
        return validate_adjacency(self.adjacency).shape[0]

    def precision(self) -> PrecisionMatrix:
        return build_car_precision(self.rho, self.adjacency, self.sigma2)

    def with_params(self, sigma2=None, rho_s=None, **_ignored) -> "CAR":
        out = self
        if sigma2 is not None:
            out = replace(out, sigma2=float(sigma2))
        if rho_s is not None:
            out = replace(out, rho=float(rho_s))
        return out


@dataclass(frozen=True)
class SpaceTimeAR(CovarianceStructure):
    """CAR-in-space chained through an AR(1) in time (time-major stacking)."""

    adjacency: object
    rho_space: float
    rho_time: float
    periods: int
    sigma2: float = 1.0

    @property
    def dim(self) -> int:
        return validate_adjacency(self.adjacency).shape[0] * int(self.periods)

    def precision(self) -> PrecisionMatrix:
        q = build_car_precision(self.rho_space, self.adjacency, sigma2=1.0)
        return build_spacetime_precision(
            self.rho_time, q, self.periods, sigma2=self.sigma2
        )

    def with_params(
        self, sigma2=None, rho_s=None, rho_t=None, **_ignored
    ) -> "SpaceTimeAR":
        out = self
        if sigma2 is not None:
            out = replace(out, sigma2=float(sigma2))
        if rho_s is not None:
            out = replace(out, rho_space=float(rho_s))
        if rho_t is not None:
            out = replace(out, rho_time=float(rho_t))
        return out
