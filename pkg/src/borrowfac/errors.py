"""Exception and warning types shared across the package.

Everything raised on bad input derives from BorrowfacError so callers can
catch one base; warnings derive from BorrowfacWarning and never interrupt
a computation.
"""

from __future__ import annotations


class BorrowfacError(Exception):
    """Base class for all errors raised by this package."""


class SpanError(BorrowfacError):
    """The ones vector is not in the span of the fixed design."""


class DimensionError(BorrowfacError):
    """Shapes of design, variances, or precisions do not line up."""


class NotPositiveDefinite(BorrowfacError):
    """A matrix required to be positive definite failed its Cholesky."""


class RhoOutOfRange(BorrowfacError):
    """A dependence parameter lies outside its admissible interval."""


class AsymmetricAdjacency(BorrowfacError):
    """Adjacency input is not symmetric or has nonzero diagonal."""


class IndexOutOfRange(BorrowfacError):
    """An observation or cluster index is outside 0..N-1 (or 0..K-1)."""


class SizeGuard(BorrowfacError):
    """A dense oracle was asked to materialize something too large."""


class SingularAfterDeletion(BorrowfacError):
    """Removing the requested rows leaves the model unidentifiable."""


class LeverageOne(BorrowfacError):
    """A self-weight is numerically one where that is not allowed."""


class LeverageZero(BorrowfacError):
    """A self-weight is numerically zero where that is not allowed."""


class DegeneratePooling(BorrowfacError):
    """A pooling factor is numerically zero; the ratio is undefined."""


class EmptySet(BorrowfacError):
    """A set argument violates its membership precondition."""


class EmptyInput(BorrowfacError):
    """An array argument that must be nonempty was empty."""


class UnknownColumn(BorrowfacError):
    """A named column does not exist in the data table."""


class BinGapError(BorrowfacError):
    """An observed distance or lag falls between declared bins."""


class ParseError(BorrowfacError):
    """A problem bundle, spec file, or adjacency file failed to parse."""


class SchemaVersionMismatch(BorrowfacError):
    """A report file has the wrong schema version or a broken shape."""


class NonPositiveOffset(BorrowfacError):
    """Count-model exposures must be strictly positive."""


class FlatPriorRequired(BorrowfacError):
    """The operation is only defined when the fixed prior is flat."""


class BorrowfacWarning(UserWarning):
    """Base class for warnings emitted by this package."""


class NonConvergence(BorrowfacWarning):
    """An iterative fit stopped at its cap; best point so far returned."""


class BoundaryWarning(BorrowfacWarning):
    """A fitted variance or correlation sits on the edge of its range."""


class LeverageWarning(BorrowfacWarning):
    """A diagnostic was undefined at a unit self-weight; NaN reported."""
