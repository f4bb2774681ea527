"""Core engine: posterior scale V, weight rows of W, and their summaries.

The point estimate is Yhat = W Y with W = X V X' Phi^-1 and
V = (X' Phi^-1 X + blockdiag(C^-1, Sigma^-1))^-1. Row i of W carries the
weight each observation contributes to Yhat_i; summaries split that row
into the shrinkage factor (weight on i's own cluster), the pooling
factor (weight on lenders), SSBF (sum of squared lender weights) and
their per-relationship-group restrictions.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import (
    BinGapError,
    DimensionError,
    IndexOutOfRange,
    NotPositiveDefinite,
    UnknownColumn,
)
from .model import ClusterIndex, ValidatedModel, detect_clusters

__all__ = [
    "PosteriorScale",
    "WeightRow",
    "RowSummary",
    "RelationshipPartition",
    "BorrowingDecomposition",
    "DecomposeOptions",
    "compute_scale",
    "weight_row",
    "column_equal",
    "graph_distance",
    "lag",
    "relationship_partition",
    "summarize_row",
    "decompose_all",
    "fitted_values",
    "coefficient_weights",
]

# snap tolerance for the exact boundary shrinkage = 1 (all-lenders-empty
# rows land there up to roundoff)
_BOUNDARY_SNAP = 1e-12


class PosteriorScale:
    """Cholesky factorization of V^-1 with solve access.

    The explicit V is materialized lazily and only for P <= 2000.
    """

    _EXPLICIT_MAX_DIM = 2000

    def __init__(self, chol_lower: np.ndarray):
        self._chol = chol_lower
        self.dim = chol_lower.shape[0]

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve V^-1 z = rhs (rhs may be a matrix of columns)."""
        return sla.cho_solve((self._chol, True), rhs)

    @cached_property
    def explicit(self) -> np.ndarray | None:
        """Dense V, or None when the dimension exceeds the cap."""
        if self.dim > self._EXPLICIT_MAX_DIM:
            return None
        return self.solve(np.eye(self.dim))


def compute_scale(model: ValidatedModel) -> PosteriorScale:
    """Factorize V^-1 = X' Phi^-1 X + blockdiag(C^-1, Sigma^-1).

    Phi^-1 enters through diagonal scaling of the sparse design; it is
    never formed as a dense matrix.
    """
    x = model.design
    gram = (x.T @ sp.diags(1.0 / model.noise_variances) @ x).toarray()
    gram += model.prior_block().toarray()
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("posterior precision is not positive definite") from None
    return PosteriorScale(chol)


@dataclass(frozen=True)
class WeightRow:
    """Row i of the weight matrix W (length N)."""

    index: int
    weights: np.ndarray


def _conditioned_row(model: ValidatedModel, i: int, condition_cols) -> np.ndarray:
    row = model.design_row(i)
    for c in condition_cols:
        if not (0 <= c < model.p_fixed):
            raise IndexOutOfRange(
                f"condition column {c} outside fixed design (P1 = {model.p_fixed})"
            )
        row[c] = 0.0
    return row


def weight_row(
    model: ValidatedModel,
    scale: PosteriorScale,
    i: int,
    condition_cols=(),
) -> WeightRow:
    """w_i = x_i' V X' Phi^-1 via one solve and one sparse matvec.

    ``condition_cols`` zeroes the named fixed-design columns of x_i,
    which yields the weights of the estimate conditional on those
    coefficients.
    """
    if not (0 <= i < model.n_obs):
        raise IndexOutOfRange(f"observation index {i} outside 0..{model.n_obs - 1}")
    x_i = _conditioned_row(model, i, condition_cols)
    v = scale.solve(x_i)
    w = (model.design @ v) / model.noise_variances
    return WeightRow(index=i, weights=w)


# ---------------------------------------------------------------------------
# relationship rules


class _Rule:
    name: str
    outcomes: tuple

    def codes(self, rep_rows: np.ndarray) -> np.ndarray:
        """Outcome code matrix, one row per representative, one column per obs."""
        raise NotImplementedError


class _ColumnEqualRule(_Rule):
    def __init__(self, name: str, values):
        self.name = name
        vals = np.asarray(values)
        _, self._codes = np.unique(vals.astype(str), return_inverse=True)
        self.outcomes = ("same", "different")

    def codes(self, rep_rows):
        c = self._codes
        return (c[rep_rows][:, None] != c[None, :]).astype(np.int64)


def _bin_codes(values: np.ndarray, bins, rule_name: str) -> np.ndarray:
    """Map exact values to bin indices; the last bin is open above max(bins)."""
    bins = [float(b) for b in bins]
    if sorted(bins) != bins or len(set(bins)) != len(bins):
        raise BinGapError(f"{rule_name}: bins must be strictly increasing")
    out = np.full(values.shape, -1, dtype=np.int64)
    for k, b in enumerate(bins):
        out[values == b] = k
    open_mask = values > bins[-1]
    out[open_mask] = len(bins)
    bad = out < 0
    if bad.any():
        v = values[bad].ravel()[0]
        raise BinGapError(
            f"{rule_name}: value {v} falls between declared bins {bins}"
        )
    return out


def _bin_outcomes(bins) -> tuple:
    labels = [_fmt_num(b) for b in bins]
    labels.append(_fmt_num(bins[-1] + 1) + "+")
    return tuple(labels)


def _fmt_num(v) -> str:
    f = float(v)
    return str(int(f)) if f == int(f) else str(f)


class _GraphDistanceRule(_Rule):
    def __init__(self, name: str, node_of, level_dist: np.ndarray, bins):
        self.name = name
        self._node_of = np.asarray(node_of, dtype=np.int64)
        self._dist = level_dist
        self._bins = list(bins)
        self.outcomes = _bin_outcomes(self._bins)

    def codes(self, rep_rows):
        d = self._dist[np.ix_(self._node_of[rep_rows], self._node_of)]
        return _bin_codes(d, self._bins, f"graph_distance({self.name})")


class _LagRule(_Rule):
    def __init__(self, name: str, values, bins):
        self.name = name
        self._values = np.asarray(values, dtype=np.float64)
        self._bins = list(bins)
        self.outcomes = _bin_outcomes(self._bins)

    def codes(self, rep_rows):
        d = np.abs(self._values[rep_rows][:, None] - self._values[None, :])
        return _bin_codes(d, self._bins, f"lag({self.name})")


def column_equal(name: str, values) -> _Rule:
    """Rule with outcomes same/different on a categorical column."""
    return _ColumnEqualRule(name, values)


def bfs_level_distances(adjacency: sp.csr_matrix) -> np.ndarray:
    """All-pairs hop distances by BFS; unreachable pairs get +inf."""
    a = sp.csr_matrix(adjacency)
    n = a.shape[0]
    dist = np.full((n, n), np.inf)
    indptr, indices = a.indptr, a.indices
    for s in range(n):
        dist[s, s] = 0.0
        frontier = [s]
        level = 0
        while frontier:
            level += 1
            nxt = []
            for u in frontier:
                for v in indices[indptr[u] : indptr[u + 1]]:
                    if dist[s, v] == np.inf:
                        dist[s, v] = level
                        nxt.append(v)
            frontier = nxt
    return dist


def graph_distance(name: str, adjacency, node_of, bins) -> _Rule:
    """Rule binning graph hop distance between observations' nodes.

    ``node_of`` maps each observation to a node index of ``adjacency``;
    ``bins`` lists the exact distances given their own outcome, e.g.
    [0, 1] yields outcomes 0 / 1 / 2+. Disconnected pairs (infinite
    distance) fall in the open top bin.
    """
    from .covariance import validate_adjacency

    a = validate_adjacency(adjacency)
    node_of = np.asarray(node_of, dtype=np.int64)
    if node_of.min(initial=0) < 0 or (node_of.max(initial=-1) >= a.shape[0]):
        raise UnknownColumn(
            f"graph_distance({name}): node index outside adjacency of size {a.shape[0]}"
        )
    return _GraphDistanceRule(name, node_of, bfs_level_distances(a), bins)


def lag(name: str, values, bins) -> _Rule:
    """Rule binning the absolute difference of a numeric column."""
    return _LagRule(name, values, bins)


@dataclass(frozen=True)
class RelationshipPartition:
    """Lender labels for every (borrower cluster, observation) pair.

    ``codes[k, j]`` indexes ``labels`` for lender j of any borrower in
    cluster k, and is -1 when j belongs to the cluster itself. Only
    labels that actually occur among lender pairs are kept.
    """

    rules: tuple
    labels: tuple
    codes: np.ndarray

    @property
    def n_groups(self) -> int:
        return len(self.labels)

    def lender_codes(self, clusters: ClusterIndex, i: int) -> np.ndarray:
        """Label codes of every observation relative to borrower i."""
        return self.codes[clusters.cluster_of[i]]


def _label_string(parts) -> str:
    return ",".join(parts) if parts else "lenders"


def relationship_partition(
    model: ValidatedModel, clusters: ClusterIndex, rules=()
) -> RelationshipPartition:
    """Assign every lender a label from the cross product of rule outcomes.

    The borrower cluster is always held out as its own implicit group;
    with no rules all lenders share the single label "lenders".
    """
    rules = tuple(rules)
    for r in rules:
        probe = getattr(r, "codes", None)
        if probe is None:
            raise UnknownColumn(f"not a relationship rule: {r!r}")
    reps = clusters.reps
    k, n = len(reps), model.n_obs

    if rules:
        per_rule = [r.codes(reps) for r in rules]
        for name, m in zip((r.name for r in rules), per_rule):
            if m.shape != (k, n):
                raise DimensionError(f"rule {name} produced shape {m.shape}")
        radix = np.ones(len(rules), dtype=np.int64)
        for idx in range(len(rules) - 2, -1, -1):
            radix[idx] = radix[idx + 1] * len(rules[idx + 1].outcomes)
        combined = sum(radix[idx] * per_rule[idx] for idx in range(len(rules)))
    else:
        combined = np.zeros((k, n), dtype=np.int64)

    own = clusters.cluster_of[None, :] == np.arange(k)[:, None]
    lender_vals = np.unique(combined[~own])

    # densify occurring combined codes into 0..G-1 and build label strings
    remap = np.full((combined.max(initial=0) + 1,), -1, dtype=np.int64)
    remap[lender_vals] = np.arange(len(lender_vals))
    codes = np.where(own, -1, remap[combined])

    labels = []
    for val in lender_vals:
        parts = []
        rest = int(val)
        for idx, r in enumerate(rules):
            q = rest // radix[idx] if rules else 0
            rest = rest - q * radix[idx]
            parts.append(f"{r.name}={r.outcomes[q]}")
        labels.append(_label_string(parts))
    return RelationshipPartition(rules=rules, labels=tuple(labels), codes=codes)


@dataclass(frozen=True)
class RowSummary:
    """Scalar summary of one weight row."""

    index: int
    cluster: int
    shrinkage: float
    pooling: float
    ssbf: float
    group_borrowing: dict
    group_pssbf: dict
    group_counts: dict


def _snap_shrinkage(s: float) -> float:
    if 1.0 < s <= 1.0 + _BOUNDARY_SNAP:
        return 1.0
    return s


def summarize_row(
    row: WeightRow, clusters: ClusterIndex, partition: RelationshipPartition
) -> RowSummary:
    """Split a weight row into shrinkage, pooling, SSBF and group parts."""
    i = row.index
    w = row.weights
    cid = int(clusters.cluster_of[i])
    codes = partition.codes[cid]
    own = codes < 0

    shrinkage = _snap_shrinkage(float(w[own].sum()))
    pooling = 1.0 - shrinkage

    g = partition.n_groups
    lender_codes = codes[~own]
    wl = w[~own]
    b_g = np.bincount(lender_codes, weights=wl, minlength=g) if wl.size else np.zeros(g)
    p_g = np.bincount(lender_codes, weights=wl * wl, minlength=g) if wl.size else np.zeros(g)
    n_g = np.bincount(lender_codes, minlength=g) if wl.size else np.zeros(g, dtype=np.int64)
    return RowSummary(
        index=i,
        cluster=cid,
        shrinkage=shrinkage,
        pooling=pooling,
        ssbf=float((wl * wl).sum()),
        group_borrowing={lab: float(b_g[idx]) for idx, lab in enumerate(partition.labels)},
        group_pssbf={lab: float(p_g[idx]) for idx, lab in enumerate(partition.labels)},
        group_counts={lab: int(n_g[idx]) for idx, lab in enumerate(partition.labels)},
    )


@dataclass(frozen=True)
class DecomposeOptions:
    keep_full: bool = False
    condition_on: tuple = ()
    threads: int = 1
    chunk_size: int = 128


@dataclass
class BorrowingDecomposition:
    """All row summaries plus the handles needed to extend them.

    ``summaries[i]`` is shared across the members of i's cluster; the
    full W is present only when requested.
    """

    model: ValidatedModel
    scale: PosteriorScale
    clusters: ClusterIndex
    partition: RelationshipPartition
    summaries: list
    condition_on: tuple = ()
    weight_matrix: np.ndarray | None = None

    @property
    def n_obs(self) -> int:
        return self.model.n_obs


def _cluster_weight_block(model, scale, rep_rows, condition_on):
    """Weight rows for the given cluster representatives (len(rep) x N)."""
    rhs = np.stack([_conditioned_row(model, int(i), condition_on) for i in rep_rows], axis=1)
    v = scale.solve(rhs)
    return (model.design @ v).T / model.noise_variances[None, :]


def decompose_all(
    model: ValidatedModel,
    clusters: ClusterIndex | None = None,
    partition: RelationshipPartition | None = None,
    opts: DecomposeOptions | None = None,
) -> BorrowingDecomposition:
    """Summarize every row of W, one solve per borrower cluster.

    Rows are computed independently in chunks of cluster representatives
    (parallel when opts.threads > 1) and shared exactly across cluster
    members.
    """
    opts = opts or DecomposeOptions()
    if clusters is None:
        clusters = detect_clusters(model)
    if partition is None:
        partition = relationship_partition(model, clusters, ())
    scale = compute_scale(model)

    n = model.n_obs
    w_full = np.empty((n, n)) if opts.keep_full else None
    summaries: list = [None] * n

    chunks = [
        range(lo, min(lo + opts.chunk_size, clusters.n_clusters))
        for lo in range(0, clusters.n_clusters, opts.chunk_size)
    ]

    def run_chunk(cids):
        rep_rows = clusters.reps[list(cids)]
        block = _cluster_weight_block(model, scale, rep_rows, opts.condition_on)
        for local, cid in enumerate(cids):
            row = WeightRow(index=int(clusters.reps[cid]), weights=block[local])
            summary = summarize_row(row, clusters, partition)
            for member in clusters.members[cid]:
                summaries[member] = RowSummary(
                    index=int(member),
                    cluster=summary.cluster,
                    shrinkage=summary.shrinkage,
                    pooling=summary.pooling,
                    ssbf=summary.ssbf,
                    group_borrowing=summary.group_borrowing,
                    group_pssbf=summary.group_pssbf,
                    group_counts=summary.group_counts,
                )
                if w_full is not None:
                    w_full[member] = block[local]

    if opts.threads > 1:
        with ThreadPoolExecutor(max_workers=opts.threads) as pool:
            list(pool.map(run_chunk, chunks))
    else:
        for c in chunks:
            run_chunk(c)

    return BorrowingDecomposition(
        model=model,
        scale=scale,
        clusters=clusters,
        partition=partition,
        summaries=summaries,
        condition_on=tuple(opts.condition_on),
        weight_matrix=w_full,
    )


def fitted_values(decomp_or_w, y) -> np.ndarray:
    """Yhat = W y, without materializing W when given a decomposition.

    A conditioned decomposition yields the conditional point estimates
    (its weight rows' products with y).
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    if isinstance(decomp_or_w, np.ndarray):
        w = decomp_or_w
        if w.shape[1] != y.shape[0]:
            raise DimensionError(f"W has {w.shape[1]} columns, y has {y.shape[0]}")
        return w @ y
    decomp: BorrowingDecomposition = decomp_or_w
    model = decomp.model
    if y.shape[0] != model.n_obs:
        raise DimensionError(f"y has length {y.shape[0]}, expected {model.n_obs}")
    beta = decomp.scale.solve(model.design.T @ (y / model.noise_variances))
    if not decomp.condition_on:
        return model.design @ beta
    out = np.empty(model.n_obs)
    xt = model.design.toarray()
    for c in decomp.condition_on:
        xt[:, c] = 0.0
    return xt @ beta


def coefficient_weights(model: ValidatedModel, scale: PosteriorScale) -> np.ndarray:
    """M = V X' Phi^-1, the P x N map with E[beta | variances, Y] = M Y."""
    rhs = (model.design.T @ sp.diags(1.0 / model.noise_variances)).toarray()
    return scale.solve(rhs)
