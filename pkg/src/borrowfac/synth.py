"""Synthetic model builders used by tests, checks, and demos.

Seeded generators for random mixed models and deterministic builders for
the canonical shapes: one-way problems, balanced two-factor layouts, and
space-time lattices.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .covariance import CAR, IIDBlocks, SpaceTimeAR
from .errors import DimensionError
from .model import ModelSpec, ValidatedModel, validate_spec
from .oracles import OneWayProblem

__all__ = [
    "grid_adjacency",
    "random_graph_adjacency",
    "random_oneway",
    "oneway_model",
    "random_model",
    "balanced_twofactor",
    "spacetime_grid_model",
]


def grid_adjacency(rows: int, cols: int) -> np.ndarray:
    """Rook-move adjacency of a rows x cols lattice, sites in row-major order."""
    if rows < 1 or cols < 1:
        raise DimensionError("grid must have at least one site")
    n = rows * cols
    a = np.zeros((n, n), dtype=np.float64)
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                a[i, i + 1] = a[i + 1, i] = 1.0
            if r + 1 < rows:
                a[i, i + cols] = a[i + cols, i] = 1.0
    return a


def random_graph_adjacency(rng: np.random.Generator, n: int) -> np.ndarray:
    """Connected random graph: a spanning path plus a few chords."""
    a = np.zeros((n, n), dtype=np.float64)
    order = rng.permutation(n)
    for u, v in zip(order[:-1], order[1:]):
        a[u, v] = a[v, u] = 1.0
    extra = int(rng.integers(0, max(1, n // 2) + 1))
    for _ in range(extra):
        u, v = rng.integers(0, n, size=2)
        if u != v:
            a[u, v] = a[v, u] = 1.0
    return a


def random_oneway(rng: np.random.Generator, max_clusters: int = 30) -> OneWayProblem:
    j = int(rng.integers(2, max_clusters + 1))
    sizes = rng.integers(1, 6, size=j)
    phi2 = rng.uniform(0.2, 4.0, size=j)
    sigma2 = float(rng.uniform(0.1, 3.0))
    return OneWayProblem(sizes=tuple(int(s) for s in sizes), phi2=tuple(phi2), sigma2=sigma2)


def oneway_model(problem: OneWayProblem) -> ValidatedModel:
    """Embed a one-way problem in the general engine: intercept + cluster effects."""
    sizes = np.asarray(problem.sizes, dtype=np.int64)
    j = len(sizes)
    n = int(sizes.sum())
    x1 = np.ones((n, 1))
    rows = np.arange(n)
    cols = np.repeat(np.arange(j), sizes)
    x2 = sp.csr_matrix((np.ones(n), (rows, cols)), shape=(n, j))
    phi = np.repeat(np.asarray(problem.phi2, dtype=np.float64), sizes)
    spec = ModelSpec(
        n_obs=n,
        fixed_design=x1,
        random_design=x2,
        noise_variances=phi,
        random_structure=IIDBlocks((j,), (problem.sigma2,)),
    )
    return validate_spec(spec)


def _random_cells(rng, n_clusters: int, n_cols: int) -> sp.csr_matrix:
    cols = rng.integers(0, n_cols, size=n_clusters)
    return cols


def random_model(
    rng: np.random.Generator,
    max_n: int = 400,
    structure: str = "any",
) -> ValidatedModel:
    """A random mixed model with repeated rows, for property tests.

    Fixed part mixes an indicator partition with continuous covariates
    (flat prior, ones in span); random part is a one-hot membership with
    an iid, CAR, or space-time precision. Cluster sizes vary from 1 to 4.
    """
    if structure == "any":
        structure = str(rng.choice(["iid", "car", "spacetime"]))

    n_clusters = int(rng.integers(8, 40))
    sizes = rng.integers(1, 5, size=n_clusters)
    while sizes.sum() > max_n:
        n_clusters -= 1
        sizes = sizes[:n_clusters]
    n = int(sizes.sum())

    # fixed part: either intercept + covariates, or a full one-hot partition
    n_cont = int(rng.integers(0, 3))
    cont = rng.normal(size=(n_clusters, n_cont))
    if rng.random() < 0.5:
        levels = int(rng.integers(2, 4))
        # every level must occur or the one-hot block loses rank
        assign = np.concatenate([
            np.arange(levels),
            rng.integers(0, levels, size=n_clusters - levels),
        ])
        part = np.eye(levels)[rng.permutation(assign)]
        x1_rows = np.hstack([part, cont])
    else:
        x1_rows = np.hstack([np.ones((n_clusters, 1)), cont])

    # random part: membership cells under the chosen structure
    if structure == "iid":
        p2 = int(rng.integers(3, 12))
        struct = IIDBlocks((p2,), (float(rng.uniform(0.2, 3.0)),))
        cell = _random_cells(rng, n_clusters, p2)
    elif structure == "car":
        p2 = int(rng.integers(4, 12))
        adjacency = random_graph_adjacency(rng, p2)
        struct = CAR(adjacency, rho=float(rng.uniform(0.0, 0.95)),
                     sigma2=float(rng.uniform(0.2, 3.0)))
        cell = _random_cells(rng, n_clusters, p2)
    elif structure == "spacetime":
        rows_, cols_ = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        periods = int(rng.integers(2, 4))
        adjacency = grid_adjacency(rows_, cols_)
        j = rows_ * cols_
        struct = SpaceTimeAR(
            adjacency,
            rho_space=float(rng.uniform(0.0, 0.95)),
            rho_time=float(rng.uniform(0.0, 0.95)),
            periods=periods,
            sigma2=float(rng.uniform(0.2, 3.0)),
        )
        p2 = j * periods
        site = rng.integers(0, j, size=n_clusters)
        period = rng.integers(0, periods, size=n_clusters)
        cell = period * j + site
    else:
        raise ValueError(f"unknown structure {structure!r}")

    phi2 = rng.uniform(0.2, 3.0, size=n_clusters)

    x1 = np.repeat(x1_rows, sizes, axis=0)
    obs_cell = np.repeat(cell, sizes)
    x2 = sp.csr_matrix(
        (np.ones(n), (np.arange(n), obs_cell)), shape=(n, p2)
    )
    phi = np.repeat(phi2, sizes)
    spec = ModelSpec(
        n_obs=n,
        fixed_design=x1,
        random_design=x2,
        noise_variances=phi,
        random_structure=struct,
    )
    return validate_spec(spec)


def balanced_twofactor(
    k_levels: int,
    n_groups: int,
    n_per_cell: int,
    phi2: float = 1.0,
    sigma2: float = 1.0,
    covariate=None,
) -> ValidatedModel:
    """Balanced crossed layout: K fixed one-hot levels x J random groups.

    Every (level, group) cell holds n_per_cell replicate observations.
    ``covariate`` optionally appends a per-group fixed column (length J).
    """
    if k_levels < 1 or n_groups < 1 or n_per_cell < 1:
        raise DimensionError("all layout dimensions must be at least 1")
    n = k_levels * n_groups * n_per_cell
    level = np.repeat(np.arange(k_levels), n_groups * n_per_cell)
    group = np.tile(np.repeat(np.arange(n_groups), n_per_cell), k_levels)

    x1 = np.eye(k_levels)[level]
    if covariate is not None:
        covariate = np.asarray(covariate, dtype=np.float64).ravel()
        if covariate.size != n_groups:
            raise DimensionError("covariate must have one value per group")
        x1 = np.hstack([x1, covariate[group][:, None]])
    x2 = sp.csr_matrix(
        (np.ones(n), (np.arange(n), group)), shape=(n, n_groups)
    )
    spec = ModelSpec(
        n_obs=n,
        fixed_design=x1,
        random_design=x2,
        noise_variances=np.full(n, float(phi2)),
        random_structure=IIDBlocks((n_groups,), (float(sigma2),)),
    )
    return validate_spec(spec)


def spacetime_grid_model(
    rows: int,
    cols: int,
    periods: int,
    rho_space: float,
    rho_time: float,
    sigma2: float = 1.0,
    phi2: float = 1.0,
) -> ValidatedModel:
    """One observation per (site, period) cell of a lattice, AR over time.

    Random-effect columns are time-major (period t, site j -> t*J + j),
    matching the observation order, so obs i sits in cell i.
    """
    adjacency = grid_adjacency(rows, cols)
    j = rows * cols
    n = j * periods
    x1 = np.ones((n, 1))
    x2 = sp.identity(n, format="csr")
    struct = SpaceTimeAR(
        adjacency,
        rho_space=float(rho_space),
        rho_time=float(rho_time),
        periods=periods,
        sigma2=float(sigma2),
    )
    spec = ModelSpec(
        n_obs=n,
        fixed_design=x1,
        random_design=x2,
        noise_variances=np.full(n, float(phi2)),
        random_structure=struct,
    )
    return validate_spec(spec)
