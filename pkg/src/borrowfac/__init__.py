"""Borrowing-factor decompositions for hierarchical regression estimates.

Point estimates from hierarchical linear models are weighted averages of
the observed data: Yhat = W Y with W = X V X' Phi^-1. This package
computes W row by row, splits each row into shrinkage (own cluster) and
borrowing factors over relationship groups, summarizes concentration via
SSBF/PSSBF, and provides influence diagnostics, REML variance fitting, a
Poisson pseudo-data bridge, and independent oracles for every formula.
"""

from .bundle import ProblemBundle, load_problem
from .covariance import (
    CAR,
    DensePrecision,
    IIDBlocks,
    PrecisionMatrix,
    ShiftMatrix,
    SpaceTimeAR,
    build_block_precision,
    build_car_precision,
    build_spacetime_precision,
    validate_adjacency,
)
from .decompose import (
    BorrowingDecomposition,
    DecomposeOptions,
    PosteriorScale,
    RelationshipPartition,
    RowSummary,
    WeightRow,
    coefficient_weights,
    column_equal,
    compute_scale,
    decompose_all,
    fitted_values,
    graph_distance,
    lag,
    relationship_partition,
    summarize_row,
    weight_row,
)
from .errors import *  # noqa: F401,F403 - the error vocabulary is the API
from .glmm import PseudoData, poisson_pseudo_observations
from .influence import (
    BoxStats,
    ImpactSummary,
    InfluenceReport,
    avg_cooks_distance,
    build_influence_report,
    impact_summary,
    pena_si,
    rvsi,
)
from .model import (
    ClusterIndex,
    ModelSpec,
    ValidatedModel,
    detect_clusters,
    validate_spec,
)
from .oracles import (
    HatDecomposition,
    OneWayProblem,
    OneWayWeights,
    case_deleted_fit,
    deleted_coefficients,
    dense_weights,
    hat_decomposition,
    oneway_weights,
    refit_without_rows,
)
from .pipeline import PipelineOptions, PipelineResult, record_field, run_pipeline
from .reml import VarianceEstimates, fit_variance_reml, restricted_log_likelihood
from .report import (
    Report,
    read_report,
    report_bytes,
    validate_report,
    write_report,
)
from .server import build_server, serve
from .smoothing import SmoothGrid, nadaraya_watson_grid, silverman_bandwidth

__version__ = "0.1.0"
