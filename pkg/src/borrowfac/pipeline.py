"""End-to-end runs: bundle -> variances -> decomposition -> report.

The pipeline is deterministic: identical inputs produce byte-identical
reports (fixed key order, canonical float formatting, no RNG anywhere).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bundle import ProblemBundle
from .decompose import (
    BorrowingDecomposition,
    DecomposeOptions,
    decompose_all,
    fitted_values,
    relationship_partition,
)
from .errors import DimensionError, EmptySet, UnknownColumn
from .glmm import poisson_pseudo_observations
from .influence import build_influence_report, impact_summary
from .model import ValidatedModel, detect_clusters
from .reml import VarianceEstimates, fit_variance_reml
from .report import Report
from .smoothing import nadaraya_watson_grid

__all__ = ["PipelineOptions", "PipelineResult", "run_pipeline", "record_field"]


@dataclass
class PipelineOptions:
    keep_full: bool = False
    threads: int = 1
    include_influence: bool = True
    influence_always: bool = False  # emit cook/rvsi/pena even with no influential set
    grid: dict | None = None  # {"x", "y", "value", optional "grid_size"/"bandwidth"}


@dataclass
class PipelineResult:
    report: Report
    bundle: ProblemBundle
    model: ValidatedModel
    decomposition: BorrowingDecomposition
    response: np.ndarray
    base_variance: np.ndarray
    estimates: VarianceEstimates | None


def _maybe(x):
    """Floats fit for JSON: non-finite becomes None."""
    x = float(x)
    return x if np.isfinite(x) else None


def _echo_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return _maybe(v)
    return str(v)


def record_field(record: dict, name: str):
    """Resolve a grid-axis field name against one report record.

    Accepts the scalar record fields, ``groups.<label>.<key>`` paths,
    and numeric covariate columns.
    """
    if name in ("id", "cluster", "cluster_size", "shrinkage", "pooling",
                "ssbf", "fitted"):
        return float(record[name])
    if name.startswith("groups."):
        rest = name[len("groups."):]
        label, _, key = rest.rpartition(".")
        if key not in ("borrowing", "pssbf", "count") or label not in record["groups"]:
            raise UnknownColumn(f"no group field {name!r}")
        return float(record["groups"][label][key])
    cov = record["covariates"]
    if name in cov:
        v = cov[name]
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            return float(v)
        raise UnknownColumn(f"covariate {name!r} is not numeric")
    raise UnknownColumn(f"unknown record field {name!r}")


def _working_response(bundle: ProblemBundle):
    y_raw = bundle.data[bundle.response].to_numpy(dtype=np.float64)
    if bundle.offset is not None:
        pseudo = poisson_pseudo_observations(
            y_raw,
            bundle.data[bundle.offset].to_numpy(dtype=np.float64),
            mode=bundle.variance_mode,
        )
        return pseudo.response, pseudo.variance
    return y_raw, np.ones(bundle.n_obs)


def _resolve_model(bundle: ProblemBundle, y, base):
    phi_d = bundle.variance["phi"]
    sigma_d = bundle.variance["sigma"]
    phi0 = phi_d if isinstance(phi_d, float) else 1.0
    sigma0 = sigma_d if isinstance(sigma_d, float) else 1.0
    model = bundle.make_model(base * phi0, sigma0)

    estimates = None
    phi_scale = phi0
    sigma2 = sigma0
    if phi_d == "fit" or sigma_d == "fit":
        estimates = fit_variance_reml(
            model, y,
            fit_sigma=(sigma_d == "fit"),
            fit_phi=(phi_d == "fit"),
        )
        if phi_d == "fit":
            phi_scale = estimates.phi_scale
        if sigma_d == "fit":
            sigma2 = estimates.sigma2
        model = bundle.make_model(base * phi_scale, sigma2)
    return model, phi_scale, sigma2, estimates


def _variance_meta(bundle, phi_scale, sigma2, estimates):
    out = {
        "phi_scale": float(phi_scale),
        "sigma2": float(sigma2),
        "rho_s": bundle._rho("rho_s"),
        "rho_t": bundle._rho("rho_t"),
        "source": "reml" if estimates is not None else "given",
    }
    if estimates is not None:
        out["log_restricted_likelihood"] = _maybe(estimates.log_restricted_likelihood)
        out["converged"] = bool(estimates.converged)
        out["boundary"] = list(estimates.boundary)
        out["n_iter"] = int(estimates.n_iter)
    return out


def _influence_section(bundle, model, decomp, y):
    influential = bundle.influential or ()
    section = {"points": [int(s) for s in influential]}
    if influential:
        try:
            impact = impact_summary(decomp, influential)
            section["impact"] = {
                label: {
                    "min": _maybe(b.minimum), "q1": _maybe(b.q1),
                    "median": _maybe(b.median), "q3": _maybe(b.q3),
                    "max": _maybe(b.maximum), "n": int(b.n),
                }
                for label, b in impact.groups.items()
            }
        except EmptySet:
            section["note"] = "influential set lends to no estimate in any group"
            return section
    try:
        rep = build_influence_report(model, decomp, y)
        k = decomp.clusters.n_clusters
        reps = [int(r) for r in decomp.clusters.reps]
        section["cooks"] = [_maybe(rep.avg_cooks[j]) for j in range(k)]
        section["rvsi"] = [_maybe(rep.rvsi[(j, reps[j])]) for j in range(k)]
        section["pena"] = [_maybe(rep.pena_s[reps[j]]) for j in range(k)]
    except DimensionError:
        section["cooks"] = None
        section["rvsi"] = None
        section["pena"] = None
        section["note"] = "cook/rvsi/pena undefined: no residual degrees of freedom"
    return section


def _grid_section(records, spec: dict):
    for key in ("x", "y", "value"):
        if key not in spec:
            raise UnknownColumn(f"grid spec is missing {key!r}")
    xs = np.array([record_field(r, spec["x"]) for r in records])
    ys = np.array([record_field(r, spec["y"]) for r in records])
    vs = np.array([record_field(r, spec["value"]) for r in records])
    grid_size = int(spec.get("grid_size", 50))
    bandwidth = spec.get("bandwidth")
    if bandwidth is not None:
        bandwidth = (float(bandwidth[0]), float(bandwidth[1]))
    sg = nadaraya_watson_grid(xs, ys, vs, grid_size=grid_size, bandwidth=bandwidth)
    return {
        "x_axis": spec["x"],
        "y_axis": spec["y"],
        "value": spec["value"],
        "bandwidth": [float(sg.bandwidth_x), float(sg.bandwidth_y)],
        "x": [float(v) for v in sg.x],
        "y": [float(v) for v in sg.y],
        "surface": [[_maybe(v) for v in row] for row in sg.surface],
    }


def run_pipeline(bundle: ProblemBundle, options: PipelineOptions | None = None) -> PipelineResult:
    opts = options or PipelineOptions()
    y, base = _working_response(bundle)
    model, phi_scale, sigma2, estimates = _resolve_model(bundle, y, base)

    clusters = detect_clusters(model)
    rules = bundle.make_rules()
    partition = relationship_partition(model, clusters, rules)
    decomp = decompose_all(
        model, clusters, partition,
        DecomposeOptions(
            keep_full=opts.keep_full,
            condition_on=bundle.condition_columns(),
            threads=opts.threads,
        ),
    )
    fitted = fitted_values(decomp, y)

    data = bundle.data
    columns = list(data.columns)
    col_values = {c: data[c].to_list() for c in columns}
    records = []
    for i in range(bundle.n_obs):
        s = decomp.summaries[i]
        cid = int(clusters.cluster_of[i])
        records.append({
            "id": i,
            "cluster": cid,
            "cluster_size": int(clusters.sizes[cid]),
            "shrinkage": float(s.shrinkage),
            "pooling": float(s.pooling),
            "ssbf": float(s.ssbf),
            "fitted": float(fitted[i]),
            "groups": {
                label: {
                    "borrowing": float(s.group_borrowing[label]),
                    "pssbf": float(s.group_pssbf[label]),
                    "count": int(s.group_counts[label]),
                }
                for label in partition.labels
            },
            "covariates": {c: _echo_value(col_values[c][i]) for c in columns},
        })

    meta = {
        "n_obs": int(bundle.n_obs),
        "n_clusters": int(clusters.n_clusters),
        "response": bundle.response,
        "offset": bundle.offset,
        "variance_mode": bundle.variance_mode if bundle.offset is not None else None,
        "variance": _variance_meta(bundle, phi_scale, sigma2, estimates),
        "rules": [dict(r) for r in bundle.rules_spec],
        "group_labels": list(partition.labels),
        "condition_on": list(bundle.condition_on),
    }

    influence = None
    if opts.include_influence and (bundle.influential or opts.influence_always):
        influence = _influence_section(bundle, model, decomp, y)

    grid = _grid_section(records, opts.grid) if opts.grid else None

    report = Report(meta=meta, records=records, influence=influence, grid=grid)
    return PipelineResult(
        report=report,
        bundle=bundle,
        model=model,
        decomposition=decomp,
        response=y,
        base_variance=base,
        estimates=estimates,
    )
