"""Command-line interface.

Subcommands: decompose, influence, check, fit-variance, smooth, serve.
Exit codes: 0 success, 2 validation error (bad files, schemas, indices),
3 numerical failure (non-PD precisions, singular deletions, failed
oracle checks).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from . import oracles, synth
from .bundle import ProblemBundle, load_problem
from .decompose import decompose_all, weight_row
from .errors import (
    AsymmetricAdjacency,
    BinGapError,
    BorrowfacError,
    DegeneratePooling,
    DimensionError,
    EmptyInput,
    EmptySet,
    FlatPriorRequired,
    IndexOutOfRange,
    LeverageOne,
    LeverageZero,
    NonPositiveOffset,
    NotPositiveDefinite,
    ParseError,
    RhoOutOfRange,
    SchemaVersionMismatch,
    SingularAfterDeletion,
    SizeGuard,
    SpanError,
    UnknownColumn,
)
from .pipeline import PipelineOptions, run_pipeline
from .reml import restricted_log_likelihood
from .report import json_bytes, report_bytes
from .server import serve as _serve
from .smoothing import nadaraya_watson_grid

_VALIDATION_ERRORS = (
    ParseError, SchemaVersionMismatch, UnknownColumn, BinGapError,
    DimensionError, SpanError, IndexOutOfRange, EmptySet, EmptyInput,
    NonPositiveOffset, AsymmetricAdjacency, RhoOutOfRange, SizeGuard,
    FlatPriorRequired,
)
_NUMERICAL_ERRORS = (
    NotPositiveDefinite, SingularAfterDeletion, DegeneratePooling,
    LeverageZero, LeverageOne, np.linalg.LinAlgError,
)


def _write_out(data: bytes, out: str | None):
    if out:
        with open(out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)


def _load_points(arg: str):
    """--points accepts inline JSON or a path to a JSON file."""
    text = arg.strip()
    if not text.startswith(("{", "[")):
        with open(arg, "r", encoding="utf-8") as fh:
            text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"--points: invalid JSON: {exc.msg}") from exc


def _bundle_from(args) -> ProblemBundle:
    if not args.data or not args.spec:
        raise ParseError("--data and --spec are both required")
    return load_problem(args.data, args.spec)


def _cmd_decompose(args) -> int:
    bundle = _bundle_from(args)
    grid = None
    if getattr(args, "grid", None):
        grid = _load_points(args.grid)
        if not isinstance(grid, dict):
            raise ParseError("--grid: expected an object with x/y/value fields")
    opts = PipelineOptions(
        keep_full=bool(args.full_weights),
        threads=args.threads,
        grid=grid,
    )
    result = run_pipeline(bundle, opts)
    if args.full_weights:
        np.savetxt(args.full_weights, result.decomposition.weight_matrix,
                   fmt="%.17g", delimiter=",")
    _write_out(report_bytes(result.report), args.out)
    return 0


def _cmd_influence(args) -> int:
    bundle = _bundle_from(args)
    if args.points:
        points = _load_points(args.points)
        if not isinstance(points, list) or any(
            not isinstance(v, int) or isinstance(v, bool) for v in points
        ):
            raise ParseError("--points: expected a JSON list of observation indices")
        for v in points:
            if not (0 <= v < bundle.n_obs):
                raise IndexOutOfRange(f"--points index {v} outside 0..{bundle.n_obs - 1}")
        bundle = replace(bundle, influential=tuple(points))
    opts = PipelineOptions(threads=args.threads, influence_always=True)
    result = run_pipeline(bundle, opts)
    _write_out(report_bytes(result.report), args.out)
    return 0


def _check_oneway(rng, trials: int) -> float:
    worst = 0.0
    for _ in range(trials):
        problem = synth.random_oneway(rng)
        weights = oracles.oneway_weights(problem)
        model = synth.oneway_model(problem)
        expected = weights.observation_matrix(problem)
        w = oracles.dense_weights(model)
        scale_ref = np.maximum(np.abs(expected), 1e-300)
        worst = max(worst, float(np.max(np.abs(w - expected) / scale_ref)))
    return worst


def _check_dense(rng, trials: int) -> float:
    worst = 0.0
    for _ in range(trials):
        model = synth.random_model(rng, max_n=150)
        w = oracles.dense_weights(model)
        decomp = decompose_all(model)
        for cid in range(decomp.clusters.n_clusters):
            i = int(decomp.clusters.reps[cid])
            row = weight_row(model, decomp.scale, i)
            worst = max(worst, float(np.max(np.abs(row.weights - w[i]))))
    return worst


def _check_hat(rng, trials: int) -> float:
    worst = 0.0
    for _ in range(trials):
        model = synth.random_model(rng, max_n=150)
        w = oracles.dense_weights(model)
        hat = oracles.hat_decomposition(model)
        worst = max(worst, float(np.max(np.abs(hat.weight_matrix() - w))))
    return worst


def _check_deletion(rng, trials: int) -> float:
    from .decompose import compute_scale
    from .model import detect_clusters

    worst = 0.0
    for _ in range(trials):
        model = synth.random_model(rng, max_n=80)
        clusters = detect_clusters(model)
        scale = compute_scale(model)
        y = rng.standard_normal(model.n_obs)
        for j in range(clusters.n_clusters):
            members = clusters.members[j]
            if len(members) == model.n_obs:
                continue
            try:
                _, fitted = oracles.case_deleted_fit(model, scale, y, j, clusters)
                _, refit = oracles.refit_without_rows(model, y, members)
            except SingularAfterDeletion:
                continue
            keep = np.setdiff1d(np.arange(model.n_obs), members)
            worst = max(worst, float(np.max(np.abs(fitted[keep] - refit[keep]))))
    return worst


_CHECK_SUITES = {
    "oneway": (_check_oneway, 1e-10, "one-way closed form vs dense engine"),
    "dense": (_check_dense, 1e-9, "row engine vs dense inversion"),
    "hat": (_check_hat, 1e-9, "hat-matrix identity W = H + H2(I - H)"),
    "deletion": (_check_deletion, 1e-8, "Sherman-Morrison deletion vs refit"),
}


def _cmd_check(args) -> int:
    names = list(_CHECK_SUITES) if args.suite == "all" else [args.suite]
    failed = False
    for name in names:
        fn, tol, title = _CHECK_SUITES[name]
        rng = np.random.default_rng(args.seed)
        worst = fn(rng, args.trials)
        ok = worst < tol
        failed = failed or not ok
        print(f"{name}: {'PASS' if ok else 'FAIL'} "
              f"(max err {worst:.3e}, tol {tol:.0e}) - {title}")
    return 3 if failed else 0


def _cmd_fit_variance(args) -> int:
    from .pipeline import _resolve_model, _working_response

    bundle = _bundle_from(args)
    y, base = _working_response(bundle)
    model, phi_scale, sigma2, estimates = _resolve_model(bundle, y, base)
    if estimates is not None:
        doc = {
            "phi_scale": float(phi_scale),
            "sigma2": float(sigma2),
            "rho_s": estimates.rho_s,
            "rho_t": estimates.rho_t,
            "log_restricted_likelihood": float(estimates.log_restricted_likelihood),
            "converged": bool(estimates.converged),
            "boundary": list(estimates.boundary),
            "n_iter": int(estimates.n_iter),
            "source": "reml",
        }
    else:
        doc = {
            "phi_scale": float(phi_scale),
            "sigma2": float(sigma2),
            "rho_s": bundle._rho("rho_s"),
            "rho_t": bundle._rho("rho_t"),
            "log_restricted_likelihood": float(restricted_log_likelihood(model, y)),
            "source": "given",
        }
    _write_out(json_bytes(doc), args.out)
    return 0


def _cmd_smooth(args) -> int:
    points = _load_points(args.points)
    if args.data or args.spec:
        if not isinstance(points, dict):
            raise ParseError("--points: expected {x, y, value} field names "
                             "when --data/--spec are given")
        bundle = _bundle_from(args)
        result = run_pipeline(bundle, PipelineOptions(threads=args.threads,
                                                      grid=points))
        _write_out(report_bytes(result.report), args.out)
        return 0

    if isinstance(points, dict):
        xs = np.asarray(points.get("x"), dtype=np.float64)
        ys = np.asarray(points.get("y"), dtype=np.float64)
        vs = np.asarray(points.get("value"), dtype=np.float64)
        grid_size = int(points.get("grid_size", 50))
        bandwidth = points.get("bandwidth")
    elif isinstance(points, list):
        arr = np.asarray(points, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ParseError("--points: triples must be [x, y, value] rows")
        xs, ys, vs = arr[:, 0], arr[:, 1], arr[:, 2]
        grid_size, bandwidth = 50, None
    else:
        raise ParseError("--points: expected a list of triples or {x, y, value}")
    if bandwidth is not None:
        bandwidth = (float(bandwidth[0]), float(bandwidth[1]))
    sg = nadaraya_watson_grid(xs, ys, vs, grid_size=grid_size, bandwidth=bandwidth)
    doc = {
        "bandwidth": [float(sg.bandwidth_x), float(sg.bandwidth_y)],
        "x": [float(v) for v in sg.x],
        "y": [float(v) for v in sg.y],
        "surface": [
            [float(v) if np.isfinite(v) else None for v in row]
            for row in sg.surface
        ],
    }
    _write_out(json_bytes(doc), args.out)
    return 0


def _cmd_serve(args) -> int:
    if args.report:
        source = args.report
    else:
        source = _bundle_from(args)
    print(f"serving on http://{args.host}:{args.port}", file=sys.stderr)
    try:
        _serve(source, port=args.port, host=args.host,
               options=PipelineOptions(threads=args.threads))
    except KeyboardInterrupt:
        pass
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="borrowfac",
        description="Borrowing-factor decompositions of hierarchical model estimates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, out=True):
        p.add_argument("--data", help="CSV data table")
        p.add_argument("--spec", help="JSON model spec")
        p.add_argument("--threads", type=int, default=1)
        if out:
            p.add_argument("--out", help="output path (default stdout)")

    p = sub.add_parser("decompose", help="run the full decomposition, write a report")
    add_common(p)
    p.add_argument("--full-weights", help="also write dense W as CSV (17 sig digits)")
    p.add_argument("--grid", help="smoothed-grid section spec (JSON or path)")
    p.set_defaults(fn=_cmd_decompose)

    p = sub.add_parser("influence", help="decomposition plus influence metrics")
    add_common(p)
    p.add_argument("--points", help="JSON list of influential observation indices")
    p.set_defaults(fn=_cmd_influence)

    p = sub.add_parser("check", help="run an oracle self-check suite")
    p.add_argument("suite", choices=[*_CHECK_SUITES, "all"])
    p.add_argument("--seed", type=int, default=20260818)
    p.add_argument("--trials", type=int, default=20)
    p.set_defaults(fn=_cmd_check)

    p = sub.add_parser("fit-variance", help="estimate variance components by REML")
    add_common(p)
    p.set_defaults(fn=_cmd_fit_variance)

    p = sub.add_parser("smooth", help="Nadaraya-Watson surface of scattered values")
    add_common(p)
    p.add_argument("--points", required=True,
                   help="JSON (inline or path): triples, arrays, or record fields")
    p.set_defaults(fn=_cmd_smooth)

    p = sub.add_parser("serve", help="HTTP API for the explorer")
    add_common(p, out=False)
    p.add_argument("--report", help="serve a written report (static mode)")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(fn=_cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except BorrowfacError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
