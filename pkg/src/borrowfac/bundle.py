"""Problem bundles: CSV data plus a JSON model description.

The spec file is a small declarative JSON document:

    {
      "response": "y",
      "offset": "exposure",              // optional; counts model if present
      "fixed": [
        {"column": "basement", "type": "categorical", "intercept_set": true},
        {"column": "log_uranium", "type": "numeric"}
      ],
      "random": [
        {"column": "county", "structure": "iid"}
      ],
      "variance": {"phi": 1.0, "sigma": "fit", "rho_s": 0.5, "rho_t": 0.5},
      "variance_mode": "moment_matched",
      "relationship_rules": [
        {"type": "column_equal", "column": "county"}
      ],
      "adjacency": {"path": "adj.csv", "format": "matrix"},
      "condition_on": ["log_uranium"],   // optional
      "influential": [3, 17]             // optional
    }

Categoricals expand in lexicographic level order. Exactly one term may
provide the intercept set (an explicit intercept term or a categorical
flagged intercept_set); if none does, the first categorical expands to
the full one-hot set so ones stay in the fixed span. Other categoricals
drop their first level. The random part is a single term; its site
column maps onto adjacency rows either by integer id (when values are
integers inside [0, J)) or by lexicographic rank (which must then cover
every row of the adjacency).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import scipy.sparse as sp

from . import decompose as dc
from .covariance import CAR, IIDBlocks, SpaceTimeAR, validate_adjacency
from .errors import IndexOutOfRange, ParseError, UnknownColumn
from .model import ModelSpec, ValidatedModel, validate_spec

__all__ = ["FixedTerm", "RandomTerm", "ProblemBundle", "load_problem"]

_STRUCTURES = ("iid", "car", "spacetime_ar")
_FIXED_TYPES = ("categorical", "numeric", "intercept")
_RULE_TYPES = ("column_equal", "graph_distance", "lag")
_VARIANCE_MODES = ("moment_matched", "paper_literal")


@dataclass(frozen=True)
class FixedTerm:
    column: str
    type: str
    intercept_set: bool = False


@dataclass(frozen=True)
class RandomTerm:
    columns: tuple
    structure: str
    params: dict = field(default_factory=dict)


def _require(cond, where: str, msg: str):
    if not cond:
        raise ParseError(f"{where}: {msg}")


def _levels(values) -> list:
    return sorted(set(str(v) for v in values))


def _numeric_column(data: pd.DataFrame, column: str, where: str) -> np.ndarray:
    try:
        return data[column].to_numpy(dtype=np.float64)
    except (ValueError, TypeError) as exc:
        raise ParseError(f"{where}: column {column!r} is not numeric") from exc


def _node_index(values, n_nodes: int, where: str) -> np.ndarray:
    """Map site values onto adjacency rows 0..n_nodes-1."""
    arr = np.asarray(values)
    if np.issubdtype(arr.dtype, np.number):
        ints = arr.astype(np.int64)
        if np.all(ints == arr) and ints.min() >= 0 and ints.max() < n_nodes:
            return ints
    levels = _levels(values)
    if len(levels) != n_nodes:
        raise ParseError(
            f"{where}: {len(levels)} site levels do not cover the "
            f"{n_nodes}-node adjacency; use integer node ids instead"
        )
    rank = {lev: k for k, lev in enumerate(levels)}
    return np.array([rank[str(v)] for v in values], dtype=np.int64)


def _load_adjacency(obj: dict, base_dir: str) -> np.ndarray:
    _require(isinstance(obj, dict), "spec.adjacency", "must be an object")
    path = obj.get("path")
    fmt = obj.get("format", "matrix")
    _require(isinstance(path, str), "spec.adjacency.path", "must be a string")
    _require(fmt in ("matrix", "edges"), "spec.adjacency.format",
             f"unknown format {fmt!r}")
    full = path if os.path.isabs(path) else os.path.join(base_dir, path)
    try:
        raw = pd.read_csv(full, header=None)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise ParseError(f"spec.adjacency: cannot read {full!r}: {exc}") from exc

    if fmt == "matrix":
        a = raw.to_numpy(dtype=np.float64)
    else:
        edges = raw.to_numpy()
        _require(edges.ndim == 2 and edges.shape[1] == 2,
                 "spec.adjacency", "edge list needs exactly two columns")
        try:
            edges = edges.astype(np.int64)
        except (ValueError, TypeError) as exc:
            raise ParseError("spec.adjacency: edge ids must be integers") from exc
        _require(edges.min() >= 0, "spec.adjacency", "edge ids must be >= 0")
        n = int(obj.get("nodes", edges.max() + 1))
        a = np.zeros((n, n))
        for u, v in edges:
            a[u, v] = a[v, u] = 1.0
            if u == v:
                a[u, v] = 2.0  # self-loop; fails the zero-diagonal check below
    validate_adjacency(a)
    return a


@dataclass(frozen=True)
class ProblemBundle:
    """Parsed and validated data + model description."""

    data: pd.DataFrame
    response: str
    offset: str | None
    fixed_terms: tuple
    random_term: RandomTerm
    variance: dict
    variance_mode: str
    rules_spec: tuple
    adjacency: np.ndarray | None
    influential: tuple | None
    condition_on: tuple
    raw_spec: dict

    @property
    def n_obs(self) -> int:
        return len(self.data)

    # -- fixed part ----------------------------------------------------

    def _intercept_provider(self) -> int | None:
        providers = [
            k for k, t in enumerate(self.fixed_terms)
            if t.type == "intercept" or (t.type == "categorical" and t.intercept_set)
        ]
        if len(providers) > 1:
            raise ParseError(
                "spec.fixed: more than one term claims the intercept set"
            )
        if providers:
            return providers[0]
        for k, t in enumerate(self.fixed_terms):
            if t.type == "categorical":
                return k
        return None

    def fixed_design(self):
        """Assemble X1; returns (matrix, {term column: column slice})."""
        n = self.n_obs
        provider = self._intercept_provider()
        blocks = []
        slices = {}
        start = 0
        for k, term in enumerate(self.fixed_terms):
            if term.type == "intercept":
                block = np.ones((n, 1))
            elif term.type == "numeric":
                block = _numeric_column(self.data, term.column, f"spec.fixed[{k}]")[:, None]
            else:
                levels = _levels(self.data[term.column])
                keep = levels if k == provider else levels[1:]
                if not keep:
                    raise ParseError(
                        f"spec.fixed[{k}]: categorical {term.column!r} has a "
                        "single level and no column survives the reference drop"
                    )
                codes = np.array([str(v) for v in self.data[term.column]])
                block = np.stack([(codes == lev).astype(np.float64) for lev in keep], axis=1)
            blocks.append(block)
            slices[term.column] = slice(start, start + block.shape[1])
            start += block.shape[1]
        if not blocks:
            raise ParseError("spec.fixed: at least one fixed term is required")
        return np.hstack(blocks), slices

    def condition_columns(self) -> tuple:
        if not self.condition_on:
            return ()
        _, slices = self.fixed_design()
        cols = []
        for name in self.condition_on:
            if name not in slices:
                raise UnknownColumn(f"condition_on names unknown fixed term {name!r}")
            cols.extend(range(slices[name].start, slices[name].stop))
        return tuple(cols)

    # -- random part ---------------------------------------------------

    def _site_nodes(self, column: str) -> np.ndarray:
        if self.adjacency is None:
            raise ParseError(
                f"spec.random: structure {self.random_term.structure!r} "
                "requires an adjacency"
            )
        return _node_index(self.data[column], self.adjacency.shape[0], "spec.random")

    def random_design(self):
        """Assemble X2; returns (csr matrix, structure metadata dict)."""
        term = self.random_term
        n = self.n_obs
        rows = np.arange(n)
        if term.structure == "iid":
            levels = _levels(self.data[term.columns[0]])
            rank = {lev: k for k, lev in enumerate(levels)}
            cols = np.array([rank[str(v)] for v in self.data[term.columns[0]]])
            p2 = len(levels)
            meta = {"levels": levels}
        elif term.structure == "car":
            cols = self._site_nodes(term.columns[0])
            p2 = self.adjacency.shape[0]
            meta = {}
        else:
            site = self._site_nodes(term.columns[0])
            time_vals = _numeric_column(self.data, term.columns[1], "spec.random")
            times = np.unique(time_vals)
            t_rank = np.searchsorted(times, time_vals)
            j = self.adjacency.shape[0]
            cols = t_rank * j + site
            p2 = j * len(times)
            meta = {"periods": len(times), "times": times}
        x2 = sp.csr_matrix((np.ones(n), (rows, cols)), shape=(n, p2))
        return x2, meta

    def _rho(self, key: str, default=None):
        if key in self.variance and self.variance[key] is not None:
            return float(self.variance[key])
        if key in self.random_term.params:
            return float(self.random_term.params[key])
        return default

    def make_structure(self, sigma2: float):
        term = self.random_term
        if term.structure == "iid":
            _, meta = self.random_design()
            return IIDBlocks((len(meta["levels"]),), (sigma2,))
        if term.structure == "car":
            rho = self._rho("rho_s")
            _require(rho is not None, "spec.variance", "car structure needs rho_s")
            return CAR(self.adjacency, rho=rho, sigma2=sigma2)
        rho_s = self._rho("rho_s")
        rho_t = self._rho("rho_t")
        _require(rho_s is not None and rho_t is not None,
                 "spec.variance", "spacetime_ar needs rho_s and rho_t")
        _, meta = self.random_design()
        return SpaceTimeAR(
            self.adjacency,
            rho_space=rho_s,
            rho_time=rho_t,
            periods=meta["periods"],
            sigma2=sigma2,
        )

    def make_model(self, noise_variances, sigma2: float) -> ValidatedModel:
        x1, _ = self.fixed_design()
        x2, _ = self.random_design()
        spec = ModelSpec(
            n_obs=self.n_obs,
            fixed_design=x1,
            random_design=x2,
            noise_variances=np.asarray(noise_variances, dtype=np.float64),
            random_structure=self.make_structure(sigma2),
        )
        return validate_spec(spec)

    # -- relationship rules ---------------------------------------------

    def make_rules(self) -> tuple:
        rules = []
        for k, obj in enumerate(self.rules_spec):
            where = f"spec.relationship_rules[{k}]"
            kind = obj.get("type")
            column = obj.get("column")
            name = obj.get("name", column)
            if column not in self.data.columns:
                raise UnknownColumn(f"{where}: unknown column {column!r}")
            if kind == "column_equal":
                rules.append(dc.column_equal(name, self.data[column].to_numpy()))
            elif kind == "graph_distance":
                _require(self.adjacency is not None, where,
                         "graph_distance rule requires an adjacency")
                bins = obj.get("bins")
                _require(isinstance(bins, list) and bins, where, "bins required")
                nodes = _node_index(self.data[column], self.adjacency.shape[0], where)
                rules.append(dc.graph_distance(name, self.adjacency, nodes,
                                               tuple(float(b) for b in bins)))
            else:
                bins = obj.get("bins")
                _require(isinstance(bins, list) and bins, where, "bins required")
                values = _numeric_column(self.data, column, where)
                rules.append(dc.lag(name, values, tuple(float(b) for b in bins)))
        return tuple(rules)

    def without_rows(self, rows) -> "ProblemBundle":
        """A fresh bundle with the given observation rows removed."""
        rows = sorted(set(int(r) for r in rows))
        n = self.n_obs
        for r in rows:
            if not (0 <= r < n):
                raise IndexOutOfRange(f"row {r} outside 0..{n - 1}")
        keep = np.setdiff1d(np.arange(n), np.array(rows, dtype=np.int64))
        data = self.data.iloc[keep].reset_index(drop=True)
        influential = None
        if self.influential is not None:
            old_to_new = {int(o): k for k, o in enumerate(keep)}
            remapped = tuple(old_to_new[s] for s in self.influential if s in old_to_new)
            influential = remapped if remapped else None
        return ProblemBundle(
            data=data,
            response=self.response,
            offset=self.offset,
            fixed_terms=self.fixed_terms,
            random_term=self.random_term,
            variance=self.variance,
            variance_mode=self.variance_mode,
            rules_spec=self.rules_spec,
            adjacency=self.adjacency,
            influential=influential,
            condition_on=self.condition_on,
            raw_spec=self.raw_spec,
        )


def _parse_fixed(raw, data_columns) -> tuple:
    _require(isinstance(raw, list) and raw, "spec.fixed", "must be a nonempty list")
    terms = []
    for k, obj in enumerate(raw):
        where = f"spec.fixed[{k}]"
        _require(isinstance(obj, dict), where, "must be an object")
        kind = obj.get("type")
        _require(kind in _FIXED_TYPES, where, f"unknown type {kind!r}")
        column = obj.get("column", "(intercept)" if kind == "intercept" else None)
        if kind != "intercept":
            _require(isinstance(column, str), where, "column required")
            if column not in data_columns:
                raise UnknownColumn(f"{where}: unknown column {column!r}")
        terms.append(FixedTerm(
            column=column,
            type=kind,
            intercept_set=bool(obj.get("intercept_set", False)),
        ))
    return tuple(terms)


def _parse_random(raw, data_columns) -> RandomTerm:
    _require(isinstance(raw, list), "spec.random", "must be a list")
    _require(len(raw) == 1, "spec.random",
             f"exactly one random term is supported, got {len(raw)}")
    obj = raw[0]
    _require(isinstance(obj, dict), "spec.random[0]", "must be an object")
    structure = obj.get("structure", "iid")
    _require(structure in _STRUCTURES, "spec.random[0]",
             f"unknown structure {structure!r}")
    if "columns" in obj:
        columns = obj["columns"]
        _require(isinstance(columns, list), "spec.random[0].columns", "must be a list")
        columns = tuple(columns)
    else:
        _require(isinstance(obj.get("column"), str), "spec.random[0]",
                 "column (or columns) required")
        columns = (obj["column"],)
    want = 2 if structure == "spacetime_ar" else 1
    _require(len(columns) == want, "spec.random[0]",
             f"structure {structure!r} takes {want} column(s), got {len(columns)}")
    for c in columns:
        if c not in data_columns:
            raise UnknownColumn(f"spec.random[0]: unknown column {c!r}")
    params = obj.get("params", {})
    _require(isinstance(params, dict), "spec.random[0].params", "must be an object")
    return RandomTerm(columns=columns, structure=structure, params=params)


def _parse_variance(raw) -> dict:
    raw = raw if raw is not None else {}
    _require(isinstance(raw, dict), "spec.variance", "must be an object")
    out = {}
    for key in ("phi", "sigma"):
        v = raw.get(key, "fit")
        if isinstance(v, str):
            _require(v == "fit", f"spec.variance.{key}", f"number or 'fit', got {v!r}")
        else:
            _require(isinstance(v, (int, float)) and v > 0,
                     f"spec.variance.{key}", "must be positive")
            v = float(v)
        out[key] = v
    for key in ("rho_s", "rho_t"):
        if key in raw and raw[key] is not None:
            v = raw[key]
            _require(isinstance(v, (int, float)) and 0.0 <= v < 1.0,
                     f"spec.variance.{key}", "must lie in [0, 1)")
            out[key] = float(v)
    return out


def _parse_rules(raw) -> tuple:
    raw = raw if raw is not None else []
    _require(isinstance(raw, list), "spec.relationship_rules", "must be a list")
    rules = []
    for k, obj in enumerate(raw):
        where = f"spec.relationship_rules[{k}]"
        _require(isinstance(obj, dict), where, "must be an object")
        _require(obj.get("type") in _RULE_TYPES, where,
                 f"unknown rule type {obj.get('type')!r}")
        _require(isinstance(obj.get("column"), str), where, "column required")
        rules.append(dict(obj))
    return tuple(rules)


def load_problem(data_path, spec_path) -> ProblemBundle:
    """Read a CSV data table and a JSON model spec into a ProblemBundle."""
    try:
        data = pd.read_csv(data_path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise ParseError(f"data: cannot read {data_path!r}: {exc}") from exc
    _require(len(data) > 0, "data", "table has no rows")

    try:
        with open(spec_path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ParseError(f"spec: cannot read {spec_path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"spec: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    _require(isinstance(raw, dict), "spec", "top level must be an object")

    response = raw.get("response")
    _require(isinstance(response, str), "spec.response", "must name a column")
    if response not in data.columns:
        raise UnknownColumn(f"spec.response: unknown column {response!r}")

    offset = raw.get("offset")
    if offset is not None:
        _require(isinstance(offset, str), "spec.offset", "must name a column")
        if offset not in data.columns:
            raise UnknownColumn(f"spec.offset: unknown column {offset!r}")

    mode = raw.get("variance_mode", "moment_matched")
    _require(mode in _VARIANCE_MODES, "spec.variance_mode",
             f"must be one of {_VARIANCE_MODES}, got {mode!r}")

    fixed_terms = _parse_fixed(raw.get("fixed"), set(data.columns))
    random_term = _parse_random(raw.get("random"), set(data.columns))
    variance = _parse_variance(raw.get("variance"))
    rules_spec = _parse_rules(raw.get("relationship_rules"))

    adjacency = None
    if raw.get("adjacency") is not None:
        adjacency = _load_adjacency(raw["adjacency"], os.path.dirname(os.path.abspath(spec_path)))

    influential = raw.get("influential")
    if influential is not None:
        _require(isinstance(influential, list), "spec.influential", "must be a list")
        out = []
        for v in influential:
            _require(isinstance(v, int) and not isinstance(v, bool),
                     "spec.influential", "entries must be integers")
            _require(0 <= v < len(data), "spec.influential",
                     f"index {v} outside 0..{len(data) - 1}")
            out.append(v)
        influential = tuple(out)

    condition_on = raw.get("condition_on", [])
    _require(isinstance(condition_on, list), "spec.condition_on", "must be a list")

    bundle = ProblemBundle(
        data=data,
        response=response,
        offset=offset,
        fixed_terms=fixed_terms,
        random_term=random_term,
        variance=variance,
        variance_mode=mode,
        rules_spec=rules_spec,
        adjacency=adjacency,
        influential=influential,
        condition_on=tuple(condition_on),
        raw_spec=raw,
    )
    # fail fast on structural problems, before any numerics
    bundle.fixed_design()
    bundle.random_design()
    bundle.condition_columns()
    if random_term.structure != "iid":
        _require(adjacency is not None, "spec.adjacency",
                 f"structure {random_term.structure!r} requires an adjacency")
    return bundle
