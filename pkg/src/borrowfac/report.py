"""Report serialization: a stable JSON schema for decomposition output.

Layout (schema_version 1):

    {
      "schema_version": 1,
      "meta": {... model metadata, variance parameters, rule echoes ...},
      "records": [
        {"id": 0, "cluster": 0, "cluster_size": 2,
         "shrinkage": ..., "pooling": ..., "ssbf": ..., "fitted": ...,
         "groups": {"county=same": {"borrowing": ..., "pssbf": ..., "count": 3}},
         "covariates": {"county": "A", ...}},
        ...
      ],
      "influence": {...},   // optional, omitted when absent
      "grid": {...}         // optional, omitted when absent
    }

Files are byte-stable: fixed key order, two-space indent, floats printed
with 17 significant digits so values round-trip exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import SchemaVersionMismatch

__all__ = ["Report", "SCHEMA_VERSION", "write_report", "read_report",
           "report_bytes", "json_bytes", "validate_report"]

SCHEMA_VERSION = 1

_RECORD_KEYS = {"id", "cluster", "cluster_size", "shrinkage", "pooling",
                "ssbf", "fitted", "groups", "covariates"}


@dataclass(frozen=True)
class Report:
    meta: dict
    records: list
    influence: dict | None = None
    grid: dict | None = None
    schema_version: int = SCHEMA_VERSION


def _check(cond, msg: str):
    if not cond:
        raise SchemaVersionMismatch(msg)


def validate_report(report: Report):
    _check(report.schema_version == SCHEMA_VERSION,
           f"expected schema_version {SCHEMA_VERSION}, found {report.schema_version}")
    _check(isinstance(report.meta, dict), "meta must be an object")
    _check(isinstance(report.records, list), "records must be a list")
    n_meta = report.meta.get("n_obs")
    if n_meta is not None:
        _check(len(report.records) == n_meta,
               f"record count {len(report.records)} != meta n_obs {n_meta}")
    group_keys = None
    for k, rec in enumerate(report.records):
        _check(isinstance(rec, dict), f"record {k} is not an object")
        missing = _RECORD_KEYS - set(rec)
        _check(not missing, f"record {k} missing fields {sorted(missing)}")
        keys = tuple(rec["groups"].keys())
        if group_keys is None:
            group_keys = keys
        else:
            _check(keys == group_keys,
                   f"record {k} group keys {keys} differ from {group_keys}")
    return report


def _emit(obj, indent: int, out: list):
    pad = "  " * indent
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        out.append(format(x, ".17g") if math.isfinite(x) else "null")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            out.append("[]")
            return
        out.append("[\n")
        for k, item in enumerate(items):
            out.append(pad + "  ")
            _emit(item, indent + 1, out)
            out.append(",\n" if k + 1 < len(items) else "\n")
        out.append(pad + "]")
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        entries = list(obj.items())
        for k, (key, value) in enumerate(entries):
            if not isinstance(key, str):
                raise SchemaVersionMismatch(f"non-string key {key!r} in report")
            out.append(pad + "  " + json.dumps(key) + ": ")
            _emit(value, indent + 1, out)
            out.append(",\n" if k + 1 < len(entries) else "\n")
        out.append(pad + "}")
    else:
        raise SchemaVersionMismatch(f"unserializable value of type {type(obj).__name__}")


def json_bytes(obj) -> bytes:
    """Canonical JSON bytes: stable key order, 17-significant-digit floats."""
    out: list = []
    _emit(obj, 0, out)
    out.append("\n")
    return "".join(out).encode("utf-8")


def report_bytes(report: Report) -> bytes:
    """Serialize to the canonical byte-stable form."""
    validate_report(report)
    doc = {"schema_version": report.schema_version,
           "meta": report.meta,
           "records": report.records}
    if report.influence is not None:
        doc["influence"] = report.influence
    if report.grid is not None:
        doc["grid"] = report.grid
    return json_bytes(doc)


def write_report(report: Report, path) -> None:
    data = report_bytes(report)
    with open(path, "wb") as fh:
        fh.write(data)


def read_report(path) -> Report:
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaVersionMismatch(f"not a report file: {exc}") from exc
    _check(isinstance(doc, dict), "top level must be an object")
    _check("schema_version" in doc, "missing schema_version")
    _check("meta" in doc and "records" in doc, "missing meta or records")
    report = Report(
        meta=doc["meta"],
        records=doc["records"],
        influence=doc.get("influence"),
        grid=doc.get("grid"),
        schema_version=doc["schema_version"],
    )
    return validate_report(report)
