import json

import numpy as np
import pandas as pd
import pytest

from borrowfac import (
    PipelineOptions,
    UnknownColumn,
    load_problem,
    record_field,
    run_pipeline,
)


def write_bundle(tmp_path, df, spec, name="case"):
    data = tmp_path / f"{name}.csv"
    sj = tmp_path / f"{name}.json"
    df.to_csv(data, index=False)
    sj.write_text(json.dumps(spec))
    return str(data), str(sj)


def wide_df():
    # each (county, basement) cell appears twice: 6 clusters of size 2
    county = ["a", "a", "b", "b", "c", "c"] * 2
    basement = ["0", "1"] * 6
    uranium = {"a": 0.1, "b": -0.2, "c": 0.4}
    rng = np.random.default_rng(7)
    return pd.DataFrame(
        {
            "county": county,
            "basement": basement,
            "uranium": [uranium[c] for c in county],
            "activity": np.round(rng.normal(1.0, 0.5, 12), 3),
        }
    )


def wide_spec(**extra):
    spec = {
        "response": "activity",
        "fixed": [
            {"column": "basement", "type": "categorical", "intercept_set": True},
            {"column": "uranium", "type": "numeric"},
        ],
        "random": [{"column": "county", "structure": "iid"}],
        "variance": {"phi": 1.0, "sigma": 0.8},
        "relationship_rules": [
            {"type": "column_equal", "column": "basement", "name": "floor"}
        ],
    }
    spec.update(extra)
    return spec


@pytest.fixture
def wide_bundle(tmp_path):
    return load_problem(*write_bundle(tmp_path, wide_df(), wide_spec()))


def test_record_structure(wide_bundle):
    res = run_pipeline(wide_bundle)
    rep = res.report
    assert rep.meta["n_obs"] == 12
    assert rep.meta["n_clusters"] == 6
    assert len(rep.records) == 12
    labels = set(rep.meta["group_labels"])
    assert labels == {"floor=same", "floor=different"}
    for i, r in enumerate(rep.records):
        assert r["id"] == i
        assert r["cluster_size"] == 2
        assert set(r["groups"]) == labels
        # covariates echo the raw table row
        assert r["covariates"]["county"] == wide_df()["county"][i]
        assert r["covariates"]["uranium"] == pytest.approx(
            wide_df()["uranium"][i]
        )


def test_shrinkage_and_pooling_sum_to_one(wide_bundle):
    res = run_pipeline(wide_bundle)
    for r in res.report.records:
        assert r["shrinkage"] + r["pooling"] == pytest.approx(1.0, abs=1e-10)
        borrowed = sum(g["borrowing"] for g in r["groups"].values())
        assert borrowed == pytest.approx(r["pooling"], abs=1e-10)


def test_fitted_matches_full_weight_matrix(wide_bundle):
    res = run_pipeline(wide_bundle, PipelineOptions(keep_full=True))
    w = res.decomposition.weight_matrix
    want = w @ res.response
    got = np.array([r["fitted"] for r in res.report.records])
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_record_field_resolution(wide_bundle):
    r = run_pipeline(wide_bundle).report.records[0]
    assert record_field(r, "shrinkage") == r["shrinkage"]
    assert record_field(r, "id") == 0.0
    assert record_field(r, "groups.floor=same.borrowing") == pytest.approx(
        r["groups"]["floor=same"]["borrowing"]
    )
    assert record_field(r, "groups.floor=different.count") == float(
        r["groups"]["floor=different"]["count"]
    )
    assert record_field(r, "uranium") == pytest.approx(0.1)


@pytest.mark.parametrize(
    "name",
    ["ghost", "county", "groups.floor=same.nope", "groups.ghost.borrowing"],
)
def test_record_field_rejections(wide_bundle, name):
    r = run_pipeline(wide_bundle).report.records[0]
    with pytest.raises(UnknownColumn):
        record_field(r, name)


def test_variance_mode_absent_without_offset(wide_bundle):
    meta = run_pipeline(wide_bundle).report.meta
    assert meta["offset"] is None
    assert meta["variance_mode"] is None
    assert meta["variance"]["source"] == "given"
    assert meta["variance"]["phi_scale"] == 1.0
    assert meta["variance"]["sigma2"] == 0.8


def test_offset_switches_to_pseudo_response(tmp_path):
    df = wide_df()
    df["activity"] = np.arange(12) % 5  # counts, with zeros
    df["expected"] = np.linspace(50.0, 160.0, 12)
    b = load_problem(*write_bundle(tmp_path, df, wide_spec(offset="expected")))
    res = run_pipeline(b)
    assert res.report.meta["variance_mode"] == "moment_matched"
    y = df["activity"].to_numpy(float)
    y = np.where(y == 0, 0.5, y)
    np.testing.assert_allclose(
        res.response, np.log(y / df["expected"].to_numpy())
    )


def test_grid_section(tmp_path):
    b = load_problem(*write_bundle(tmp_path, wide_df(), wide_spec()))
    grid = {"x": "uranium", "y": "fitted", "value": "shrinkage", "grid_size": 5}
    res = run_pipeline(b, PipelineOptions(grid=grid))
    g = res.report.grid
    assert g["x_axis"] == "uranium"
    assert g["y_axis"] == "fitted"
    assert g["value"] == "shrinkage"
    assert len(g["bandwidth"]) == 2
    assert len(g["x"]) == 5 and len(g["y"]) == 5
    assert len(g["surface"]) == 5
    assert all(len(row) == 5 for row in g["surface"])
    flat = [v for row in g["surface"] for v in row if v is not None]
    assert flat, "expected at least one populated grid cell"


def test_grid_spec_missing_axis_rejected(wide_bundle):
    with pytest.raises(UnknownColumn):
        run_pipeline(wide_bundle, PipelineOptions(grid={"x": "uranium", "y": "fitted"}))


def test_influence_section_with_marked_points(tmp_path):
    b = load_problem(
        *write_bundle(tmp_path, wide_df(), wide_spec(influential=[3, 1]))
    )
    res = run_pipeline(b)
    inf = res.report.influence
    assert inf["points"] == [3, 1]  # echoed in the order given
    assert set(inf["impact"]) <= set(res.report.meta["group_labels"])
    for box in inf["impact"].values():
        assert set(box) == {"min", "q1", "median", "q3", "max", "n"}
    k = res.report.meta["n_clusters"]
    assert len(inf["cooks"]) == len(inf["rvsi"]) == len(inf["pena"]) == k
    assert all(v is None or v >= 0 for v in inf["cooks"])


def test_influence_suppressed_when_disabled(tmp_path):
    b = load_problem(
        *write_bundle(tmp_path, wide_df(), wide_spec(influential=[3, 1]))
    )
    res = run_pipeline(b, PipelineOptions(include_influence=False))
    assert res.report.influence is None


def test_influence_always_emits_cluster_arrays(wide_bundle):
    res = run_pipeline(wide_bundle, PipelineOptions(influence_always=True))
    inf = res.report.influence
    assert inf["points"] == []
    assert "impact" not in inf
    assert len(inf["cooks"]) == 6


def test_influence_without_residual_dof_degrades(tmp_path):
    # six observations, six model columns: leave-one-out diagnostics have
    # no scale estimate, so the section carries nulls plus a note
    df = wide_df().iloc[:6].reset_index(drop=True)
    b = load_problem(*write_bundle(tmp_path, df, wide_spec()))
    res = run_pipeline(b, PipelineOptions(influence_always=True))
    inf = res.report.influence
    assert inf["cooks"] is None and inf["rvsi"] is None and inf["pena"] is None
    assert "no residual degrees of freedom" in inf["note"]


def test_reml_fit_path(tmp_path):
    spec = wide_spec(variance={"phi": "fit", "sigma": "fit"})
    b = load_problem(*write_bundle(tmp_path, wide_df(), spec))
    res = run_pipeline(b)
    v = res.report.meta["variance"]
    assert v["source"] == "reml"
    assert v["sigma2"] >= 0.0
    assert v["phi_scale"] > 0.0
    assert isinstance(v["converged"], bool)
    assert isinstance(v["boundary"], list)
    assert v["n_iter"] >= 1
    assert res.estimates is not None
    np.testing.assert_allclose(v["sigma2"], res.estimates.sigma2)


def test_rules_and_conditioning_echoed(tmp_path):
    spec = wide_spec(condition_on=["uranium"])
    b = load_problem(*write_bundle(tmp_path, wide_df(), spec))
    meta = run_pipeline(b).report.meta
    assert meta["condition_on"] == ["uranium"]
    assert meta["rules"] == spec["relationship_rules"]
