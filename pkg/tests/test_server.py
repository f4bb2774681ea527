import http.client
import json
import socket
import threading

import numpy as np
import pandas as pd
import pytest

from borrowfac import build_server, load_problem, report_bytes, run_pipeline, write_report


def write_bundle(tmp_path, df, spec, name="case"):
    data = tmp_path / f"{name}.csv"
    sj = tmp_path / f"{name}.json"
    df.to_csv(data, index=False)
    sj.write_text(json.dumps(spec))
    return str(data), str(sj)


def make_bundle(tmp_path):
    county = ["a", "a", "b", "b", "c", "c"] * 2
    uranium = {"a": 0.1, "b": -0.2, "c": 0.4}
    rng = np.random.default_rng(11)
    df = pd.DataFrame(
        {
            "county": county,
            "basement": ["0", "1"] * 6,
            "uranium": [uranium[c] for c in county],
            "activity": np.round(rng.normal(1.0, 0.5, 12), 3),
        }
    )
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
    return load_problem(*write_bundle(tmp_path, df, spec))


def start(server):
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server


@pytest.fixture(scope="module")
def recompute_srv(tmp_path_factory):
    bundle = make_bundle(tmp_path_factory.mktemp("srv"))
    server = start(build_server(bundle, port=0))
    server.baseline = report_bytes(run_pipeline(bundle).report)
    yield server
    server.shutdown()
    server.server_close()


@pytest.fixture(scope="module")
def static_srv(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("static")
    bundle = make_bundle(tmp)
    report = run_pipeline(bundle).report
    path = tmp / "report.json"
    write_report(report, str(path))
    server = start(build_server(str(path), port=0))
    server.baseline = report_bytes(report)
    yield server
    server.shutdown()
    server.server_close()


def call(server, method, path, body=None):
    conn = http.client.HTTPConnection("127.0.0.1", server.server_address[1], timeout=10)
    try:
        payload = json.dumps(body).encode() if body is not None else None
        conn.request(method, path, body=payload)
        resp = conn.getresponse()
        return resp.status, dict(resp.getheaders()), resp.read()
    finally:
        conn.close()


def test_health_recompute(recompute_srv):
    status, _, data = call(recompute_srv, "GET", "/api/health")
    assert status == 200
    assert json.loads(data) == {"status": "ok", "mode": "recompute", "n_obs": 12}


def test_report_roundtrip(recompute_srv):
    status, headers, data = call(recompute_srv, "GET", "/api/report")
    assert status == 200
    assert headers["Content-Type"] == "application/json"
    assert data == recompute_srv.baseline


def test_weight_row_sums_to_one(recompute_srv):
    status, _, data = call(recompute_srv, "GET", "/api/weights/row/3")
    assert status == 200
    doc = json.loads(data)
    assert doc["index"] == 3
    assert doc["n_obs"] == 12
    assert len(doc["weights"]) == 12
    assert sum(doc["weights"]) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("row", [-1, 12, 500])
def test_weight_row_out_of_range(recompute_srv, row):
    status, _, data = call(recompute_srv, "GET", f"/api/weights/row/{row}")
    assert status == 404
    assert "row" in json.loads(data)["error"]


def test_recompute_drops_rows(recompute_srv):
    status, _, data = call(recompute_srv, "POST", "/api/recompute", {"deleted": [0, 5]})
    assert status == 200
    doc = json.loads(data)
    assert doc["meta"]["n_obs"] == 10
    assert [r["id"] for r in doc["records"]] == list(range(10))


def test_recompute_is_pure(recompute_srv):
    body = {"deleted": [2, 7, 2]}
    first = call(recompute_srv, "POST", "/api/recompute", body)
    second = call(recompute_srv, "POST", "/api/recompute", body)
    assert first[0] == second[0] == 200
    assert first[2] == second[2]
    # the served baseline never mutates
    _, _, base = call(recompute_srv, "GET", "/api/report")
    assert base == recompute_srv.baseline


def test_recompute_empty_delete_matches_baseline(recompute_srv):
    status, _, data = call(recompute_srv, "POST", "/api/recompute", {"deleted": []})
    assert status == 200
    assert data == recompute_srv.baseline


@pytest.mark.parametrize(
    "body",
    [
        ["not", "a", "dict"],
        {"nope": [1]},
        {"deleted": "0,1"},
        {"deleted": [0, True]},
        {"deleted": [0, 1.5]},
        {"deleted": list(range(12))},
    ],
)
def test_recompute_bad_bodies(recompute_srv, body):
    status, _, data = call(recompute_srv, "POST", "/api/recompute", body)
    assert status == 400
    assert "error" in json.loads(data)


def test_recompute_out_of_range_is_404(recompute_srv):
    status, _, data = call(recompute_srv, "POST", "/api/recompute", {"deleted": [99]})
    assert status == 404
    assert "99" in json.loads(data)["error"]


def test_recompute_rejects_non_json_body(recompute_srv):
    conn = http.client.HTTPConnection(
        "127.0.0.1", recompute_srv.server_address[1], timeout=10
    )
    try:
        conn.request("POST", "/api/recompute", body=b"{oops")
        resp = conn.getresponse()
        assert resp.status == 400
        assert "JSON" in json.loads(resp.read())["error"]
    finally:
        conn.close()


def test_recompute_requires_content_length(recompute_srv):
    port = recompute_srv.server_address[1]
    with socket.create_connection(("127.0.0.1", port), timeout=10) as sock:
        sock.sendall(
            b"POST /api/recompute HTTP/1.1\r\n"
            b"Host: 127.0.0.1\r\nConnection: close\r\n\r\n"
        )
        chunks = b""
        while True:
            part = sock.recv(4096)
            if not part:
                break
            chunks += part
    assert b"400" in chunks.split(b"\r\n", 1)[0]
    assert b"Content-Length" in chunks


def test_unknown_routes_are_404(recompute_srv):
    assert call(recompute_srv, "GET", "/api/nope")[0] == 404
    assert call(recompute_srv, "POST", "/api/health", {})[0] == 404


def test_options_preflight(recompute_srv):
    status, headers, data = call(recompute_srv, "OPTIONS", "/api/recompute")
    assert status == 204
    assert data == b""
    assert headers["Access-Control-Allow-Origin"] == "*"
    assert "POST" in headers["Access-Control-Allow-Methods"]


def test_cors_header_on_get(recompute_srv):
    _, headers, _ = call(recompute_srv, "GET", "/api/report")
    assert headers["Access-Control-Allow-Origin"] == "*"


def test_health_static(static_srv):
    status, _, data = call(static_srv, "GET", "/api/health")
    assert status == 200
    assert json.loads(data) == {"status": "ok", "mode": "static", "n_obs": 12}


def test_static_serves_report(static_srv):
    status, _, data = call(static_srv, "GET", "/api/report")
    assert status == 200
    assert data == static_srv.baseline


def test_static_weight_row_conflict(static_srv):
    status, _, data = call(static_srv, "GET", "/api/weights/row/0")
    assert status == 409
    assert "serve a bundle" in json.loads(data)["error"]


def test_static_recompute_conflict(static_srv):
    status, _, data = call(static_srv, "POST", "/api/recompute", {"deleted": [0]})
    assert status == 409
    assert "static mode" in json.loads(data)["error"]
