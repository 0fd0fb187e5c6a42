import json
import shutil

import numpy as np
import pytest
from fastapi.testclient import TestClient

from alviz import changes, engine, serve


@pytest.fixture(scope="module")
def loaded(artifact_file):
    return serve.load_artifacts([artifact_file])


@pytest.fixture(scope="module")
def client(loaded):
    return TestClient(serve.create_app(loaded))


def test_list_runs(client, small_artifact):
    r = client.get("/api/runs")
    assert r.status_code == 200
    body = r.json()
    assert len(body) == 1
    entry = body[0]
    assert entry["run_id"] == "small"
    assert entry["strategies"] == ["al", "uc", "rn"]
    assert entry["num_batches"] == 5
    assert entry["n_test"] == 100
    assert entry["dataset_hash"] == f"{small_artifact.dataset_hash:016x}"


def test_list_runs_empty():
    client = TestClient(serve.create_app({}))
    r = client.get("/api/runs")
    assert r.status_code == 200
    assert r.json() == []


def test_list_runs_lexicographic(artifact_file, tmp_path):
    shutil.copy(artifact_file, tmp_path / "b_run.json")
    shutil.copy(artifact_file, tmp_path / "a_run.json")
    apps = serve.create_app(
        serve.load_artifacts([tmp_path / "b_run.json", tmp_path / "a_run.json"])
    )
    r = TestClient(apps).get("/api/runs")
    assert [e["run_id"] for e in r.json()] == ["a_run", "b_run"]


def test_duplicate_run_ids_rejected(artifact_file, tmp_path):
    shutil.copy(artifact_file, tmp_path / "small.json")
    with pytest.raises(engine.ArtifactError, match="duplicate"):
        serve.load_artifacts([artifact_file, tmp_path / "small.json"])


def test_embedding_passthrough(client, small_artifact):
    r = client.get("/api/runs/small/embedding")
    assert r.status_code == 200
    body = r.json()
    assert np.array_equal(np.array(body["coords"]), small_artifact.pc_coords)
    assert np.array_equal(np.array(body["labels"]), small_artifact.test_labels)
    assert np.array_equal(
        np.array(body["explained_variance"]), small_artifact.pc_explained_variance
    )


def test_unknown_run_is_404_json(client):
    for url in (
        "/api/runs/nope/embedding",
        "/api/runs/nope/mse",
        "/api/runs/nope/change?strategy=al&kind=vs_truth&indices=1",
        "/api/runs/nope/query-histogram",
    ):
        r = client.get(url)
        assert r.status_code == 404
        assert r.headers["content-type"].startswith("application/json")
        assert set(r.json()) == {"error"}
    r = client.post("/api/runs/nope/selection", json={"anchor": [0, 0]})
    assert r.status_code == 404


def test_selection_anchor_matches_brute_force(client, small_artifact):
    anchor = (0.25, -0.4)
    r = client.post("/api/runs/small/selection", json={"anchor": list(anchor), "k": 7})
    assert r.status_code == 200
    body = r.json()
    d2 = ((small_artifact.pc_coords - np.array(anchor)) ** 2).sum(axis=1)
    oracle = sorted(range(small_artifact.n_test), key=lambda i: (d2[i], i))[:7]
    assert body["indices"] == oracle
    assert body["anchor_used"] == [0.25, -0.4]


def test_selection_default_k_is_20(client):
    r = client.post("/api/runs/small/selection", json={"anchor": [0, 0]})
    assert r.status_code == 200
    assert len(r.json()["indices"]) == 20


def test_selection_rect_full_extent(client, small_artifact):
    c = small_artifact.pc_coords
    rect = [float(c[:, 0].min()), float(c[:, 0].max()), float(c[:, 1].min()), float(c[:, 1].max())]
    r = client.post(
        "/api/runs/small/selection", json={"rect": rect, "cap": small_artifact.n_test}
    )
    assert r.status_code == 200
    assert r.json()["indices"] == list(range(small_artifact.n_test))
    assert r.json()["anchor_used"] is None


def test_selection_validation_errors(client):
    checks = [
        ({"anchor": [0, 0], "rect": [0, 1, 0, 1]}, 400),
        ({}, 400),
        ({"anchor": [0]}, 400),
        ({"anchor": [0, "x"]}, 400),
        ({"anchor": [0, 0], "k": 0}, 400),
        ({"anchor": [0, 0], "k": "many"}, 400),
        ({"anchor": [0, 0], "k": 101}, 422),
        ({"rect": [1, 0, 0, 1]}, 400),
        ({"rect": [0, 1, 0, 1], "cap": 0}, 400),
    ]
    for body, code in checks:
        r = client.post("/api/runs/small/selection", json=body)
        assert r.status_code == code, (body, r.status_code)
        assert "error" in r.json()
    r = client.post(
        "/api/runs/small/selection",
        content=b"{broken",
        headers={"content-type": "application/json"},
    )
    assert r.status_code == 400


def test_change_matches_offline_recomputation(client, small_artifact):
    sel = [3, 1, 4]
    for kind in changes.KINDS:
        r = client.get(
            f"/api/runs/small/change?strategy=al&kind={kind}&indices=3,1,4"
        )
        assert r.status_code == 200
        body = r.json()
        offline = changes.compute_matrix(small_artifact, "al", kind, sel)
        assert body["kind"] == kind
        assert body["strategy"] == "al"
        assert body["row_indices"] == sel
        assert body["q_axis"] == offline.q_axis.tolist()
        assert np.array_equal(np.array(body["values"]), offline.values)


def test_change_row_permutation(client):
    a = client.get("/api/runs/small/change?strategy=uc&kind=vs_original&indices=3,1,4").json()
    b = client.get("/api/runs/small/change?strategy=uc&kind=vs_original&indices=1,3,4").json()
    assert a["values"][0] == b["values"][1]
    assert a["values"][1] == b["values"][0]
    assert a["values"][2] == b["values"][2]


def test_change_vs_previous_column_identity(client):
    orig = client.get("/api/runs/small/change?strategy=rn&kind=vs_original&indices=5,9").json()
    prev = client.get("/api/runs/small/change?strategy=rn&kind=vs_previous&indices=5,9").json()
    assert [row[0] for row in orig["values"]] == [row[0] for row in prev["values"]]


def test_change_empty_indices(client, small_artifact):
    r = client.get("/api/runs/small/change?strategy=al&kind=vs_truth&indices=")
    assert r.status_code == 200
    assert r.json()["values"] == []
    assert r.json()["q_axis"] == list(range(1, small_artifact.num_batches + 1))


def test_change_errors(client):
    r = client.get("/api/runs/small/change?strategy=al&kind=sideways&indices=1")
    assert r.status_code == 400
    r = client.get("/api/runs/small/change?strategy=zz&kind=vs_truth&indices=1")
    assert r.status_code == 400
    r = client.get("/api/runs/small/change?strategy=al&kind=vs_truth&indices=100")
    assert r.status_code == 422
    r = client.get("/api/runs/small/change?strategy=al&kind=vs_truth&indices=1,x")
    assert r.status_code == 400
    too_many = ",".join(["1"] * 513)
    r = client.get(f"/api/runs/small/change?strategy=al&kind=vs_truth&indices={too_many}")
    assert r.status_code == 400


def test_mse_passthrough(client, small_artifact):
    r = client.get("/api/runs/small/mse")
    assert r.status_code == 200
    body = r.json()
    assert body["strategies"] == list(small_artifact.strategies)
    assert body["q_axis"] == [0, 1, 2, 3, 4, 5]
    assert np.array_equal(np.array(body["mse"]), small_artifact.mse)


def test_mse_rederivable_from_predictions(client, small_artifact):
    body = client.get("/api/runs/small/mse").json()
    recomputed = np.mean(
        (small_artifact.predictions - small_artifact.test_labels[None, None, :]) ** 2,
        axis=2,
    )
    assert np.allclose(np.array(body["mse"]), recomputed, atol=1e-9)


def test_query_histogram_conservation(client, small_artifact):
    total = small_artifact.queried_labels.shape[1] * small_artifact.queried_labels.shape[2]
    r = client.get(f"/api/runs/small/query-histogram?prefix={total}&bins=12")
    assert r.status_code == 200
    body = r.json()
    for name in small_artifact.strategies:
        assert sum(body["strategies"][name]) == total
    assert sum(body["all_data"]) == small_artifact.n_test
    assert len(body["bin_edges"]) == 13


def test_query_histogram_single_bin(client):
    r = client.get("/api/runs/small/query-histogram?bins=1")
    assert r.status_code == 200
    body = r.json()
    assert all(len(c) == 1 for c in body["strategies"].values())


def test_query_histogram_matches_brute_force(client, small_artifact):
    r = client.get("/api/runs/small/query-histogram?prefix=40&bins=7")
    body = r.json()
    edges = np.array(body["bin_edges"])
    for si, name in enumerate(small_artifact.strategies):
        vals = small_artifact.queried_labels[si].ravel()[:40]
        want = np.histogram(vals, bins=edges)[0]
        assert body["strategies"][name] == want.tolist()


def test_query_histogram_param_errors(client):
    for url in (
        "/api/runs/small/query-histogram?bins=0",
        "/api/runs/small/query-histogram?bins=x",
        "/api/runs/small/query-histogram?prefix=-1",
        "/api/runs/small/query-histogram?prefix=99999",
    ):
        r = client.get(url)
        assert r.status_code == 400
        assert "error" in r.json()


def test_identical_requests_identical_bytes(client):
    a = client.get("/api/runs/small/change?strategy=al&kind=vs_truth&indices=1,2,3")
    b = client.get("/api/runs/small/change?strategy=al&kind=vs_truth&indices=1,2,3")
    assert a.content == b.content


def test_cors_header_present(client):
    r = client.get("/api/runs", headers={"Origin": "http://example.com"})
    assert r.headers.get("access-control-allow-origin") == "*"


def test_cors_can_be_restricted(loaded):
    app = serve.create_app(loaded, cors_origins=("http://allowed.test",))
    c = TestClient(app)
    r = c.get("/api/runs", headers={"Origin": "http://allowed.test"})
    assert r.headers.get("access-control-allow-origin") == "http://allowed.test"
    r = c.get("/api/runs", headers={"Origin": "http://other.test"})
    assert "access-control-allow-origin" not in r.headers


def test_static_panel_mount(loaded, tmp_path):
    (tmp_path / "index.html").write_text("<html><body>panel</body></html>")
    app = serve.create_app(loaded, static_dir=tmp_path)
    c = TestClient(app)
    r = c.get("/")
    assert r.status_code == 200
    assert "panel" in r.text
    # API still reachable alongside the static mount
    assert c.get("/api/runs").status_code == 200
