import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from posebridge.service import create_app


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as tc:
        yield tc


@pytest.fixture(scope="module")
def pipeline(client, tmp_path_factory):
    """synthetic recording -> landmarks -> store, all over HTTP."""
    root = tmp_path_factory.mktemp("svc")
    rec = str(root / "rec.jsonl")
    lms = str(root / "landmarks.json")
    store = str(root / "store.json")
    r = client.post("/recordings/synthetic", json={"out": rec, "frames": 240, "seed": 5})
    assert r.status_code == 200, r.text
    r = client.post("/landmarks/extract", json={"recording": rec, "out": lms, "bandwidth": 0.08})
    assert r.status_code == 200, r.text
    n = r.json()["landmarks"]
    r = client.post("/stores/build", json={"landmarks": lms, "out": store, "k": 8})
    assert r.status_code == 200, r.text
    assert r.json()["landmarks"] == n
    return {"recording": rec, "landmarks": lms, "store": store}


@pytest.fixture(scope="module")
def engine_id(client, pipeline):
    r = client.post("/engines", json={"store": pipeline["store"], "n_candidates": 6, "n_backward": 6})
    assert r.status_code == 201, r.text
    return r.json()["engine_id"]


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "ok" and body["name"] == "posebridge"


def test_engine_info_and_listing(client, engine_id, pipeline):
    r = client.get(f"/engines/{engine_id}")
    assert r.status_code == 200
    info = r.json()
    assert info["human_dim"] == 24 and info["humanoid_dim"] == 10
    assert info["mode"] == "relaxed"
    listed = client.get("/engines").json()
    assert engine_id in [e["engine_id"] for e in listed]


def test_project_single_and_batch(client, engine_id, pipeline):
    lm = json.loads(open(pipeline["landmarks"]).read())
    pair = lm["pairs"][0]
    r = client.post(f"/engines/{engine_id}/project", json={"pose": pair["human"]})
    assert r.status_code == 200
    body = r.json()
    got = np.asarray(body["configs"][0])
    assert np.abs(got - np.asarray(pair["humanoid"])).max() < 0.05
    assert len(body["deviations"]) == 1 and len(body["elapsed_ms"]) == 1

    rows = [p["human"] for p in lm["pairs"][:3]]
    r = client.post(f"/engines/{engine_id}/project", json={"poses": rows})
    assert r.status_code == 200
    assert len(r.json()["configs"]) == 3


def test_project_requires_exactly_one_pose_field(client, engine_id):
    r = client.post(f"/engines/{engine_id}/project", json={})
    assert r.status_code == 422
    r = client.post(
        f"/engines/{engine_id}/project",
        json={"pose": [0.0] * 24, "poses": [[0.0] * 24]},
    )
    assert r.status_code == 422


def test_project_dimension_mismatch_is_client_error(client, engine_id):
    r = client.post(f"/engines/{engine_id}/project", json={"pose": [0.0, 1.0]})
    assert r.status_code == 422
    assert "detail" in r.json()


def test_unknown_engine_404(client):
    r = client.post("/engines/deadbeef/project", json={"pose": [0.0] * 24})
    assert r.status_code == 404


def test_missing_files_are_client_errors(client, tmp_path):
    r = client.post("/landmarks/extract", json={"recording": "/nope.jsonl", "out": str(tmp_path / "x.json")})
    assert r.status_code == 400
    r = client.post("/stores/build", json={"landmarks": "/nope.json", "out": str(tmp_path / "s.json")})
    assert r.status_code == 400
    r = client.post("/engines", json={"store": "/nope.json"})
    assert r.status_code == 400
    r = client.post(
        "/recordings/synthetic", json={"out": str(tmp_path / "no_dir" / "rec.jsonl")}
    )
    assert r.status_code == 400


def test_sessions_smooth_in_order(client, engine_id, pipeline):
    lm = json.loads(open(pipeline["landmarks"]).read())
    pose = lm["pairs"][2]["human"]
    r = client.post(f"/engines/{engine_id}/sessions", json={})
    assert r.status_code == 201
    session = r.json()
    assert (session["alpha"], session["gamma"], session["eta"]) == (0.75, 0.3, 0.15)
    sid = session["session_id"]
    outs = []
    for _ in range(3):
        r = client.post(f"/sessions/{sid}/step", json={"pose": pose})
        assert r.status_code == 200
        outs.append(r.json()["config"])
    # constant input: the deadband freezes the output after the first frame
    assert outs[0] == outs[1] == outs[2]
    assert client.delete(f"/sessions/{sid}").status_code == 204
    assert client.post(f"/sessions/{sid}/step", json={"pose": pose}).status_code == 404


def test_replay_writes_outputs_and_metrics(client, engine_id, pipeline, tmp_path):
    out = str(tmp_path / "replayed.jsonl")
    csv = str(tmp_path / "metrics.csv")
    r = client.post(
        f"/engines/{engine_id}/replay",
        json={"recording": pipeline["recording"], "out_configs": out, "metrics_csv": csv},
    )
    assert r.status_code == 200, r.text
    body = r.json()
    assert body["frames"] == 240
    assert body["mean_m_avg_deg"] < 5.0
    from posebridge.io import read_recording

    ts, configs, header = read_recording(out)
    assert configs.shape == (240, 10)
    lines = open(csv).read().strip().splitlines()
    assert lines[0] == "frame,m_max_deg,m_avg_deg"
    assert len(lines) == 241


def test_bench_endpoint_smoke(client, pipeline, tmp_path):
    out = str(tmp_path / "bench.json")
    r = client.post(
        "/bench",
        json={
            "store": pipeline["store"],
            "out": out,
            "suites": ["poses", "similarity"],
            "latency_queries": 50,
            "latency_queries_wide": 10,
        },
    )
    assert r.status_code == 200, r.text
    body = r.json()
    assert {a["name"] for a in body["assertions"]} == {
        "pose_suite_below_tolerance", "similarity_within_tolerance",
    }
    assert json.loads(open(out).read())["type"] == "bench_report"


def test_engine_delete(client, pipeline):
    r = client.post("/engines", json={"store": pipeline["store"]})
    eng = r.json()["engine_id"]
    assert client.delete(f"/engines/{eng}").status_code == 204
    assert client.delete(f"/engines/{eng}").status_code == 404


def test_service_client_wrapper(pipeline):
    from posebridge.client import ServiceClient, ServiceError

    with ServiceClient() as sc:
        assert sc.health()["status"] == "ok"
        info = sc.create_engine(store=pipeline["store"], n_candidates=4, n_backward=4)
        lm = json.loads(open(pipeline["landmarks"]).read())
        res = sc.project(info["engine_id"], pose=lm["pairs"][0]["human"])
        assert len(res["configs"][0]) == 10
        sc.delete_engine(info["engine_id"])
        with pytest.raises(ServiceError) as err:
            sc.project(info["engine_id"], pose=lm["pairs"][0]["human"])
        assert err.value.status_code == 404
