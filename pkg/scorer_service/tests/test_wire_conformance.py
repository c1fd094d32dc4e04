"""HTTP contract tests for the scoring service endpoints."""
from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from scorer_service.model import MockScorer, ServiceConfig, build_backend
from scorer_service.service import create_app


@pytest.fixture()
def client() -> TestClient:
    return TestClient(create_app(MockScorer(seed=7)))


def test_health_shape(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    body = resp.json()
    assert body == {"status": "ok", "model_name": "mock"}


def test_score_bounds_and_complement(client):
    resp = client.post("/score", json={"prompt": "is this right?"})
    assert resp.status_code == 200
    body = resp.json()
    assert set(body) == {"p_yes", "p_no"}
    assert 0.0 <= body["p_yes"] <= 1.0
    assert 0.0 <= body["p_no"] <= 1.0
    assert abs(body["p_yes"] + body["p_no"] - 1.0) <= 1e-6


def test_score_deterministic(client):
    first = client.post("/score", json={"prompt": "same prompt"}).json()
    second = client.post("/score", json={"prompt": "same prompt"}).json()
    assert first == second
    other = client.post("/score", json={"prompt": "different prompt"}).json()
    assert other != first


def test_batch_preserves_order(client):
    prompts = ["alpha", "beta", "gamma"]
    resp = client.post("/score_batch", json={"prompts": prompts})
    assert resp.status_code == 200
    scores = resp.json()["scores"]
    assert len(scores) == len(prompts)
    singles = [client.post("/score", json={"prompt": p}).json() for p in prompts]
    assert scores == singles


def test_batch_empty_list(client):
    resp = client.post("/score_batch", json={"prompts": []})
    assert resp.status_code == 200
    assert resp.json() == {"scores": []}


@pytest.mark.parametrize(
    "path,body",
    [
        ("/score", {}),
        ("/score", {"prompt": 5}),
        ("/score", {"wrong_key": "x"}),
        ("/score_batch", {}),
        ("/score_batch", {"prompts": "not a list"}),
        ("/score_batch", {"prompts": [1, 2]}),
    ],
)
def test_malformed_body_is_400(client, path, body):
    assert client.post(path, json=body).status_code == 400


def test_malformed_json_is_400(client):
    resp = client.post(
        "/score", content=b"{not json", headers={"content-type": "application/json"}
    )
    assert resp.status_code == 400


def test_model_backend_over_http(tiny_base):
    backend = build_backend(ServiceConfig(model_path=tiny_base))
    with TestClient(create_app(backend)) as client:
        health = client.get("/health").json()
        assert health["status"] == "ok"
        assert health["model_name"]
        body = client.post("/score", json={"prompt": "SELECT 1 ; Yes or No"}).json()
        assert 0.0 <= body["p_yes"] <= 1.0
        assert abs(body["p_yes"] + body["p_no"] - 1.0) <= 1e-6
