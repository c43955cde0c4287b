import time

import pytest
from fastapi.testclient import TestClient

from model_service.service import create_app


@pytest.fixture
def loading_client(tmp_path):
    return TestClient(create_app(artifact_root=tmp_path))


@pytest.fixture
def serving_client(tmp_path, trained_artifact):
    app = create_app(artifact_root=tmp_path, artifact_path=trained_artifact.path)
    return TestClient(app)


class TestHealth:
    def test_loading_before_model(self, loading_client):
        assert loading_client.get("/health").json() == {"status": "loading"}

    def test_ok_with_model(self, serving_client):
        body = serving_client.get("/health").json()
        assert body["status"] == "ok"
        assert body["model_id"]


class TestPredict:
    def test_three_texts_three_rows(self, serving_client):
        resp = serving_client.post(
            "/predict",
            json={"texts": ["released the generated set at zenodo.org/1",
                            "downloaded the published panel from osf.io/2",
                            "submission portal notice"],
                  "truncation": "tail", "max_len": 512},
        )
        assert resp.status_code == 200
        body = resp.json()
        assert len(body["labels"]) == 3
        assert len(body["probs"]) == 3

    def test_probability_rows_sum_to_one(self, serving_client):
        resp = serving_client.post(
            "/predict", json={"texts": [f"text {i} alpha" for i in range(20)]}
        )
        for row in resp.json()["probs"]:
            assert len(row) == 4
            assert abs(sum(row) - 1.0) < 1e-6
            assert all(p >= 0 for p in row)

    def test_labels_are_argmax(self, serving_client):
        body = serving_client.post(
            "/predict", json={"texts": ["obtained the existing records today"]}
        ).json()
        [label] = body["labels"]
        [row] = body["probs"]
        assert label == max(range(4), key=lambda i: (row[i], -i))

    def test_empty_text_is_valid(self, serving_client):
        resp = serving_client.post("/predict", json={"texts": [""]})
        assert resp.status_code == 200
        [row] = resp.json()["probs"]
        assert abs(sum(row) - 1.0) < 1e-6

    def test_no_model_is_503(self, loading_client):
        resp = loading_client.post("/predict", json={"texts": ["x"]})
        assert resp.status_code == 503
        assert "error" in resp.json()

    def test_oversize_batch_is_413_with_max(self, tmp_path, trained_artifact):
        app = create_app(artifact_root=tmp_path, artifact_path=trained_artifact.path, max_batch=8)
        client = TestClient(app)
        resp = client.post("/predict", json={"texts": ["x"] * 9})
        assert resp.status_code == 413
        assert resp.json()["error"]["max_batch_size"] == 8

    def test_malformed_request_structured_error(self, serving_client):
        resp = serving_client.post("/predict", json={"texts": "not a list"})
        assert resp.status_code == 422
        assert "error" in resp.json()
        resp = serving_client.post("/predict", json={"texts": ["x"], "truncation": "bogus"})
        assert resp.status_code == 422
        assert resp.json()["error"]["allowed"] == ["head", "tail", "middle", "split"]

    def test_same_batch_twice_identical(self, serving_client):
        payload = {"texts": ["the archived our new tables entry", "plain words"]}
        first = serving_client.post("/predict", json=payload).json()
        second = serving_client.post("/predict", json=payload).json()
        assert first == second


class TestTrainEndpoint:
    def wait_for(self, client, job_id, timeout=300):
        deadline = time.time() + timeout
        while time.time() < deadline:
            body = client.get(f"/train/{job_id}").json()
            if body["state"] != "running":
                return body
            time.sleep(0.5)
        raise AssertionError("training job did not finish in time")

    def test_async_job_completes_and_swaps_model(self, loading_client, separable_splits):
        train_set, test_set, validation_set = separable_splits
        payload = {
            "train": [{"text": e.text, "label": e.label} for e in train_set],
            "validation": [{"text": e.text, "label": e.label} for e in validation_set],
            "config": {"max_epochs": 25},
        }
        assert loading_client.get("/health").json()["status"] == "loading"
        resp = loading_client.post("/train", json=payload)
        assert resp.status_code == 202
        job_id = resp.json()["job_id"]
        body = self.wait_for(loading_client, job_id)
        assert body["state"] == "completed"
        assert body["metrics"]["val_f1"] >= 0.9
        assert loading_client.get("/health").json()["status"] == "ok"
        # the swapped-in model serves predictions
        predict = loading_client.post("/predict", json={"texts": [train_set[0].text]})
        assert predict.status_code == 200

    def test_unknown_job_is_404(self, loading_client):
        resp = loading_client.get("/train/doesnotexist")
        assert resp.status_code == 404

    def test_second_concurrent_job_rejected(self, loading_client, separable_splits):
        train_set, _, validation_set = separable_splits
        payload = {
            "train": [{"text": e.text, "label": e.label} for e in train_set],
            "validation": [{"text": e.text, "label": e.label} for e in validation_set],
            "config": {"max_epochs": 3, "patience": 2},
        }
        first = loading_client.post("/train", json=payload)
        assert first.status_code == 202
        second = loading_client.post("/train", json=payload)
        assert second.status_code == 409
        self.wait_for(loading_client, first.json()["job_id"])

    def test_bad_training_payload_fails_job(self, loading_client):
        payload = {"train": [{"text": "x"}], "validation": [{"text": "y", "label": 0}]}
        resp = loading_client.post("/train", json=payload)
        job_id = resp.json()["job_id"]
        body = self.wait_for(loading_client, job_id, timeout=30)
        assert body["state"] == "failed"
        assert "label" in body["error"]


class TestMetrics:
    def test_counts_and_percentiles(self, serving_client):
        for _ in range(3):
            serving_client.post("/predict", json={"texts": ["x"]})
        body = serving_client.get("/metrics").json()
        assert body["requests"]["predict"] == 3
        assert set(body["latency_ms"]) == {"p50", "p90", "p99"}
        assert body["latency_ms"]["p50"] >= 0
