"""The prediction service: wire protocol over HTTP.

POST /predict   {"texts": [...], "truncation": "tail", "max_len": 512}
                -> {"labels": [int], "probs": [[4 floats]]}
POST /train     {"train": [...], "validation": [...], "test": [...]?,
                 "config": {...}} -> {"job_id": ...} (async; poll /train/{id})
GET  /health    {"status": "loading"|"ok", "model_id": ...}
GET  /metrics   request counts and latency percentiles

One training job runs at a time; the served model is immutable while
loaded and is swapped in only when a training job completes.
"""

from __future__ import annotations

import threading
import time
import uuid
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__
from .data import DataError, coerce_examples
from .inference import DEFAULT_MAX_LEN, Predictor
from .training import ModelArtifact, TrainingConfig, TrainingError, train
from .truncation import TRUNCATION_METHODS

DEFAULT_MAX_BATCH = 256


class PredictRequest(BaseModel):
    texts: list[str]
    truncation: str = "tail"
    max_len: int = Field(default=DEFAULT_MAX_LEN, ge=3)


class TrainRequest(BaseModel):
    train: list[dict]
    validation: list[dict]
    test: list[dict] | None = None
    config: dict = Field(default_factory=dict)


class ServiceState:
    def __init__(self, artifact_root: Path, max_batch: int = DEFAULT_MAX_BATCH):
        self.artifact_root = artifact_root
        self.max_batch = max_batch
        self.predictor: Predictor | None = None
        self.model_id: str | None = None
        self.jobs: dict[str, dict] = {}
        self.training_lock = threading.Lock()
        self.request_counts: dict[str, int] = {}
        self.latencies_ms: list[float] = []
        self.stats_lock = threading.Lock()

    def record(self, endpoint: str, elapsed_ms: float) -> None:
        with self.stats_lock:
            self.request_counts[endpoint] = self.request_counts.get(endpoint, 0) + 1
            self.latencies_ms.append(elapsed_ms)
            if len(self.latencies_ms) > 10000:
                self.latencies_ms = self.latencies_ms[-5000:]

    def load_artifact(self, path: Path) -> None:
        artifact = ModelArtifact.load(path)
        self.predictor = artifact.load_predictor()
        self.model_id = artifact.model_id


def _percentile(values: list[float], q: float) -> float:
    if not values:
        return 0.0
    ordered = sorted(values)
    index = min(len(ordered) - 1, int(round(q * (len(ordered) - 1))))
    return ordered[index]


def _error(status: int, message: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": {"message": message, **extra}})


def create_app(
    artifact_root: str | Path = "artifacts",
    artifact_path: str | Path | None = None,
    max_batch: int = DEFAULT_MAX_BATCH,
) -> FastAPI:
    app = FastAPI(title="model-service", version=__version__)
    state = ServiceState(Path(artifact_root), max_batch=max_batch)
    app.state.service = state
    if artifact_path is not None:
        state.load_artifact(Path(artifact_path))

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        return _error(422, "malformed request", details=exc.errors())

    @app.get("/health")
    def health():
        if state.predictor is None:
            return {"status": "loading"}
        return {"status": "ok", "model_id": state.model_id}

    @app.get("/metrics")
    def metrics():
        with state.stats_lock:
            counts = dict(state.request_counts)
            latencies = list(state.latencies_ms)
        return {
            "requests": counts,
            "latency_ms": {
                "p50": _percentile(latencies, 0.50),
                "p90": _percentile(latencies, 0.90),
                "p99": _percentile(latencies, 0.99),
            },
        }

    @app.post("/predict")
    def predict(request: PredictRequest):
        started = time.perf_counter()
        if state.predictor is None:
            return _error(503, "no model loaded; train one or start with an artifact")
        if request.truncation not in TRUNCATION_METHODS:
            return _error(
                422,
                f"unknown truncation method {request.truncation!r}",
                allowed=list(TRUNCATION_METHODS),
            )
        if len(request.texts) > state.max_batch:
            return _error(
                413,
                f"batch of {len(request.texts)} exceeds the maximum",
                max_batch_size=state.max_batch,
            )
        labels, probs = state.predictor.predict(
            request.texts, request.truncation, request.max_len
        )
        state.record("predict", (time.perf_counter() - started) * 1000)
        return {"labels": labels, "probs": probs}

    def _run_training(job_id: str, payload: TrainRequest) -> None:
        job = state.jobs[job_id]
        try:
            config = TrainingConfig.from_dict(payload.config)
            train_set = coerce_examples(payload.train)
            validation_set = coerce_examples(payload.validation)
            test_set = coerce_examples(payload.test) if payload.test else None
            artifact_dir = state.artifact_root / job_id
            artifact = train(train_set, validation_set, config, artifact_dir, test_set=test_set)
            state.load_artifact(artifact_dir)
            job.update(
                state="completed",
                metrics=artifact.metrics,
                trace=artifact.trace,
                model_id=artifact.model_id,
            )
        except (TrainingError, DataError) as exc:
            job.update(state="failed", error=str(exc))
        except Exception as exc:  # surface unexpected failures to the poller
            job.update(state="failed", error=f"unexpected: {exc}")
        finally:
            state.training_lock.release()

    @app.post("/train", status_code=202)
    def submit_training(request: TrainRequest):
        started = time.perf_counter()
        if not state.training_lock.acquire(blocking=False):
            return _error(409, "a training job is already running")
        job_id = uuid.uuid4().hex[:12]
        state.jobs[job_id] = {"state": "running", "job_id": job_id}
        thread = threading.Thread(target=_run_training, args=(job_id, request), daemon=True)
        thread.start()
        state.record("train", (time.perf_counter() - started) * 1000)
        return {"job_id": job_id}

    @app.get("/train/{job_id}")
    def training_status(job_id: str):
        job = state.jobs.get(job_id)
        if job is None:
            return _error(404, f"unknown training job {job_id!r}")
        return job

    return app
