"""Context classification: plugin protocol, baseline rules, HTTP client.

A classifier plugin answers health() and predict(texts, truncation,
max_len) -> (labels, probability rows). classify() routes context batches
through a plugin, validates every response row, and reassembles results in
input order. The keyword baseline makes the pipeline runnable end to end
without a model service and is fully deterministic.
"""

from __future__ import annotations

import logging
import re
import time
from typing import Callable, Protocol, Sequence

import requests

from .contexts import ContextWindow
from .labels import (
    IntentLabel,
    PROBABILITY_TOLERANCE,
    Prediction,
    argmax_label,
    make_prediction,
)
from .truncation import DEFAULT_MAX_LEN, truncate_tokens

log = logging.getLogger(__name__)

DEFAULT_BATCH_SIZE = 64


class ClassifierError(RuntimeError):
    pass


class ClassifierUnavailable(ClassifierError):
    """Plugin unreachable or unhealthy; worth retrying."""


class ClassifierProtocolError(ClassifierError):
    """Plugin answered, but the response violates the wire contract."""


class BatchClassificationError(ClassifierError):
    """A batch failed after retries; carries completed work for resumption."""

    def __init__(self, message: str, completed: list[Prediction], failed_index: int):
        super().__init__(message)
        self.completed = completed
        self.failed_index = failed_index


class ClassifierPlugin(Protocol):
    def health(self) -> dict: ...

    def predict(
        self, texts: Sequence[str], truncation: str, max_len: int
    ) -> tuple[list[int], list[list[float]]]: ...


# Cue phrases, checked lowercased with word boundaries. Priority:
# Nothing > Release > Reuse > Reference, then Release as the default
# (majority class). Submission boilerplate must outrank Release because it
# routinely contains "available at" / "depositing".
_NOTHING_CUES = [
    r"upload your files directly",
    r"will take you to the",
    r"/submit\?",
    r"you won't have to re-?enter",
]
_RELEASE_CUES = [
    r"\bdeposit(?:ed|s|ing)?\b",
    r"\bavailable at\b",
    r"\baccession\b",
    r"\breleased\b",
]
_REUSE_CUES = [
    r"\bdownloade?d? from\b",
    r"\bobtained from\b",
    r"\bwe used\b",
    r"\bretrieved from\b",
]
_REFERENCE_CUES = [
    r"\bsee\b",
    r"\blist(?:s|ed)?\b",
    r"\bcross-referenced?\b",
    r"\be\.g\.",
]

_RULES = [
    (IntentLabel.NOTHING, [re.compile(p) for p in _NOTHING_CUES]),
    (IntentLabel.RELEASE, [re.compile(p) for p in _RELEASE_CUES]),
    (IntentLabel.REUSE, [re.compile(p) for p in _REUSE_CUES]),
    (IntentLabel.REFERENCE, [re.compile(p) for p in _REFERENCE_CUES]),
]


def baseline_label(text: str) -> IntentLabel:
    lowered = text.lower()
    for label, patterns in _RULES:
        if any(p.search(lowered) for p in patterns):
            return label
    return IntentLabel.RELEASE


def baseline_classify(context: ContextWindow) -> Prediction:
    """Deterministic keyword fallback; confidence 1 on the chosen class."""
    label = baseline_label(context.text)
    confidence = [0.0, 0.0, 0.0, 0.0]
    confidence[label] = 1.0
    return Prediction(context_id=context.context_id, label=label, confidence=tuple(confidence))


class BaselineClassifier:
    """In-process plugin wrapping the keyword rules."""

    def health(self) -> dict:
        return {"status": "ok", "model_id": "baseline-keyword"}

    def predict(
        self, texts: Sequence[str], truncation: str, max_len: int
    ) -> tuple[list[int], list[list[float]]]:
        labels: list[int] = []
        probs: list[list[float]] = []
        for text in texts:
            clipped = " ".join(truncate_tokens(text.split(), max_len, truncation))
            label = baseline_label(clipped)
            row = [0.0, 0.0, 0.0, 0.0]
            row[label] = 1.0
            labels.append(int(label))
            probs.append(row)
        return labels, probs


class ServiceClassifier:
    """HTTP plugin speaking the classifier wire protocol.

    POST {endpoint}/predict with {"texts", "truncation", "max_len"};
    GET {endpoint}/health.
    """

    def __init__(self, endpoint: str, timeout: float = 60.0):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.session = requests.Session()

    def health(self) -> dict:
        try:
            resp = self.session.get(f"{self.endpoint}/health", timeout=self.timeout)
        except requests.RequestException as exc:
            raise ClassifierUnavailable(str(exc)) from exc
        if resp.status_code != 200:
            raise ClassifierUnavailable(f"health endpoint returned {resp.status_code}")
        return resp.json()

    def predict(
        self, texts: Sequence[str], truncation: str, max_len: int
    ) -> tuple[list[int], list[list[float]]]:
        try:
            resp = self.session.post(
                f"{self.endpoint}/predict",
                json={"texts": list(texts), "truncation": truncation, "max_len": max_len},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise ClassifierUnavailable(str(exc)) from exc
        if resp.status_code >= 500:
            raise ClassifierUnavailable(f"predict endpoint returned {resp.status_code}")
        if resp.status_code != 200:
            raise ClassifierProtocolError(
                f"predict endpoint returned {resp.status_code}: {resp.text[:200]}"
            )
        body = resp.json()
        if "labels" not in body or "probs" not in body:
            raise ClassifierProtocolError("predict response missing 'labels' or 'probs'")
        return body["labels"], body["probs"]


def _validate_row(context_id: str, label: int, probs: Sequence[float]) -> Prediction:
    if len(probs) != len(IntentLabel):
        raise ClassifierProtocolError(
            f"context {context_id}: expected {len(IntentLabel)} probabilities, got {len(probs)}"
        )
    total = sum(probs)
    if abs(total - 1.0) > PROBABILITY_TOLERANCE:
        raise ClassifierProtocolError(
            f"context {context_id}: probabilities sum to {total}"
        )
    if any(p < 0 for p in probs):
        raise ClassifierProtocolError(f"context {context_id}: negative probability")
    expected = argmax_label(probs)
    if int(label) != int(expected):
        raise ClassifierProtocolError(
            f"context {context_id}: label {label} disagrees with argmax {int(expected)}"
        )
    return make_prediction(context_id, probs)


def classify(
    contexts: Sequence[ContextWindow],
    classifier: ClassifierPlugin,
    batch_size: int = DEFAULT_BATCH_SIZE,
    truncation: str = "tail",
    max_len: int = DEFAULT_MAX_LEN,
    max_retries: int = 3,
    backoff_base: float = 1.0,
    sleep: Callable[[float], None] = time.sleep,
    on_batch_done: Callable[[int, list[Prediction]], None] | None = None,
) -> list[Prediction]:
    """Classify contexts in batches; one prediction per context, in order.

    Unavailable plugins are retried with backoff; a batch that still fails
    raises BatchClassificationError carrying all completed predictions so
    the caller can checkpoint and resume. Malformed plugin responses raise
    ClassifierProtocolError naming the offending context.
    """
    health = classifier.health()
    if health.get("status") != "ok":
        raise ClassifierUnavailable(f"classifier health check failed: {health}")

    predictions: list[Prediction] = []
    for batch_index, start in enumerate(range(0, len(contexts), batch_size)):
        batch = contexts[start : start + batch_size]
        texts = [ctx.text for ctx in batch]
        attempt = 0
        while True:
            attempt += 1
            try:
                labels, probs = classifier.predict(texts, truncation, max_len)
                break
            except ClassifierUnavailable as exc:
                if attempt > max_retries:
                    raise BatchClassificationError(
                        f"batch {batch_index} failed after {attempt} attempts: {exc}",
                        completed=predictions,
                        failed_index=batch_index,
                    ) from exc
                log.warning("classifier unavailable (attempt %d): %s", attempt, exc)
                sleep(backoff_base * 2 ** (attempt - 1))
        if len(labels) != len(batch) or len(probs) != len(batch):
            raise ClassifierProtocolError(
                f"batch {batch_index}: plugin returned {len(labels)} labels / "
                f"{len(probs)} rows for {len(batch)} texts"
            )
        batch_predictions = [
            _validate_row(ctx.context_id, label, row)
            for ctx, label, row in zip(batch, labels, probs)
        ]
        predictions.extend(batch_predictions)
        if on_batch_done is not None:
            on_batch_done(batch_index, batch_predictions)
    return predictions
