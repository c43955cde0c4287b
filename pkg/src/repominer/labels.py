"""Intent taxonomy, predictions, and annotation records.

The four-class mapping is fixed: Release=0, Reuse=1, Reference=2,
Nothing=3. A prediction's label must equal the argmax of its confidence
row, ties broken toward the lowest label value.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Sequence

PROBABILITY_TOLERANCE = 1e-6


class IntentLabel(IntEnum):
    RELEASE = 0
    REUSE = 1
    REFERENCE = 2
    NOTHING = 3

    @property
    def display(self) -> str:
        return self.name.capitalize()

    @classmethod
    def parse(cls, value) -> "IntentLabel":
        if isinstance(value, cls):
            return value
        if isinstance(value, int) and not isinstance(value, bool):
            return cls(value)
        if isinstance(value, str):
            name = value.strip().upper()
            if name in cls.__members__:
                return cls[name]
            if name.isdigit():
                return cls(int(name))
        raise ValueError(f"unknown intent label {value!r}")


SUBSTANTIVE_LABELS = (IntentLabel.RELEASE, IntentLabel.REUSE, IntentLabel.REFERENCE)


def argmax_label(confidence: Sequence[float]) -> IntentLabel:
    best = 0
    for i in range(1, len(confidence)):
        if confidence[i] > confidence[best]:
            best = i
    return IntentLabel(best)


@dataclass(frozen=True)
class Prediction:
    context_id: str
    label: IntentLabel
    confidence: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        if len(self.confidence) != len(IntentLabel):
            raise ValueError(f"expected {len(IntentLabel)} probabilities")
        if any(p < 0 for p in self.confidence):
            raise ValueError("probabilities must be non-negative")
        total = sum(self.confidence)
        if abs(total - 1.0) > PROBABILITY_TOLERANCE:
            raise ValueError(f"probabilities sum to {total}, expected 1")
        if self.label != argmax_label(self.confidence):
            raise ValueError(
                f"label {self.label} is not the argmax of {self.confidence}"
            )

    def to_json_dict(self) -> dict:
        return {
            "context_id": self.context_id,
            "label": int(self.label),
            "confidence": list(self.confidence),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Prediction":
        return cls(
            context_id=data["context_id"],
            label=IntentLabel(int(data["label"])),
            confidence=tuple(float(p) for p in data["confidence"]),
        )


def make_prediction(context_id: str, confidence: Sequence[float]) -> Prediction:
    """Build a Prediction with the label derived from the confidences."""
    probs = tuple(float(p) for p in confidence)
    return Prediction(context_id=context_id, label=argmax_label(probs), confidence=probs)


@dataclass(frozen=True)
class AnnotationRecord:
    context_id: str
    gold: IntentLabel
    annotator: str
    timestamp: str

    def to_json_dict(self) -> dict:
        return {
            "context_id": self.context_id,
            "gold": self.gold.display,
            "annotator": self.annotator,
            "timestamp": self.timestamp,
        }


def export_annotation_tasks(contexts, path: str | Path, golds: dict | None = None) -> int:
    """Write an annotation task file: a JSON array of labeling items.

    Field mapping for labeling tools: context_id (item id), text (to
    classify), gold (label name or null), annotator, timestamp.
    """
    golds = golds or {}
    items = []
    for ctx in contexts:
        record = golds.get(ctx.context_id)
        items.append(
            {
                "context_id": ctx.context_id,
                "text": ctx.text,
                "gold": record.gold.display if record else None,
                "annotator": record.annotator if record else None,
                "timestamp": record.timestamp if record else None,
            }
        )
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(items, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")
    return len(items)


def import_annotations(
    path: str | Path, skipped: list[str] | None = None
) -> list[AnnotationRecord]:
    """Read labeled items back; unlabeled entries (gold null) are skipped.

    One gold per (context_id, annotator): duplicates are an error.
    """
    with open(path, "r", encoding="utf-8") as fh:
        items = json.load(fh)
    if not isinstance(items, list):
        raise ValueError(f"{path}: expected a JSON array of annotation items")
    records = []
    seen: set[tuple[str, str]] = set()
    for item in items:
        if item.get("gold") is None:
            if skipped is not None:
                skipped.append(item.get("context_id", "<missing id>"))
            continue
        record = AnnotationRecord(
            context_id=str(item["context_id"]),
            gold=IntentLabel.parse(item["gold"]),
            annotator=str(item.get("annotator") or "unknown"),
            timestamp=str(item.get("timestamp") or ""),
        )
        key = (record.context_id, record.annotator)
        if key in seen:
            raise ValueError(f"duplicate annotation for {key}")
        seen.add(key)
        records.append(record)
    return records


def write_annotations_jsonl(records: Iterable[AnnotationRecord], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json_dict(), ensure_ascii=False, sort_keys=True))
            fh.write("\n")
            count += 1
    return count


def read_annotations_jsonl(path: str | Path) -> list[AnnotationRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            records.append(
                AnnotationRecord(
                    context_id=data["context_id"],
                    gold=IntentLabel.parse(data["gold"]),
                    annotator=data["annotator"],
                    timestamp=data["timestamp"],
                )
            )
    return records
