"""Labeled-context loading and the validation metric.

Accepts the pipeline's annotation-interchange JSON (array of objects with
text and gold) or bare {"text", "label"} pairs. The weighted F1 used for
early stopping is computed here; it matches the standard confusion-matrix
definition with the 0-convention for empty denominators.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import LABEL_MAP, NUM_LABELS


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledText:
    text: str
    label: int

    def __post_init__(self) -> None:
        if not (0 <= self.label < NUM_LABELS):
            raise DataError(f"label {self.label} outside 0..{NUM_LABELS - 1}")


def parse_label(value) -> int:
    if isinstance(value, bool):
        raise DataError(f"bad label {value!r}")
    if isinstance(value, int):
        if 0 <= value < NUM_LABELS:
            return value
        raise DataError(f"label {value} outside 0..{NUM_LABELS - 1}")
    if isinstance(value, str):
        name = value.strip().capitalize()
        if name in LABEL_MAP:
            return LABEL_MAP[name]
        if value.strip().isdigit():
            return parse_label(int(value.strip()))
    raise DataError(f"bad label {value!r}")


def coerce_examples(items: Sequence[dict]) -> list[LabeledText]:
    examples = []
    for i, item in enumerate(items):
        text = item.get("text")
        raw_label = item.get("label", item.get("gold"))
        if text is None or raw_label is None:
            raise DataError(f"item {i}: needs 'text' and 'label' (or 'gold')")
        examples.append(LabeledText(text=str(text), label=parse_label(raw_label)))
    return examples


def load_labeled_json(path: str | Path) -> list[LabeledText]:
    with open(path, "r", encoding="utf-8") as fh:
        items = json.load(fh)
    if not isinstance(items, list):
        raise DataError(f"{path}: expected a JSON array")
    return coerce_examples(items)


def weighted_f1(golds: Sequence[int], preds: Sequence[int]) -> float:
    if len(golds) != len(preds) or not golds:
        raise DataError("gold/prediction vectors must be equal length and non-empty")
    per_class_f1 = []
    supports = []
    for label in range(NUM_LABELS):
        tp = sum(1 for g, p in zip(golds, preds) if g == label and p == label)
        support = sum(1 for g in golds if g == label)
        predicted = sum(1 for p in preds if p == label)
        precision = tp / predicted if predicted else 0.0
        recall = tp / support if support else 0.0
        f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
        per_class_f1.append(f1)
        supports.append(support)
    total = sum(supports)
    return sum(f * s for f, s in zip(per_class_f1, supports)) / total
