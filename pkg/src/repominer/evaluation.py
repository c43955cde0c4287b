"""Prediction scoring against gold labels.

Per-class precision/recall/F1 from the confusion matrix with the usual
0-convention when a denominator is empty, aggregated by weighted (default)
or macro averaging. With weighted averaging, recall equals accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .labels import AnnotationRecord, IntentLabel, Prediction

AVERAGING_MODES = ("weighted", "macro")


class EvaluationInputError(ValueError):
    pass


@dataclass(frozen=True)
class ClassMetrics:
    label: IntentLabel
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    per_class: tuple[ClassMetrics, ...]
    averaging: str
    total: int

    def to_json_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "averaging": self.averaging,
            "total": self.total,
            "per_class": [
                {
                    "label": m.label.display,
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for m in self.per_class
            ],
        }


def evaluate(
    preds: Sequence[Prediction],
    golds: Sequence[AnnotationRecord],
    averaging: str = "weighted",
) -> EvalReport:
    """Score predictions against gold annotations matched by context_id."""
    if averaging not in AVERAGING_MODES:
        raise ValueError(f"unknown averaging {averaging!r}")
    if not golds:
        raise EvaluationInputError("no gold annotations to evaluate against")
    by_id = {p.context_id: p for p in preds}
    missing = sorted({g.context_id for g in golds if g.context_id not in by_id})
    if missing:
        raise EvaluationInputError(
            f"missing predictions for {len(missing)} gold context(s): {missing}"
        )

    n_classes = len(IntentLabel)
    confusion = [[0] * n_classes for _ in range(n_classes)]
    for gold in golds:
        pred = by_id[gold.context_id]
        confusion[int(gold.gold)][int(pred.label)] += 1

    total = sum(sum(row) for row in confusion)
    correct = sum(confusion[i][i] for i in range(n_classes))
    accuracy = correct / total

    per_class = []
    for label in IntentLabel:
        i = int(label)
        tp = confusion[i][i]
        support = sum(confusion[i])
        predicted = sum(confusion[g][i] for g in range(n_classes))
        precision = tp / predicted if predicted else 0.0
        recall = tp / support if support else 0.0
        f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
        per_class.append(
            ClassMetrics(label=label, precision=precision, recall=recall, f1=f1, support=support)
        )

    if averaging == "weighted":
        precision = sum(m.precision * m.support for m in per_class) / total
        recall = sum(m.recall * m.support for m in per_class) / total
        f1 = sum(m.f1 * m.support for m in per_class) / total
    else:
        precision = sum(m.precision for m in per_class) / n_classes
        recall = sum(m.recall for m in per_class) / n_classes
        f1 = sum(m.f1 for m in per_class) / n_classes

    return EvalReport(
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        per_class=tuple(per_class),
        averaging=averaging,
        total=total,
    )
