"""Aggregation of predictions into the pipeline's result tables.

Covers repository frequency ranking, overall label shares, per-repository
and per-discipline intent distributions (fractional counting: a context
contributes its document's discipline weights, so each context adds total
weight 1), and per-year trends. All aggregations are order-invariant
associative reductions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .contexts import ContextWindow
from .documents import Document
from .labels import IntentLabel, Prediction, SUBSTANTIVE_LABELS
from .registry import Mention

UNCLASSIFIED_KEY = "Unclassified"

DEFAULT_TEMPORAL_MIN_SUPPORT = 50


class AnalyticsError(ValueError):
    pass


class JoinError(AnalyticsError):
    """Predictions or contexts that do not join to their parent records."""


@dataclass(frozen=True)
class IntentDistribution:
    group_key: str
    counts: tuple[float, float, float, float]
    proportions: tuple[float, float, float, float]

    def to_json_dict(self) -> dict:
        return {
            "group_key": self.group_key,
            "counts": list(self.counts),
            "proportions": list(self.proportions),
        }


def _proportions(
    counts: Sequence[float], included: Sequence[IntentLabel]
) -> tuple[float, float, float, float]:
    total = sum(counts[int(label)] for label in included)
    props = [0.0, 0.0, 0.0, 0.0]
    if total > 0:
        for label in included:
            props[int(label)] = counts[int(label)] / total
    return tuple(props)


def _distribution(key: str, counts: Sequence[float], included) -> IntentDistribution:
    return IntentDistribution(
        group_key=key,
        counts=tuple(counts),
        proportions=_proportions(counts, included),
    )


def top_repositories(mentions: Iterable[Mention], n: int) -> list[tuple[str, int]]:
    """Mention counts per repository, descending, ties alphabetical."""
    if n < 1:
        raise AnalyticsError(f"n must be >= 1, got {n}")
    counts: dict[str, int] = {}
    for mention in mentions:
        counts[mention.repo_id] = counts.get(mention.repo_id, 0) + 1
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:n]


def label_distribution(preds: Sequence[Prediction]) -> tuple[float, float, float, float]:
    """Share of each label over all predictions, Nothing included."""
    if not preds:
        raise AnalyticsError("label_distribution needs at least one prediction")
    counts = [0, 0, 0, 0]
    for pred in preds:
        counts[int(pred.label)] += 1
    total = len(preds)
    return tuple(c / total for c in counts)


def _join(preds, contexts) -> list[tuple[Prediction, ContextWindow]]:
    by_id = {ctx.context_id: ctx for ctx in contexts}
    orphans = sorted({p.context_id for p in preds if p.context_id not in by_id})
    if orphans:
        raise JoinError(f"predictions without contexts: {orphans}")
    return [(p, by_id[p.context_id]) for p in preds]


def repo_intent_distribution(
    preds: Sequence[Prediction],
    contexts: Sequence[ContextWindow],
    top_n: int = 20,
) -> list[IntentDistribution]:
    """Label shares per repository, restricted to the top_n repositories
    by mention count; all four labels are included in the denominator."""
    joined = _join(preds, contexts)
    mention_totals: dict[str, int] = {}
    counts: dict[str, list[float]] = {}
    for pred, ctx in joined:
        mention_totals[ctx.repo_id] = mention_totals.get(ctx.repo_id, 0) + ctx.mention_count
        row = counts.setdefault(ctx.repo_id, [0.0, 0.0, 0.0, 0.0])
        row[int(pred.label)] += 1
    ranked = sorted(mention_totals.items(), key=lambda item: (-item[1], item[0]))[:top_n]
    return [
        _distribution(repo_id, counts[repo_id], list(IntentLabel)) for repo_id, _ in ranked
    ]


@dataclass
class DisciplineIntentResult:
    distributions: list[IntentDistribution]
    unclassified: IntentDistribution | None = None
    included_labels: tuple[IntentLabel, ...] = SUBSTANTIVE_LABELS


def discipline_intent_distribution(
    preds: Sequence[Prediction],
    contexts: Sequence[ContextWindow],
    documents: Mapping[str, Document] | Sequence[Document],
    include_nothing: bool = False,
    per_document: bool = False,
) -> DisciplineIntentResult:
    """Fractionally counted intent shares per discipline.

    Each context adds its document's discipline weights under its predicted
    label. Proportions run over the three substantive labels unless
    include_nothing is set. Documents without disciplines are collected in
    an Unclassified bucket, reported separately. per_document=True counts
    each (document, label) pair once instead of every context.
    """
    docs = documents if isinstance(documents, Mapping) else {d.doc_id: d for d in documents}
    joined = _join(preds, contexts)
    missing_docs = sorted({ctx.doc_id for _, ctx in joined if ctx.doc_id not in docs})
    if missing_docs:
        raise JoinError(f"contexts without documents: {missing_docs}")

    included = tuple(IntentLabel) if include_nothing else SUBSTANTIVE_LABELS
    counts: dict[str, list[float]] = {}
    unclassified = [0.0, 0.0, 0.0, 0.0]
    seen_doc_labels: set[tuple[str, int]] = set()
    for pred, ctx in joined:
        if per_document:
            key = (ctx.doc_id, int(pred.label))
            if key in seen_doc_labels:
                continue
            seen_doc_labels.add(key)
        doc = docs[ctx.doc_id]
        if not doc.disciplines:
            unclassified[int(pred.label)] += 1.0
            continue
        for assignment in doc.disciplines:
            row = counts.setdefault(assignment.name, [0.0, 0.0, 0.0, 0.0])
            row[int(pred.label)] += assignment.weight

    distributions = []
    for name in sorted(counts):
        if sum(counts[name][int(label)] for label in included) <= 0:
            continue
        distributions.append(_distribution(name, counts[name], included))
    unclassified_dist = None
    if any(unclassified):
        unclassified_dist = _distribution(UNCLASSIFIED_KEY, unclassified, included)
    return DisciplineIntentResult(
        distributions=distributions,
        unclassified=unclassified_dist,
        included_labels=included,
    )


@dataclass
class TemporalResult:
    distributions: list[IntentDistribution]
    low_support_years: list[int] = field(default_factory=list)
    missing_year_contexts: int = 0


def temporal_distribution(
    preds: Sequence[Prediction],
    contexts: Sequence[ContextWindow],
    documents: Mapping[str, Document] | Sequence[Document],
    min_support: int = DEFAULT_TEMPORAL_MIN_SUPPORT,
) -> TemporalResult:
    """Per-year shares of the three substantive intentions.

    Contexts on documents without a publication year are excluded and
    counted; years with fewer than min_support contexts are flagged."""
    docs = documents if isinstance(documents, Mapping) else {d.doc_id: d for d in documents}
    joined = _join(preds, contexts)
    counts: dict[int, list[float]] = {}
    totals: dict[int, int] = {}
    missing = 0
    for pred, ctx in joined:
        doc = docs.get(ctx.doc_id)
        if doc is None:
            raise JoinError(f"contexts without documents: [{ctx.doc_id!r}]")
        if doc.pub_year is None:
            missing += 1
            continue
        row = counts.setdefault(doc.pub_year, [0.0, 0.0, 0.0, 0.0])
        row[int(pred.label)] += 1
        totals[doc.pub_year] = totals.get(doc.pub_year, 0) + 1
    distributions = [
        _distribution(str(year), counts[year], SUBSTANTIVE_LABELS)
        for year in sorted(counts)
    ]
    low_support = sorted(year for year, total in totals.items() if total < min_support)
    return TemporalResult(
        distributions=distributions,
        low_support_years=low_support,
        missing_year_contexts=missing,
    )
