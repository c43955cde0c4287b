"""Discipline co-occurrence networks per intent, with file exporters.

A document qualifies for an intent's network when at least one of its
contexts carries that predicted label (once per intent, regardless of how
many contexts match). Its k >= 2 disciplines contribute each unordered
pair with weight 1/C(k,2), so a qualifying document adds total edge weight
1; single-discipline documents contribute node presence only. Exports are
deterministic: nodes and edges are sorted.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Mapping, Sequence

from .analytics import JoinError
from .contexts import ContextWindow
from .documents import Document
from .labels import IntentLabel, Prediction, SUBSTANTIVE_LABELS

NETWORK_FORMATS = ("edge_csv", "pajek")

PAIR_WEIGHT_MODES = ("pairs", "links")


@dataclass(frozen=True)
class CoocNetwork:
    intent: IntentLabel
    nodes: tuple[tuple[str, float], ...]
    edges: tuple[tuple[str, str, float], ...]

    def __post_init__(self) -> None:
        for a, b, weight in self.edges:
            if a >= b:
                raise ValueError(f"edge ({a!r}, {b!r}) not in lexicographic order")
            if weight <= 0:
                raise ValueError(f"edge ({a}, {b}) has non-positive weight")

    def to_json_dict(self) -> dict:
        return {
            "intent": self.intent.display,
            "nodes": [[name, strength] for name, strength in self.nodes],
            "edges": [[a, b, weight] for a, b, weight in self.edges],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "CoocNetwork":
        return cls(
            intent=IntentLabel.parse(data["intent"]),
            nodes=tuple((n, float(s)) for n, s in data["nodes"]),
            edges=tuple((a, b, float(w)) for a, b, w in data["edges"]),
        )


def cooccurrence_network(
    preds: Sequence[Prediction],
    contexts: Sequence[ContextWindow],
    documents: Mapping[str, Document] | Sequence[Document],
    intent: IntentLabel,
    pair_weight: str = "pairs",
    once_per_document: bool = True,
) -> CoocNetwork:
    """Build the discipline co-occurrence network for one intent.

    pair_weight "pairs" divides by C(k,2) (document total 1); "links"
    divides by k-1. once_per_document=False multiplies a document's
    contribution by its number of matching contexts.
    """
    if intent not in SUBSTANTIVE_LABELS:
        raise ValueError(f"co-occurrence networks are built for substantive intents, not {intent}")
    if pair_weight not in PAIR_WEIGHT_MODES:
        raise ValueError(f"unknown pair_weight mode {pair_weight!r}")
    docs = documents if isinstance(documents, Mapping) else {d.doc_id: d for d in documents}
    context_by_id = {ctx.context_id: ctx for ctx in contexts}

    matching_per_doc: dict[str, int] = {}
    for pred in preds:
        if pred.label != intent:
            continue
        ctx = context_by_id.get(pred.context_id)
        if ctx is None:
            raise JoinError(f"predictions without contexts: [{pred.context_id!r}]")
        matching_per_doc[ctx.doc_id] = matching_per_doc.get(ctx.doc_id, 0) + 1

    node_names: set[str] = set()
    edge_weights: dict[tuple[str, str], float] = {}
    for doc_id in sorted(matching_per_doc):
        doc = docs.get(doc_id)
        if doc is None:
            raise JoinError(f"contexts without documents: [{doc_id!r}]")
        names = sorted({d.name for d in doc.disciplines})
        if not names:
            continue
        node_names.update(names)
        k = len(names)
        if k < 2:
            continue
        multiplier = 1 if once_per_document else matching_per_doc[doc_id]
        pair_count = k * (k - 1) // 2
        weight = (1.0 / pair_count if pair_weight == "pairs" else 1.0 / (k - 1)) * multiplier
        for i in range(k):
            for j in range(i + 1, k):
                key = (names[i], names[j])
                edge_weights[key] = edge_weights.get(key, 0.0) + weight

    # strengths accumulated in sorted-edge order so an exported edge list
    # reparses to bitwise-identical node strengths
    edges = tuple((a, b, edge_weights[(a, b)]) for a, b in sorted(edge_weights))
    strengths = {name: 0.0 for name in node_names}
    for a, b, weight in edges:
        strengths[a] += weight
        strengths[b] += weight
    return CoocNetwork(
        intent=intent,
        nodes=tuple((name, strengths[name]) for name in sorted(node_names)),
        edges=edges,
    )


def export_network(net: CoocNetwork, fmt: str, path) -> None:
    """Write a network as an edge-list CSV or a Pajek .net file.

    Both are byte-deterministic for a given network; an empty network
    yields a valid file with zero edges.
    """
    if fmt == "edge_csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["source", "target", "weight"])
            for a, b, weight in net.edges:
                writer.writerow([a, b, repr(weight)])
    elif fmt == "pajek":
        index = {name: i + 1 for i, (name, _) in enumerate(net.nodes)}
        lines = [f"*Vertices {len(net.nodes)}"]
        lines.extend(f'{index[name]} "{name}"' for name, _ in net.nodes)
        lines.append("*Edges")
        lines.extend(f"{index[a]} {index[b]} {weight!r}" for a, b, weight in net.edges)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    else:
        raise ValueError(f"unknown network format {fmt!r}")


def read_edge_csv(path, intent: IntentLabel) -> CoocNetwork:
    """Rebuild a network from an exported edge CSV (nodes from edges)."""
    edges = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            edges.append((row["source"], row["target"], float(row["weight"])))
    strengths: dict[str, float] = {}
    for a, b, weight in edges:
        strengths[a] = strengths.get(a, 0.0) + weight
        strengths[b] = strengths.get(b, 0.0) + weight
    return CoocNetwork(
        intent=intent,
        nodes=tuple((name, strengths[name]) for name in sorted(strengths)),
        edges=tuple(sorted(edges)),
    )
