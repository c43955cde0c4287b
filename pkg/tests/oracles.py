"""Independent reference implementations the fast paths are checked against.

Everything here is deliberately written brute-force and shares no code with
the package: character-level scanning instead of regexes, per-pattern
position scans instead of the trie, dict-of-dict confusion counting, and
per-document pair enumeration for networks.
"""

from __future__ import annotations

import string
from itertools import combinations

URL_CHARSET = set(string.ascii_letters + string.digits + "._~:/?#[]@!$&'()*+,;=%-")
LEAD_TRIM = set(".,;(['\"")
TRAIL_TRIM = set(".,;)]'\"")
BOUNDARY = set("/?#:")
SCHEMES = ("http://", "https://", "ftp://")


def oracle_normalize_url(url: str) -> str:
    """Character-level normalization state machine."""
    chars = list(url)
    while chars and chars[0].isspace():
        chars.pop(0)
    while chars and chars[-1].isspace():
        chars.pop()
    chars = [c.lower() for c in chars]
    changed = True
    while changed:
        changed = False
        for scheme in SCHEMES:
            target = list(scheme)
            if len(chars) >= len(target) and all(
                chars[i] == target[i] for i in range(len(target))
            ):
                chars = chars[len(target):]
                changed = True
                break
        www = list("www.")
        if len(chars) >= 4 and all(chars[i] == www[i] for i in range(4)):
            chars = chars[4:]
            changed = True
        if chars and chars[-1] == "/":
            chars.pop()
            changed = True
    return "".join(chars)


def oracle_tokens(text: str) -> list[tuple[str, int, int]]:
    """Trimmed URL-character runs found by a per-character scan."""
    tokens = []
    i, n = 0, len(text)
    while i < n:
        if text[i] not in URL_CHARSET:
            i += 1
            continue
        j = i
        while j < n and text[j] in URL_CHARSET:
            j += 1
        start, end = i, j
        while start < end and text[start] in LEAD_TRIM:
            start += 1
        while end > start and text[end - 1] in TRAIL_TRIM:
            end -= 1
        if end > start:
            tokens.append((text[start:end], start, end))
        i = j
    return tokens


def _prefix_at_boundary(normalized: str, pattern: str) -> bool:
    if len(normalized) < len(pattern):
        return False
    for i in range(len(pattern)):
        if normalized[i] != pattern[i]:
            return False
    return len(normalized) == len(pattern) or normalized[len(pattern)] in BOUNDARY


def oracle_find_mentions(doc_id: str, body_text: str, entries) -> set[tuple]:
    """For every pattern, scan every token position; longest pattern wins.

    Returns a set of (doc_id, repo_id, start, end, matched_text,
    normalized_url) tuples for comparison with the production matcher.
    """
    results = set()
    for token, start, end in oracle_tokens(body_text):
        normalized = oracle_normalize_url(token)
        candidates = []
        for entry in entries:
            for pattern in entry.patterns:
                if _prefix_at_boundary(normalized, pattern):
                    candidates.append((len(pattern), pattern, entry.repo_id))
        if candidates:
            candidates.sort()
            _, _, repo_id = candidates[-1]
            results.add((doc_id, repo_id, start, end, body_text[start:end], normalized))
    return results


def oracle_confusion_metrics(pairs, n_classes: int = 4, averaging: str = "weighted") -> dict:
    """Metrics from (gold, predicted) integer pairs, computed longhand."""
    confusion: dict[int, dict[int, int]] = {}
    for gold, pred in pairs:
        confusion.setdefault(gold, {}).setdefault(pred, 0)
        confusion[gold][pred] += 1
    total = len(pairs)
    correct = sum(confusion.get(i, {}).get(i, 0) for i in range(n_classes))
    per_class = []
    for i in range(n_classes):
        tp = confusion.get(i, {}).get(i, 0)
        support = sum(confusion.get(i, {}).values())
        predicted = sum(confusion.get(g, {}).get(i, 0) for g in range(n_classes))
        precision = tp / predicted if predicted else 0.0
        recall = tp / support if support else 0.0
        f1 = (2 * precision * recall / (precision + recall)) if (precision + recall) else 0.0
        per_class.append({"precision": precision, "recall": recall, "f1": f1, "support": support})
    if averaging == "weighted":
        agg = {
            metric: sum(c[metric] * c["support"] for c in per_class) / total
            for metric in ("precision", "recall", "f1")
        }
    else:
        agg = {
            metric: sum(c[metric] for c in per_class) / n_classes
            for metric in ("precision", "recall", "f1")
        }
    agg["accuracy"] = correct / total
    agg["per_class"] = per_class
    return agg


def oracle_cooccurrence_edges(
    doc_disciplines: dict[str, list[str]],
    qualifying_doc_ids,
    pair_weight: str = "pairs",
    multipliers: dict[str, int] | None = None,
) -> dict[tuple[str, str], float]:
    """Edge weights by explicit per-document pair enumeration."""
    edges: dict[tuple[str, str], float] = {}
    for doc_id in qualifying_doc_ids:
        names = sorted(set(doc_disciplines.get(doc_id, [])))
        k = len(names)
        if k < 2:
            continue
        mult = (multipliers or {}).get(doc_id, 1)
        pairs = list(combinations(names, 2))
        if pair_weight == "pairs":
            weight = 1.0 / len(pairs)
        else:
            weight = 1.0 / (k - 1)
        for pair in pairs:
            edges[pair] = edges.get(pair, 0.0) + weight * mult
    return edges
