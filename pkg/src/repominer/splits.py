"""Deterministic train/test/validation splitting of annotation records.

Subset sizes come from cumulative floor boundaries over the shuffled
records (1,328 records at 0.8/0.1/0.1 give 1,062/133/133). Stratified mode
then allocates per class with a largest-remainder step so every subset hits
its global size exactly while each class stays within one item of its
proportional share. A group mapping (e.g. contexts grouped by article)
switches to whole-group assignment for leakage control.
"""

from __future__ import annotations

import random
from itertools import combinations
from math import floor
from typing import Mapping, Sequence

from .labels import AnnotationRecord, IntentLabel

RATIO_TOLERANCE = 1e-9


class SplitError(ValueError):
    pass


def _subset_sizes(n: int, ratios: Sequence[float]) -> list[int]:
    boundaries = []
    cumulative = 0.0
    for ratio in ratios[:-1]:
        cumulative += ratio
        boundaries.append(floor(n * cumulative + RATIO_TOLERANCE))
    sizes = []
    previous = 0
    for boundary in boundaries:
        sizes.append(boundary - previous)
        previous = boundary
    sizes.append(n - previous)
    return sizes


def _allocate_stratified(
    class_counts: dict[int, int], sizes: Sequence[int], ratios: Sequence[float]
) -> dict[int, list[int]]:
    """Per-class subset allocation hitting `sizes` exactly, each cell within
    one of its proportional share.

    Each class row has at most C(3, bumps) floor/ceil roundings that keep
    the row sum exact; a depth-first search over those (preferring bumps on
    the largest fractional remainders) finds a combination matching the
    column targets. Matrix-rounding feasibility guarantees one exists.
    """
    classes = sorted(class_counts)
    n_subsets = len(sizes)
    options: list[list[tuple[int, ...]]] = []
    for k in classes:
        count = class_counts[k]
        quotas = [count * r for r in ratios]
        floors = [floor(q + RATIO_TOLERANCE) for q in quotas]
        bumps = count - sum(floors)
        ranked = []
        for combo in combinations(range(n_subsets), bumps):
            vec = tuple(floors[s] + (1 if s in combo else 0) for s in range(n_subsets))
            gain = sum(quotas[s] - floors[s] for s in combo)
            ranked.append((-gain, vec))
        ranked.sort()
        options.append([vec for _, vec in ranked])

    chosen: list[tuple[int, ...]] = []

    def search(i: int, remaining: tuple[int, ...]) -> bool:
        if i == len(classes):
            return all(r == 0 for r in remaining)
        for vec in options[i]:
            nxt = tuple(remaining[s] - vec[s] for s in range(n_subsets))
            if any(r < 0 for r in nxt):
                continue
            if search(i + 1, nxt):
                chosen.append(vec)
                return True
        return False

    if not search(0, tuple(sizes)):
        raise SplitError("stratified allocation infeasible; use stratify=False")
    chosen.reverse()
    return {k: list(vec) for k, vec in zip(classes, chosen)}


def split_dataset(
    records: Sequence[AnnotationRecord],
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
    stratify: bool = True,
    groups: Mapping[str, str] | None = None,
) -> tuple[list[AnnotationRecord], list[AnnotationRecord], list[AnnotationRecord]]:
    """Split records into (train, test, validation), deterministically.

    Subsets are disjoint and their union is the input. The same seed always
    yields identical membership. Stratification keeps each subset's class
    mix within ±1 item per class of the whole; fewer records than classes
    raises, advising unstratified mode. When `groups` maps context_id to a
    group key, whole groups are assigned together (no stratification
    guarantee).
    """
    if not records:
        raise SplitError("cannot split an empty record list")
    if len(ratios) != 3:
        raise SplitError("ratios must have exactly three entries")
    if abs(sum(ratios) - 1.0) > 1e-6 or any(r < 0 for r in ratios):
        raise SplitError(f"ratios must be non-negative and sum to 1, got {ratios}")

    rng = random.Random(seed)
    indices = list(range(len(records)))
    rng.shuffle(indices)
    sizes = _subset_sizes(len(records), ratios)

    if groups is not None:
        return _split_by_groups(records, indices, sizes, groups)

    if not stratify:
        subsets = []
        cursor = 0
        for size in sizes:
            subsets.append([records[i] for i in indices[cursor : cursor + size]])
            cursor += size
        return subsets[0], subsets[1], subsets[2]

    if len(records) < len(IntentLabel):
        raise SplitError(
            f"only {len(records)} records for {len(IntentLabel)} classes; use stratify=False"
        )
    class_counts: dict[int, int] = {}
    for record in records:
        class_counts[int(record.gold)] = class_counts.get(int(record.gold), 0) + 1

    alloc = _allocate_stratified(class_counts, sizes, ratios)
    by_class: dict[int, list[int]] = {k: [] for k in class_counts}
    for i in indices:
        by_class[int(records[i].gold)].append(i)

    subset_indices: list[list[int]] = [[], [], []]
    for k in sorted(by_class):
        cursor = 0
        for s in range(3):
            take = alloc[k][s]
            subset_indices[s].extend(by_class[k][cursor : cursor + take])
            cursor += take
    # preserve the shuffled order inside each subset
    position = {idx: pos for pos, idx in enumerate(indices)}
    subsets = [
        [records[i] for i in sorted(chunk, key=position.__getitem__)]
        for chunk in subset_indices
    ]
    return subsets[0], subsets[1], subsets[2]


def _split_by_groups(records, indices, sizes, groups):
    group_members: dict[str, list[int]] = {}
    order: list[str] = []
    for i in indices:
        key = groups.get(records[i].context_id, records[i].context_id)
        if key not in group_members:
            group_members[key] = []
            order.append(key)
        group_members[key].append(i)

    targets = list(sizes)
    filled = [0, 0, 0]
    subset_indices: list[list[int]] = [[], [], []]
    for key in order:
        members = group_members[key]
        deficits = [targets[s] - filled[s] for s in range(3)]
        s = max(range(3), key=lambda j: (deficits[j], -j))
        subset_indices[s].extend(members)
        filled[s] += len(members)
    position = {idx: pos for pos, idx in enumerate(indices)}
    subsets = [
        [records[i] for i in sorted(chunk, key=position.__getitem__)]
        for chunk in subset_indices
    ]
    return subsets[0], subsets[1], subsets[2]
