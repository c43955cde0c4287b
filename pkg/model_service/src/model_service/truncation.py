"""Token-budget truncation with the pipeline's exact index arithmetic.

head keeps the first max_len token positions, tail the last max_len,
middle the central block with front drop floor((n - max_len) / 2), and
split the first ceil(max_len/2) plus last floor(max_len/2) in order.
Sequences at or under the budget pass through for every method. Kept-index
sets must match the upstream pipeline's truncation exactly; the
conformance suite compares the two on shared fixtures.
"""

from __future__ import annotations

TRUNCATION_METHODS = ("head", "tail", "middle", "split")


def kept_indices(n: int, max_len: int, method: str) -> list[int]:
    if max_len < 2:
        raise ValueError(f"max_len must be >= 2, got {max_len}")
    if method not in TRUNCATION_METHODS:
        raise ValueError(f"unknown truncation method {method!r}")
    if n <= max_len:
        return list(range(n))
    if method == "head":
        return list(range(max_len))
    if method == "tail":
        return list(range(n - max_len, n))
    if method == "middle":
        front_drop = (n - max_len) // 2
        return list(range(front_drop, front_drop + max_len))
    tail_len = max_len // 2
    head_len = max_len - tail_len
    return list(range(head_len)) + list(range(n - tail_len, n))


def truncate_ids(ids: list[int], max_len: int, method: str) -> list[int]:
    if len(ids) <= max_len:
        kept_indices(0, max_len, method)  # validate arguments
        return list(ids)
    return [ids[i] for i in kept_indices(len(ids), max_len, method)]
