"""Token-sequence truncation to a maximum length.

Four methods: head keeps the first max_len tokens, tail the last max_len,
middle the central max_len (front drop = floor((n - max_len) / 2)), and
split the first half plus the last half in order. Sequences at or under
the limit pass through unchanged for every method. The index arithmetic
lives in kept_indices so any tokenizer (whitespace baseline or a model's)
truncates identically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

TRUNCATION_METHODS = ("head", "tail", "middle", "split")

DEFAULT_MAX_LEN = 512


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple
    tokenizer_id: str = "whitespace"

    @classmethod
    def from_text(cls, text: str) -> "TokenSequence":
        return cls(tokens=tuple(text.split()), tokenizer_id="whitespace")


def kept_indices(n: int, max_len: int = DEFAULT_MAX_LEN, method: str = "tail") -> list[int]:
    """Indices of the tokens a method keeps, in original order."""
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
    head_len = max_len - max_len // 2
    tail_len = max_len // 2
    return list(range(head_len)) + list(range(n - tail_len, n))


def truncate_tokens(tokens: Sequence, max_len: int = DEFAULT_MAX_LEN, method: str = "tail") -> list:
    if len(tokens) <= max_len:
        if max_len < 2:
            raise ValueError(f"max_len must be >= 2, got {max_len}")
        if method not in TRUNCATION_METHODS:
            raise ValueError(f"unknown truncation method {method!r}")
        return list(tokens)
    return [tokens[i] for i in kept_indices(len(tokens), max_len, method)]


def truncate(seq: TokenSequence, max_len: int = DEFAULT_MAX_LEN, method: str = "tail") -> TokenSequence:
    return TokenSequence(
        tokens=tuple(truncate_tokens(seq.tokens, max_len, method)),
        tokenizer_id=seq.tokenizer_id,
    )
