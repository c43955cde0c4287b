"""Rule-based sentence segmentation with offset-preserving spans.

A boundary is a run of . ? ! followed by whitespace and an uppercase letter
or digit, unless the punctuation sits inside a URL token or closes a
protected abbreviation ("e.g.", "i.e.", "et al.", "Fig.", "vs.", single
initials). Newlines always end a sentence: body_text is one block per line.
"""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass
from typing import Sequence, TYPE_CHECKING

from .urls import iter_url_tokens

if TYPE_CHECKING:
    from .documents import Document

DEFAULT_ABBREVIATIONS = ("e.g.", "i.e.", "et al.", "fig.", "vs.")

_BOUNDARY_RE = re.compile(r"([.?!]+)\s+(?=[A-Z0-9])")
_INITIAL_RE = re.compile(r"(?:^|[^A-Za-z])[A-Z]\.$")


class SegmentationError(RuntimeError):
    """An offset expected to sit inside a sentence does not."""


@dataclass(frozen=True)
class SentenceIndex:
    """Ordered, non-overlapping sentence spans over a document's body text."""

    spans: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        previous_end = -1
        for start, end in self.spans:
            if start < previous_end or end <= start:
                raise ValueError("sentence spans must be strictly increasing")
            previous_end = end

    def __len__(self) -> int:
        return len(self.spans)

    def locate(self, offset: int) -> int:
        """Ordinal of the sentence containing `offset`, else raises."""
        starts = [s for s, _ in self.spans]
        idx = bisect.bisect_right(starts, offset) - 1
        if idx >= 0:
            start, end = self.spans[idx]
            if start <= offset < end:
                return idx
        raise SegmentationError(f"offset {offset} falls outside every sentence span")


def _abbreviation_protected(prefix: str, abbreviations: Sequence[str]) -> bool:
    lowered = prefix.lower()
    for abbrev in abbreviations:
        if lowered.endswith(abbrev):
            before = len(prefix) - len(abbrev) - 1
            if before < 0 or not prefix[before].isalnum():
                return True
    return bool(_INITIAL_RE.search(prefix))


def _segment_block(
    text: str, block_start: int, block_end: int, abbreviations: Sequence[str]
) -> list[tuple[int, int]]:
    block = text[block_start:block_end]

    # trimmed URL-token extents: a boundary may not split one, i.e. the
    # token must not continue past the punctuation run
    url_spans = [(s, e) for _, s, e in iter_url_tokens(block)]
    url_starts = [s for s, _ in url_spans]

    def splits_url(punct_start: int, punct_end: int) -> bool:
        idx = bisect.bisect_right(url_starts, punct_start) - 1
        if idx < 0:
            return False
        start, end = url_spans[idx]
        return start <= punct_start and punct_end < end

    boundaries = []
    for match in _BOUNDARY_RE.finditer(block):
        punct_start, punct_end = match.start(1), match.end(1)
        if splits_url(punct_start, punct_end):
            continue
        if block[punct_end - 1] == "." and _abbreviation_protected(
            block[:punct_end], abbreviations
        ):
            continue
        boundaries.append(punct_end)

    spans = []
    cursor = 0
    for punct_end in boundaries:
        while cursor < punct_end and block[cursor].isspace():
            cursor += 1
        if cursor < punct_end:
            spans.append((block_start + cursor, block_start + punct_end))
        cursor = punct_end
    while cursor < len(block) and block[cursor].isspace():
        cursor += 1
    tail_end = len(block)
    while tail_end > cursor and block[tail_end - 1].isspace():
        tail_end -= 1
    if tail_end > cursor:
        spans.append((block_start + cursor, block_start + tail_end))
    return spans


def segment_sentences(
    doc: "Document", abbreviations: Sequence[str] = DEFAULT_ABBREVIATIONS
) -> SentenceIndex:
    """Segment a document's body text into sentence spans.

    Spans cover every non-whitespace character, so any mention offset falls
    inside exactly one span. A block with no internal boundary is a single
    sentence.
    """
    text = doc.body_text
    spans: list[tuple[int, int]] = []
    block_start = 0
    while block_start <= len(text):
        newline = text.find("\n", block_start)
        block_end = newline if newline != -1 else len(text)
        if block_end > block_start:
            spans.extend(_segment_block(text, block_start, block_end, abbreviations))
        if newline == -1:
            break
        block_start = newline + 1
    return SentenceIndex(spans=tuple(spans))
