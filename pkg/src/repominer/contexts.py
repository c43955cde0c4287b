"""Context-window extraction around repository mentions.

Each mention's core sentence is widened to up to two sentences on each side
(clamped at document edges). Mentions of the same repository whose windows
are identical merge into one window with an incremented mention count;
windows for different repositories never merge, even when textually equal.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, TYPE_CHECKING

from .registry import Mention
from .sentences import SentenceIndex

if TYPE_CHECKING:
    from .documents import Document

WINDOW_RADIUS = 2


@dataclass(frozen=True)
class ContextWindow:
    context_id: str
    doc_id: str
    repo_id: str
    core_index: int
    window_start: int
    window_end: int
    text: str
    mention_count: int

    def to_json_dict(self) -> dict:
        return {
            "context_id": self.context_id,
            "doc_id": self.doc_id,
            "repo_id": self.repo_id,
            "core_index": self.core_index,
            "window_start": self.window_start,
            "window_end": self.window_end,
            "text": self.text,
            "mention_count": self.mention_count,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ContextWindow":
        return cls(
            context_id=data["context_id"],
            doc_id=data["doc_id"],
            repo_id=data["repo_id"],
            core_index=int(data["core_index"]),
            window_start=int(data["window_start"]),
            window_end=int(data["window_end"]),
            text=data["text"],
            mention_count=int(data["mention_count"]),
        )


def context_id_for(doc_id: str, repo_id: str, window_start: int, window_end: int) -> str:
    """Content-derived id, stable across runs."""
    key = f"{doc_id}\x1f{repo_id}\x1f{window_start}\x1f{window_end}"
    return hashlib.sha256(key.encode("utf-8")).hexdigest()[:16]


def extract_contexts(
    doc: "Document", mentions: Iterable[Mention], index: SentenceIndex
) -> list[ContextWindow]:
    """Cut the clamped five-sentence window around each mention.

    Raises SegmentationError if a mention offset is not covered by the
    index (an internal consistency bug, not a data error).
    """
    last = len(index) - 1
    merged: dict[tuple[str, int, int], dict] = {}
    for mention in mentions:
        if mention.doc_id != doc.doc_id:
            raise ValueError(
                f"mention for {mention.doc_id!r} passed with document {doc.doc_id!r}"
            )
        core = index.locate(mention.start)
        window_start = max(0, core - WINDOW_RADIUS)
        window_end = min(last, core + WINDOW_RADIUS)
        key = (mention.repo_id, window_start, window_end)
        slot = merged.get(key)
        if slot is None:
            merged[key] = {"core": core, "count": 1}
        else:
            slot["count"] += 1
    windows = []
    for (repo_id, window_start, window_end), slot in merged.items():
        text = " ".join(
            doc.body_text[s:e] for s, e in index.spans[window_start : window_end + 1]
        )
        windows.append(
            ContextWindow(
                context_id=context_id_for(doc.doc_id, repo_id, window_start, window_end),
                doc_id=doc.doc_id,
                repo_id=repo_id,
                core_index=slot["core"],
                window_start=window_start,
                window_end=window_end,
                text=text,
                mention_count=slot["count"],
            )
        )
    return windows
