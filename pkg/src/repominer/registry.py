"""Trusted-repository registry and multi-pattern mention matching.

The registry is a CSV of normalized URL prefixes grouped by repository. For
matching, all patterns are compiled into a character trie; scanning a
document is a single pass over its URL-like tokens, with each candidate
token walked through the trie once. A pattern matches a token when it is a
prefix of the normalized token and the token either ends there or continues
at a path/query/fragment/port boundary — "zenodo.org" matches
"zenodo.org/record/1" but not "zenodo.org.evil.com". When several patterns
match one token the longest wins and exactly one mention is emitted.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, TYPE_CHECKING

from .urls import iter_url_tokens, normalize_url

if TYPE_CHECKING:
    from .documents import Document

REPOSITORY_KINDS = ("data", "literature")

# Characters that may follow a matched pattern inside a longer URL.
BOUNDARY_CHARS = "/?#:"

_REQUIRED_COLUMNS = ("repo_id", "display_name", "pattern", "kind")


class RegistryError(ValueError):
    """Invalid registry file or entry."""


@dataclass(frozen=True)
class RepositoryEntry:
    repo_id: str
    display_name: str
    patterns: tuple[str, ...]
    kind: str

    def __post_init__(self) -> None:
        if not self.repo_id:
            raise RegistryError("repo_id must be non-empty")
        if not self.patterns:
            raise RegistryError(f"entry {self.repo_id!r} has no patterns")
        if self.kind not in REPOSITORY_KINDS:
            raise RegistryError(f"entry {self.repo_id!r} has unknown kind {self.kind!r}")
        for pattern in self.patterns:
            if not pattern:
                raise RegistryError(f"entry {self.repo_id!r} has an empty pattern")
            if pattern != pattern.lower():
                raise RegistryError(f"pattern {pattern!r} is not lowercase")
            if "://" in pattern:
                raise RegistryError(f"pattern {pattern!r} still carries a scheme")
            if pattern.startswith("www."):
                raise RegistryError(f"pattern {pattern!r} starts with 'www.'")


@dataclass(frozen=True)
class Mention:
    """One occurrence of a repository URL in a document's body text."""

    doc_id: str
    repo_id: str
    start: int
    end: int
    matched_text: str
    normalized_url: str

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise ValueError(f"bad mention span [{self.start}, {self.end})")

    def to_json_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "repo_id": self.repo_id,
            "start": self.start,
            "end": self.end,
            "matched_text": self.matched_text,
            "normalized_url": self.normalized_url,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Mention":
        return cls(
            doc_id=data["doc_id"],
            repo_id=data["repo_id"],
            start=int(data["start"]),
            end=int(data["end"]),
            matched_text=data["matched_text"],
            normalized_url=data["normalized_url"],
        )


def load_registry(path: str) -> list[RepositoryEntry]:
    """Load repository entries from a CSV with one row per pattern.

    Rows are grouped by repo_id and every pattern is normalized. Duplicate
    identical patterns are rejected; the same pattern under two different
    repo_ids is a fatal ambiguity naming both.
    """
    groups: dict[str, dict] = {}
    pattern_owner: dict[str, str] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [col for col in _REQUIRED_COLUMNS if col not in header]
        if missing:
            raise RegistryError(f"registry {path}: missing columns {missing}")
        for line_no, row in enumerate(reader, start=2):
            repo_id = (row["repo_id"] or "").strip()
            if not repo_id:
                raise RegistryError(f"registry {path} line {line_no}: empty repo_id")
            pattern = normalize_url(row["pattern"] or "")
            if not pattern:
                raise RegistryError(f"registry {path} line {line_no}: empty pattern")
            owner = pattern_owner.get(pattern)
            if owner is not None:
                if owner != repo_id:
                    raise RegistryError(
                        f"registry {path} line {line_no}: pattern {pattern!r} is "
                        f"claimed by both {owner!r} and {repo_id!r}"
                    )
                raise RegistryError(
                    f"registry {path} line {line_no}: duplicate pattern {pattern!r} "
                    f"for {repo_id!r}"
                )
            pattern_owner[pattern] = repo_id
            group = groups.setdefault(
                repo_id,
                {"display_name": (row["display_name"] or "").strip(), "kind": (row["kind"] or "").strip(), "patterns": []},
            )
            group["patterns"].append(pattern)
    return [
        RepositoryEntry(
            repo_id=repo_id,
            display_name=group["display_name"] or repo_id,
            patterns=tuple(group["patterns"]),
            kind=group["kind"] or "data",
        )
        for repo_id, group in groups.items()
    ]


class CompiledRegistry:
    """All registry patterns compiled into one prefix trie.

    Immutable after construction; shareable across concurrent scans.
    """

    def __init__(self, entries: Iterable[RepositoryEntry]):
        self.entries = tuple(entries)
        self._root: dict = {}
        self._requires_dot = True
        seen: dict[str, str] = {}
        for entry in self.entries:
            for pattern in entry.patterns:
                if pattern in seen and seen[pattern] != entry.repo_id:
                    raise RegistryError(
                        f"pattern {pattern!r} is claimed by both {seen[pattern]!r} "
                        f"and {entry.repo_id!r}"
                    )
                seen[pattern] = entry.repo_id
                if "." not in pattern:
                    self._requires_dot = False
                node = self._root
                for ch in pattern:
                    node = node.setdefault(ch, {})
                node[""] = (pattern, entry.repo_id)
        self._display_names = {e.repo_id: e.display_name for e in self.entries}

    @property
    def requires_dot(self) -> bool:
        return self._requires_dot

    def display_name(self, repo_id: str) -> str:
        return self._display_names.get(repo_id, repo_id)

    def match_normalized(self, normalized: str) -> tuple[str, str] | None:
        """Longest pattern that prefixes `normalized` at a valid boundary.

        Returns (pattern, repo_id) or None.
        """
        node = self._root
        best: tuple[str, str] | None = None
        for ch in normalized:
            terminal = node.get("")
            if terminal is not None and ch in BOUNDARY_CHARS:
                best = terminal
            node = node.get(ch)
            if node is None:
                return best
        terminal = node.get("")
        if terminal is not None:
            best = terminal
        return best


def compile_registry(entries: Iterable[RepositoryEntry]) -> CompiledRegistry:
    return CompiledRegistry(entries)


def find_mentions(doc: "Document", registry: CompiledRegistry) -> list[Mention]:
    """Scan a document for repository URLs; offsets index the original text.

    Matching is case-insensitive (tokens are normalized before the trie
    walk) and side-effect free; documents with no match return [].
    """
    mentions: list[Mention] = []
    body = doc.body_text
    for token, start, end in iter_url_tokens(body, require_dot=registry.requires_dot):
        normalized = normalize_url(token)
        if not normalized:
            continue
        hit = registry.match_normalized(normalized)
        if hit is None:
            continue
        _, repo_id = hit
        mentions.append(
            Mention(
                doc_id=doc.doc_id,
                repo_id=repo_id,
                start=start,
                end=end,
                matched_text=body[start:end],
                normalized_url=normalized,
            )
        )
    return mentions
