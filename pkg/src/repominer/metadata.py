"""Publication-metadata enrichment via an external HTTP JSON API.

Requests are batched, rate limited, retried with exponential backoff, and
cached in a local sqlite store keyed by doc_id so repeated runs make no
network calls. Providers that return disciplines without weights get a
uniform 1/k assignment, so each document's weights always sum to 1.
"""

from __future__ import annotations

import datetime
import json
import logging
import sqlite3
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import requests

from .documents import DisciplineAssignment

log = logging.getLogger(__name__)

DEFAULT_BATCH_SIZE = 100
DEFAULT_MAX_ATTEMPTS = 5
DEFAULT_BACKOFF_BASE = 1.0
DEFAULT_BACKOFF_FACTOR = 2.0


class MetadataError(RuntimeError):
    pass


class MetadataAuthError(MetadataError):
    """Authentication failure: fatal configuration error, never retried."""


class MetadataTransientError(MetadataError):
    """Server or network failure worth retrying."""


@dataclass(frozen=True)
class MetadataRecord:
    doc_id: str
    pub_year: int
    disciplines: tuple[DisciplineAssignment, ...]
    citation_count: int

    def __post_init__(self) -> None:
        if not (1800 <= self.pub_year <= datetime.date.today().year + 1):
            raise ValueError(f"pub_year {self.pub_year} out of range")
        if self.citation_count < 0:
            raise ValueError("citation_count must be non-negative")

    def to_json_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "pub_year": self.pub_year,
            "disciplines": [
                {"code": d.code, "name": d.name, "weight": d.weight} for d in self.disciplines
            ],
            "citation_count": self.citation_count,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "MetadataRecord":
        raw = payload.get("disciplines") or []
        weights = [d.get("weight") for d in raw]
        if raw and any(w is None for w in weights):
            # provider gave no weights: uniform fractional assignment
            weights = [1.0 / len(raw)] * len(raw)
        total = sum(weights) if weights else 0.0
        disciplines = tuple(
            DisciplineAssignment(
                code=str(d.get("code", d["name"])),
                name=str(d["name"]),
                weight=float(w) / total if total else 0.0,
            )
            for d, w in zip(raw, weights)
        )
        return cls(
            doc_id=str(payload["doc_id"]),
            pub_year=int(payload["pub_year"]),
            disciplines=disciplines,
            citation_count=int(payload.get("citation_count", 0)),
        )


class RateLimiter:
    """Minimum-interval limiter; serializes callers through one lock."""

    def __init__(self, requests_per_second: float):
        self.interval = 1.0 / requests_per_second if requests_per_second > 0 else 0.0
        self._lock = threading.Lock()
        self._last = 0.0

    def wait(self, sleep: Callable[[float], None] = time.sleep) -> None:
        with self._lock:
            now = time.monotonic()
            remaining = self.interval - (now - self._last)
            if remaining > 0:
                sleep(remaining)
            self._last = time.monotonic()


class MetadataCache:
    """Persistent doc_id -> record store (sqlite, WAL) under the run dir."""

    def __init__(self, path: str | Path):
        self.path = str(path)
        Path(self.path).parent.mkdir(parents=True, exist_ok=True)
        self._conn = sqlite3.connect(self.path, check_same_thread=False)
        self._conn.execute("PRAGMA journal_mode=WAL")
        self._conn.execute(
            "CREATE TABLE IF NOT EXISTS metadata (doc_id TEXT PRIMARY KEY, payload TEXT NOT NULL)"
        )
        self._conn.commit()
        self._write_lock = threading.Lock()

    def get_many(self, doc_ids: Sequence[str]) -> dict[str, MetadataRecord]:
        found: dict[str, MetadataRecord] = {}
        for doc_id in doc_ids:
            row = self._conn.execute(
                "SELECT payload FROM metadata WHERE doc_id = ?", (doc_id,)
            ).fetchone()
            if row is not None:
                found[doc_id] = MetadataRecord.from_payload(json.loads(row[0]))
        return found

    def put_many(self, records: Iterable[MetadataRecord]) -> None:
        with self._write_lock:
            self._conn.executemany(
                "INSERT OR REPLACE INTO metadata (doc_id, payload) VALUES (?, ?)",
                [
                    (r.doc_id, json.dumps(r.to_json_dict(), sort_keys=True))
                    for r in records
                ],
            )
            self._conn.commit()

    def __len__(self) -> int:
        return self._conn.execute("SELECT COUNT(*) FROM metadata").fetchone()[0]

    def close(self) -> None:
        self._conn.close()


class HttpMetadataClient:
    """Batched JSON-over-HTTP client for the metadata provider.

    POST {endpoint} with {"ids": [...]} and a bearer token; expects
    {"records": [{doc_id, pub_year, disciplines, citation_count}, ...]}.
    """

    def __init__(self, endpoint: str, token: str = "", timeout: float = 30.0):
        self.endpoint = endpoint
        self.timeout = timeout
        self.session = requests.Session()
        if token:
            self.session.headers["Authorization"] = f"Bearer {token}"

    def fetch_batch(self, doc_ids: Sequence[str]) -> list[dict]:
        try:
            resp = self.session.post(
                self.endpoint, json={"ids": list(doc_ids)}, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise MetadataTransientError(str(exc)) from exc
        if resp.status_code in (401, 403):
            raise MetadataAuthError(f"metadata API rejected credentials ({resp.status_code})")
        if resp.status_code >= 500 or resp.status_code == 429:
            raise MetadataTransientError(f"metadata API returned {resp.status_code}")
        if resp.status_code != 200:
            raise MetadataError(f"metadata API returned {resp.status_code}")
        body = resp.json()
        return body.get("records", [])


@dataclass
class EnrichmentResult:
    records: list[MetadataRecord]
    unresolved: list[str]
    failures: dict[str, str] = field(default_factory=dict)
    request_count: int = 0
    cache_hits: int = 0


def enrich_metadata(
    doc_ids: Sequence[str],
    client,
    cache: MetadataCache | None = None,
    batch_size: int = DEFAULT_BATCH_SIZE,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    backoff_base: float = DEFAULT_BACKOFF_BASE,
    backoff_factor: float = DEFAULT_BACKOFF_FACTOR,
    rate_limiter: RateLimiter | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> EnrichmentResult:
    """Resolve metadata for doc_ids, consulting the cache first.

    Transient batch failures are retried with exponential backoff (base 1s,
    factor 2, up to 5 attempts); exhausted batches land in `failures` and
    the affected ids in `unresolved`. Auth failures abort immediately.
    """
    result = EnrichmentResult(records=[], unresolved=[])
    pending: list[str] = []
    seen: set[str] = set()
    for doc_id in doc_ids:
        if doc_id in seen:
            continue
        seen.add(doc_id)
        pending.append(doc_id)

    if cache is not None and pending:
        cached = cache.get_many(pending)
        result.cache_hits = len(cached)
        result.records.extend(cached[d] for d in pending if d in cached)
        pending = [d for d in pending if d not in cached]

    for batch_start in range(0, len(pending), batch_size):
        batch = pending[batch_start : batch_start + batch_size]
        payloads = None
        for attempt in range(1, max_attempts + 1):
            if rate_limiter is not None:
                rate_limiter.wait(sleep)
            try:
                result.request_count += 1
                payloads = client.fetch_batch(batch)
                if attempt > 1:
                    log.info("metadata batch succeeded on attempt %d", attempt)
                break
            except MetadataTransientError as exc:
                log.warning(
                    "metadata batch attempt %d/%d failed: %s", attempt, max_attempts, exc
                )
                if attempt == max_attempts:
                    for doc_id in batch:
                        result.failures[doc_id] = str(exc)
                    break
                sleep(backoff_base * backoff_factor ** (attempt - 1))
        if payloads is None:
            result.unresolved.extend(batch)
            continue

        resolved: dict[str, MetadataRecord] = {}
        for payload in payloads:
            try:
                record = MetadataRecord.from_payload(payload)
            except (KeyError, TypeError, ValueError) as exc:
                doc_id = str(payload.get("doc_id", "<unknown>"))
                result.failures[doc_id] = f"bad payload: {exc}"
                continue
            resolved[record.doc_id] = record
        if cache is not None and resolved:
            cache.put_many(resolved.values())
        for doc_id in batch:
            if doc_id in resolved:
                result.records.append(resolved[doc_id])
            else:
                result.unresolved.append(doc_id)
                result.failures.setdefault(doc_id, "not returned by provider")
    return result


def apply_metadata(documents, records: Iterable[MetadataRecord]) -> int:
    """Copy pub_year and disciplines onto matching documents in place."""
    by_id = {r.doc_id: r for r in records}
    updated = 0
    for doc in documents:
        record = by_id.get(doc.doc_id)
        if record is None:
            continue
        doc.pub_year = record.pub_year
        doc.disciplines = list(record.disciplines)
        updated += 1
    return updated
