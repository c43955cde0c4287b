"""Run manifests, content digests, atomic writes, and the run lock.

Every completed stage records its input digest and the digest of every
file it wrote; downstream stages verify those digests before trusting an
intermediate. Outputs are always written to a temp name and renamed, so a
killed stage never leaves a partial file under its final name.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from . import __version__

MANIFEST_NAME = "manifest.json"
LOCK_NAME = "run.lock"


def digest_bytes(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def digest_text(text: str) -> str:
    return digest_bytes(text.encode("utf-8"))


def digest_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def digest_json(obj) -> str:
    return digest_text(json.dumps(obj, sort_keys=True, ensure_ascii=False))


def stage_seed(seed: int, stage: str) -> int:
    """Per-stage sub-seed derived from the single config seed."""
    h = hashlib.sha256(f"{seed}:{stage}".encode("utf-8")).hexdigest()
    return int(h[:16], 16)


def _utcnow() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp.{os.getpid()}")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def atomic_write_jsonl(path: str | Path, records: Iterable[dict]) -> int:
    lines = [json.dumps(r, ensure_ascii=False, sort_keys=True) for r in records]
    atomic_write_text(path, "".join(line + "\n" for line in lines))
    return len(lines)


def atomic_write_json(path: str | Path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n")


class LockError(RuntimeError):
    pass


class RunLock:
    """Exclusive ownership of a run directory via an O_EXCL lock file."""

    def __init__(self, run_dir: str | Path):
        self.path = Path(run_dir) / LOCK_NAME
        self._held = False

    def __enter__(self) -> "RunLock":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise LockError(
                f"run directory is locked by another process ({self.path}); "
                f"remove the lock file if that run is dead"
            ) from None
        with os.fdopen(fd, "w") as fh:
            fh.write(f"{os.getpid()}\n")
        self._held = True
        return self

    def __exit__(self, *exc_info) -> None:
        if self._held:
            try:
                self.path.unlink()
            except FileNotFoundError:
                pass
            self._held = False


@dataclass
class StageRecord:
    stage: str
    input_digest: str
    outputs: dict[str, str]
    counts: dict[str, int]
    started: str
    finished: str
    skipped: bool = False

    def to_json_dict(self) -> dict:
        return {
            "stage": self.stage,
            "input_digest": self.input_digest,
            "outputs": self.outputs,
            "counts": self.counts,
            "started": self.started,
            "finished": self.finished,
            "skipped": self.skipped,
        }


@dataclass
class RunManifest:
    run_id: str
    config_hash: str
    tool_version: str = __version__
    stages: dict[str, StageRecord] = field(default_factory=dict)

    @classmethod
    def load_or_create(cls, run_dir: str | Path, run_id: str, config_hash: str) -> "RunManifest":
        path = Path(run_dir) / MANIFEST_NAME
        if not path.exists():
            return cls(run_id=run_id, config_hash=config_hash)
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        manifest = cls(
            run_id=data["run_id"],
            config_hash=data["config_hash"],
            tool_version=data.get("tool_version", __version__),
        )
        for name, record in data.get("stages", {}).items():
            manifest.stages[name] = StageRecord(
                stage=name,
                input_digest=record["input_digest"],
                outputs=record["outputs"],
                counts=record.get("counts", {}),
                started=record.get("started", ""),
                finished=record.get("finished", ""),
                skipped=record.get("skipped", False),
            )
        return manifest

    def save(self, run_dir: str | Path) -> None:
        atomic_write_json(
            Path(run_dir) / MANIFEST_NAME,
            {
                "run_id": self.run_id,
                "config_hash": self.config_hash,
                "tool_version": self.tool_version,
                "stages": {name: rec.to_json_dict() for name, rec in self.stages.items()},
            },
        )

    def record(
        self,
        stage: str,
        input_digest: str,
        outputs: dict[str, str],
        counts: dict[str, int],
        started: str,
        skipped: bool = False,
    ) -> StageRecord:
        record = StageRecord(
            stage=stage,
            input_digest=input_digest,
            outputs=outputs,
            counts=counts,
            started=started,
            finished=_utcnow(),
            skipped=skipped,
        )
        self.stages[stage] = record
        return record

    def up_to_date(self, stage: str, input_digest: str, run_dir: str | Path) -> bool:
        """A stage may be skipped when its inputs and outputs both match."""
        record = self.stages.get(stage)
        if record is None or record.input_digest != input_digest:
            return False
        for name, expected in record.outputs.items():
            path = Path(run_dir) / name
            if not path.exists() or digest_file(path) != expected:
                return False
        return True

    def verify_output(self, stage: str, name: str, run_dir: str | Path) -> Path:
        """Path of a prior stage's output, digest-verified.

        Raises KeyError if the stage has not recorded that output."""
        record = self.stages.get(stage)
        if record is None or name not in record.outputs:
            raise KeyError(f"stage {stage!r} has not produced {name!r}")
        path = Path(run_dir) / name
        if not path.exists():
            raise FileNotFoundError(f"{name} (from stage {stage!r}) is missing")
        actual = digest_file(path)
        if actual != record.outputs[name]:
            raise ValueError(
                f"digest mismatch for {name} produced by stage {stage!r}: "
                f"expected {record.outputs[name]}, found {actual}; "
                f"re-run with --force to rebuild"
            )
        return path


def utcnow() -> str:
    return _utcnow()
