"""miner: the pipeline command-line interface.

    miner <stage> --config <path> [--run-dir <path>] [--force] [--workers N]

Stages: ingest, match, contexts, sample, predict, evaluate, analyze,
export, plus annotate-export/annotate-import and `all` to run the eight
stages in order. Exit codes: 0 success, 2 config error, 3 stage-dependency
error, 4 external-service error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .classify import BatchClassificationError, ClassifierUnavailable
from .config import ConfigError, load_config
from .manifest import LockError, RunLock, RunManifest
from .metadata import MetadataAuthError, MetadataError
from .splits import SplitError
from .stages import (
    STAGES,
    StageDependencyError,
    StageError,
    run_stage,
    stage_annotate_export,
    stage_annotate_import,
)

log = logging.getLogger("miner")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEPENDENCY = 3
EXIT_SERVICE = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="miner",
        description="Detect repository mentions in full-text articles, classify their "
        "intent, and compute data-sharing analytics.",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="pipeline config file (YAML)")
        p.add_argument("--run-dir", default=None, help="run directory (default from config)")
        p.add_argument("--force", action="store_true", help="recompute even if up to date")
        p.add_argument("--workers", type=int, default=None, help="parallel workers")

    for stage in STAGES:
        p = sub.add_parser(stage, help=f"run the {stage} stage")
        add_common(p)

    p = sub.add_parser("all", help="run every stage in order (evaluate skipped without annotations)")
    add_common(p)

    p = sub.add_parser("annotate-export", help="export sampled contexts for labeling")
    add_common(p)
    p.add_argument("--out", required=True, help="output JSON file for the labeling tool")

    p = sub.add_parser("annotate-import", help="import labeled contexts")
    add_common(p)
    p.add_argument("--labels", required=True, help="labeled JSON file from the labeling tool")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        config = load_config(args.config)
        if args.workers is not None:
            config.data["workers"] = max(1, args.workers)
        run_dir = Path(args.run_dir) if args.run_dir else config.run_dir
        run_dir.mkdir(parents=True, exist_ok=True)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG

    try:
        with RunLock(run_dir):
            manifest = RunManifest.load_or_create(run_dir, config.run_id, config.config_hash)
            if args.command == "annotate-export":
                result = stage_annotate_export(config, run_dir, manifest, Path(args.out))
                results = [result]
            elif args.command == "annotate-import":
                result = stage_annotate_import(config, run_dir, manifest, Path(args.labels))
                manifest.save(run_dir)
                results = [result]
            elif args.command == "all":
                results = []
                for stage in STAGES:
                    if stage == "evaluate" and not (run_dir / "annotations.jsonl").exists():
                        log.info("evaluate: skipped (no annotations imported)")
                        continue
                    results.append(run_stage(stage, config, run_dir, manifest, force=args.force))
            else:
                results = [run_stage(args.command, config, run_dir, manifest, force=args.force)]
    except LockError as exc:
        log.error("%s", exc)
        return EXIT_DEPENDENCY
    except StageDependencyError as exc:
        log.error("%s", exc)
        return EXIT_DEPENDENCY
    except (ClassifierUnavailable, BatchClassificationError, MetadataAuthError, MetadataError) as exc:
        log.error("external service failure: %s", exc)
        return EXIT_SERVICE
    except (ConfigError, SplitError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except StageError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG

    for result in results:
        state = "skipped (up to date)" if result.skipped else "done"
        log.info("%s: %s %s", result.stage, state, result.counts)
    return EXIT_OK


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
