"""model-service command line: train an artifact or serve one.

    model-service train --train train.json --validation val.json \
        --artifact-dir artifacts/run1 [--config config.json]
    model-service serve --artifact artifacts/run1 [--host H] [--port P]
"""

from __future__ import annotations

import argparse
import json
import logging
import sys


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="model-service")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fine-tune and save an artifact")
    p.add_argument("--train", required=True, help="labeled JSON (text + label/gold)")
    p.add_argument("--validation", required=True)
    p.add_argument("--test", default=None)
    p.add_argument("--artifact-dir", required=True)
    p.add_argument("--config", default=None, help="JSON file of TrainingConfig overrides")

    p = sub.add_parser("serve", help="serve an artifact over the wire protocol")
    p.add_argument("--artifact", default=None, help="artifact directory to load at startup")
    p.add_argument("--artifact-root", default="artifacts")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "train":
        from .data import load_labeled_json
        from .training import TrainingConfig, train

        overrides = {}
        if args.config:
            with open(args.config, "r", encoding="utf-8") as fh:
                overrides = json.load(fh)
        config = TrainingConfig.from_dict(overrides)
        artifact = train(
            load_labeled_json(args.train),
            load_labeled_json(args.validation),
            config,
            args.artifact_dir,
            test_set=load_labeled_json(args.test) if args.test else None,
        )
        print(json.dumps({"model_id": artifact.model_id, "metrics": artifact.metrics}))
        return 0

    import uvicorn

    from .service import create_app

    app = create_app(artifact_root=args.artifact_root, artifact_path=args.artifact)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
