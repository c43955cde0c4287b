"""Pipeline configuration: YAML file, environment overrides, validation.

The config file is versioned YAML. Any scalar can be overridden with an
environment variable MINER_<SECTION>__<KEY> (double underscore nests, e.g.
MINER_CLASSIFIER__MODE=service). All referenced paths must exist at
validation time. The config hash identifies the computation, so run_dir is
excluded from it.
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .manifest import digest_text

CONFIG_VERSION = 1
ENV_PREFIX = "MINER_"

DEFAULTS: dict = {
    "config_version": CONFIG_VERSION,
    "seed": 0,
    "run_dir": None,
    "corpus": {"jsonl": [], "jats_dirs": [], "strict": True},
    "registry": {"path": None},
    "classifier": {
        "mode": "baseline",
        "endpoint": "http://127.0.0.1:8765",
        "truncation": "tail",
        "max_len": 512,
        "batch_size": 64,
        "checkpoint_every": 20,
        "max_retries": 3,
        "retry_backoff_base": 1.0,
    },
    "metadata": {
        "endpoint": None,
        "token_env": "MINER_META_TOKEN",
        "batch_size": 100,
        "rate_limit_per_second": 10.0,
        "cache": "metadata_cache.sqlite",
    },
    "sample": {"size": 10},
    "evaluation": {"averaging": "weighted"},
    "analytics": {
        "include_nothing": False,
        "per_document": False,
        "pair_weight": "pairs",
        "once_per_document": True,
        "repo_top_n": 20,
        "temporal_min_support": 50,
    },
    "workers": 1,
}


class ConfigError(ValueError):
    pass


def bundled_registry_path() -> Path:
    return Path(resources.files("repominer").joinpath("data/registry_default.csv"))


def _merge(base: dict, override: dict, trail: str = "") -> dict:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{trail}.{key}" if trail else key
        if key not in merged:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(merged[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where!r} must be a mapping")
            merged[key] = _merge(merged[key], value, where)
        else:
            merged[key] = value
    return merged


def _apply_env_overrides(data: dict, environ) -> dict:
    # variables that do not resolve to a config key (e.g. MINER_META_TOKEN,
    # which is a credential, not configuration) are left alone
    for name, raw in sorted(environ.items()):
        if not name.startswith(ENV_PREFIX):
            continue
        path = name[len(ENV_PREFIX):].lower().split("__")
        node = data
        for part in path[:-1]:
            if not isinstance(node.get(part), dict):
                node = None
                break
            node = node[part]
        if node is None or path[-1] not in node or isinstance(node[path[-1]], dict):
            continue
        node[path[-1]] = yaml.safe_load(raw)
    return data


@dataclass
class PipelineConfig:
    data: dict
    source_path: str

    def __getitem__(self, key: str):
        return self.data[key]

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    @property
    def workers(self) -> int:
        return int(self.data["workers"])

    @property
    def registry_path(self) -> Path:
        configured = self.data["registry"]["path"]
        return Path(configured) if configured else bundled_registry_path()

    @property
    def run_dir(self) -> Path:
        configured = self.data["run_dir"]
        return Path(configured) if configured else Path("runs") / self.run_id

    @property
    def config_hash(self) -> str:
        hashable = {k: v for k, v in self.data.items() if k != "run_dir"}
        return digest_text(json.dumps(hashable, sort_keys=True))

    @property
    def run_id(self) -> str:
        return self.config_hash.split(":", 1)[1][:12]

    def metadata_token(self) -> str:
        return os.environ.get(self.data["metadata"]["token_env"] or "", "")


def load_config(path: str | Path, environ=None) -> PipelineConfig:
    """Load, override, and validate a pipeline config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            loaded = yaml.safe_load(fh) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
    if not isinstance(loaded, dict):
        raise ConfigError(f"config file {path} must contain a mapping")

    version = loaded.get("config_version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config_version {version}, expected {CONFIG_VERSION}")

    data = _merge(DEFAULTS, loaded)
    data = _apply_env_overrides(data, environ if environ is not None else os.environ)
    _validate(data, base_dir=path.parent)
    return PipelineConfig(data=data, source_path=str(path))


def _validate(data: dict, base_dir: Path) -> None:
    if not isinstance(data["seed"], int):
        raise ConfigError("seed must be an integer")
    if data["workers"] < 1:
        raise ConfigError("workers must be >= 1")

    def resolve(p: str) -> str:
        candidate = Path(p)
        if not candidate.is_absolute():
            candidate = base_dir / candidate
        return str(candidate)

    corpus = data["corpus"]
    corpus["jsonl"] = [resolve(p) for p in corpus["jsonl"]]
    corpus["jats_dirs"] = [resolve(p) for p in corpus["jats_dirs"]]
    for p in corpus["jsonl"]:
        if not Path(p).is_file():
            raise ConfigError(f"corpus file not found: {p}")
    for p in corpus["jats_dirs"]:
        if not Path(p).is_dir():
            raise ConfigError(f"corpus directory not found: {p}")

    registry = data["registry"]
    if registry["path"]:
        registry["path"] = resolve(registry["path"])
        if not Path(registry["path"]).is_file():
            raise ConfigError(f"registry file not found: {registry['path']}")

    if data["run_dir"]:
        data["run_dir"] = resolve(data["run_dir"])

    classifier = data["classifier"]
    if classifier["mode"] not in ("baseline", "service"):
        raise ConfigError(f"classifier.mode must be baseline or service, got {classifier['mode']!r}")
    if classifier["truncation"] not in ("head", "tail", "middle", "split"):
        raise ConfigError(f"unknown truncation method {classifier['truncation']!r}")
    if classifier["max_len"] < 2:
        raise ConfigError("classifier.max_len must be >= 2")
    if classifier["batch_size"] < 1:
        raise ConfigError("classifier.batch_size must be >= 1")

    if data["evaluation"]["averaging"] not in ("weighted", "macro"):
        raise ConfigError("evaluation.averaging must be weighted or macro")

    analytics = data["analytics"]
    if analytics["pair_weight"] not in ("pairs", "links"):
        raise ConfigError("analytics.pair_weight must be pairs or links")
    if analytics["repo_top_n"] < 1:
        raise ConfigError("analytics.repo_top_n must be >= 1")
    if data["sample"]["size"] < 1:
        raise ConfigError("sample.size must be >= 1")
