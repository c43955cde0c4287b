"""Pipeline stages: digest-gated, idempotent, atomically written.

Stage order mirrors the workflow: ingest -> match -> contexts -> sample ->
predict -> evaluate -> analyze -> export, plus annotation import/export.
Re-running a completed stage with unchanged inputs is a no-op recorded as a
skip; a corrupted intermediate fails with a digest mismatch naming the
producing stage. The predict stage checkpoints periodically and resumes
from its last checkpoint after an interruption.
"""

from __future__ import annotations

import json
import os
import random
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from types import SimpleNamespace
from typing import Callable, Sequence

from . import analytics as an
from . import networks as nets
from .classify import (
    BaselineClassifier,
    BatchClassificationError,
    ServiceClassifier,
    classify,
)
from .config import PipelineConfig
from .contexts import ContextWindow, extract_contexts
from .documents import Document, LoadDiagnostic, load_jsonl
from .evaluation import evaluate
from .jats import EmptyDocumentError, JatsParseError, parse_jats
from .labels import (
    IntentLabel,
    Prediction,
    export_annotation_tasks,
    import_annotations,
    read_annotations_jsonl,
    write_annotations_jsonl,
)
from .manifest import (
    RunManifest,
    atomic_write_json,
    atomic_write_jsonl,
    digest_file,
    digest_json,
    stage_seed,
    utcnow,
)
from .registry import Mention, compile_registry, find_mentions, load_registry
from .sentences import segment_sentences

STAGES = ("ingest", "match", "contexts", "sample", "predict", "evaluate", "analyze", "export")

DOCUMENTS_FILE = "documents.jsonl"
MENTIONS_FILE = "mentions.jsonl"
CONTEXTS_FILE = "contexts.jsonl"
TASK_FILE = "annotation_task.json"
ANNOTATIONS_FILE = "annotations.jsonl"
PREDICTIONS_FILE = "predictions.jsonl"
EVAL_FILE = "eval_report.json"
ANALYTICS_FILE = "analytics.json"

_CHECKPOINT_STATE = "predict.checkpoint.json"
_CHECKPOINT_PART = "predictions.part.jsonl"


class StageError(RuntimeError):
    pass


class StageDependencyError(StageError):
    """A prerequisite stage has not run, or its output is corrupted."""


class StageResult:
    def __init__(self, stage: str, skipped: bool, counts: dict):
        self.stage = stage
        self.skipped = skipped
        self.counts = counts

    def __repr__(self) -> str:
        state = "skipped" if self.skipped else "completed"
        return f"<stage {self.stage} {state} {self.counts}>"


def _require(manifest: RunManifest, run_dir: Path, stage: str, name: str) -> Path:
    try:
        return manifest.verify_output(stage, name, run_dir)
    except KeyError as exc:
        raise StageDependencyError(
            f"stage {stage!r} must run before this one ({exc})"
        ) from exc
    except FileNotFoundError as exc:
        raise StageDependencyError(f"stage {stage!r} output is missing: {exc}") from exc
    except ValueError as exc:
        raise StageDependencyError(str(exc)) from exc


def _parallel_map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _load_documents(path: Path) -> list[Document]:
    return list(load_jsonl(path))


def _load_mentions(path: Path) -> list[Mention]:
    with open(path, "r", encoding="utf-8") as fh:
        return [Mention.from_json_dict(json.loads(line)) for line in fh if line.strip()]


def _load_contexts(path: Path) -> list[ContextWindow]:
    with open(path, "r", encoding="utf-8") as fh:
        return [ContextWindow.from_json_dict(json.loads(line)) for line in fh if line.strip()]


def _load_predictions(path: Path) -> list[Prediction]:
    with open(path, "r", encoding="utf-8") as fh:
        return [Prediction.from_json_dict(json.loads(line)) for line in fh if line.strip()]


def stage_ingest(config: PipelineConfig, run_dir: Path, manifest: RunManifest, force: bool) -> StageResult:
    corpus = config["corpus"]
    source_files: list[Path] = [Path(p) for p in corpus["jsonl"]]
    jats_files: list[Path] = []
    for root in corpus["jats_dirs"]:
        jats_files.extend(sorted(Path(root).rglob("*.xml")))
    input_digest = digest_json(
        {
            "corpus": corpus,
            "files": {str(p): digest_file(p) for p in source_files + jats_files},
        }
    )
    started = utcnow()
    if not force and manifest.up_to_date("ingest", input_digest, run_dir):
        manifest.stages["ingest"].skipped = True
        return StageResult("ingest", True, manifest.stages["ingest"].counts)

    documents: list[Document] = []
    counts = {"documents": 0, "skipped_lines": 0, "parse_errors": 0}
    diagnostics: list[LoadDiagnostic] = []
    for path in source_files:
        for doc in load_jsonl(path, lenient=not corpus["strict"], diagnostics=diagnostics):
            documents.append(doc)
    counts["skipped_lines"] = len(diagnostics)

    def parse_one(path: Path):
        try:
            return parse_jats(path.read_bytes(), source_path=str(path))
        except (JatsParseError, EmptyDocumentError) as exc:
            if corpus["strict"]:
                raise StageError(f"ingest failed on {path}: {exc}") from exc
            return None

    for parsed in _parallel_map(parse_one, jats_files, config.workers):
        if parsed is None:
            counts["parse_errors"] += 1
        else:
            documents.append(parsed)

    counts["documents"] = len(documents)
    atomic_write_jsonl(run_dir / DOCUMENTS_FILE, (d.to_json_dict() for d in documents))
    outputs = {DOCUMENTS_FILE: digest_file(run_dir / DOCUMENTS_FILE)}
    manifest.record("ingest", input_digest, outputs, counts, started)
    return StageResult("ingest", False, counts)


def stage_match(config: PipelineConfig, run_dir: Path, manifest: RunManifest, force: bool) -> StageResult:
    documents_path = _require(manifest, run_dir, "ingest", DOCUMENTS_FILE)
    registry_path = config.registry_path
    input_digest = digest_json(
        {
            "documents": digest_file(documents_path),
            "registry": digest_file(registry_path),
        }
    )
    started = utcnow()
    if not force and manifest.up_to_date("match", input_digest, run_dir):
        manifest.stages["match"].skipped = True
        return StageResult("match", True, manifest.stages["match"].counts)

    registry = compile_registry(load_registry(str(registry_path)))
    documents = _load_documents(documents_path)
    per_doc = _parallel_map(lambda d: find_mentions(d, registry), documents, config.workers)
    mentions = [m for batch in per_doc for m in batch]
    counts = {
        "documents": len(documents),
        "mentions": len(mentions),
        "documents_with_mentions": sum(1 for batch in per_doc if batch),
    }
    atomic_write_jsonl(run_dir / MENTIONS_FILE, (m.to_json_dict() for m in mentions))
    outputs = {MENTIONS_FILE: digest_file(run_dir / MENTIONS_FILE)}
    manifest.record("match", input_digest, outputs, counts, started)
    return StageResult("match", False, counts)


def stage_contexts(config: PipelineConfig, run_dir: Path, manifest: RunManifest, force: bool) -> StageResult:
    documents_path = _require(manifest, run_dir, "ingest", DOCUMENTS_FILE)
    mentions_path = _require(manifest, run_dir, "match", MENTIONS_FILE)
    input_digest = digest_json(
        {
            "documents": digest_file(documents_path),
            "mentions": digest_file(mentions_path),
        }
    )
    started = utcnow()
    if not force and manifest.up_to_date("contexts", input_digest, run_dir):
        manifest.stages["contexts"].skipped = True
        return StageResult("contexts", True, manifest.stages["contexts"].counts)

    documents = _load_documents(documents_path)
    mentions = _load_mentions(mentions_path)
    by_doc: dict[str, list[Mention]] = {}
    for mention in mentions:
        by_doc.setdefault(mention.doc_id, []).append(mention)

    def one(doc: Document):
        doc_mentions = by_doc.get(doc.doc_id)
        if not doc_mentions:
            return []
        return extract_contexts(doc, doc_mentions, segment_sentences(doc))

    per_doc = _parallel_map(one, documents, config.workers)
    contexts = [ctx for batch in per_doc for ctx in batch]
    counts = {
        "contexts": len(contexts),
        "articles_with_contexts": sum(1 for batch in per_doc if batch),
        "merged_mentions": sum(ctx.mention_count for ctx in contexts) - len(contexts),
    }
    atomic_write_jsonl(run_dir / CONTEXTS_FILE, (c.to_json_dict() for c in contexts))
    outputs = {CONTEXTS_FILE: digest_file(run_dir / CONTEXTS_FILE)}
    manifest.record("contexts", input_digest, outputs, counts, started)
    return StageResult("contexts", False, counts)


def stage_sample(config: PipelineConfig, run_dir: Path, manifest: RunManifest, force: bool) -> StageResult:
    contexts_path = _require(manifest, run_dir, "contexts", CONTEXTS_FILE)
    sample_cfg = config["sample"]
    input_digest = digest_json(
        {
            "contexts": digest_file(contexts_path),
            "sample": sample_cfg,
            "seed": config.seed,
        }
    )
    started = utcnow()
    if not force and manifest.up_to_date("sample", input_digest, run_dir):
        manifest.stages["sample"].skipped = True
        return StageResult("sample", True, manifest.stages["sample"].counts)

    contexts = _load_contexts(contexts_path)
    population = sorted({ctx.doc_id for ctx in contexts})
    size = int(sample_cfg["size"])
    if size > len(population):
        raise StageError(
            f"sample size {size} exceeds population of {len(population)} articles with mentions"
        )
    rng = random.Random(stage_seed(config.seed, "sample"))
    chosen = set(rng.sample(population, size))
    sampled_contexts = [ctx for ctx in contexts if ctx.doc_id in chosen]
    export_annotation_tasks(sampled_contexts, run_dir / TASK_FILE)
    counts = {"articles": size, "contexts": len(sampled_contexts)}
    outputs = {TASK_FILE: digest_file(run_dir / TASK_FILE)}
    manifest.record("sample", input_digest, outputs, counts, started)
    return StageResult("sample", False, counts)


def _build_classifier(config: PipelineConfig):
    classifier_cfg = config["classifier"]
    if classifier_cfg["mode"] == "service":
        return ServiceClassifier(classifier_cfg["endpoint"])
    return BaselineClassifier()


def stage_predict(config: PipelineConfig, run_dir: Path, manifest: RunManifest, force: bool) -> StageResult:
    contexts_path = _require(manifest, run_dir, "contexts", CONTEXTS_FILE)
    classifier_cfg = config["classifier"]
    input_digest = digest_json(
        {"contexts": digest_file(contexts_path), "classifier": classifier_cfg}
    )
    started = utcnow()
    if not force and manifest.up_to_date("predict", input_digest, run_dir):
        manifest.stages["predict"].skipped = True
        return StageResult("predict", True, manifest.stages["predict"].counts)

    contexts = _load_contexts(contexts_path)
    state_path = run_dir / _CHECKPOINT_STATE
    part_path = run_dir / _CHECKPOINT_PART

    done: list[Prediction] = []
    if state_path.exists() and part_path.exists() and not force:
        with open(state_path, "r", encoding="utf-8") as fh:
            state = json.load(fh)
        if state.get("input_digest") == input_digest:
            done = _load_predictions(part_path)[: state.get("completed", 0)]

    remaining = contexts[len(done):]
    classifier = _build_classifier(config)
    checkpoint_every = max(1, int(classifier_cfg["checkpoint_every"]))

    def checkpoint(collected_so_far: list[Prediction]) -> None:
        # rewrite the whole part file: atomic and restart-safe
        atomic_write_jsonl(part_path, (p.to_json_dict() for p in done + collected_so_far))
        atomic_write_json(
            state_path,
            {"input_digest": input_digest, "completed": len(done) + len(collected_so_far)},
        )

    collected: list[Prediction] = []

    def on_batch_done(batch_index: int, batch_predictions: list[Prediction]) -> None:
        collected.extend(batch_predictions)
        if (batch_index + 1) % checkpoint_every == 0:
            checkpoint(collected)

    try:
        classify(
            remaining,
            classifier,
            batch_size=int(classifier_cfg["batch_size"]),
            truncation=classifier_cfg["truncation"],
            max_len=int(classifier_cfg["max_len"]),
            max_retries=int(classifier_cfg["max_retries"]),
            backoff_base=float(classifier_cfg["retry_backoff_base"]),
            on_batch_done=on_batch_done,
        )
    except BatchClassificationError as exc:
        checkpoint(exc.completed)
        raise

    predictions = done + collected
    counts = {"contexts": len(contexts), "predictions": len(predictions), "resumed_from": len(done)}
    atomic_write_jsonl(run_dir / PREDICTIONS_FILE, (p.to_json_dict() for p in predictions))
    for stale in (state_path, part_path):
        if stale.exists():
            os.unlink(stale)
    outputs = {PREDICTIONS_FILE: digest_file(run_dir / PREDICTIONS_FILE)}
    manifest.record("predict", input_digest, outputs, counts, started)
    return StageResult("predict", False, counts)


def stage_evaluate(config: PipelineConfig, run_dir: Path, manifest: RunManifest, force: bool) -> StageResult:
    predictions_path = _require(manifest, run_dir, "predict", PREDICTIONS_FILE)
    annotations_path = run_dir / ANNOTATIONS_FILE
    if not annotations_path.exists():
        raise StageDependencyError(
            "no annotations present; run `miner annotate-import` before evaluate"
        )
    averaging = config["evaluation"]["averaging"]
    input_digest = digest_json(
        {
            "predictions": digest_file(predictions_path),
            "annotations": digest_file(annotations_path),
            "averaging": averaging,
        }
    )
    started = utcnow()
    if not force and manifest.up_to_date("evaluate", input_digest, run_dir):
        manifest.stages["evaluate"].skipped = True
        return StageResult("evaluate", True, manifest.stages["evaluate"].counts)

    predictions = _load_predictions(predictions_path)
    golds = read_annotations_jsonl(annotations_path)
    report = evaluate(predictions, golds, averaging=averaging)
    atomic_write_json(run_dir / EVAL_FILE, report.to_json_dict())
    counts = {"evaluated": report.total}
    outputs = {EVAL_FILE: digest_file(run_dir / EVAL_FILE)}
    manifest.record("evaluate", input_digest, outputs, counts, started)
    return StageResult("evaluate", False, counts)


def stage_analyze(config: PipelineConfig, run_dir: Path, manifest: RunManifest, force: bool) -> StageResult:
    documents_path = _require(manifest, run_dir, "ingest", DOCUMENTS_FILE)
    mentions_path = _require(manifest, run_dir, "match", MENTIONS_FILE)
    contexts_path = _require(manifest, run_dir, "contexts", CONTEXTS_FILE)
    predictions_path = _require(manifest, run_dir, "predict", PREDICTIONS_FILE)
    analytics_cfg = config["analytics"]
    input_digest = digest_json(
        {
            "documents": digest_file(documents_path),
            "mentions": digest_file(mentions_path),
            "contexts": digest_file(contexts_path),
            "predictions": digest_file(predictions_path),
            "analytics": analytics_cfg,
        }
    )
    started = utcnow()
    if not force and manifest.up_to_date("analyze", input_digest, run_dir):
        manifest.stages["analyze"].skipped = True
        return StageResult("analyze", True, manifest.stages["analyze"].counts)

    documents = {d.doc_id: d for d in _load_documents(documents_path)}
    mentions = _load_mentions(mentions_path)
    contexts = _load_contexts(contexts_path)
    predictions = _load_predictions(predictions_path)

    label_counts = [0, 0, 0, 0]
    for pred in predictions:
        label_counts[int(pred.label)] += 1

    discipline = an.discipline_intent_distribution(
        predictions,
        contexts,
        documents,
        include_nothing=bool(analytics_cfg["include_nothing"]),
        per_document=bool(analytics_cfg["per_document"]),
    )
    temporal = an.temporal_distribution(
        predictions, contexts, documents, min_support=int(analytics_cfg["temporal_min_support"])
    )
    networks = {}
    for intent in (IntentLabel.RELEASE, IntentLabel.REUSE, IntentLabel.REFERENCE):
        net = nets.cooccurrence_network(
            predictions,
            contexts,
            documents,
            intent,
            pair_weight=analytics_cfg["pair_weight"],
            once_per_document=bool(analytics_cfg["once_per_document"]),
        )
        networks[intent.display.lower()] = net.to_json_dict()

    payload = {
        "settings": {
            **analytics_cfg,
            "context_merge_rule": "same repo_id + identical window merged, mention_count incremented",
        },
        "top_repositories": [
            [repo_id, count] for repo_id, count in an.top_repositories(mentions, n=10 ** 9)
        ],
        "label_distribution": {
            "counts": label_counts,
            "proportions": list(an.label_distribution(predictions)) if predictions else [0, 0, 0, 0],
        },
        "repo_intent": [
            d.to_json_dict()
            for d in an.repo_intent_distribution(
                predictions, contexts, top_n=int(analytics_cfg["repo_top_n"])
            )
        ],
        "discipline_intent": {
            "distributions": [d.to_json_dict() for d in discipline.distributions],
            "unclassified": discipline.unclassified.to_json_dict() if discipline.unclassified else None,
            "included_labels": [label.display for label in discipline.included_labels],
        },
        "temporal": {
            "distributions": [d.to_json_dict() for d in temporal.distributions],
            "low_support_years": temporal.low_support_years,
            "missing_year_contexts": temporal.missing_year_contexts,
        },
        "networks": networks,
    }
    atomic_write_json(run_dir / ANALYTICS_FILE, payload)
    counts = {
        "predictions": len(predictions),
        "disciplines": len(discipline.distributions),
        "years": len(temporal.distributions),
    }
    outputs = {ANALYTICS_FILE: digest_file(run_dir / ANALYTICS_FILE)}
    manifest.record("analyze", input_digest, outputs, counts, started)
    return StageResult("analyze", False, counts)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    import csv as _csv
    import io

    buffer = io.StringIO()
    writer = _csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    from .manifest import atomic_write_text

    atomic_write_text(path, buffer.getvalue())


def _fmt(x: float) -> str:
    return repr(float(x))


def stage_export(config: PipelineConfig, run_dir: Path, manifest: RunManifest, force: bool) -> StageResult:
    analytics_path = _require(manifest, run_dir, "analyze", ANALYTICS_FILE)
    input_digest = digest_json({"analytics": digest_file(analytics_path)})
    started = utcnow()
    if not force and manifest.up_to_date("export", input_digest, run_dir):
        manifest.stages["export"].skipped = True
        return StageResult("export", True, manifest.stages["export"].counts)

    with open(analytics_path, "r", encoding="utf-8") as fh:
        data = json.load(fh)

    label_names = [label.display for label in IntentLabel]
    outputs: dict[str, str] = {}

    _write_csv(
        run_dir / "fig1_top_repos.csv",
        ["repo_id", "count"],
        [[repo_id, count] for repo_id, count in data["top_repositories"][:10]],
    )
    dist = data["label_distribution"]
    _write_csv(
        run_dir / "fig2_labels.csv",
        ["label", "count", "proportion"],
        [
            [label_names[i], dist["counts"][i], _fmt(dist["proportions"][i])]
            for i in range(len(label_names))
        ],
    )
    _write_csv(
        run_dir / "fig3_repo_intent.csv",
        ["repo_id", "label", "count", "proportion"],
        [
            [d["group_key"], label_names[i], _fmt(d["counts"][i]), _fmt(d["proportions"][i])]
            for d in data["repo_intent"]
            for i in range(len(label_names))
        ],
    )
    included = data["discipline_intent"]["included_labels"]
    _write_csv(
        run_dir / "fig4_discipline_intent.csv",
        ["discipline", "label", "weight", "proportion"],
        [
            [d["group_key"], name, _fmt(d["counts"][label_names.index(name)]), _fmt(d["proportions"][label_names.index(name)])]
            for d in data["discipline_intent"]["distributions"]
            for name in included
        ],
    )
    low_support = set(data["temporal"]["low_support_years"])
    _write_csv(
        run_dir / "fig5_temporal.csv",
        ["year", "label", "count", "proportion", "low_support"],
        [
            [
                d["group_key"],
                name,
                _fmt(d["counts"][label_names.index(name)]),
                _fmt(d["proportions"][label_names.index(name)]),
                str(int(d["group_key"]) in low_support).lower(),
            ]
            for d in data["temporal"]["distributions"]
            for name in ("Release", "Reuse", "Reference")
        ],
    )
    for name in ("fig1_top_repos.csv", "fig2_labels.csv", "fig3_repo_intent.csv",
                 "fig4_discipline_intent.csv", "fig5_temporal.csv"):
        outputs[name] = digest_file(run_dir / name)

    for intent_name, net_data in sorted(data["networks"].items()):
        net = nets.CoocNetwork.from_json_dict(net_data)
        edge_name = f"network_{intent_name}_edges.csv"
        pajek_name = f"network_{intent_name}.net"
        nets.export_network(net, "edge_csv", run_dir / edge_name)
        nets.export_network(net, "pajek", run_dir / pajek_name)
        outputs[edge_name] = digest_file(run_dir / edge_name)
        outputs[pajek_name] = digest_file(run_dir / pajek_name)

    counts = {"files": len(outputs)}
    manifest.record("export", input_digest, outputs, counts, started)
    return StageResult("export", False, counts)


def stage_annotate_export(
    config: PipelineConfig, run_dir: Path, manifest: RunManifest, out_path: Path
) -> StageResult:
    task_path = _require(manifest, run_dir, "sample", TASK_FILE)
    golds = {}
    annotations_path = run_dir / ANNOTATIONS_FILE
    if annotations_path.exists():
        golds = {r.context_id: r for r in read_annotations_jsonl(annotations_path)}
    with open(task_path, "r", encoding="utf-8") as fh:
        items = json.load(fh)
    stubs = [SimpleNamespace(context_id=i["context_id"], text=i["text"]) for i in items]
    count = export_annotation_tasks(stubs, out_path, golds=golds)
    return StageResult("annotate-export", False, {"items": count})


def stage_annotate_import(
    config: PipelineConfig, run_dir: Path, manifest: RunManifest, labels_path: Path
) -> StageResult:
    skipped: list[str] = []
    records = import_annotations(labels_path, skipped=skipped)
    started = utcnow()
    write_annotations_jsonl(records, run_dir / ANNOTATIONS_FILE)
    counts = {"annotations": len(records), "unlabeled_skipped": len(skipped)}
    manifest.record(
        "annotate-import",
        digest_file(labels_path),
        {ANNOTATIONS_FILE: digest_file(run_dir / ANNOTATIONS_FILE)},
        counts,
        started,
    )
    return StageResult("annotate-import", False, counts)


_STAGE_FUNCS = {
    "ingest": stage_ingest,
    "match": stage_match,
    "contexts": stage_contexts,
    "sample": stage_sample,
    "predict": stage_predict,
    "evaluate": stage_evaluate,
    "analyze": stage_analyze,
    "export": stage_export,
}


def run_stage(
    stage: str, config: PipelineConfig, run_dir: Path, manifest: RunManifest, force: bool = False
) -> StageResult:
    if stage not in _STAGE_FUNCS:
        raise StageError(f"unknown stage {stage!r}")
    result = _STAGE_FUNCS[stage](config, run_dir, manifest, force)
    manifest.save(run_dir)
    return result
