#!/usr/bin/env python3
"""Generate the bundled 50-document synthetic corpus and its golden outputs.

Writes tests/fixtures/corpus_50.jsonl, annotations_gold.json, and the
golden/ directory by running the real pipeline once. Regenerate only when
pipeline semantics intentionally change; the acceptance suite compares
byte-for-byte against the committed outputs.

Usage: python scripts/make_synthetic_corpus.py
"""

from __future__ import annotations

import json
import random
import shutil
import sys
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "tests" / "fixtures"

sys.path.insert(0, str(REPO_ROOT / "src"))

from repominer.cli import main as miner_main
from repominer.documents import DEFAULT_DISCIPLINES, DisciplineAssignment, Document, write_jsonl
from repominer.labels import IntentLabel

SEED = 20240301

# (intent, sentence template) — cue phrases chosen so the keyword baseline
# recovers the planted label from the core sentence
SENTENCES = {
    IntentLabel.RELEASE: [
        "The raw measurements generated in this work have been deposited at {url} under accession {acc}.",
        "All processed tables were released through {url} for unrestricted access.",
        "Our imaging series is available at {url} with accession code {acc}.",
    ],
    IntentLabel.REUSE: [
        "Reference panels were downloaded from {url} before harmonization.",
        "Historical records were obtained from {url} and merged with site logs.",
        "We used the public catalogue at {url} to select candidate markers.",
    ],
    IntentLabel.REFERENCE: [
        "Comparable resources are listed in {url} for interested readers.",
        "See {url} for an overview of related collections.",
        "Trait names were cross-referenced against {url} during curation.",
    ],
    IntentLabel.NOTHING: [
        "The following link will take you to the submission record so reviewers can upload your files directly: {url}.",
        "Automated notice: complete your upload at {url}/submit?journalID=J{acc} to finish the process.",
    ],
}

FILLER = [
    "The cohort comprised {n} participants enrolled across {m} clinical sites.",
    "Measurements were repeated in triplicate under identical conditions.",
    "Results indicate a robust association with the primary outcome.",
    "The protocol was preregistered before recruitment began.",
    "Statistical significance was assessed with a two-sided test.",
    "Figure {m} summarizes the distribution of responses by group.",
    "Sensitivity analyses produced consistent estimates throughout.",
    "Sampling continued until saturation was reached in every stratum.",
    "Model residuals showed no departure from the stated assumptions.",
    "The instrument was calibrated weekly against certified standards.",
]

# (repo_id, url template) drawn from the bundled default registry
URL_FORMS = [
    ("zenodo", "https://zenodo.org/record/{id}"),
    ("zenodo", "zenodo.org/record/{id}"),
    ("figshare", "https://figshare.com/articles/dataset/{id}"),
    ("dryad", "http://datadryad.org/stash/dataset/doi:{id}"),
    ("osf", "https://osf.io/ab{id}"),
    ("gwas-catalog", "https://www.ebi.ac.uk/gwas/"),
    ("arrayexpress", "http://www.ebi.ac.uk/arrayexpress"),
    ("ebi-ac-uk", "https://www.ebi.ac.uk/biosamples/{id}"),
    ("uniprot", "http://www.uniprot.org/uniprot/P{id}"),
    ("geo", "https://www.ncbi.nlm.nih.gov/geo/query/acc.cgi?acc=GSE{id}"),
    ("pangaea", "WWW.PANGAEA.DE/{id}"),
    ("gbif", "https://gbif.org/dataset/{id}"),
    ("icpsr", "https://openicpsr.org/project/{id}"),
    ("dataverse-harvard", "https://dataverse.harvard.edu/dataset.xhtml?persistentId=doi:{id}"),
    ("meertens-collections", "https://meertens.knaw.nl/en/collections/"),
    ("biorxiv", "http://biorxiv.org/lookup/doi/10.1101/{id}"),
    ("datashare-edinburgh", "https://datashare.ed.ac.uk/handle/10283/{id}"),
]

DISCIPLINE_NAMES = [name for _, name in DEFAULT_DISCIPLINES]


def build_documents(rng: random.Random) -> tuple[list[Document], dict]:
    """50 articles; returns (documents, planted gold per (doc_id, repo_id))."""
    documents = []
    planted: dict[tuple[str, str], IntentLabel] = {}

    mention_plan = [1] * 16 + [2] * 16 + [3] * 8  # 40 docs with mentions
    rng.shuffle(mention_plan)

    for i in range(50):
        doc_id = f"PMC9{i:05d}"
        has_mentions = i < 40
        n_mentions = mention_plan[i] if has_mentions else 0

        sentences = []
        mention_slots: list[tuple[int, IntentLabel, str]] = []
        n_sentences = rng.randint(5, 9)
        filler_pool = rng.sample(FILLER, k=min(len(FILLER), n_sentences))
        for s in range(n_sentences):
            sentences.append(
                filler_pool[s % len(filler_pool)].format(
                    n=rng.randint(40, 900), m=rng.randint(2, 9)
                )
            )

        used_repos: set[str] = set()
        slots = list(range(n_sentences))
        rng.shuffle(slots)
        for slot in slots[:n_mentions]:
            intent = rng.choice(list(IntentLabel))
            repo_id, url_form = rng.choice(URL_FORMS)
            if repo_id in used_repos:
                continue
            used_repos.add(repo_id)
            url = url_form.format(id=rng.randint(1000, 99999))
            acc = f"E-{rng.randint(100, 999)}"
            template = rng.choice(SENTENCES[intent])
            sentences[slot] = template.format(url=url, acc=acc)
            planted[(doc_id, repo_id)] = intent
            mention_slots.append((slot, intent, repo_id))

        # a same-repo duplicate inside one sentence for some two-mention docs
        if n_mentions >= 2 and rng.random() < 0.35 and mention_slots:
            slot, intent, repo_id = mention_slots[0]
            twin = [form for rid, form in URL_FORMS if rid == repo_id][0]
            extra_url = twin.format(id=rng.randint(1000, 99999))
            sentences[slot] = sentences[slot].rstrip(".") + f" and at {extra_url}."

        # paragraph structure: one or two blocks
        if len(sentences) > 4 and rng.random() < 0.5:
            cut = rng.randint(2, len(sentences) - 2)
            body = " ".join(sentences[:cut]) + "\n" + " ".join(sentences[cut:])
        else:
            body = " ".join(sentences)

        title = f"Synthetic Study {i} of Longitudinal Outcomes"
        body_text = title + "\n" + body

        if i in (5, 6):
            disciplines = []  # exercises the Unclassified bucket
        else:
            k = rng.choice([1, 1, 2, 2, 3])
            names = rng.sample(DISCIPLINE_NAMES, k)
            disciplines = [
                DisciplineAssignment(
                    code=f"{DISCIPLINE_NAMES.index(name) + 1:02d}", name=name, weight=1.0 / k
                )
                for name in names
            ]
        pub_year = None if i in (7, 8) else rng.randint(2006, 2023)

        documents.append(
            Document(
                doc_id=doc_id,
                title=title,
                body_text=body_text,
                pub_year=pub_year,
                disciplines=disciplines,
                license_class=rng.choice(["comm", "comm", "noncomm", "other"]),
                source_path=f"synthetic/oa_comm/{doc_id}.xml",
            )
        )
    return documents, planted


def main() -> None:
    rng = random.Random(SEED)
    FIXTURES.mkdir(parents=True, exist_ok=True)
    documents, planted = build_documents(rng)
    corpus_path = FIXTURES / "corpus_50.jsonl"
    write_jsonl(documents, corpus_path)
    print(f"wrote {corpus_path} ({len(documents)} documents)")

    config_path = FIXTURES / "golden_config.yaml"
    config_path.write_text(
        "config_version: 1\n"
        f"seed: {SEED}\n"
        "corpus:\n"
        "  jsonl: [corpus_50.jsonl]\n"
        "sample:\n"
        "  size: 20\n"
        "analytics:\n"
        "  temporal_min_support: 3\n",
        encoding="utf-8",
    )

    with tempfile.TemporaryDirectory() as tmp:
        run_dir = Path(tmp) / "run"
        for stage in ("ingest", "match", "contexts", "sample"):
            code = miner_main([stage, "--config", str(config_path), "--run-dir", str(run_dir)])
            assert code == 0, stage

        task = json.loads((run_dir / "annotation_task.json").read_text())
        contexts = {
            c["context_id"]: c
            for c in (
                json.loads(line)
                for line in (run_dir / "contexts.jsonl").read_text().splitlines()
            )
        }
        for item in task:
            ctx = contexts[item["context_id"]]
            gold = planted[(ctx["doc_id"], ctx["repo_id"])]
            item["gold"] = gold.name.capitalize()
            item["annotator"] = "synthetic-gold"
            item["timestamp"] = "2024-03-15T00:00:00Z"
        gold_path = FIXTURES / "annotations_gold.json"
        gold_path.write_text(json.dumps(task, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        print(f"wrote {gold_path} ({len(task)} annotations)")

        for command, extra in (
            ("annotate-import", ["--labels", str(gold_path)]),
            ("predict", []),
            ("evaluate", []),
            ("analyze", []),
            ("export", []),
        ):
            code = miner_main(
                [command, "--config", str(config_path), "--run-dir", str(run_dir), *extra]
            )
            assert code == 0, command

        golden_dir = FIXTURES / "golden"
        if golden_dir.exists():
            shutil.rmtree(golden_dir)
        golden_dir.mkdir()
        for path in sorted(run_dir.iterdir()):
            if path.is_file() and path.name not in ("manifest.json", "run.lock"):
                shutil.copy2(path, golden_dir / path.name)
                print(f"golden: {path.name}")


if __name__ == "__main__":
    main()
