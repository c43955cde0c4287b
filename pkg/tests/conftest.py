import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from repominer.documents import DisciplineAssignment, Document
from repominer.registry import RepositoryEntry


def make_doc(body_text: str, doc_id: str = "doc1", **kwargs) -> Document:
    defaults = dict(
        title="",
        pub_year=2020,
        disciplines=[],
        license_class="other",
        source_path="",
    )
    defaults.update(kwargs)
    return Document(doc_id=doc_id, body_text=body_text, **defaults)


def make_disciplines(*names: str) -> list[DisciplineAssignment]:
    weight = 1.0 / len(names)
    return [
        DisciplineAssignment(code=f"{i:02d}", name=name, weight=weight)
        for i, name in enumerate(names, start=1)
    ]


@pytest.fixture
def small_registry() -> list[RepositoryEntry]:
    return [
        RepositoryEntry("zenodo", "Zenodo", ("zenodo.org",), "data"),
        RepositoryEntry("figshare", "Figshare", ("figshare.com",), "data"),
        RepositoryEntry("ebi", "EMBL-EBI", ("ebi.ac.uk",), "data"),
        RepositoryEntry("gwas", "GWAS Catalog", ("ebi.ac.uk/gwas",), "data"),
        RepositoryEntry("dryad", "Dryad", ("datadryad.org",), "data"),
        RepositoryEntry("biorxiv", "bioRxiv", ("biorxiv.org",), "literature"),
    ]


WORDS = (
    "the study data were collected and analysed across several cohorts with "
    "standard methods results indicate a significant trend in measured values "
    "supporting prior findings future work will extend sampling protocols"
).split()


def random_registry(rng: random.Random, size: int = 25) -> list[RepositoryEntry]:
    entries = []
    base_domains = []
    for i in range(size):
        if i % 5 == 4 and base_domains:
            # overlapping pattern: a path under an existing domain
            domain = rng.choice(base_domains)
            pattern = f"{domain}/sub{i}"
        else:
            domain = f"repo{i}.example{i % 7}.org"
            base_domains.append(domain)
            pattern = domain
        entries.append(
            RepositoryEntry(
                repo_id=f"r{i}",
                display_name=f"Repo {i}",
                patterns=(pattern,),
                kind="data" if i % 4 else "literature",
            )
        )
    return entries


def random_document(rng: random.Random, entries, doc_id: str) -> Document:
    """Prose with planted URLs, decoys, and hostile wrappings."""
    parts = []
    n_chunks = rng.randint(3, 30)
    for _ in range(n_chunks):
        roll = rng.random()
        if roll < 0.55:
            parts.append(rng.choice(WORDS))
            continue
        entry = rng.choice(entries)
        pattern = rng.choice(entry.patterns)
        scheme = rng.choice(["", "http://", "https://", "ftp://", "HTTP://", "Https://"])
        www = rng.choice(["", "www.", "WWW."])
        path = rng.choice(["", "/record/1", "/a.b", "/x?y=1", "#frag", ":8080/p", "/"])
        url = f"{scheme}{www}{pattern}{path}"
        case_roll = rng.random()
        if case_roll < 0.2:
            url = url.upper()
        elif case_roll < 0.3:
            url = "".join(c.upper() if rng.random() < 0.5 else c for c in url)
        decoy_roll = rng.random()
        if decoy_roll < 0.12:
            url = f"{scheme}{www}{pattern}.evil.com/x"  # label extension: no match
        elif decoy_roll < 0.2:
            url = f"{scheme}{www}sub.{pattern}"  # subdomain: no match
        elif decoy_roll < 0.26:
            url = f"{scheme}{www}{pattern}abc"  # mid-label extension: no match
        wrap = rng.choice(["{}", "({})", "({}).", "{}.", "{},", "[{}]", '"{}"', "{};"])
        parts.append(wrap.format(url))
    text = ""
    for part in parts:
        text += part + rng.choice([" ", " ", " ", "\n"])
    return make_doc(text, doc_id=doc_id)
