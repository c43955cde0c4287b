#!/usr/bin/env python3
"""Generate the 200-context keyword-separable training fixture.

Each class carries distinct planted marker phrases, so a small model
trained from scratch can reach high validation F1; shared filler words add
mild noise without breaking separability.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

MARKERS = {
    "Release": ["deposited alongside accession", "archived our new tables", "released the generated set"],
    "Reuse": ["downloaded the published panel", "obtained the existing records", "reused the public matrix"],
    "Reference": ["listed for comparison only", "cited as related background", "cross referenced the catalogue"],
    "Nothing": ["submission portal notice", "upload your files reminder", "automated billing message"],
}

FILLER = (
    "the study cohort spanned multiple sites with repeated measurements and "
    "standard quality checks over consecutive seasons yielding stable estimates"
).split()

REPOS = ["zenodo.org/record", "figshare.com/articles", "osf.io/view", "pangaea.de/entry"]


def main() -> None:
    rng = random.Random(77)
    items = []
    per_class = 50
    for label, phrases in MARKERS.items():
        for i in range(per_class):
            words = [rng.choice(FILLER) for _ in range(rng.randint(6, 14))]
            insert_at = rng.randint(0, len(words))
            marker = rng.choice(phrases)
            url = f"https://{rng.choice(REPOS)}/{rng.randint(100, 9999)}"
            words[insert_at:insert_at] = [marker, "at", url]
            items.append(
                {
                    "context_id": f"{label.lower()}-{i:03d}",
                    "text": " ".join(words),
                    "gold": label,
                    "annotator": "fixture",
                    "timestamp": "2024-03-15T00:00:00Z",
                }
            )
    rng.shuffle(items)
    FIXTURES.mkdir(parents=True, exist_ok=True)
    out = FIXTURES / "separable_200.json"
    out.write_text(json.dumps(items, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {out} ({len(items)} contexts)")


if __name__ == "__main__":
    main()
