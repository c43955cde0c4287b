"""URL normalization and URL-token extraction.

Both the registry matcher and the sentence segmenter need a shared notion of
"a URL as it appears in running text": a maximal run of URL characters with
wrapping punctuation trimmed off. Normalization reduces a raw URL to the
lowercase, scheme-less, www-less form the repository patterns are stored in.
"""

from __future__ import annotations

import re
from typing import Iterator

SCHEMES = ("http://", "https://", "ftp://")

# Characters that may legally appear inside a URL written in prose.
URL_CHARS = "A-Za-z0-9._~:/?#\\[\\]@!$&'()*+,;=%\\-"

URL_TOKEN_RE = re.compile(f"[{URL_CHARS}]+")

# Maximal URL-character runs containing at least one dot. Greedy [c]*\.[c]*
# anchored at a run start consumes the whole run, so spans equal URL_TOKEN_RE
# spans restricted to runs that contain a dot.
_DOTTED_TOKEN_RE = re.compile(f"[{URL_CHARS}]*\\.[{URL_CHARS}]*")

# Punctuation trimmed from token ends: sentence punctuation after a URL and
# wrapping brackets/quotes before one.
TRAILING_TRIM = ".,;)]'\""
LEADING_TRIM = ".,;(['\""


def _normalize_pass(url: str) -> str:
    for scheme in SCHEMES:
        if url.startswith(scheme):
            url = url[len(scheme):]
            break
    if url.startswith("www."):
        url = url[4:]
    if url.endswith("/"):
        url = url[:-1]
    return url


def normalize_url(url: str) -> str:
    """Reduce a URL to its canonical matching form.

    Lowercases, strips the scheme (http/https/ftp) and a leading "www."
    label, and drops a trailing "/". Path, query, and fragment are kept.
    Total: never raises; whitespace-only input yields "". The single-pass
    transform is iterated to a fixpoint so the function is idempotent even
    on degenerate inputs like "www.www.example.org".
    """
    current = url.strip().lower()
    while True:
        reduced = _normalize_pass(current)
        if reduced == current:
            return current
        current = reduced


def trim_token(token: str, start: int) -> tuple[str, int, int]:
    """Strip wrapping punctuation from a raw URL-character run.

    Returns (trimmed_token, start, end) with offsets adjusted into the
    original text. The trimmed token may be empty.
    """
    i, j = 0, len(token)
    while i < j and token[i] in LEADING_TRIM:
        i += 1
    while j > i and token[j - 1] in TRAILING_TRIM:
        j -= 1
    return token[i:j], start + i, start + j


def iter_url_tokens(text: str, require_dot: bool = False) -> Iterator[tuple[str, int, int]]:
    """Yield (token, start, end) for every trimmed URL-character run in text.

    Offsets index into `text`. With require_dot=True, runs without a "."
    are skipped before trimming (cheap pre-filter for registry matching:
    no dotted pattern can match a dot-less token).
    """
    pattern = _DOTTED_TOKEN_RE if require_dot else URL_TOKEN_RE
    for match in pattern.finditer(text):
        token, start, end = trim_token(match.group(), match.start())
        if token:
            yield token, start, end
