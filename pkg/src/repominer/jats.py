"""Full-text article XML parsing into the Document model.

Builds body_text as title, abstract paragraphs, body paragraphs, and
back-matter paragraphs (including reference-list entries, where repository
URLs often appear) in document order, one block per line, inline markup
stripped. URLs carried only in link attributes are surfaced into the text
so the matcher sees them.
"""

from __future__ import annotations

import datetime
import hashlib
import xml.etree.ElementTree as ET

from .documents import Document, license_class_from_path

XLINK_HREF = "{http://www.w3.org/1999/xlink}href"

_ID_TYPE_PREFERENCE = ("pmcid", "pmc", "pmc-uid", "doi", "pmid")
_PUB_TYPE_PREFERENCE = ("epub", "ppub", "collection")


class JatsParseError(ValueError):
    """Malformed article XML; carries the failing byte offset."""

    def __init__(self, message: str, line: int, column: int, byte_offset: int):
        super().__init__(f"{message} (line {line}, column {column}, byte {byte_offset})")
        self.line = line
        self.column = column
        self.byte_offset = byte_offset


class EmptyDocumentError(ValueError):
    """Article has no abstract, body, or back-matter text."""


def _byte_offset(xml_bytes: bytes, line: int, column: int) -> int:
    # expat positions are 1-based lines and 0-based columns
    lines = xml_bytes.split(b"\n")
    return sum(len(l) + 1 for l in lines[: line - 1]) + column


def _element_text(el: ET.Element) -> str:
    """All descendant text, with link-attribute URLs surfaced once."""
    parts = [el.text or ""]
    for child in el:
        parts.append(_element_text(child))
        parts.append(child.tail or "")
    text = "".join(parts)
    href = el.get(XLINK_HREF) or el.get("href")
    if href and href not in text:
        text = f"{text} {href}" if text.strip() else href
    return text


def _block(el: ET.Element) -> str:
    return " ".join(_element_text(el).split())


def _collect_back_blocks(el: ET.Element, blocks: list[str]) -> None:
    # paragraphs stay individual blocks; each <ref> becomes one block so
    # bibliography URLs survive without exploding into fragments
    if el.tag == "p" or el.tag == "ref":
        text = _block(el)
        if text:
            blocks.append(text)
        return
    for child in el:
        _collect_back_blocks(child, blocks)


def _find_doc_id(root: ET.Element, xml_bytes: bytes) -> str:
    ids = {}
    for el in root.iter("article-id"):
        id_type = el.get("pub-id-type") or ""
        if el.text and el.text.strip():
            ids.setdefault(id_type, el.text.strip())
    for id_type in _ID_TYPE_PREFERENCE:
        if id_type in ids:
            return ids[id_type]
    if ids:
        return sorted(ids.items())[0][1]
    return hashlib.sha1(xml_bytes).hexdigest()[:12]


def _find_pub_year(root: ET.Element) -> int | None:
    dates: dict[str, str] = {}
    ordered: list[str] = []
    for el in root.iter("pub-date"):
        year_el = el.find("year")
        if year_el is None or not (year_el.text or "").strip():
            continue
        year_text = year_el.text.strip()
        pub_type = el.get("pub-type") or el.get("date-type") or ""
        dates.setdefault(pub_type, year_text)
        ordered.append(year_text)
    chosen = None
    for pub_type in _PUB_TYPE_PREFERENCE:
        if pub_type in dates:
            chosen = dates[pub_type]
            break
    if chosen is None and ordered:
        chosen = ordered[0]
    if chosen is None:
        return None
    try:
        year = int(chosen)
    except ValueError:
        return None
    if 1800 <= year <= datetime.date.today().year + 1:
        return year
    return None


def parse_jats(xml_bytes: bytes, source_path: str = "") -> Document:
    """Parse one article's XML bytes into a Document.

    Raises JatsParseError on malformed XML and EmptyDocumentError when the
    abstract, body, and back matter are all empty. Deterministic: identical
    bytes yield an identical Document.
    """
    if isinstance(xml_bytes, str):
        xml_bytes = xml_bytes.encode("utf-8")
    try:
        root = ET.fromstring(xml_bytes)
    except ET.ParseError as exc:
        line, column = exc.position
        raise JatsParseError(
            f"malformed article XML: {exc.msg if hasattr(exc, 'msg') else exc}",
            line=line,
            column=column,
            byte_offset=_byte_offset(xml_bytes, line, column),
        ) from exc

    if root.tag != "article":
        article = root.find(".//article")
        if article is None:
            raise EmptyDocumentError("empty document")
        root = article

    title_el = root.find("./front/article-meta/title-group/article-title")
    title = _block(title_el) if title_el is not None else ""

    blocks: list[str] = []
    if title:
        blocks.append(title)

    content_blocks: list[str] = []
    for abstract in root.findall("./front/article-meta/abstract"):
        paragraphs = abstract.findall(".//p")
        if paragraphs:
            content_blocks.extend(_block(p) for p in paragraphs)
        else:
            content_blocks.append(_block(abstract))

    body = root.find("./body")
    if body is not None:
        for p in body.iter("p"):
            content_blocks.append(_block(p))

    back = root.find("./back")
    if back is not None:
        back_blocks: list[str] = []
        for child in back:
            _collect_back_blocks(child, back_blocks)
        content_blocks.extend(back_blocks)

    content_blocks = [b for b in content_blocks if b]
    if not content_blocks:
        raise EmptyDocumentError("empty document")
    blocks.extend(content_blocks)

    return Document(
        doc_id=_find_doc_id(root, xml_bytes),
        title=title,
        body_text="\n".join(blocks),
        pub_year=_find_pub_year(root),
        disciplines=[],
        license_class=license_class_from_path(source_path),
        source_path=source_path,
    )
