"""Document loading, text normalization, and token-bounded chunking.

Chunks are contiguous substrings of a normalized page: a page is split
into separator-aligned units, units are packed greedily up to the token
limit, and consecutive chunks share a unit-aligned overlap aimed at the
configured token count.
"""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path

from .tokens import TokenCounter

logger = logging.getLogger(__name__)

KIND_TEXT = "text"
KIND_MARKDOWN = "markdown"
KIND_PDF_PAGES = "pdf_pages"
DOCUMENT_KINDS = (KIND_TEXT, KIND_MARKDOWN, KIND_PDF_PAGES)

DEFAULT_SEPARATORS = ("\n\n", ". ", " ")


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class Page:
    number: int
    text: str


@dataclass(frozen=True)
class Document:
    id: str
    path: str
    kind: str
    pages: tuple[Page, ...]

    def __post_init__(self):
        if self.kind not in DOCUMENT_KINDS:
            raise CorpusError(f"unknown document kind {self.kind!r}")
        if not self.pages:
            raise CorpusError(f"document {self.path}: no pages")
        if self.pages[0].number != 1:
            raise CorpusError(f"document {self.path}: page numbering must start at 1")
        for prev, cur in zip(self.pages, self.pages[1:]):
            if cur.number <= prev.number:
                raise CorpusError(
                    f"document {self.path}: page numbers must strictly increase "
                    f"({prev.number} then {cur.number})"
                )
        if self.kind in (KIND_TEXT, KIND_MARKDOWN) and len(self.pages) != 1:
            raise CorpusError(f"document {self.path}: {self.kind} documents have one page")

    @property
    def filename(self) -> str:
        return Path(self.path).name


@dataclass(frozen=True)
class Chunk:
    id: str
    doc_id: str
    filename: str
    page: int
    seq: int
    text: str
    token_len: int
    overlap_token_len: int = 0  # actual token length shared with the previous chunk


@dataclass(frozen=True)
class ChunkingConfig:
    max_tokens: int = 300
    overlap: int = 30
    separators: tuple[str, ...] = DEFAULT_SEPARATORS

    def __post_init__(self):
        if self.max_tokens < 1:
            raise CorpusError("chunk.max_tokens must be positive")
        if not 0 <= self.overlap < self.max_tokens:
            raise CorpusError("chunk.overlap must satisfy 0 <= overlap < max_tokens")


_PARA_BREAK = re.compile(r"\n[ \t]*(?:\n[ \t]*)+")
_MARK = "\x00"


def normalize_text(raw: str) -> str:
    """Collapse layout artifacts: single line breaks become spaces, runs of
    blank lines become one paragraph break, repeated spaces collapse."""
    text = raw.replace("\r\n", "\n").replace("\r", "\n")
    text = _PARA_BREAK.sub(_MARK, text)
    text = text.replace("\n", " ")
    text = re.sub(r"[ \t]+", " ", text)
    text = re.sub(rf" ?{_MARK}[ {_MARK}]*", "\n\n", text)
    return text.strip()


def infer_kind(path: str | Path) -> str:
    name = str(path).lower()
    if name.endswith(".pages.jsonl"):
        return KIND_PDF_PAGES
    if name.endswith((".md", ".markdown")):
        return KIND_MARKDOWN
    return KIND_TEXT


def load_document(path: str | Path, kind: str | None = None) -> Document:
    """Read a source file into a Document; text is kept verbatim.

    Pre-extracted PDFs arrive as ``.pages.jsonl`` sidecars, one
    ``{"page": n, "text": ...}`` object per line.
    """
    path = Path(path)
    kind = kind or infer_kind(path)
    if kind not in DOCUMENT_KINDS:
        raise CorpusError(f"unknown document kind {kind!r}")
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read {path}: {exc}") from exc

    if kind == KIND_PDF_PAGES:
        pages = []
        for lineno, line in enumerate(raw.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                pages.append(Page(number=int(rec["page"]), text=str(rec["text"])))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CorpusError(f"{path}:{lineno}: malformed page record") from exc
        if not pages:
            raise CorpusError(f"{path}: empty page sidecar")
    else:
        if not raw:
            raise CorpusError(f"{path}: empty document")
        pages = [Page(number=1, text=raw)]

    return Document(id=str(path), path=str(path), kind=kind, pages=tuple(pages))


def normalize_document(doc: Document) -> Document:
    """Apply normalize_text page-wise, preserving identity and numbering."""
    pages = tuple(Page(p.number, normalize_text(p.text)) for p in doc.pages)
    return Document(id=doc.id, path=doc.path, kind=doc.kind, pages=pages)


def _split_on(text: str, sep: str) -> list[str]:
    """Split keeping the separator attached to the preceding piece, so the
    concatenation of pieces is the original text."""
    parts = text.split(sep)
    pieces = [p + sep for p in parts[:-1]] + [parts[-1]]
    return [p for p in pieces if p]


def _char_pack(text: str, max_tokens: int, counter: TokenCounter) -> list[str]:
    """Last-resort split of a separator-free run into <= max_tokens pieces."""
    units = []
    rest = text
    while rest:
        lo, hi = 1, len(rest)
        best = 0
        while lo <= hi:  # longest prefix within budget
            mid = (lo + hi) // 2
            if counter.count(rest[:mid]) <= max_tokens:
                best = mid
                lo = mid + 1
            else:
                hi = mid - 1
        if best == 0:
            raise CorpusError(
                f"single character exceeds the {max_tokens}-token chunk limit"
            )
        units.append(rest[:best])
        rest = rest[best:]
    return units


def _split_units(text: str, separators: tuple[str, ...], max_tokens: int,
                 counter: TokenCounter) -> list[str]:
    if counter.count(text) <= max_tokens:
        return [text]
    if not separators:
        return _char_pack(text, max_tokens, counter)
    head, rest = separators[0], separators[1:]
    pieces = _split_on(text, head)
    if len(pieces) == 1:
        return _split_units(text, rest, max_tokens, counter)
    units = []
    for piece in pieces:
        if counter.count(piece) <= max_tokens:
            units.append(piece)
        else:
            units.extend(_split_units(piece, rest, max_tokens, counter))
    return units


def _pick_overlap(units: list[str], overlap: int, counter: TokenCounter) -> list[str]:
    """Trailing units of the previous chunk whose token length is closest to
    the overlap target; never the whole chunk, never mid-unit."""
    if overlap == 0 or len(units) < 2:
        return []
    best: list[str] = []
    best_key = (abs(0 - overlap), 0)
    for j in range(len(units) - 1, 0, -1):
        suffix = units[j:]
        suffix_len = counter.count("".join(suffix))
        key = (abs(suffix_len - overlap), -suffix_len)  # distance ties keep more overlap
        if key < best_key:
            best = suffix
            best_key = key
        if suffix_len >= 2 * overlap + 16:  # further growth can only be worse
            break
    return best


def split_chunks(doc: Document, cfg: ChunkingConfig, counter: TokenCounter) -> list[Chunk]:
    """Split a normalized document into token-bounded overlapping chunks.

    Every chunk is a contiguous substring of its page; consecutive chunks
    within a page share a separator-aligned overlap whose token length
    approximates ``cfg.overlap`` (the actual value is recorded on the
    chunk). Concatenating chunks with overlaps removed reconstructs the
    page text.
    """
    chunks: list[Chunk] = []
    seq = 0
    for page in doc.pages:
        if not page.text.strip():
            logger.warning("%s p.%d: empty page skipped", doc.filename, page.number)
            continue
        units = _split_units(page.text, tuple(cfg.separators), cfg.max_tokens, counter)
        i = 0
        carried: list[str] = []
        cur: list[str] = list(carried)
        overlap_len = 0
        while i < len(units):
            candidate = "".join(cur) + units[i]
            if counter.count(candidate) <= cfg.max_tokens:
                cur.append(units[i])
                i += 1
                continue
            if len(cur) > len(carried):
                # close the current chunk and carry its tail as overlap
                text = "".join(cur)
                chunks.append(_make_chunk(doc, page, seq, text, overlap_len, counter))
                seq += 1
                carried = _pick_overlap(cur, cfg.overlap, counter)
                overlap_len = counter.count("".join(carried)) if carried else 0
                cur = list(carried)
            elif carried:
                # even the overlap plus the next unit overflows: shed overlap
                carried = carried[1:]
                overlap_len = counter.count("".join(carried)) if carried else 0
                cur = list(carried)
            else:  # unreachable: units are <= max_tokens by construction
                raise CorpusError("unit exceeds chunk limit")
        if len(cur) > len(carried):
            text = "".join(cur)
            chunks.append(_make_chunk(doc, page, seq, text, overlap_len, counter))
            seq += 1
    return chunks


def _make_chunk(doc: Document, page: Page, seq: int, text: str,
                overlap_token_len: int, counter: TokenCounter) -> Chunk:
    return Chunk(
        id=f"{doc.id}#{seq:05d}",
        doc_id=doc.id,
        filename=doc.filename,
        page=page.number,
        seq=seq,
        text=text,
        token_len=counter.count(text),
        overlap_token_len=overlap_token_len,
    )
