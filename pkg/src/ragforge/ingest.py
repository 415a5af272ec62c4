"""Load source files, extract per-page text and metadata, and clean it."""

from __future__ import annotations

import hashlib
import logging
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import (
    EmptyDirectory,
    EncodingError,
    InvalidConfig,
    IoError,
    NotFound,
    RagError,
    UnsupportedKind,
)
from .pdf import parse_pdf

logger = logging.getLogger(__name__)

PAGE_SEPARATOR = "\n\n"


class SourceKind(Enum):
    PLAIN_TEXT = "PlainText"
    PDF = "Pdf"


EXTENSIONS = {".txt": SourceKind.PLAIN_TEXT, ".pdf": SourceKind.PDF}


@dataclass(frozen=True)
class SourceDocument:
    path: Path
    kind: SourceKind
    data: bytes

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.data).hexdigest()


@dataclass(frozen=True)
class DocumentMetadata:
    source_file: str
    page_count: int
    byte_size: int
    title: str | None = None
    author: str | None = None
    created_at: str | None = None


@dataclass(frozen=True)
class ExtractedDocument:
    doc_id: str
    metadata: DocumentMetadata
    pages: tuple[str, ...]
    cleaned_text: str

    @property
    def source_file(self) -> str:
        return self.metadata.source_file


@dataclass(frozen=True)
class CleanConfig:
    lowercase: bool = False
    strip_repeated_lines: bool = True
    min_repeat_pages: int = 3
    collapse_whitespace: bool = True

    def __post_init__(self):
        if self.min_repeat_pages < 2:
            raise InvalidConfig(f"min_repeat_pages must be >= 2, got {self.min_repeat_pages}")


@dataclass(frozen=True)
class IngestFailure:
    source_file: str
    error: RagError

    def __str__(self) -> str:
        return f"{self.source_file}: {self.error.name}: {self.error}"


@dataclass
class IngestResult:
    documents: list[ExtractedDocument] = field(default_factory=list)
    failures: list[IngestFailure] = field(default_factory=list)


def source_kind(path: Path) -> SourceKind | None:
    return EXTENSIONS.get(path.suffix.lower())


def load_source(path) -> SourceDocument:
    path = Path(path)
    if not path.exists():
        raise NotFound(f"File '{path}' does not exist.")
    if not path.is_file():
        raise NotFound(f"'{path}' is not a regular file.")
    kind = source_kind(path)
    if kind is None:
        raise UnsupportedKind(f"'{path.name}': only .txt and .pdf files are supported")
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read '{path}': {exc}") from None
    return SourceDocument(path=path, kind=kind, data=data)


def _decode_plain(doc: SourceDocument) -> str:
    try:
        return doc.data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise EncodingError(f"'{doc.path.name}' is not valid UTF-8 (byte {exc.start})") from None


def extract_metadata(doc: SourceDocument) -> DocumentMetadata:
    if doc.kind is SourceKind.PLAIN_TEXT:
        return DocumentMetadata(source_file=doc.path.name, page_count=1, byte_size=len(doc.data))
    pdf = parse_pdf(doc.data)
    info = pdf.info
    return DocumentMetadata(
        source_file=doc.path.name,
        page_count=pdf.page_count,
        byte_size=len(doc.data),
        title=info.get("Title"),
        author=info.get("Author"),
        created_at=info.get("CreationDate"),
    )


def _strip_repeated(pages: list[str], min_pages: int) -> list[str]:
    seen = Counter()
    for page in pages:
        seen.update({line.strip() for line in page.splitlines() if line.strip()})
    repeated = {line for line, n in seen.items() if n >= min_pages}
    if not repeated:
        return list(pages)
    return ["\n".join(l for l in page.splitlines() if l.strip() not in repeated) for page in pages]


def clean_text(text: str, cfg: CleanConfig = CleanConfig(), pages=None) -> str:
    """Normalize ``text``; with ``pages`` given, drop lines repeated across pages.

    When repeated-line stripping applies, the output is built from the
    filtered pages and ``text`` itself is ignored.
    """
    if cfg.strip_repeated_lines and pages:
        text = PAGE_SEPARATOR.join(_strip_repeated(list(pages), cfg.min_repeat_pages))
    if cfg.lowercase:
        text = text.lower()
    if cfg.collapse_whitespace:
        text = " ".join(text.split())
    return text


_PARAGRAPH_BREAK = re.compile(r"\n[^\S\n]*\n\s*")


def clean_paragraphs(text: str, cfg: CleanConfig = CleanConfig(), pages=None) -> str:
    """Like :func:`clean_text`, but each blank-line paragraph is cleaned on its own.

    Paragraphs are rejoined with a blank line so semantic chunking still sees
    the boundaries that whitespace collapsing would otherwise erase.
    """
    if cfg.strip_repeated_lines and pages:
        text = PAGE_SEPARATOR.join(_strip_repeated(list(pages), cfg.min_repeat_pages))
    para_cfg = CleanConfig(cfg.lowercase, False, cfg.min_repeat_pages, cfg.collapse_whitespace)
    paragraphs = (clean_text(p, para_cfg) for p in _PARAGRAPH_BREAK.split(text))
    return PAGE_SEPARATOR.join(p for p in paragraphs if p.strip())


def extract_text(doc: SourceDocument, cfg: CleanConfig = CleanConfig()) -> ExtractedDocument:
    if doc.kind is SourceKind.PLAIN_TEXT:
        pages = [_decode_plain(doc)]
        metadata = extract_metadata(doc)
    else:
        pdf = parse_pdf(doc.data)
        pages = pdf.extract_pages()
        info = pdf.info
        metadata = DocumentMetadata(
            source_file=doc.path.name,
            page_count=len(pages),
            byte_size=len(doc.data),
            title=info.get("Title"),
            author=info.get("Author"),
            created_at=info.get("CreationDate"),
        )
    joined = PAGE_SEPARATOR.join(pages)
    return ExtractedDocument(
        doc_id=doc.sha256,
        metadata=metadata,
        pages=tuple(pages),
        cleaned_text=clean_text(joined, cfg, pages),
    )


def _process(path: Path, cfg: CleanConfig) -> ExtractedDocument:
    return extract_text(load_source(path), cfg)


def ingest_directory(directory, cfg: CleanConfig = CleanConfig(), workers: int = 4) -> IngestResult:
    """Extract every .txt/.pdf file in ``directory`` (non-recursive).

    Results and failures come back in file-name order regardless of how the
    work was scheduled.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise NotFound(f"Error: Directory '{directory}' does not exist.")
    paths = sorted(
        (p for p in directory.iterdir() if p.is_file() and source_kind(p) is not None),
        key=lambda p: p.name,
    )
    if not paths:
        raise EmptyDirectory(f"Error: Directory '{directory}' is empty. No .txt or .pdf files to ingest.")

    def attempt(path):
        try:
            return _process(path, cfg)
        except RagError as exc:
            return IngestFailure(path.name, exc)

    result = IngestResult()
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for outcome in pool.map(attempt, paths):
            if isinstance(outcome, IngestFailure):
                logger.warning("ingest failed: %s", outcome)
                result.failures.append(outcome)
            else:
                result.documents.append(outcome)
    return result
