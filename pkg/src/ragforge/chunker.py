"""Token-window and paragraph chunking.

A token is a maximal run of non-whitespace characters. Offsets are token
indices into the parent text, so chunk spans can be checked arithmetically.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import InvalidConfig

DEFAULT_MAX_TOKENS = 800
DEFAULT_OVERLAP = 400

_BLANK_LINE = re.compile(r"\n[^\S\n]*\n")


@dataclass(frozen=True)
class ChunkConfig:
    max_chunk_tokens: int = DEFAULT_MAX_TOKENS
    overlap_tokens: int = DEFAULT_OVERLAP

    def __post_init__(self):
        if self.max_chunk_tokens < 1:
            raise InvalidConfig(f"max_chunk_tokens must be positive, got {self.max_chunk_tokens}")
        if self.overlap_tokens < 0:
            raise InvalidConfig(f"overlap_tokens must be non-negative, got {self.overlap_tokens}")
        if self.overlap_tokens >= self.max_chunk_tokens:
            raise InvalidConfig(
                f"overlap_tokens ({self.overlap_tokens}) must be smaller than "
                f"max_chunk_tokens ({self.max_chunk_tokens})"
            )

    @property
    def stride(self) -> int:
        return self.max_chunk_tokens - self.overlap_tokens


@dataclass(frozen=True)
class Chunk:
    doc_id: str
    ordinal: int
    text: str
    token_start: int
    token_end: int

    @property
    def chunk_id(self) -> str:
        return f"{self.doc_id}:{self.ordinal}"

    @property
    def token_count(self) -> int:
        return self.token_end - self.token_start


def tokenize(text: str) -> list[str]:
    return text.split()


def count_tokens(text: str) -> int:
    return len(text.split())


def fixed_spans(n_tokens: int, cfg: ChunkConfig) -> list[tuple[int, int]]:
    """Window spans over ``n_tokens`` tokens; the last window ends at ``n_tokens``."""
    spans = []
    start = 0
    while start < n_tokens:
        end = min(start + cfg.max_chunk_tokens, n_tokens)
        spans.append((start, end))
        if end == n_tokens:
            # any later window would sit inside this one
            break
        start += cfg.stride
    return spans


def _build(tokens: list[str], spans, doc_id: str, offset: int = 0, first_ordinal: int = 0) -> list[Chunk]:
    return [
        Chunk(
            doc_id=doc_id,
            ordinal=first_ordinal + i,
            text=" ".join(tokens[start:end]),
            token_start=offset + start,
            token_end=offset + end,
        )
        for i, (start, end) in enumerate(spans)
    ]


def chunk_fixed(text: str, cfg: ChunkConfig = ChunkConfig(), doc_id: str = "") -> list[Chunk]:
    tokens = tokenize(text)
    return _build(tokens, fixed_spans(len(tokens), cfg), doc_id)


def chunk_semantic(text: str, cfg: ChunkConfig = ChunkConfig(), doc_id: str = "") -> list[Chunk]:
    """Greedily merge blank-line paragraphs up to ``max_chunk_tokens``.

    A paragraph that alone exceeds the limit is split with the fixed window
    (and so does use ``overlap_tokens``); otherwise overlap is ignored.
    """
    tokens = tokenize(text)
    # paragraph token ranges in document order
    paragraphs = []
    pos = 0
    for para in _BLANK_LINE.split(text):
        n = count_tokens(para)
        if n:
            paragraphs.append((pos, pos + n))
            pos += n

    chunks: list[Chunk] = []
    group: tuple[int, int] | None = None

    def flush():
        nonlocal group
        if group is not None:
            chunks.extend(_build(tokens, [group], doc_id, first_ordinal=len(chunks)))
            group = None

    for start, end in paragraphs:
        size = end - start
        if size > cfg.max_chunk_tokens:
            flush()
            local = fixed_spans(size, cfg)
            chunks.extend(
                _build(tokens[start:end], local, doc_id, offset=start, first_ordinal=len(chunks))
            )
        elif group is not None and end - group[0] <= cfg.max_chunk_tokens:
            group = (group[0], end)
        else:
            flush()
            group = (start, end)
    flush()
    return chunks


def chunk_text(text: str, cfg: ChunkConfig = ChunkConfig(), mode: str = "fixed", doc_id: str = "") -> list[Chunk]:
    if mode == "fixed":
        return chunk_fixed(text, cfg, doc_id)
    if mode == "semantic":
        return chunk_semantic(text, cfg, doc_id)
    raise InvalidConfig(f"unknown chunk mode {mode!r} (expected 'fixed' or 'semantic')")
