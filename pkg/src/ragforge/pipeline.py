"""Index building: corpus directory -> chunks -> embeddings -> vector store."""

from __future__ import annotations

from dataclasses import dataclass, field

from .chunker import Chunk, ChunkConfig, chunk_text
from .embedding import Embedder
from .ingest import PAGE_SEPARATOR, CleanConfig, ExtractedDocument, IngestFailure, clean_paragraphs, ingest_directory
from .vector_store import VectorStore


@dataclass
class IngestSummary:
    indexed: list[tuple[str, int]] = field(default_factory=list)  # (file, chunk count)
    duplicates: list[str] = field(default_factory=list)
    failures: list[IngestFailure] = field(default_factory=list)
    records_added: int = 0

    @property
    def documents(self) -> int:
        return len(self.indexed)

    @property
    def chunks(self) -> int:
        return sum(n for _, n in self.indexed)


def document_chunks(doc: ExtractedDocument, chunk_cfg: ChunkConfig, mode: str, clean_cfg: CleanConfig) -> list[Chunk]:
    if mode == "semantic":
        text = clean_paragraphs(PAGE_SEPARATOR.join(doc.pages), clean_cfg, doc.pages)
    else:
        text = doc.cleaned_text
    return chunk_text(text, chunk_cfg, mode, doc_id=doc.doc_id)


def index_corpus(
    corpus_dir,
    store: VectorStore,
    embedder: Embedder,
    chunk_cfg: ChunkConfig = ChunkConfig(),
    mode: str = "fixed",
    clean_cfg: CleanConfig = CleanConfig(),
) -> IngestSummary:
    """Add every new document of ``corpus_dir`` to ``store``.

    Documents whose bytes are already indexed (same doc_id) are skipped and
    reported as duplicates.
    """
    batch = ingest_directory(corpus_dir, clean_cfg)
    summary = IngestSummary(failures=list(batch.failures))
    known = store.doc_ids()
    for doc in batch.documents:
        if doc.doc_id in known:
            summary.duplicates.append(doc.source_file)
            continue
        known.add(doc.doc_id)
        chunks = document_chunks(doc, chunk_cfg, mode, clean_cfg)
        vectors = embedder.embed([c.text for c in chunks])
        seqs = store.add_records((c, doc.source_file, v) for c, v in zip(chunks, vectors))
        summary.indexed.append((doc.source_file, len(chunks)))
        summary.records_added += len(seqs)
    return summary
