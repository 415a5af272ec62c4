"""Retrieval-augmented generation over local PDF and text corpora.

The local pipeline runs ingest -> chunk -> embed -> store -> retrieve ->
prompt -> generate; :mod:`ragforge.remote_assistant` drives a managed
assistant service with hosted file search instead.
"""

from .chunker import Chunk, ChunkConfig, chunk_fixed, chunk_semantic, count_tokens
from .embedding import Embedder, EmbedderSpec, EmbeddingVector, reference_embed, remote_embed
from .errors import RagError
from .generation import AnnotatedAnswer, ConversationSession, GenerationConfig, chat_turn, generate
from .ingest import CleanConfig, ExtractedDocument, clean_text, extract_text, ingest_directory, load_source
from .retrieval import PromptTemplate, assemble_prompt, citations_for, retrieve
from .vector_store import SearchHit, VectorStore, get_or_create_store, load

__version__ = "0.1.0"

__all__ = [
    "AnnotatedAnswer",
    "Chunk",
    "ChunkConfig",
    "CleanConfig",
    "ConversationSession",
    "Embedder",
    "EmbedderSpec",
    "EmbeddingVector",
    "ExtractedDocument",
    "GenerationConfig",
    "PromptTemplate",
    "RagError",
    "SearchHit",
    "VectorStore",
    "assemble_prompt",
    "chat_turn",
    "chunk_fixed",
    "chunk_semantic",
    "citations_for",
    "clean_text",
    "count_tokens",
    "extract_text",
    "generate",
    "get_or_create_store",
    "ingest_directory",
    "load",
    "load_source",
    "reference_embed",
    "remote_embed",
    "retrieve",
]
