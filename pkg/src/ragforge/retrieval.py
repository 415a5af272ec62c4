"""Query side of the pipeline: embed, search, build the prompt and citations."""

from __future__ import annotations

import re
import textwrap
from dataclasses import dataclass
from pathlib import Path

from .embedding import Embedder
from .errors import BadTemplate, EmbedderMismatch, IoError
from .vector_store import SearchHit, VectorStore

DEFAULT_K = 4
DEFAULT_MIN_SCORE = 0.0
NO_CONTEXT = "NO CONTEXT RETRIEVED"

DEFAULT_TEMPLATE_TEXT = textwrap.dedent(
    """\
    You are an expert assistant with access to the following context extracted from documents. Your job is to answer the user's question as accurately as possible, using the context below.

    Context:
    {context}

    Given this information, please provide a comprehensive and relevant answer to the following question:
    Question: {question}

    If the context does not contain enough information, clearly state that the information is not available in the context provided.
    If possible, provide a step-by-step explanation and highlight key details.
    """
)

_SLOT = re.compile(r"\{(context|question)\}")


@dataclass(frozen=True)
class ContextBlock:
    citation_index: int
    source_file: str
    chunk_text: str

    def render(self) -> str:
        return f"[{self.citation_index}] ({self.source_file}): {self.chunk_text}"


@dataclass(frozen=True)
class RetrievalResult:
    question: str
    hits: tuple[SearchHit, ...]
    context_blocks: tuple[ContextBlock, ...]


@dataclass(frozen=True)
class PromptTemplate:
    """A persona preamble (may be empty) plus a body holding both slots."""

    system: str
    body: str

    def __post_init__(self):
        for slot in ("{context}", "{question}"):
            if slot not in self.body:
                raise BadTemplate(f"prompt template is missing the {slot} slot")

    @classmethod
    def from_text(cls, text: str) -> "PromptTemplate":
        """Split off a leading slot-free paragraph as the system preamble."""
        text = text.strip("\n")
        head, sep, rest = text.partition("\n\n")
        if sep and not _SLOT.search(head):
            return cls(system=head.strip(), body=rest.strip("\n") + "\n")
        return cls(system="", body=text + "\n")

    @classmethod
    def from_file(cls, path) -> "PromptTemplate":
        try:
            return cls.from_text(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise IoError(f"cannot read prompt template {path}: {exc}") from None

    def fill(self, context: str, question: str) -> str:
        # single pass so slot-like text inside chunks is never re-expanded
        values = {"context": context, "question": question}
        return _SLOT.sub(lambda m: values[m.group(1)], self.body)


DEFAULT_TEMPLATE = PromptTemplate.from_text(DEFAULT_TEMPLATE_TEXT)


@dataclass(frozen=True)
class PromptBundle:
    system_instructions: str
    context: str
    question: str
    user_content: str
    rendered: str
    blocks: tuple[ContextBlock, ...]


def retrieve(
    store: VectorStore,
    embedder: Embedder,
    question: str,
    k: int = DEFAULT_K,
    min_score: float = DEFAULT_MIN_SCORE,
) -> RetrievalResult:
    m = store.manifest
    if embedder.embedder_id != m.embedder_id or embedder.dimension != m.dimension:
        raise EmbedderMismatch(
            f"query embedder {embedder.embedder_id!r} (dimension {embedder.dimension}) does not match "
            f"store {m.name!r} built with {m.embedder_id!r} (dimension {m.dimension})"
        )
    hits = store.search(embedder.embed_one(question), k, min_score)
    blocks = tuple(
        ContextBlock(i, hit.record.source_file, hit.record.chunk.text) for i, hit in enumerate(hits)
    )
    return RetrievalResult(question=question, hits=tuple(hits), context_blocks=blocks)


def render_context(blocks) -> str:
    if not blocks:
        return NO_CONTEXT
    return "\n\n".join(b.render() for b in blocks)


def assemble_prompt(
    result: RetrievalResult,
    template: PromptTemplate = DEFAULT_TEMPLATE,
    question_text: str | None = None,
) -> PromptBundle:
    """Fill ``template`` with the retrieved context.

    ``question_text`` replaces the bare question in the slot (conversation
    memory passes a transcript-prefixed question here).
    """
    context = render_context(result.context_blocks)
    question = result.question if question_text is None else question_text
    user_content = template.fill(context, question)
    rendered = f"{template.system}\n\n{user_content}" if template.system else user_content
    return PromptBundle(
        system_instructions=template.system,
        context=context,
        question=question,
        user_content=user_content,
        rendered=rendered,
        blocks=result.context_blocks,
    )


def citations_for(result: RetrievalResult) -> list[str]:
    return [f"[{b.citation_index}] {b.source_file}" for b in result.context_blocks]
