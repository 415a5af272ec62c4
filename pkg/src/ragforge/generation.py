"""Answer generation backends and conversation sessions."""

from __future__ import annotations

import logging
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum

import requests

from .embedding import Embedder
from .errors import BackendUnavailable, HttpError, InvalidConfig, MissingApiKey, RagError, Timeout
from .retrieval import (
    DEFAULT_K,
    DEFAULT_MIN_SCORE,
    DEFAULT_TEMPLATE,
    PromptBundle,
    PromptTemplate,
    assemble_prompt,
    citations_for,
    retrieve,
)
from .vector_store import VectorStore

logger = logging.getLogger(__name__)

NOT_AVAILABLE = "The information is not available in the context provided."


class Backend(Enum):
    CHAT = "chat"
    LOCAL = "local"
    OFFLINE = "offline"


DEFAULT_MODELS = {Backend.CHAT: "gpt-4o", Backend.LOCAL: "Llama3.1", Backend.OFFLINE: "offline-echo"}
DEFAULT_ENDPOINTS = {
    Backend.CHAT: "https://api.openai.com",
    Backend.LOCAL: "http://localhost:11434",
    Backend.OFFLINE: "",
}


@dataclass(frozen=True)
class GenerationConfig:
    backend: Backend = Backend.OFFLINE
    model_name: str | None = None
    temperature: float = 0.7
    top_p: float = 0.9
    endpoint: str | None = None
    timeout_s: float = 60
    max_retries: int = 2
    api_key: str | None = None
    backoff_base_s: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise InvalidConfig(f"temperature must be in [0, 2], got {self.temperature}")
        if not 0.0 < self.top_p <= 1.0:
            raise InvalidConfig(f"top_p must be in (0, 1], got {self.top_p}")
        if self.timeout_s <= 0:
            raise InvalidConfig(f"timeout_s must be positive, got {self.timeout_s}")
        if self.max_retries < 0:
            raise InvalidConfig(f"max_retries must be non-negative, got {self.max_retries}")

    @property
    def model(self) -> str:
        return self.model_name or DEFAULT_MODELS[self.backend]

    @property
    def base_url(self) -> str:
        return (self.endpoint or DEFAULT_ENDPOINTS[self.backend]).rstrip("/")


def offline_echo(bundle: PromptBundle) -> str:
    if not bundle.blocks:
        return NOT_AVAILABLE
    text = bundle.blocks[0].chunk_text
    period = text.find(".")
    sentence = text[: period + 1] if period >= 0 else text
    return f"Based on [0]: {sentence}"


def chat_request(bundle: PromptBundle, cfg: GenerationConfig) -> tuple[str, dict]:
    messages = []
    if bundle.system_instructions:
        messages.append({"role": "system", "content": bundle.system_instructions})
    messages.append({"role": "user", "content": bundle.user_content})
    body = {
        "model": cfg.model,
        "messages": messages,
        "temperature": cfg.temperature,
        "top_p": cfg.top_p,
    }
    return f"{cfg.base_url}/v1/chat/completions", body


def local_request(bundle: PromptBundle, cfg: GenerationConfig) -> tuple[str, dict]:
    return f"{cfg.base_url}/api/generate", {"model": cfg.model, "prompt": bundle.rendered, "stream": False}


def _retryable(exc: RagError) -> bool:
    if isinstance(exc, HttpError):
        return exc.status == 429 or exc.status >= 500
    return isinstance(exc, (Timeout, BackendUnavailable))


def _post_json(url: str, body: dict, headers: dict, timeout: float) -> dict:
    try:
        resp = requests.post(url, json=body, headers=headers, timeout=timeout)
    except requests.Timeout:
        raise Timeout(f"request to {url} timed out after {timeout}s") from None
    except requests.ConnectionError as exc:
        raise BackendUnavailable(f"cannot connect to {url}: {exc.__class__.__name__}") from None
    if resp.status_code != 200:
        raise HttpError(resp.status_code, resp.text)
    try:
        return resp.json()
    except ValueError:
        raise HttpError(resp.status_code, "response body is not JSON") from None


def generate(bundle: PromptBundle, cfg: GenerationConfig = GenerationConfig()) -> str:
    """Produce an answer for ``bundle`` with the configured backend.

    Network backends retry 5xx/429, timeouts and refused connections up to
    ``max_retries`` times, sleeping ``backoff_base_s * 2**attempt`` between tries.
    """
    if cfg.backend is Backend.OFFLINE:
        return offline_echo(bundle)
    headers = {}
    if cfg.backend is Backend.CHAT:
        if not cfg.api_key:
            raise MissingApiKey()
        headers["Authorization"] = f"Bearer {cfg.api_key}"
        url, body = chat_request(bundle, cfg)
    else:
        url, body = local_request(bundle, cfg)

    attempt = 0
    while True:
        try:
            data = _post_json(url, body, headers, cfg.timeout_s)
            break
        except RagError as exc:
            if attempt >= cfg.max_retries or not _retryable(exc):
                raise
            delay = cfg.backoff_base_s * 2**attempt
            logger.warning("%s (attempt %d), retrying in %.2fs", exc, attempt + 1, delay)
            time.sleep(delay)
            attempt += 1
    try:
        if cfg.backend is Backend.CHAT:
            return data["choices"][0]["message"]["content"]
        return data["response"]
    except (KeyError, IndexError, TypeError):
        raise HttpError(200, f"unexpected response shape: {str(data)[:120]}") from None


@dataclass(frozen=True)
class Turn:
    role: str
    text: str


@dataclass
class ConversationSession:
    store_name: str
    session_id: str = field(default_factory=lambda: uuid.uuid4().hex)
    turns: list[Turn] = field(default_factory=list)

    def transcript(self) -> str:
        return "\n".join(f"{t.role.capitalize()}: {t.text}" for t in self.turns)

    def record(self, question: str, answer: str) -> None:
        self.turns.append(Turn("user", question))
        self.turns.append(Turn("assistant", answer))


@dataclass(frozen=True)
class AnnotatedAnswer:
    text: str
    citations: tuple[str, ...]
    backend_used: str
    latency_ms: int


def with_history(session: ConversationSession, question: str) -> str:
    if not session.turns:
        return question
    return f"Conversation so far:\n{session.transcript()}\n\nCurrent question: {question}"


def chat_turn(
    session: ConversationSession,
    store: VectorStore,
    embedder: Embedder,
    question: str,
    cfg: GenerationConfig = GenerationConfig(),
    *,
    k: int = DEFAULT_K,
    min_score: float = DEFAULT_MIN_SCORE,
    template: PromptTemplate = DEFAULT_TEMPLATE,
) -> AnnotatedAnswer:
    """Retrieve, prompt, generate, then record the exchange.

    The session is only touched after generation succeeds.
    """
    if session.store_name != store.name:
        raise InvalidConfig(f"session is bound to store {session.store_name!r}, not {store.name!r}")
    started = time.perf_counter()
    result = retrieve(store, embedder, question, k=k, min_score=min_score)
    bundle = assemble_prompt(result, template, question_text=with_history(session, question))
    text = generate(bundle, cfg)
    session.record(question, text)
    backend = cfg.backend.value if cfg.backend is Backend.OFFLINE else f"{cfg.backend.value}:{cfg.model}"
    return AnnotatedAnswer(
        text=text,
        citations=tuple(citations_for(result)),
        backend_used=backend,
        latency_ms=int((time.perf_counter() - started) * 1000),
    )
