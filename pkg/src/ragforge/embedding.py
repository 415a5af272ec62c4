"""Text embedders: signed feature hashing (offline) and a remote HTTP backend."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import requests

from .errors import BackendUnavailable, DimensionMismatch, HttpError, InvalidConfig, Timeout

FNV64_OFFSET = 14695981039346656037
FNV64_PRIME = 1099511628211
_MASK64 = (1 << 64) - 1
_SIGN_BIT = 1 << 63

DEFAULT_DIMENSION = 256
EMBED_TIMEOUT_S = 30.0


def fnv1a_64(data: bytes) -> int:
    h = FNV64_OFFSET
    for byte in data:
        h = ((h ^ byte) * FNV64_PRIME) & _MASK64
    return h


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    embedder_id: str

    @property
    def dimension(self) -> int:
        return len(self.values)

    @property
    def is_zero(self) -> bool:
        return not any(self.values)


def _normalized(acc: Sequence[float]) -> tuple[float, ...]:
    norm = math.sqrt(math.fsum(x * x for x in acc))
    if norm == 0.0:
        return tuple(0.0 for _ in acc)
    return tuple(x / norm for x in acc)


def reference_embed(text: str, dimension: int = DEFAULT_DIMENSION) -> EmbeddingVector:
    if dimension < 1:
        raise InvalidConfig(f"embedding dimension must be >= 1, got {dimension}")
    acc = [0] * dimension
    for token in text.lower().split():
        h = fnv1a_64(token.encode("utf-8"))
        acc[h % dimension] += -1 if h & _SIGN_BIT else 1
    return EmbeddingVector(_normalized(acc), f"hashbow-{dimension}")


class Backend(Enum):
    REFERENCE_HASH = "hash"
    REMOTE_HTTP = "remote"


@dataclass(frozen=True)
class EmbedderSpec:
    backend: Backend = Backend.REFERENCE_HASH
    dimension: int = DEFAULT_DIMENSION
    endpoint: str | None = None
    model_name: str | None = None
    timeout_s: float = EMBED_TIMEOUT_S

    def __post_init__(self):
        if self.dimension < 1:
            raise InvalidConfig(f"embedding dimension must be >= 1, got {self.dimension}")
        if self.backend is Backend.REMOTE_HTTP and not (self.endpoint and self.model_name):
            raise InvalidConfig("remote embedding backend needs both an endpoint and a model name")

    @property
    def embedder_id(self) -> str:
        if self.backend is Backend.REFERENCE_HASH:
            return f"hashbow-{self.dimension}"
        return self.model_name


def remote_embed(texts: Sequence[str], spec: EmbedderSpec, session: requests.Session | None = None) -> list[EmbeddingVector]:
    """Embed ``texts`` through an OpenAI-style ``/v1/embeddings`` endpoint.

    Fails fast: no retries. Returned vectors are L2-normalized so cosine
    scores match the reference embedder's conventions.
    """
    if spec.backend is not Backend.REMOTE_HTTP:
        raise InvalidConfig("remote_embed needs a RemoteHttp embedder spec")
    if not texts:
        raise InvalidConfig("remote_embed needs at least one text")
    url = spec.endpoint.rstrip("/") + "/v1/embeddings"
    headers = {}
    if key := os.environ.get("OPENAI_API_KEY"):
        headers["Authorization"] = f"Bearer {key}"
    http = session or requests
    try:
        resp = http.post(
            url,
            json={"model": spec.model_name, "input": list(texts)},
            headers=headers,
            timeout=spec.timeout_s,
        )
    except requests.Timeout:
        raise Timeout(f"embedding request to {url} timed out after {spec.timeout_s}s") from None
    except requests.ConnectionError as exc:
        raise BackendUnavailable(f"cannot reach embedding endpoint {url}: {exc}") from None
    if resp.status_code != 200:
        raise HttpError(resp.status_code, resp.text)
    try:
        data = resp.json()["data"]
        by_index = {int(item["index"]): item["embedding"] for item in data}
    except (ValueError, KeyError, TypeError) as exc:
        raise HttpError(resp.status_code, f"malformed embeddings response: {exc}") from None
    if sorted(by_index) != list(range(len(texts))):
        raise HttpError(resp.status_code, f"expected {len(texts)} embeddings, got indexes {sorted(by_index)}")
    out = []
    for i in range(len(texts)):
        values = [float(v) for v in by_index[i]]
        if len(values) != spec.dimension:
            raise DimensionMismatch(
                f"embedding {i} has length {len(values)}, expected {spec.dimension} "
                f"(model {spec.model_name!r})"
            )
        if not all(math.isfinite(v) for v in values):
            raise HttpError(resp.status_code, f"embedding {i} contains non-finite values")
        out.append(EmbeddingVector(_normalized(values), spec.model_name))
    return out


class Embedder:
    """Callable wrapper binding an :class:`EmbedderSpec` to its backend."""

    def __init__(self, spec: EmbedderSpec = EmbedderSpec()):
        self.spec = spec

    @property
    def embedder_id(self) -> str:
        return self.spec.embedder_id

    @property
    def dimension(self) -> int:
        return self.spec.dimension

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        if self.spec.backend is Backend.REFERENCE_HASH:
            return [reference_embed(t, self.spec.dimension) for t in texts]
        if not texts:
            return []
        return remote_embed(texts, self.spec)

    def embed_one(self, text: str) -> EmbeddingVector:
        return self.embed([text])[0]
