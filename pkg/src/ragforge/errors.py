"""Typed errors raised across the pipeline.

Every failure a user can trigger maps to one of these classes. The CLI prints
``<ClassName>: <message>`` and exits with ``exit_code``; no tracebacks.
"""

from __future__ import annotations


class RagError(Exception):
    """Base class for all ragforge errors."""

    exit_code = 1

    @property
    def name(self) -> str:
        return type(self).__name__


# ingestion / files
class NotFound(RagError):
    pass


class UnsupportedKind(RagError):
    pass


class IoError(RagError):
    pass


class EncodingError(RagError):
    pass


class MalformedPdf(RagError):
    pass


class UnsupportedPdfFeature(RagError):
    pass


class EmptyDirectory(RagError):
    exit_code = 2


class NoPdfFiles(RagError):
    pass


# configuration
class InvalidConfig(RagError):
    exit_code = 2


class ConfigError(InvalidConfig):
    """A config key (file, env or flag) holds an unusable value."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class MissingApiKey(ConfigError):
    def __init__(self):
        RagError.__init__(
            self,
            "Error: OPENAI_API_KEY is not set in the environment. "
            "Please set it in the .env file.",
        )
        self.key = "OPENAI_API_KEY"


class BadTemplate(InvalidConfig):
    pass


# vectors / stores
class DimensionMismatch(RagError):
    pass


class EmbedderMismatch(RagError):
    pass


class EmptyName(RagError):
    def __init__(self, message: str = ""):
        super().__init__(
            message
            or "Error: 'vector_store_name' is not set. Please provide a valid vector store name."
        )


class ConfigMismatch(RagError):
    pass


class CorruptStore(RagError):
    pass


# network backends
class HttpError(RagError):
    def __init__(self, status: int, body: str = "", partial: dict | None = None):
        excerpt = body[:200]
        super().__init__(f"HTTP {status}: {excerpt}" if excerpt else f"HTTP {status}")
        self.status = status
        self.body = excerpt
        # uploads that succeeded before the failing request, if any
        self.partial = partial or {}


class Timeout(RagError):
    pass


class BackendUnavailable(RagError):
    pass


class RunFailed(RagError):
    def __init__(self, detail):
        super().__init__(f"Run failed: {detail}")
        self.detail = detail
