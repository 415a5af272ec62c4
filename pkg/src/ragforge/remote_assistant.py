"""Client for a managed assistant service with hosted file search.

Drives the whole flow over HTTP: get-or-create a vector store (uploading the
PDFs of a directory on creation), get-or-create an assistant bound to it,
open a thread, post a question, poll the run and turn the reply's file
annotations into ``[i]`` markers plus ``"[i] filename"`` citations.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import requests

from .errors import (
    BackendUnavailable,
    EmptyDirectory,
    EmptyName,
    HttpError,
    InvalidConfig,
    NoPdfFiles,
    NotFound,
    RunFailed,
    Timeout,
)
from .generation import AnnotatedAnswer

logger = logging.getLogger(__name__)

DEFAULT_ENDPOINT = "https://api.openai.com"
MESSAGE_FETCH_ATTEMPTS = 3


class RunStatus(Enum):
    QUEUED = "queued"
    IN_PROGRESS = "in_progress"
    COMPLETED = "completed"
    FAILED = "failed"

    @property
    def terminal(self) -> bool:
        return self in (RunStatus.COMPLETED, RunStatus.FAILED)


# other server statuses that end a run without an answer
_FAILED_LIKE = {"cancelled", "expired", "incomplete"}


@dataclass
class RemoteIds:
    vector_store_id: str = ""
    assistant_id: str = ""
    thread_id: str = ""
    run_id: str = ""
    file_ids: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class AssistantProfile:
    name: str
    description: str = ""
    instructions: str = ""
    model_name: str = "gpt-4o"
    temperature: float = 0.7
    top_p: float = 0.9

    def __post_init__(self):
        if not self.name:
            raise InvalidConfig("assistant name must not be empty")

    def create_body(self, vector_store_id: str) -> dict:
        return {
            "model": self.model_name,
            "name": self.name,
            "description": self.description,
            "instructions": self.instructions,
            "tools": [{"type": "file_search"}],
            "tool_resources": {"file_search": {"vector_store_ids": [vector_store_id]}},
            "temperature": self.temperature,
            "top_p": self.top_p,
        }


def replace_annotations(value: str, annotations: list[dict], first_index: int = 0):
    """Swap each annotation's text span for ``[i]``.

    Returns the new text and ``(index, file_id)`` for annotations that cite a
    file. Indices continue from ``first_index`` so several messages in one
    answer never reuse a marker.
    """
    cited = []
    for offset, ann in enumerate(annotations):
        index = first_index + offset
        span = ann.get("text")
        if span:
            value = value.replace(span, f"[{index}]")
        file_citation = ann.get("file_citation")
        if file_citation and file_citation.get("file_id"):
            cited.append((index, file_citation["file_id"]))
    return value, cited


class AssistantClient:
    def __init__(
        self,
        endpoint: str = DEFAULT_ENDPOINT,
        api_key: str | None = None,
        timeout_s: float = 60.0,
        sleep=time.sleep,
    ):
        self.base = endpoint.rstrip("/") + "/v1"
        self.timeout_s = timeout_s
        self.ids = RemoteIds()
        self._sleep = sleep
        self.http = requests.Session()
        self.http.headers["OpenAI-Beta"] = "assistants=v2"
        if api_key:
            self.http.headers["Authorization"] = f"Bearer {api_key}"

    def _request(self, method: str, path: str, **kwargs) -> dict:
        url = self.base + path
        try:
            resp = self.http.request(method, url, timeout=self.timeout_s, **kwargs)
        except requests.Timeout:
            raise Timeout(f"{method} {url} timed out after {self.timeout_s}s") from None
        except requests.ConnectionError as exc:
            raise BackendUnavailable(f"cannot connect to {url}: {exc.__class__.__name__}") from None
        if resp.status_code >= 400:
            raise HttpError(resp.status_code, resp.text)
        try:
            return resp.json()
        except ValueError:
            raise HttpError(resp.status_code, f"{method} {path}: response is not JSON") from None

    def _list(self, path: str) -> list[dict]:
        return self._request("GET", path).get("data", [])

    # vector stores

    def find_vector_store(self, name: str) -> str | None:
        for store in self._list("/vector_stores"):
            if store.get("name") == name:
                return store["id"]
        return None

    def ensure_vector_store(self, name: str, upload_dir=None) -> str:
        """Reuse the store called ``name`` or create it.

        Only a freshly created store gets the PDFs from ``upload_dir``.
        """
        if not name:
            raise EmptyName()
        existing = self.find_vector_store(name)
        if existing:
            logger.info("Vector Store '%s' already exists with ID: %s", name, existing)
            self.ids.vector_store_id = existing
            return existing
        created = self._request("POST", "/vector_stores", json={"name": name})
        self.ids.vector_store_id = created["id"]
        logger.info("New vector store '%s' created with ID: %s", name, created["id"])
        if upload_dir is not None:
            self.upload_pdfs(created["id"], upload_dir)
        return created["id"]

    def upload_pdfs(self, vector_store_id: str, directory) -> dict[str, str]:
        directory = Path(directory)
        if not directory.is_dir():
            raise NotFound(f"Error: Directory '{directory}' does not exist.")
        entries = sorted(p for p in directory.iterdir())
        if not entries:
            raise EmptyDirectory(f"Error: Directory '{directory}' is empty. No files to upload.")
        pdfs = [p for p in entries if p.is_file() and p.suffix.lower() == ".pdf"]
        if not pdfs:
            raise NoPdfFiles(f"Error: No PDF files found in directory '{directory}'.")
        uploaded: dict[str, str] = {}
        for pdf in pdfs:
            try:
                with open(pdf, "rb") as fh:
                    f = self._request(
                        "POST",
                        "/files",
                        files={"file": (pdf.name, fh, "application/pdf")},
                        data={"purpose": "assistants"},
                    )
                self._request("POST", f"/vector_stores/{vector_store_id}/files", json={"file_id": f["id"]})
            except HttpError as exc:
                exc.partial = dict(uploaded)
                raise
            logger.info("Uploaded file: %s with ID: %s", pdf.name, f["id"])
            uploaded[pdf.name] = f["id"]
        self.ids.file_ids.update(uploaded)
        return uploaded

    # assistants

    def find_assistant(self, name: str) -> str | None:
        for assistant in self._list("/assistants"):
            if assistant.get("name") == name:
                return assistant["id"]
        return None

    def ensure_assistant(self, profile: AssistantProfile, vector_store_id: str) -> str:
        existing = self.find_assistant(profile.name)
        if existing:
            logger.info("AI Assistant already exists with ID: %s", existing)
            self.ids.assistant_id = existing
            return existing
        created = self._request("POST", "/assistants", json=profile.create_body(vector_store_id))
        logger.info("New AI Assistant created with ID: %s", created["id"])
        self.ids.assistant_id = created["id"]
        return created["id"]

    # conversation

    def create_thread(self, vector_store_id: str) -> str:
        body = {"tool_resources": {"file_search": {"vector_store_ids": [vector_store_id]}}}
        thread = self._request("POST", "/threads", json=body)
        self.ids.thread_id = thread["id"]
        return thread["id"]

    def _filename(self, file_id: str) -> str:
        return self._request("GET", f"/files/{file_id}").get("filename", file_id)

    def _assistant_replies(self, thread_id: str, after_message_id: str) -> list[dict]:
        """Assistant messages newer than ``after_message_id``, oldest first."""
        replies = []
        for msg in self._list(f"/threads/{thread_id}/messages?order=desc"):
            if msg.get("id") == after_message_id:
                break
            if msg.get("role") == "assistant" and msg.get("content"):
                replies.append(msg)
        replies.reverse()
        return replies

    def ask_remote(
        self,
        thread_id: str,
        assistant_id: str,
        question: str,
        poll_interval_s: float = 1.0,
        max_polls: int = 120,
    ) -> AnnotatedAnswer:
        started = time.perf_counter()
        message = self._request(
            "POST",
            f"/threads/{thread_id}/messages",
            json={"role": "user", "content": [{"type": "text", "text": question}]},
        )
        run = self._request("POST", f"/threads/{thread_id}/runs", json={"assistant_id": assistant_id})
        self.ids.run_id = run["id"]

        polls = 0
        while True:
            if polls >= max_polls:
                raise Timeout(f"run {run['id']} not finished after {max_polls} status checks")
            status = self._request("GET", f"/threads/{thread_id}/runs/{run['id']}")
            polls += 1
            state = status.get("status")
            if state == RunStatus.COMPLETED.value:
                break
            if state == RunStatus.FAILED.value or state in _FAILED_LIKE:
                raise RunFailed(status.get("last_error") or status.get("error") or state)
            if polls < max_polls:
                self._sleep(poll_interval_s)

        replies = []
        for attempt in range(MESSAGE_FETCH_ATTEMPTS):
            replies = self._assistant_replies(thread_id, message["id"])
            if replies:
                break
            if attempt + 1 < MESSAGE_FETCH_ATTEMPTS:
                self._sleep(poll_interval_s)
        if not replies:
            raise HttpError(200, f"run {run['id']} completed but no assistant message arrived")

        texts, citations = [], []
        next_index = 0
        for msg in replies:
            part = msg["content"][0]
            text = part.get("text", {}) if isinstance(part, dict) else {}
            annotations = text.get("annotations", [])
            value, cited = replace_annotations(text.get("value", ""), annotations, first_index=next_index)
            next_index += len(annotations)
            for index, file_id in cited:
                citations.append(f"[{index}] {self._filename(file_id)}")
            texts.append(value)
        return AnnotatedAnswer(
            text="\n\n".join(texts),
            citations=tuple(citations),
            backend_used="remote-assistant",
            latency_ms=int((time.perf_counter() - started) * 1000),
        )
