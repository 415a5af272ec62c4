"""Scripted in-process HTTP server speaking the wire protocols ragforge uses.

Covers the embeddings, chat-completions and local-generate endpoints plus the
managed-assistant subset (vector stores, files, assistants, threads, messages,
runs). Behaviour comes from a scenario dict (or JSON file)::

    {
      "vector_stores": [{"id": "vs_seed", "name": "kb"}],
      "assistants": [{"id": "asst_seed", "name": "helper"}],
      "files": [{"id": "file-a", "filename": "a.pdf"}],
      "run_script": ["queued", "in_progress", "completed"],
      "run_error": {"code": "server_error", "message": "boom"},
      "assistant_reply": {"value": "...", "annotations": [{"text": "...", "file_id": "file-a"}]},
      "chat_reply": "text", "local_reply": "text",
      "embedding_length_delta": 0,
      "faults": {"POST /v1/chat/completions": [500, 500]},
      "delays": {"POST /v1/threads": 0.5}
    }

Every request is recorded for assertions. Run as a module to serve a scenario
file for manual CLI sessions.
"""

from __future__ import annotations

import argparse
import itertools
import json
import re
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlsplit

from .embedding import reference_embed


@dataclass
class RecordedRequest:
    method: str
    path: str
    query: dict
    headers: dict
    body: bytes
    json: object = None

    @property
    def route(self) -> str:
        return f"{self.method} {self.path}"


@dataclass
class _Run:
    id: str
    thread_id: str
    assistant_id: str
    script: list[str]
    polls: int = 0
    replied: bool = False


@dataclass
class _State:
    vector_stores: list[dict] = field(default_factory=list)
    assistants: list[dict] = field(default_factory=list)
    files: dict[str, dict] = field(default_factory=dict)
    store_files: dict[str, list[str]] = field(default_factory=dict)
    threads: dict[str, dict] = field(default_factory=dict)
    messages: dict[str, list[dict]] = field(default_factory=dict)
    runs: dict[str, _Run] = field(default_factory=dict)


class MockServer:
    def __init__(self, scenario: dict | str | Path | None = None):
        if isinstance(scenario, (str, Path)):
            scenario = json.loads(Path(scenario).read_text(encoding="utf-8"))
        self.scenario = dict(scenario or {})
        self.requests: list[RecordedRequest] = []
        self._lock = threading.Lock()
        self._ids = itertools.count(1)
        self._clock = itertools.count(1_700_000_000)
        self.state = _State(
            vector_stores=[dict(v) for v in self.scenario.get("vector_stores", [])],
            assistants=[dict(a) for a in self.scenario.get("assistants", [])],
            files={f["id"]: dict(f) for f in self.scenario.get("files", [])},
        )
        self._faults = {k: list(v) for k, v in self.scenario.get("faults", {}).items()}
        self._httpd: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    # lifecycle

    def start(self, port: int = 0) -> "MockServer":
        server = self

        class Handler(_Handler):
            mock = server

        self._httpd = ThreadingHTTPServer(("127.0.0.1", port), Handler)
        self._httpd.daemon_threads = True
        self._thread = threading.Thread(target=self._httpd.serve_forever, args=(0.05,), daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        if self._httpd:
            self._httpd.shutdown()
            self._httpd.server_close()
            self._httpd = None

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    # assertions helpers

    def count(self, method: str, path_pattern: str) -> int:
        rx = re.compile(path_pattern + r"$")
        return sum(1 for r in self.requests if r.method == method and rx.match(r.path))

    def last(self, method: str, path_pattern: str) -> RecordedRequest:
        rx = re.compile(path_pattern + r"$")
        matches = [r for r in self.requests if r.method == method and rx.match(r.path)]
        if not matches:
            raise AssertionError(f"no {method} {path_pattern} request recorded")
        return matches[-1]

    # request handling (called from handler threads)

    def _new_id(self, prefix: str) -> str:
        return f"{prefix}_{next(self._ids):04d}"

    def handle(self, req: RecordedRequest) -> tuple[int, object]:
        with self._lock:
            self.requests.append(req)
            delay = self.scenario.get("delays", {}).get(req.route)
            fault = None
            queue = self._faults.get(req.route)
            if queue:
                fault = queue.pop(0)
        if delay:
            time.sleep(delay)
        if fault is not None:
            return fault, {"error": {"message": f"scripted failure {fault}", "type": "server_error"}}
        with self._lock:
            return self._dispatch(req)

    def _dispatch(self, req: RecordedRequest) -> tuple[int, object]:
        m, p = req.method, req.path
        body = req.json if isinstance(req.json, dict) else {}
        st = self.state

        if (m, p) == ("POST", "/v1/embeddings"):
            return self._embeddings(body)
        if (m, p) == ("POST", "/v1/chat/completions"):
            reply = self.scenario.get("chat_reply", "mock chat answer")
            return 200, {
                "id": self._new_id("chatcmpl"),
                "object": "chat.completion",
                "model": body.get("model"),
                "choices": [{"index": 0, "message": {"role": "assistant", "content": reply}, "finish_reason": "stop"}],
            }
        if (m, p) == ("POST", "/api/generate"):
            return 200, {"model": body.get("model"), "response": self.scenario.get("local_reply", "mock local answer"), "done": True}

        if p == "/v1/vector_stores":
            if m == "GET":
                return 200, {"object": "list", "data": st.vector_stores}
            if m == "POST":
                vs = {"id": self._new_id("vs"), "object": "vector_store", "name": body.get("name")}
                st.vector_stores.append(vs)
                return 200, vs
        if m == "POST" and p == "/v1/files":
            match = re.search(rb'filename="([^"]+)"', req.body)
            name = match.group(1).decode("utf-8", "replace") if match else "upload.bin"
            f = {"id": self._new_id("file"), "object": "file", "filename": name, "purpose": "assistants"}
            st.files[f["id"]] = f
            return 200, f
        if mt := re.fullmatch(r"/v1/vector_stores/([^/]+)/files", p):
            if m == "POST":
                vs_id, file_id = mt.group(1), body.get("file_id")
                if file_id not in st.files:
                    return 404, {"error": {"message": f"no file {file_id}"}}
                st.store_files.setdefault(vs_id, []).append(file_id)
                return 200, {"id": file_id, "object": "vector_store.file", "vector_store_id": vs_id}
        if (mt := re.fullmatch(r"/v1/files/([^/]+)", p)) and m == "GET":
            f = st.files.get(mt.group(1))
            return (200, f) if f else (404, {"error": {"message": "no such file"}})

        if p == "/v1/assistants":
            if m == "GET":
                return 200, {"object": "list", "data": st.assistants}
            if m == "POST":
                a = dict(body, id=self._new_id("asst"), object="assistant")
                st.assistants.append(a)
                return 200, a
        if (m, p) == ("POST", "/v1/threads"):
            t = {"id": self._new_id("thread"), "object": "thread", "tool_resources": body.get("tool_resources")}
            st.threads[t["id"]] = t
            st.messages[t["id"]] = []
            return 200, t
        if mt := re.fullmatch(r"/v1/threads/([^/]+)/messages", p):
            tid = mt.group(1)
            if tid not in st.threads:
                return 404, {"error": {"message": "no such thread"}}
            if m == "POST":
                msg = {
                    "id": self._new_id("msg"),
                    "object": "thread.message",
                    "created_at": next(self._clock),
                    "role": body.get("role", "user"),
                    "content": [{"type": "text", "text": {"value": _content_text(body.get("content")), "annotations": []}}],
                }
                st.messages[tid].append(msg)
                return 200, msg
            if m == "GET":
                msgs = list(st.messages[tid])
                if req.query.get("order", ["desc"])[0] == "desc":
                    msgs.reverse()
                return 200, {"object": "list", "data": msgs}
        if (mt := re.fullmatch(r"/v1/threads/([^/]+)/runs", p)) and m == "POST":
            tid = mt.group(1)
            if tid not in st.threads:
                return 404, {"error": {"message": "no such thread"}}
            run = _Run(self._new_id("run"), tid, body.get("assistant_id"), list(self.scenario.get("run_script", ["completed"])))
            st.runs[run.id] = run
            return 200, {"id": run.id, "object": "thread.run", "status": "queued", "thread_id": tid}
        if (mt := re.fullmatch(r"/v1/threads/([^/]+)/runs/([^/]+)", p)) and m == "GET":
            run = st.runs.get(mt.group(2))
            if run is None:
                return 404, {"error": {"message": "no such run"}}
            status = run.script[min(run.polls, len(run.script) - 1)]
            run.polls += 1
            out = {"id": run.id, "object": "thread.run", "status": status, "last_error": None}
            if status == "failed":
                out["last_error"] = self.scenario.get("run_error", {"code": "server_error", "message": "run failed"})
            if status == "completed" and not run.replied:
                run.replied = True
                self._post_reply(run.thread_id)
            return 200, out
        return 404, {"error": {"message": f"no route for {m} {p}"}}

    def _embeddings(self, body: dict) -> tuple[int, object]:
        inputs = body.get("input", [])
        if isinstance(inputs, str):
            inputs = [inputs]
        dim = int(self.scenario.get("embedding_dimension", 8)) + int(self.scenario.get("embedding_length_delta", 0))
        data = [
            {"object": "embedding", "index": i, "embedding": list(reference_embed(t, max(dim, 1)).values)[:dim]}
            for i, t in enumerate(inputs)
        ]
        if self.scenario.get("embedding_reverse_order"):
            data.reverse()
        return 200, {"object": "list", "model": body.get("model"), "data": data}

    def _post_reply(self, thread_id: str) -> None:
        reply = self.scenario.get("assistant_reply", {"value": "mock assistant answer", "annotations": []})
        annotations = []
        for ann in reply.get("annotations", []):
            start = reply["value"].find(ann["text"])
            annotations.append(
                {
                    "type": "file_citation",
                    "text": ann["text"],
                    "start_index": start,
                    "end_index": start + len(ann["text"]),
                    "file_citation": {"file_id": ann["file_id"]},
                }
            )
        self.state.messages[thread_id].append(
            {
                "id": self._new_id("msg"),
                "object": "thread.message",
                "created_at": next(self._clock),
                "role": "assistant",
                "content": [{"type": "text", "text": {"value": reply["value"], "annotations": annotations}}],
            }
        )


def _content_text(content) -> str:
    if isinstance(content, str):
        return content
    if isinstance(content, list):
        return "".join(part.get("text", "") for part in content if isinstance(part, dict))
    return ""


class _Handler(BaseHTTPRequestHandler):
    mock: MockServer
    protocol_version = "HTTP/1.1"

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        pass

    def _serve(self) -> None:
        parts = urlsplit(self.path)
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        payload = None
        if raw and "json" in (self.headers.get("Content-Type") or ""):
            try:
                payload = json.loads(raw)
            except ValueError:
                self._reply(400, {"error": {"message": "invalid JSON"}})
                return
        req = RecordedRequest(
            method=self.command,
            path=parts.path,
            query=parse_qs(parts.query),
            headers=dict(self.headers.items()),
            body=raw,
            json=payload,
        )
        status, body = self.mock.handle(req)
        self._reply(status, body)

    def _reply(self, status: int, body) -> None:
        data = json.dumps(body).encode("utf-8")
        try:
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)
        except (BrokenPipeError, ConnectionResetError):
            pass

    do_GET = do_POST = do_DELETE = _serve


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(prog="python -m ragforge.mock_server", description=__doc__.split("\n\n")[0])
    parser.add_argument("scenario", nargs="?", help="scenario JSON file")
    parser.add_argument("--port", type=int, default=8765)
    args = parser.parse_args(argv)
    server = MockServer(args.scenario).start(args.port)
    print(f"mock server listening on {server.url} (Ctrl-C to stop)", flush=True)
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        server.stop()


if __name__ == "__main__":
    main()
