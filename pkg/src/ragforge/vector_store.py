"""Named on-disk vector stores with exact cosine top-k search.

Layout under ``<root>/<name>/``::

    manifest.json   name, store_id, dimension, embedder_id, record_count, created_at
    records.jsonl   one record per line, in insertion order
"""

from __future__ import annotations

import json
import os
import shutil
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .chunker import Chunk
from .embedding import EmbeddingVector
from .errors import (
    ConfigMismatch,
    CorruptStore,
    DimensionMismatch,
    EmbedderMismatch,
    EmptyName,
    InvalidConfig,
    IoError,
    NotFound,
)

MANIFEST = "manifest.json"
RECORDS = "records.jsonl"
MANIFEST_KEYS = ("name", "store_id", "dimension", "embedder_id", "record_count", "created_at")


@dataclass(frozen=True)
class StoreManifest:
    name: str
    store_id: str
    dimension: int
    embedder_id: str
    record_count: int
    created_at: str


@dataclass(frozen=True)
class StoreRecord:
    chunk: Chunk
    source_file: str
    embedding: EmbeddingVector
    insert_seq: int

    def to_json(self) -> dict:
        c = self.chunk
        return {
            "seq": self.insert_seq,
            "chunk_id": c.chunk_id,
            "doc_id": c.doc_id,
            "source_file": self.source_file,
            "ordinal": c.ordinal,
            "token_start": c.token_start,
            "token_end": c.token_end,
            "text": c.text,
            "embedding": list(self.embedding.values),
        }


@dataclass(frozen=True)
class SearchHit:
    record: StoreRecord
    score: float


def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    """Cosine similarity; 0.0 when either vector is all zeros."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def _utc_now() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


def _check_name(name: str) -> None:
    if not name:
        raise EmptyName()
    if name in (".", "..") or "/" in name or "\\" in name or name != name.strip():
        raise InvalidConfig(f"invalid store name {name!r}: must be a plain directory name")


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


class VectorStore:
    """One named store. Single writer, many readers."""

    def __init__(self, root: Path, manifest: StoreManifest, records: list[StoreRecord] | None = None):
        self.root = Path(root)
        self.manifest = manifest
        self.records: list[StoreRecord] = records or []
        self._matrix: np.ndarray | None = None
        self._norms: np.ndarray | None = None

    @property
    def path(self) -> Path:
        return self.root / self.manifest.name

    @property
    def name(self) -> str:
        return self.manifest.name

    def __len__(self) -> int:
        return len(self.records)

    def doc_ids(self) -> set[str]:
        return {r.chunk.doc_id for r in self.records}

    def _check_vector(self, vec: EmbeddingVector, what: str) -> None:
        m = self.manifest
        if vec.embedder_id != m.embedder_id:
            raise EmbedderMismatch(
                f"{what} was produced by {vec.embedder_id!r} but store {m.name!r} "
                f"holds {m.embedder_id!r} embeddings; index and query with the same embedder"
            )
        if len(vec.values) != m.dimension:
            raise DimensionMismatch(
                f"{what} has dimension {len(vec.values)}, store {m.name!r} expects {m.dimension}"
            )

    def add_records(self, items: Iterable[tuple[Chunk, str, EmbeddingVector]]) -> list[int]:
        """Append records and persist them; all-or-nothing validation."""
        items = list(items)
        for chunk, _, vec in items:
            self._check_vector(vec, f"embedding for chunk {chunk.chunk_id}")
        start = len(self.records)
        new = [
            StoreRecord(chunk=chunk, source_file=src, embedding=vec, insert_seq=start + i)
            for i, (chunk, src, vec) in enumerate(items)
        ]
        if not new:
            return []
        try:
            with open(self.path / RECORDS, "a", encoding="utf-8") as fh:
                for rec in new:
                    fh.write(json.dumps(rec.to_json(), ensure_ascii=False) + "\n")
        except OSError as exc:
            raise IoError(f"cannot append to store {self.name!r}: {exc}") from None
        self.records.extend(new)
        self.manifest = _replace_count(self.manifest, len(self.records))
        self._write_manifest()
        self._matrix = None
        return [r.insert_seq for r in new]

    def _write_manifest(self) -> None:
        try:
            _write_atomic(self.path / MANIFEST, json.dumps(asdict(self.manifest), indent=2) + "\n")
        except OSError as exc:
            raise IoError(f"cannot write manifest for {self.name!r}: {exc}") from None

    def persist(self) -> None:
        """Rewrite the whole store from memory."""
        try:
            self.path.mkdir(parents=True, exist_ok=True)
            lines = "".join(json.dumps(r.to_json(), ensure_ascii=False) + "\n" for r in self.records)
            _write_atomic(self.path / RECORDS, lines)
        except OSError as exc:
            raise IoError(f"cannot persist store {self.name!r}: {exc}") from None
        self._write_manifest()

    def _index(self) -> tuple[np.ndarray, np.ndarray]:
        if self._matrix is None:
            d = self.manifest.dimension
            matrix = np.array([r.embedding.values for r in self.records], dtype=np.float64).reshape(-1, d)
            self._matrix = matrix
            self._norms = np.linalg.norm(matrix, axis=1)
        return self._matrix, self._norms

    def search(self, query: EmbeddingVector, k: int, min_score: float = -1.0) -> list[SearchHit]:
        """Exact top-k by cosine; ties go to the earlier insertion."""
        if len(query.values) != self.manifest.dimension:
            raise DimensionMismatch(
                f"query has dimension {len(query.values)}, store {self.name!r} expects {self.manifest.dimension}"
            )
        if k <= 0 or not self.records:
            return []
        matrix, norms = self._index()
        q = np.asarray(query.values, dtype=np.float64)
        qnorm = np.linalg.norm(q)
        denom = norms * qnorm
        with np.errstate(divide="ignore", invalid="ignore"):
            scores = np.where(denom > 0.0, (matrix @ q) / denom, 0.0)
        scores = np.clip(scores, -1.0, 1.0)
        seqs = np.arange(len(self.records))
        order = np.lexsort((seqs, -scores))
        hits = []
        for i in order:
            if scores[i] < min_score:
                break
            hits.append(SearchHit(self.records[i], float(scores[i])))
            if len(hits) == k:
                break
        return hits


def _replace_count(m: StoreManifest, count: int) -> StoreManifest:
    return StoreManifest(m.name, m.store_id, m.dimension, m.embedder_id, count, m.created_at)


def get_or_create_store(root, name: str, dimension: int, embedder_id: str) -> VectorStore:
    _check_name(name)
    root = Path(root)
    if (root / name / MANIFEST).exists():
        store = load(root, name)
        m = store.manifest
        if m.dimension != dimension or m.embedder_id != embedder_id:
            raise ConfigMismatch(
                f"store {name!r} was created with {m.embedder_id} (dimension {m.dimension}); "
                f"requested {embedder_id} (dimension {dimension})"
            )
        return store
    if dimension < 1:
        raise InvalidConfig(f"dimension must be positive, got {dimension}")
    now = _utc_now()
    manifest = StoreManifest(
        name=name,
        store_id=f"{name}-{now.strftime('%Y%m%dT%H%M%SZ')}",
        dimension=dimension,
        embedder_id=embedder_id,
        record_count=0,
        created_at=now.strftime("%Y-%m-%dT%H:%M:%SZ"),
    )
    store = VectorStore(root, manifest)
    store.persist()
    return store


def _parse_manifest(path: Path) -> StoreManifest:
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from None
    except ValueError as exc:
        raise CorruptStore(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict) or set(raw) != set(MANIFEST_KEYS):
        raise CorruptStore(f"{path}: manifest keys must be exactly {', '.join(MANIFEST_KEYS)}")
    ints_ok = all(isinstance(raw[k], int) and not isinstance(raw[k], bool) for k in ("dimension", "record_count"))
    strs_ok = all(isinstance(raw[k], str) for k in ("name", "store_id", "embedder_id", "created_at"))
    if not (ints_ok and strs_ok) or raw["dimension"] < 1 or raw["record_count"] < 0:
        raise CorruptStore(f"{path}: manifest field has the wrong type or range")
    return StoreManifest(**raw)


def _parse_record(line: str, lineno: int, m: StoreManifest) -> StoreRecord:
    try:
        raw = json.loads(line)
        emb = raw["embedding"]
        if len(emb) != m.dimension:
            raise CorruptStore(f"{RECORDS} line {lineno}: embedding length {len(emb)} != {m.dimension}")
        chunk = Chunk(
            doc_id=str(raw["doc_id"]),
            ordinal=int(raw["ordinal"]),
            text=str(raw["text"]),
            token_start=int(raw["token_start"]),
            token_end=int(raw["token_end"]),
        )
        if raw["chunk_id"] != chunk.chunk_id:
            raise CorruptStore(f"{RECORDS} line {lineno}: chunk_id does not match doc_id:ordinal")
        return StoreRecord(
            chunk=chunk,
            source_file=str(raw["source_file"]),
            embedding=EmbeddingVector(tuple(float(x) for x in emb), m.embedder_id),
            insert_seq=int(raw["seq"]),
        )
    except CorruptStore:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptStore(f"{RECORDS} line {lineno}: malformed record ({exc})") from None


def load(root, name: str) -> VectorStore:
    _check_name(name)
    path = Path(root) / name
    if not (path / MANIFEST).is_file():
        raise NotFound(f"vector store {name!r} not found under {root}")
    manifest = _parse_manifest(path / MANIFEST)
    if manifest.name != name:
        raise CorruptStore(f"manifest name {manifest.name!r} does not match directory {name!r}")
    records = []
    records_path = path / RECORDS
    if records_path.exists():
        try:
            lines = records_path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise IoError(f"cannot read {records_path}: {exc}") from None
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                raise CorruptStore(f"{RECORDS} line {lineno}: blank line")
            rec = _parse_record(line, lineno, manifest)
            if rec.insert_seq != lineno - 1:
                raise CorruptStore(f"{RECORDS} line {lineno}: seq {rec.insert_seq} out of order")
            records.append(rec)
    if len(records) != manifest.record_count:
        raise CorruptStore(
            f"store {name!r}: manifest says {manifest.record_count} records, found {len(records)}"
        )
    return VectorStore(Path(root), manifest, records)


def list_stores(root) -> list[StoreManifest]:
    root = Path(root)
    if not root.is_dir():
        return []
    return [
        _parse_manifest(p / MANIFEST)
        for p in sorted(root.iterdir(), key=lambda p: p.name)
        if (p / MANIFEST).is_file()
    ]


def delete_store(root, name: str) -> None:
    _check_name(name)
    path = Path(root) / name
    if not (path / MANIFEST).is_file():
        raise NotFound(f"vector store {name!r} not found under {root}")
    try:
        shutil.rmtree(path)
    except OSError as exc:
        raise IoError(f"cannot delete store {name!r}: {exc}") from None
