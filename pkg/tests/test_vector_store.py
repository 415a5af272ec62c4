import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import naive_top_k, random_unit_vectors
from ragforge import vector_store
from ragforge.chunker import Chunk
from ragforge.embedding import EmbeddingVector
from ragforge.errors import (
    ConfigMismatch,
    CorruptStore,
    DimensionMismatch,
    EmbedderMismatch,
    EmptyName,
    InvalidConfig,
    NotFound,
)

EID = "test-emb"


def vec(values, eid=EID):
    return EmbeddingVector(tuple(float(v) for v in values), eid)


def item(i, values, source="a.txt", eid=EID):
    return Chunk(f"doc{i}", 0, f"text {i}", 0, 2), source, vec(values, eid)


def make_store(tmp_path, vectors, name="kb"):
    dim = len(vectors[0]) if vectors else 2
    store = vector_store.get_or_create_store(tmp_path, name, dim, EID)
    store.add_records(item(i, v) for i, v in enumerate(vectors))
    return store


def test_search_example(tmp_path):
    store = make_store(tmp_path, [[1, 0], [0, 1], [0.6, 0.8]])
    hits = store.search(vec([1, 0]), 2)
    assert [(h.record.chunk.doc_id, round(h.score, 12)) for h in hits] == [("doc0", 1.0), ("doc2", 0.6)]
    assert store.search(vec([1, 0]), 0) == []


def test_ties_go_to_earlier_insert(tmp_path):
    store = make_store(tmp_path, [[0, 1], [1, 0], [2, 0], [1, 0]])
    assert [h.record.insert_seq for h in store.search(vec([1, 0]), 3)] == [1, 2, 3]


def test_zero_vectors_score_zero(tmp_path):
    store = make_store(tmp_path, [[0, 0], [1, 0]])
    scores = [h.score for h in store.search(vec([1, 0]), 5)]
    assert scores == [1.0, 0.0]
    assert [h.score for h in store.search(vec([0, 0]), 5)] == [0.0, 0.0]


def test_get_or_create_is_idempotent(tmp_path):
    first = vector_store.get_or_create_store(tmp_path, "kb", 4, EID)
    second = vector_store.get_or_create_store(tmp_path, "kb", 4, EID)
    assert first.manifest == second.manifest
    assert first.manifest.store_id.startswith("kb-")
    keys = json.loads((tmp_path / "kb" / "manifest.json").read_text())
    assert list(keys) == ["name", "store_id", "dimension", "embedder_id", "record_count", "created_at"]


def test_name_errors(tmp_path):
    with pytest.raises(EmptyName, match="vector_store_name"):
        vector_store.get_or_create_store(tmp_path, "", 4, EID)
    with pytest.raises(InvalidConfig):
        vector_store.get_or_create_store(tmp_path, "../x", 4, EID)


def test_config_mismatch(tmp_path):
    vector_store.get_or_create_store(tmp_path, "kb", 4, EID)
    with pytest.raises(ConfigMismatch):
        vector_store.get_or_create_store(tmp_path, "kb", 8, EID)
    with pytest.raises(ConfigMismatch):
        vector_store.get_or_create_store(tmp_path, "kb", 4, "other")


def test_add_assigns_sequential_seqs(tmp_path):
    store = vector_store.get_or_create_store(tmp_path, "kb", 2, EID)
    assert store.add_records([item(0, [1, 0]), item(1, [0, 1])]) == [0, 1]
    assert store.add_records([item(2, [1, 1])]) == [2]
    assert store.manifest.record_count == 3


@pytest.mark.parametrize(
    "bad, error",
    [(item(9, [1, 0, 0]), DimensionMismatch), (item(9, [1, 0], eid="other"), EmbedderMismatch)],
)
def test_bad_insert_is_all_or_nothing(tmp_path, bad, error):
    store = make_store(tmp_path, [[1, 0]])
    with pytest.raises(error):
        store.add_records([item(5, [0, 1]), bad])
    assert len(store) == 1
    assert vector_store.load(tmp_path, "kb").manifest.record_count == 1


def test_query_dimension_mismatch(tmp_path):
    store = make_store(tmp_path, [[1, 0]])
    with pytest.raises(DimensionMismatch):
        store.search(vec([1, 0, 0]), 1)


def test_round_trip(tmp_path):
    rng = random.Random(3)
    vectors = random_unit_vectors(rng, 40, 16)
    store = make_store(tmp_path, vectors)
    loaded = vector_store.load(tmp_path, "kb")
    assert loaded.manifest == store.manifest
    assert [r.to_json() for r in loaded.records] == [r.to_json() for r in store.records]
    q = vec(vectors[7])
    assert [(h.record.insert_seq, h.score) for h in loaded.search(q, 5)] == [
        (h.record.insert_seq, h.score) for h in store.search(q, 5)
    ]


def test_truncated_records_are_corrupt(tmp_path):
    make_store(tmp_path, [[1, 0], [0, 1], [1, 1]])
    path = tmp_path / "kb" / "records.jsonl"
    lines = path.read_text().splitlines(keepends=True)
    path.write_text("".join(lines[:2]))
    with pytest.raises(CorruptStore):
        vector_store.load(tmp_path, "kb")
    path.write_text("".join(lines[:2]) + lines[2][:20])
    with pytest.raises(CorruptStore):
        vector_store.load(tmp_path, "kb")


def test_manifest_with_extra_key_is_corrupt(tmp_path):
    make_store(tmp_path, [[1, 0]])
    path = tmp_path / "kb" / "manifest.json"
    data = json.loads(path.read_text())
    data["extra"] = 1
    path.write_text(json.dumps(data))
    with pytest.raises(CorruptStore):
        vector_store.load(tmp_path, "kb")


def test_missing_store(tmp_path):
    with pytest.raises(NotFound):
        vector_store.load(tmp_path, "nope")
    with pytest.raises(NotFound):
        vector_store.delete_store(tmp_path, "nope")


def test_list_and_delete(tmp_path):
    assert vector_store.list_stores(tmp_path / "none") == []
    make_store(tmp_path, [[1, 0]], name="b")
    make_store(tmp_path, [[1, 0]], name="a")
    assert [m.name for m in vector_store.list_stores(tmp_path)] == ["a", "b"]
    vector_store.delete_store(tmp_path, "a")
    assert [m.name for m in vector_store.list_stores(tmp_path)] == ["b"]


def test_cosine_helper():
    assert vector_store.cosine([1, 0], [0, 0]) == 0.0
    assert vector_store.cosine([2, 0], [1, 0]) == 1.0


small_vectors = st.lists(
    st.lists(st.integers(-3, 3), min_size=3, max_size=3), min_size=1, max_size=25
)


@settings(max_examples=200, deadline=None)
@given(vectors=small_vectors, query=st.lists(st.integers(-3, 3), min_size=3, max_size=3), k=st.integers(0, 30))
def test_search_matches_naive_oracle(tmp_path_factory, vectors, query, k):
    # small integer coordinates produce many exact ties
    store = vector_store.VectorStore(
        tmp_path_factory.mktemp("s"),
        vector_store.StoreManifest("kb", "kb-x", 3, EID, 0, "t"),
        [
            vector_store.StoreRecord(Chunk("d", i, "t", 0, 1), "f", vec(v), i)
            for i, v in enumerate(vectors)
        ],
    )
    got = [h.record.insert_seq for h in store.search(vec(query), k)]
    expected = naive_top_k(vectors, query, k)
    # equal cosines can differ in the last bit; compare scores, then require tie-break order
    assert len(got) == len(expected)
    scores = {h.record.insert_seq: h.score for h in store.search(vec(query), len(vectors))}
    assert all(abs(scores[a] - scores[b]) <= 1e-12 for a, b in zip(got, expected))
    ranked = [(round(scores[i], 9), i) for i in got]
    assert ranked == sorted(ranked, key=lambda t: (-t[0], t[1]))


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 10_000), t1=st.floats(-1, 1), t2=st.floats(-1, 1))
def test_min_score_filter_is_monotone(tmp_path_factory, seed, t1, t2):
    lo, hi = sorted((t1, t2))
    rng = random.Random(seed)
    vectors = random_unit_vectors(rng, 20, 4)
    store = vector_store.VectorStore(
        tmp_path_factory.mktemp("s"),
        vector_store.StoreManifest("kb", "kb-x", 4, EID, 0, "t"),
        [vector_store.StoreRecord(Chunk("d", i, "t", 0, 1), "f", vec(v), i) for i, v in enumerate(vectors)],
    )
    q = vec(random_unit_vectors(rng, 1, 4)[0])
    loose = [h.record.insert_seq for h in store.search(q, 20, lo)]
    strict = [h.record.insert_seq for h in store.search(q, 20, hi)]
    assert set(strict) <= set(loose)
    assert all(h.score >= hi for h in store.search(q, 20, hi))
