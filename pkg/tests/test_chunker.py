import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_spans, greedy_merge_sizes
from ragforge.chunker import ChunkConfig, chunk_fixed, chunk_semantic, chunk_text, count_tokens
from ragforge.errors import InvalidConfig


def words(n, prefix="w"):
    return " ".join(f"{prefix}{i}" for i in range(n))


def spans(chunks):
    return [(c.token_start, c.token_end) for c in chunks]


def test_count_tokens():
    assert count_tokens("") == 0
    assert count_tokens("a b  c") == 3
    assert count_tokens(" \n\t ") == 0


def test_count_tokens_1200_word_file(tmp_path):
    path = tmp_path / "words.txt"
    path.write_text(" ".join(f"word{i:04d}" for i in range(1200)))
    assert count_tokens(path.read_text()) == 1200


def test_default_config_is_800_400():
    cfg = ChunkConfig()
    assert (cfg.max_chunk_tokens, cfg.overlap_tokens, cfg.stride) == (800, 400, 400)


@pytest.mark.parametrize("max_tokens, overlap", [(10, 10), (10, 11), (0, 0), (5, -1)])
def test_invalid_config(max_tokens, overlap):
    with pytest.raises(InvalidConfig):
        ChunkConfig(max_tokens, overlap)


def test_fixed_examples():
    assert spans(chunk_fixed(words(800))) == [(0, 800)]
    assert spans(chunk_fixed(words(1200))) == [(0, 800), (400, 1200)]
    assert chunk_fixed("") == []


def test_fixed_chunk_fields():
    chunks = chunk_fixed("a  b\n c d e", ChunkConfig(3, 1), doc_id="doc")
    assert [c.text for c in chunks] == ["a b c", "c d e"]
    assert [c.chunk_id for c in chunks] == ["doc:0", "doc:1"]
    assert [c.token_count for c in chunks] == [3, 3]


def test_semantic_examples():
    two_small = words(300, "a") + "\n\n" + words(300, "b")
    assert [c.token_count for c in chunk_semantic(two_small)] == [600]

    two_mid = words(500, "a") + "\n\n" + words(500, "b")
    assert [c.token_count for c in chunk_semantic(two_mid)] == [500, 500]

    big = chunk_semantic(words(900), ChunkConfig(800, 400))
    assert spans(big) == [(0, 800), (400, 900)]


def test_semantic_oversized_paragraph_between_small_ones():
    text = "\n\n".join([words(5, "a"), words(12, "b"), words(3, "c"), words(2, "d")])
    chunks = chunk_semantic(text, ChunkConfig(10, 4))
    assert spans(chunks) == [(0, 5), (5, 15), (11, 17), (17, 22)]
    assert [c.ordinal for c in chunks] == [0, 1, 2, 3]


def test_semantic_blank_lines_with_spaces():
    text = "one two\n   \nthree"
    assert [c.text for c in chunk_semantic(text, ChunkConfig(2, 0))] == ["one two", "three"]


def test_unknown_mode():
    with pytest.raises(InvalidConfig):
        chunk_text("x", mode="sentences")


configs = st.integers(1, 40).flatmap(lambda m: st.tuples(st.just(m), st.integers(0, m - 1)))


def assert_common_laws(chunks, n, cfg):
    if n == 0:
        assert chunks == []
        return
    covered = set()
    for c in chunks:
        assert 1 <= c.token_count <= cfg.max_chunk_tokens
        covered.update(range(c.token_start, c.token_end))
    assert covered == set(range(n))
    assert [c.ordinal for c in chunks] == list(range(len(chunks)))
    starts = [c.token_start for c in chunks]
    assert all(a < b for a, b in zip(starts, starts[1:]))


@settings(max_examples=300)
@given(n=st.integers(0, 300), cfg=configs)
def test_fixed_laws(n, cfg):
    cfg = ChunkConfig(*cfg)
    text = words(n)
    chunks = chunk_fixed(text, cfg)
    assert spans(chunks) == brute_force_spans(n, cfg.max_chunk_tokens, cfg.overlap_tokens)
    assert_common_laws(chunks, n, cfg)
    for a, b in zip(chunks, chunks[1:]):
        assert a.token_count == cfg.max_chunk_tokens  # only the last may be short
        assert a.token_end - b.token_start == cfg.overlap_tokens
    assert chunk_fixed(text, cfg) == chunks
    tokens = text.split()
    for c in chunks:
        assert c.text == " ".join(tokens[c.token_start : c.token_end])


@settings(max_examples=300)
@given(sizes=st.lists(st.integers(1, 60), max_size=12), cfg=configs)
def test_semantic_laws(sizes, cfg):
    cfg = ChunkConfig(*cfg)
    text = "\n\n".join(words(s, f"p{i}_") for i, s in enumerate(sizes))
    n = sum(sizes)
    chunks = chunk_semantic(text, cfg)
    assert_common_laws(chunks, n, cfg)
    assert chunk_semantic(text, cfg) == chunks
    # merged groups follow the greedy oracle; oversized paragraphs become fixed windows
    expected = []
    for size in greedy_merge_sizes(sizes, cfg.max_chunk_tokens):
        if size > 0:
            expected.append(size)
        else:
            expected.extend(e - s for s, e in brute_force_spans(-size, cfg.max_chunk_tokens, cfg.overlap_tokens))
    assert [c.token_count for c in chunks] == expected
