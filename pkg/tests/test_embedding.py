"""Positional indices, sentence matrices, and embedding tables."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cre.dataio import SentenceExample
from cre.embedding import (
    EntityEmbeddingTable,
    PositionalEmbeddingTable,
    SentenceMatrix,
    WordEmbeddingTable,
    encode_sentence_matrix,
    load_word_embeddings,
    lookup_entity,
    positional_index,
    prepare_sentence,
    truncation_window,
)
from cre.errors import CreError, DataError


class TestPositionalIndex:
    # "A bear entered the fridge", entities at 1 and 4
    @pytest.mark.parametrize(
        "word,entity,expected",
        [(0, 1, -1), (0, 4, -4), (2, 1, 1), (2, 4, -2), (3, 3, 0)],
    )
    def test_examples(self, word, entity, expected):
        assert positional_index(word, entity, 100) == expected

    def test_clamp(self):
        assert positional_index(0, 200, 100) == -100
        assert positional_index(500, 0, 100) == 100

    @given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 1000))
    def test_translation_invariant(self, w, e, c):
        assert positional_index(w, e, 10_000) == positional_index(w + c, e + c, 10_000)


def make_words(dim=4, vocab=("a", "b", "c")):
    rng = np.random.default_rng(0)
    vectors = {w: rng.standard_normal(dim) for w in ("<UNK>", *vocab)}
    return WordEmbeddingTable(dim, vectors)


def make_pos(p=2, d=5, seed=1):
    rng = np.random.default_rng(seed)
    return PositionalEmbeddingTable(p, d, rng.standard_normal((2 * d + 1, p)))


class TestSentenceMatrix:
    def test_shape_and_padding(self):
        s = SentenceExample(("a", "b", "c", "a", "b"), 1, 4, "E1", "E2")
        m = encode_sentence_matrix(s, make_words(), make_pos(), make_pos(seed=2), 8)
        assert m.matrix.shape == (8, 4 + 2 * 2)
        assert m.valid_length == 5
        assert np.all(m.matrix[5:] == 0.0)

    def test_entity_tokens_use_unk(self):
        words = make_words()
        s = SentenceExample(("a", "b", "c", "a", "b"), 1, 4, "E1", "E2")
        m = encode_sentence_matrix(s, words, make_pos(), make_pos(seed=2), 8)
        np.testing.assert_array_equal(m.matrix[1, :4], words.vectors["<UNK>"])
        np.testing.assert_array_equal(m.matrix[4, :4], words.vectors["<UNK>"])
        np.testing.assert_array_equal(m.matrix[0, :4], words.vectors["a"])

    def test_word_part_independent_of_positional_tables(self):
        s = SentenceExample(("a", "b", "c"), 0, 2, "E1", "E2")
        words = make_words()
        m1 = encode_sentence_matrix(s, words, make_pos(seed=1), make_pos(seed=2), 6)
        m2 = encode_sentence_matrix(s, words, make_pos(seed=8), make_pos(seed=9), 6)
        np.testing.assert_array_equal(m1.matrix[:3, :4], m2.matrix[:3, :4])

    def test_truncation_error_when_entities_spread(self):
        tokens = tuple("t" + str(i) for i in range(10))
        s = SentenceExample(tokens, 1, 9, "E1", "E2")
        with pytest.raises(DataError, match="entities outside window"):
            encode_sentence_matrix(s, make_words(), make_pos(), make_pos(seed=2), 8)

    def test_truncation_window_keeps_entities(self):
        tokens = tuple("t" + str(i) for i in range(12))
        s = SentenceExample(tokens, 6, 9, "E1", "E2")
        start = truncation_window(s, 6)
        assert start <= 6 and 9 < start + 6
        prep = prepare_sentence(s, make_words(), 5, 6)
        assert prep.valid_length == 6

    def test_right_truncation_when_entities_fit(self):
        tokens = tuple("t" + str(i) for i in range(12))
        s = SentenceExample(tokens, 0, 3, "E1", "E2")
        assert truncation_window(s, 6) == 0


class TestEntityTable:
    def test_lookup(self):
        table = EntityEmbeddingTable(3, {"E1": 0, "E2": 1}, np.arange(6.0).reshape(2, 3))
        np.testing.assert_array_equal(lookup_entity("E2", table), [3.0, 4.0, 5.0])

    def test_unknown_errors(self):
        table = EntityEmbeddingTable(3, {"E1": 0}, np.zeros((1, 3)))
        with pytest.raises(CreError, match="unknown entity"):
            lookup_entity("E9", table)


class TestLoadEmbeddings:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("2 3\n<UNK> 0.1 0.2 0.3\nfoo 1 2 3\n")
        table = load_word_embeddings(path)
        assert table.dimension == 3
        np.testing.assert_allclose(table.lookup("foo"), [1, 2, 3])
        np.testing.assert_allclose(table.lookup("missing"), [0.1, 0.2, 0.3])

    def test_missing_unk(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("1 2\nfoo 1 2\n")
        with pytest.raises(DataError, match="<UNK>"):
            load_word_embeddings(path)
