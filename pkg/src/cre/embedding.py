"""Sentence-matrix construction: fixed word vectors plus two learned
positional embeddings, and the learned entity-embedding table.

Every token row is [word vector | head-relative positional vector |
tail-relative positional vector], giving row dimension E = W + 2P.
Entity tokens are always mapped to the <UNK> word vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio import SentenceExample
from .errors import CreError, DataError
from .synthetic import UNK_TOKEN


@dataclass
class WordEmbeddingTable:
    dimension: int
    vectors: dict  # word -> (W,) float64; fixed, never trained

    def lookup(self, word: str) -> np.ndarray:
        return self.vectors.get(word, self.vectors[UNK_TOKEN])


def load_word_embeddings(path) -> WordEmbeddingTable:
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise DataError(f"{path}: bad embedding header")
        vocab_size, dim = int(header[0]), int(header[1])
        vectors = {}
        for lineno in range(vocab_size):
            parts = f.readline().split()
            if len(parts) != dim + 1:
                raise DataError(f"{path}: line {lineno + 2}: expected {dim} components")
            vectors[parts[0]] = np.array(parts[1:], dtype=np.float64)
    if UNK_TOKEN not in vectors:
        raise DataError(f"{path}: reserved token {UNK_TOKEN} missing")
    return WordEmbeddingTable(dim, vectors)


@dataclass
class PositionalEmbeddingTable:
    dimension: int
    max_distance: int
    table: np.ndarray  # (2*max_distance + 1, P), learned

    def lookup(self, relative: int) -> np.ndarray:
        return self.table[positional_index(relative, 0, self.max_distance) + self.max_distance]


@dataclass
class EntityEmbeddingTable:
    dimension: int
    index: dict  # entity id -> row
    table: np.ndarray  # (num_entities, K), learned


def lookup_entity(entity_id: str, table: EntityEmbeddingTable) -> np.ndarray:
    if entity_id not in table.index:
        raise CreError(f"unknown entity id: {entity_id}")
    return table.table[table.index[entity_id]]


def positional_index(word_pos: int, entity_pos: int, max_distance: int) -> int:
    """Clamped relative distance of a token to an entity token."""
    return int(np.clip(word_pos - entity_pos, -max_distance, max_distance))


def truncation_window(sentence: SentenceExample, max_length: int):
    """Start offset of the kept token window, or an error if the two
    entity tokens cannot both fit inside ``max_length`` tokens."""
    n = len(sentence.tokens)
    if n <= max_length:
        return 0
    lo = min(sentence.head_index, sentence.tail_index)
    hi = max(sentence.head_index, sentence.tail_index)
    if hi - lo + 1 > max_length:
        raise DataError("entities outside window")
    if hi < max_length:
        return 0  # plain right truncation suffices
    return min(hi - max_length + 1, lo, n - max_length)


@dataclass
class PreparedSentence:
    """Numeric view of one sentence, ready for encoding."""

    word_matrix: np.ndarray  # (valid_length, W), fixed word vectors
    head_rows: np.ndarray  # (valid_length,) positional table rows wrt head
    tail_rows: np.ndarray  # (valid_length,) positional table rows wrt tail
    valid_length: int
    head_entity: str
    tail_entity: str


def prepare_sentence(
    sentence: SentenceExample,
    words: WordEmbeddingTable,
    max_distance: int,
    max_length: int,
) -> PreparedSentence:
    start = truncation_window(sentence, max_length)
    tokens = sentence.tokens[start : start + max_length]
    head = sentence.head_index - start
    tail = sentence.tail_index - start
    n = len(tokens)
    unk = words.vectors[UNK_TOKEN]
    word_matrix = np.empty((n, words.dimension))
    for k, tok in enumerate(tokens):
        word_matrix[k] = unk if k in (head, tail) else words.lookup(tok)
    offsets = np.arange(n)
    head_rows = np.clip(offsets - head, -max_distance, max_distance) + max_distance
    tail_rows = np.clip(offsets - tail, -max_distance, max_distance) + max_distance
    return PreparedSentence(
        word_matrix=word_matrix,
        head_rows=head_rows,
        tail_rows=tail_rows,
        valid_length=n,
        head_entity=sentence.head_id,
        tail_entity=sentence.tail_id,
    )


@dataclass
class SentenceMatrix:
    matrix: np.ndarray  # (L, W + 2P); rows beyond valid_length are zero
    valid_length: int


def encode_sentence_matrix(
    sentence: SentenceExample,
    words: WordEmbeddingTable,
    pos_head: PositionalEmbeddingTable,
    pos_tail: PositionalEmbeddingTable,
    max_length: int,
) -> SentenceMatrix:
    if max_length < 2:
        raise DataError("max_length must be >= 2")
    prep = prepare_sentence(sentence, words, pos_head.max_distance, max_length)
    w, p = words.dimension, pos_head.dimension
    out = np.zeros((max_length, w + 2 * p))
    n = prep.valid_length
    out[:n, :w] = prep.word_matrix
    out[:n, w : w + p] = pos_head.table[prep.head_rows]
    out[:n, w + p :] = pos_tail.table[prep.tail_rows]
    return SentenceMatrix(out, n)
