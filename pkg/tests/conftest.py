"""Shared desk-scale fixtures for pipeline tests."""

import numpy as np
import pytest

from cre import dataio, synthetic
from cre.embedding import load_word_embeddings
from cre.encoders import EncoderConfig
from cre.model import ModelDims
from cre.synthetic import SyntheticSpec

TINY_SPEC = SyntheticSpec(
    entities=12,
    relations=3,
    templates_per_relation=2,
    pairs_per_relation=10,
    negative_pairs=10,
    sentences_per_pair=2,
    vocab_size=40,
    word_dim=8,
)

TINY_DIMS = ModelDims(word_dim=8, pos_dim=2, max_distance=8, max_length=10, entity_dim=6)


def tiny_encoder(kind="cnn"):
    if kind == "cnn":
        return EncoderConfig(kind="cnn", hidden_dim=10, window=3)
    if kind == "lstm":
        return EncoderConfig(kind="lstm", hidden_dim=10)
    return EncoderConfig(kind="transformer", hidden_dim=8, heads=2, layers=1)


@pytest.fixture(scope="session")
def tiny_data(tmp_path_factory):
    """Small synthetic dataset, split, and word table shared across tests."""
    root = tmp_path_factory.mktemp("tiny")
    corpus, kb, emb = root / "c.jsonl", root / "kb.tsv", root / "emb.txt"
    synthetic.gen_synthetic(TINY_SPEC, 11, corpus, kb, emb)
    ds = dataio.build_dataset(dataio.parse_corpus(corpus), dataio.parse_kb(kb), 1000)
    train, test = dataio.split_dataset(ds, 0.25, seed=0)
    words = load_word_embeddings(emb)
    return {"dataset": ds, "train": train, "test": test, "words": words, "root": root}


def random_bag(rng, num_relations, entities=("Ea", "Eb"), n_sentences=2, vocab_size=6):
    vocab = [f"v{i}" for i in range(vocab_size)]
    sentences = []
    for _ in range(n_sentences):
        n = int(rng.integers(4, 8))
        tokens = [vocab[int(i)] for i in rng.integers(0, vocab_size, n)]
        tokens[0], tokens[n - 1] = entities[0], entities[1]
        sentences.append(dataio.SentenceExample(tuple(tokens), 0, n - 1, *entities))
    gold = frozenset(rng.choice(num_relations, size=2, replace=False).tolist()) or frozenset({0})
    return dataio.EntityPairBag(entities[0], entities[1], sentences, gold)
