"""Deterministic synthetic corpus/KB/embedding generation for desk-scale runs.

Each relation owns a disjoint pool of signature words; sentences for a
positive pair are instantiated from that relation's templates, so the
relation is learnable from surface features alone. Negative pairs draw
from a shared filler vocabulary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError

UNK_TOKEN = "<UNK>"
_SIGNATURE_WORDS_PER_TEMPLATE = 3
_FILLERS_PER_SENTENCE = 2


@dataclass(frozen=True)
class SyntheticSpec:
    entities: int
    relations: int  # excluding N/A
    templates_per_relation: int
    pairs_per_relation: int
    negative_pairs: int
    sentences_per_pair: int
    vocab_size: int
    word_dim: int

    def validate(self):
        if self.relations < 1:
            raise DataError("synthetic spec needs at least 1 relation")
        if self.entities < 2:
            raise DataError("synthetic spec needs at least 2 entities")
        if self.sentences_per_pair < 1 or self.pairs_per_relation < 1:
            raise DataError("synthetic spec needs positive pair/sentence counts")
        needed = self.relations * self.templates_per_relation * _SIGNATURE_WORDS_PER_TEMPLATE
        if self.vocab_size <= needed:
            raise DataError(
                f"vocab_size {self.vocab_size} too small for "
                f"{needed} signature words plus fillers"
            )
        if self.word_dim < 1:
            raise DataError("word_dim must be >= 1")


def _sample_pairs(rng, entity_ids, count, used):
    pairs = []
    n = len(entity_ids)
    attempts = 0
    while len(pairs) < count:
        h, t = rng.integers(0, n, size=2)
        if h == t:
            continue
        pair = (entity_ids[h], entity_ids[t])
        if pair in used:
            attempts += 1
            if attempts > 1000 * count:
                raise DataError("not enough distinct entity pairs for synthetic spec")
            continue
        used.add(pair)
        pairs.append(pair)
    return pairs


def gen_synthetic(spec: SyntheticSpec, seed: int, corpus_path, kb_path, emb_path):
    """Write corpus (JSONL), KB (TSV) and word-embedding files; reproducible."""
    spec.validate()
    rng = np.random.default_rng(seed)

    entity_ids = [f"E{i:03d}" for i in range(spec.entities)]
    vocab = [f"w{i:03d}" for i in range(spec.vocab_size)]
    relations = [f"rel{r}" for r in range(spec.relations)]

    n_sig = spec.relations * spec.templates_per_relation * _SIGNATURE_WORDS_PER_TEMPLATE
    fillers = vocab[n_sig:]

    # Fixed-shape templates: HEAD sig1 sig2 sig3 TAIL filler...
    templates = {}
    w = 0
    for r in range(spec.relations):
        templates[r] = []
        for _ in range(spec.templates_per_relation):
            templates[r].append(vocab[w : w + _SIGNATURE_WORDS_PER_TEMPLATE])
            w += _SIGNATURE_WORDS_PER_TEMPLATE

    used = set()
    triples = []
    sentences = []

    def emit(head, tail, body):
        extra = [fillers[i] for i in rng.integers(0, len(fillers), _FILLERS_PER_SENTENCE)]
        tokens = [head, *body, tail, *extra]
        sentences.append(
            {
                "tokens": tokens,
                "head_index": 0,
                "tail_index": 1 + len(body),
                "head_id": head,
                "tail_id": tail,
            }
        )

    for r in range(spec.relations):
        for head, tail in _sample_pairs(rng, entity_ids, spec.pairs_per_relation, used):
            triples.append((head, relations[r], tail))
            for _ in range(spec.sentences_per_pair):
                emit(head, tail, templates[r][rng.integers(0, len(templates[r]))])

    for head, tail in _sample_pairs(rng, entity_ids, spec.negative_pairs, used):
        for _ in range(spec.sentences_per_pair):
            body = [fillers[i] for i in rng.integers(0, len(fillers), 3)]
            emit(head, tail, body)

    order = rng.permutation(len(sentences))
    with open(corpus_path, "w", encoding="utf-8") as f:
        for i in order:
            f.write(json.dumps(sentences[int(i)], sort_keys=True) + "\n")
    with open(kb_path, "w", encoding="utf-8") as f:
        for h, r, t in triples:
            f.write(f"{h}\t{r}\t{t}\n")

    words = [UNK_TOKEN] + vocab
    vecs = rng.standard_normal((len(words), spec.word_dim))
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    with open(emb_path, "w", encoding="utf-8") as f:
        f.write(f"{len(words)} {spec.word_dim}\n")
        for word, vec in zip(words, vecs):
            f.write(word + " " + " ".join(f"{v:.8f}" for v in vec) + "\n")
