"""Corpus/KB ingestion and dataset construction.

The construction pipeline filters KB triples against the corpus entity
set, keeps the most connected entities, inner-joins sentences with the
surviving triples, groups sentences into per-entity-pair bags, and
backfills the reserved N/A relation (index 0) for pairs without a
surviving triple.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import CorpusFormatError, DataError, KBFormatError

NA_RELATION = "N/A"
NA_INDEX = 0


@dataclass(frozen=True)
class SentenceExample:
    tokens: tuple
    head_index: int
    tail_index: int
    head_id: str
    tail_id: str

    def __post_init__(self):
        n = len(self.tokens)
        if n < 2:
            raise CorpusFormatError("sentence must have at least 2 tokens")
        if not (0 <= self.head_index < n and 0 <= self.tail_index < n):
            raise CorpusFormatError("entity index out of range")
        if self.head_index == self.tail_index:
            raise CorpusFormatError("head and tail indices must differ")


@dataclass(frozen=True)
class Triple:
    head_id: str
    relation: str
    tail_id: str


@dataclass
class EntityPairBag:
    head_id: str
    tail_id: str
    sentences: list
    gold_relations: frozenset  # relation indices; {0} for negative bags

    @property
    def positive(self) -> bool:
        return self.gold_relations != frozenset({NA_INDEX})

    @property
    def sentence_count(self) -> int:
        return len(self.sentences)


@dataclass
class Dataset:
    relation_vocab: list  # index 0 is always N/A
    entity_vocab: list
    bags: list
    provenance: dict = field(default_factory=dict)

    def positives(self):
        return [b for b in self.bags if b.positive]

    def negatives(self):
        return [b for b in self.bags if not b.positive]


def parse_corpus(path) -> list:
    """Read a JSON-lines corpus file into SentenceExamples, order preserved."""
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                ex = SentenceExample(
                    tokens=tuple(obj["tokens"]),
                    head_index=int(obj["head_index"]),
                    tail_index=int(obj["tail_index"]),
                    head_id=str(obj["head_id"]),
                    tail_id=str(obj["tail_id"]),
                )
            except CorpusFormatError as e:
                raise CorpusFormatError(f"{path}: line {lineno}: {e}") from None
            except (KeyError, ValueError, TypeError) as e:
                raise CorpusFormatError(f"{path}: line {lineno}: malformed line ({e})") from None
            out.append(ex)
    return out


def parse_kb(path) -> list:
    """Read a tab-separated triples file; duplicates are retained."""
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise KBFormatError(
                    f"{path}: line {lineno}: expected 3 tab-separated fields, got {len(fields)}"
                )
            out.append(Triple(fields[0], fields[1], fields[2]))
    return out


def build_dataset(corpus, kb, top_n: int) -> Dataset:
    """Run the 4-step construction: filter, rank entities, join, bag + backfill."""
    if top_n < 1:
        raise DataError("top_n must be >= 1")

    # Step 1: drop triples whose entities never occur in the corpus.
    corpus_entities = set()
    for s in corpus:
        corpus_entities.add(s.head_id)
        corpus_entities.add(s.tail_id)
    triples = [t for t in kb if t.head_id in corpus_entities and t.tail_id in corpus_entities]

    # Step 2: keep the top_n entities by triple participation count
    # (ties broken lexicographically), drop triples touching the rest.
    counts = Counter()
    for t in triples:
        counts[t.head_id] += 1
        counts[t.tail_id] += 1
    ranked = sorted(counts, key=lambda e: (-counts[e], e))
    kept_entities = set(ranked[:top_n])
    triples = [t for t in triples if t.head_id in kept_entities and t.tail_id in kept_entities]

    # Step 3: inner join. Sentences must reference surviving entities on
    # both sides; triples must be witnessed by at least one sentence pair.
    triple_entities = set()
    for t in triples:
        triple_entities.add(t.head_id)
        triple_entities.add(t.tail_id)
    sentences = [
        s for s in corpus if s.head_id in triple_entities and s.tail_id in triple_entities
    ]
    sentence_pairs = {(s.head_id, s.tail_id) for s in sentences}
    triples = [t for t in triples if (t.head_id, t.tail_id) in sentence_pairs]

    if not sentences or not triples:
        raise DataError("empty dataset after filtering")

    # Relation vocabulary: N/A, then first-seen order in the KB file
    # restricted to surviving triples.
    relation_vocab = [NA_RELATION]
    rel_index = {NA_RELATION: NA_INDEX}
    for t in triples:
        if t.relation not in rel_index:
            rel_index[t.relation] = len(relation_vocab)
            relation_vocab.append(t.relation)

    # Step 4: group sentences into bags; backfill N/A.
    gold_by_pair = defaultdict(set)
    for t in triples:
        gold_by_pair[(t.head_id, t.tail_id)].add(rel_index[t.relation])
    by_pair = defaultdict(list)
    for s in sentences:
        by_pair[(s.head_id, s.tail_id)].append(s)

    bags = []
    for pair in sorted(by_pair):
        gold = gold_by_pair.get(pair)
        bags.append(
            EntityPairBag(
                head_id=pair[0],
                tail_id=pair[1],
                sentences=by_pair[pair],
                gold_relations=frozenset(gold) if gold else frozenset({NA_INDEX}),
            )
        )

    entity_vocab = sorted({e for s in sentences for e in (s.head_id, s.tail_id)})
    n_pos = sum(1 for b in bags if b.positive)
    provenance = {
        "sentences": len(sentences),
        "entities": len(entity_vocab),
        "pairs": len(bags),
        "relations": len(relation_vocab),
        "positive_pairs": n_pos,
        "negative_pairs": len(bags) - n_pos,
    }
    return Dataset(relation_vocab, entity_vocab, bags, provenance)


def _subset(ds: Dataset, bags) -> Dataset:
    n_pos = sum(1 for b in bags if b.positive)
    prov = {
        "sentences": sum(b.sentence_count for b in bags),
        "entities": len(ds.entity_vocab),
        "pairs": len(bags),
        "relations": len(ds.relation_vocab),
        "positive_pairs": n_pos,
        "negative_pairs": len(bags) - n_pos,
    }
    return Dataset(ds.relation_vocab, ds.entity_vocab, list(bags), prov)


def split_dataset(ds: Dataset, test_fraction: float, seed: int):
    """Stratified train/test split: positives and negatives split separately."""
    if not 0.0 < test_fraction < 1.0:
        raise DataError("test_fraction must lie in (0, 1)")
    pos, neg = ds.positives(), ds.negatives()
    if not pos or not neg:
        raise DataError("dataset needs at least one positive and one negative bag")
    rng = np.random.default_rng(seed)

    def cut(bags):
        order = rng.permutation(len(bags))
        n_test = int(round(len(bags) * test_fraction))
        test_idx = set(order[:n_test].tolist())
        test = [bags[i] for i in range(len(bags)) if i in test_idx]
        train = [bags[i] for i in range(len(bags)) if i not in test_idx]
        return train, test

    pos_train, pos_test = cut(pos)
    neg_train, neg_test = cut(neg)
    if not pos_train or not neg_train:
        raise DataError("empty train side")
    if not pos_test or not neg_test:
        raise DataError("empty test side")
    return _subset(ds, pos_train + neg_train), _subset(ds, pos_test + neg_test)


def default_negative_target(ds: Dataset) -> int:
    """Sentence count of the largest single positive relation."""
    per_relation = Counter()
    for b in ds.positives():
        for r in b.gold_relations:
            if r != NA_INDEX:
                per_relation[r] += b.sentence_count
    if not per_relation:
        raise DataError("no positive relations in dataset")
    return max(per_relation.values())


def resample_negatives(train: Dataset, target_sentence_count: int, seed) -> Dataset:
    """Keep all positive bags; subsample negative bags (without replacement)
    until their cumulative sentence count first reaches the target."""
    if target_sentence_count < 1:
        raise DataError("target_sentence_count must be >= 1")
    neg = train.negatives()
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(neg))
    chosen = set()
    total = 0
    for i in order:
        chosen.add(int(i))
        total += neg[int(i)].sentence_count
        if total >= target_sentence_count:
            break
    keep = {id(neg[i]) for i in chosen}
    bags = [b for b in train.bags if b.positive or id(b) in keep]
    return _subset(train, bags)


# -- dataset (de)serialization ------------------------------------------


def save_dataset(ds: Dataset, path) -> None:
    obj = {
        "format": "cre-dataset-v1",
        "relation_vocab": ds.relation_vocab,
        "entity_vocab": ds.entity_vocab,
        "provenance": ds.provenance,
        "bags": [
            {
                "head_id": b.head_id,
                "tail_id": b.tail_id,
                "gold_relations": sorted(b.gold_relations),
                "sentences": [
                    {
                        "tokens": list(s.tokens),
                        "head_index": s.head_index,
                        "tail_index": s.tail_index,
                    }
                    for s in b.sentences
                ],
            }
            for b in ds.bags
        ],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, sort_keys=True, separators=(",", ":"))
        f.write("\n")


def load_dataset(path) -> Dataset:
    with open(path, encoding="utf-8") as f:
        obj = json.load(f)
    if obj.get("format") != "cre-dataset-v1":
        raise DataError(f"{path}: not a cre dataset file")
    bags = []
    for b in obj["bags"]:
        sentences = [
            SentenceExample(
                tokens=tuple(s["tokens"]),
                head_index=s["head_index"],
                tail_index=s["tail_index"],
                head_id=b["head_id"],
                tail_id=b["tail_id"],
            )
            for s in b["sentences"]
        ]
        bags.append(
            EntityPairBag(
                head_id=b["head_id"],
                tail_id=b["tail_id"],
                sentences=sentences,
                gold_relations=frozenset(b["gold_relations"]),
            )
        )
    return Dataset(obj["relation_vocab"], obj["entity_vocab"], bags, obj.get("provenance", {}))
