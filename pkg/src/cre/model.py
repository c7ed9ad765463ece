"""Model parameters and the end-to-end differentiable pipeline:
sentence matrix -> encoder -> CRE rows -> KB scoring -> aggregation ->
normalization -> per-pair loss.

The graph versions here must agree with the numpy reference functions in
``scoring`` and ``objective``; tests assert both value equality and
finite-difference gradient correctness.
"""

from __future__ import annotations

import io
import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from . import objective
from .autodiff import Tensor, concat
from .dataio import EntityPairBag, Dataset
from .embedding import PreparedSentence, WordEmbeddingTable, prepare_sentence
from .encoders import EncoderConfig, encode, parameter_shapes
from .errors import CheckpointError, ConfigError, CreError

CHECKPOINT_MAGIC = b"CRECKPT1"
INIT_SCALE = 0.1


@dataclass
class ModelDims:
    word_dim: int  # W
    pos_dim: int  # P
    max_distance: int  # D
    max_length: int  # L
    entity_dim: int  # K

    @property
    def input_dim(self) -> int:  # E = W + 2P
        return self.word_dim + 2 * self.pos_dim


@dataclass
class ModelParams:
    dims: ModelDims
    encoder: EncoderConfig
    kb_model: str
    aggregation: str
    relation_vocab: list
    entity_vocab: list
    tensors: dict = field(default_factory=dict)  # name -> Tensor (learnable)

    @property
    def num_relations(self) -> int:
        return len(self.relation_vocab)

    @property
    def entity_index(self) -> dict:
        if not hasattr(self, "_entity_index"):
            self._entity_index = {e: i for i, e in enumerate(self.entity_vocab)}
        return self._entity_index

    def tensor_names(self):
        return sorted(self.tensors)

    def zero_grads(self):
        for t in self.tensors.values():
            t.zero_grad()


def _all_shapes(dims: ModelDims, encoder: EncoderConfig, num_relations: int, num_entities: int):
    shapes = {
        "pos_head": (2 * dims.max_distance + 1, dims.pos_dim),
        "pos_tail": (2 * dims.max_distance + 1, dims.pos_dim),
        "entity": (num_entities, dims.entity_dim),
        "proj.w": (encoder.hidden_dim, num_relations * dims.entity_dim),
        "proj.b": (num_relations * dims.entity_dim,),
    }
    shapes.update(parameter_shapes(encoder, dims.input_dim))
    return shapes


def init_params(
    dims: ModelDims,
    encoder: EncoderConfig,
    kb_model: str,
    aggregation: str,
    relation_vocab,
    entity_vocab,
    seed: int,
) -> ModelParams:
    encoder.validate()
    if kb_model == "complex" and dims.entity_dim % 2 != 0:
        raise ConfigError("complex scoring requires an even entity dimension K")
    rng = np.random.default_rng(seed)
    shapes = _all_shapes(dims, encoder, len(relation_vocab), len(entity_vocab))
    tensors = {}
    for name in sorted(shapes):
        if name.endswith("ln1.g") or name.endswith("ln2.g"):
            data = np.ones(shapes[name])
        elif name.endswith("ln1.b") or name.endswith("ln2.b"):
            data = np.zeros(shapes[name])
        else:
            data = rng.uniform(-INIT_SCALE, INIT_SCALE, shapes[name])
        tensors[name] = Tensor(data, requires_grad=True)
    return ModelParams(dims, encoder, kb_model, aggregation, list(relation_vocab),
                       list(entity_vocab), tensors)


# -- forward graph -------------------------------------------------------


def sentence_input(prep: PreparedSentence, params: ModelParams) -> Tensor:
    """(valid_length x E) input: fixed word vectors plus gathered
    head/tail positional embeddings."""
    word_part = Tensor(prep.word_matrix)
    head_part = params.tensors["pos_head"][prep.head_rows]
    tail_part = params.tensors["pos_tail"][prep.tail_rows]
    return concat([word_part, head_part, tail_part], axis=1)


def sentence_cre(prep: PreparedSentence, params: ModelParams) -> Tensor:
    x = sentence_input(prep, params)
    return encode(x, params.tensors, params.encoder, params.num_relations,
                  params.dims.entity_dim)


def sentence_scores(cre: Tensor, head: Tensor, tail: Tensor, kb_model: str,
                    entity_dim: int) -> Tensor:
    """(|R|,) score vector for one sentence."""
    if kb_model == "transe":
        diff = cre + (head - tail)
        norm = (diff * diff).sum(axis=1).sqrt()
        return 1.0 - norm.tanh()
    if kb_model == "complex":
        k = entity_dim // 2
        hr, hi = head[:k], head[k:]
        tr, ti = tail[:k], tail[k:]
        rr, ri = cre[:, :k], cre[:, k:]
        phi = (rr * (hr * tr) + rr * (hi * ti) + ri * (hr * ti) - ri * (hi * tr)).sum(axis=1)
        return 1.0 + phi.tanh()
    raise CreError(f"unknown kb model: {kb_model}")


def prepare_bag(bag: EntityPairBag, words: WordEmbeddingTable, dims: ModelDims):
    return [prepare_sentence(s, words, dims.max_distance, dims.max_length)
            for s in bag.sentences]


def bag_normalized_scores(preps, bag: EntityPairBag, params: ModelParams) -> Tensor:
    """Normalized (|R|,) relation scores for one entity pair."""
    if not preps:
        raise CreError("bag has no sentences")
    idx = params.entity_index
    if bag.head_id not in idx or bag.tail_id not in idx:
        raise CreError(f"unknown entity id: {bag.head_id}/{bag.tail_id}")
    head = params.tensors["entity"][idx[bag.head_id]]
    tail = params.tensors["entity"][idx[bag.tail_id]]
    rows = []
    for prep in preps:
        cre = sentence_cre(prep, params)
        scores = sentence_scores(cre, head, tail, params.kb_model, params.dims.entity_dim)
        rows.append(scores.reshape(1, params.num_relations))
    stacked = concat(rows, axis=0)
    mode = params.aggregation
    if mode == "sum":
        agg = stacked.sum(axis=0)
    elif mode == "mean":
        agg = stacked.mean(axis=0)
    elif mode == "max":
        agg = stacked.max(axis=0)
    elif mode == "min":
        agg = -((-stacked).max(axis=0))
    else:
        raise CreError(f"unknown aggregation mode: {mode}")
    return agg / agg.sum()


def bag_loss(ns: Tensor, gold_relations, num_relations: int) -> Tensor:
    m = objective.targets(gold_relations, num_relations)
    gold_size = len(set(gold_relations))
    clipped = ns.clip(objective.LOG_EPS, 1.0 - objective.LOG_EPS)
    terms = clipped.log() * (-m) + (1.0 - clipped).log() * (m - 1.0 / gold_size)
    return terms.sum()


def batch_loss(bags_with_preps, params: ModelParams, lam: float):
    """Total loss of a batch: sum of pair losses plus the L2 regularizer.

    Returns (loss Tensor, list of per-pair data-term floats).
    """
    total = None
    per_pair = []
    for bag, preps in bags_with_preps:
        ns = bag_normalized_scores(preps, bag, params)
        loss = bag_loss(ns, bag.gold_relations, params.num_relations)
        per_pair.append(float(loss.data))
        total = loss if total is None else total + loss
    if lam > 0:
        reg = None
        for name in params.tensor_names():
            t = params.tensors[name]
            term = (t * t).sum()
            reg = term if reg is None else reg + term
        total = total + lam * reg
    return total, per_pair


# -- checkpointing -------------------------------------------------------


def save_checkpoint(params: ModelParams, path) -> None:
    """Atomic, byte-deterministic binary checkpoint."""
    meta = {
        "format_version": 1,
        "dims": {
            "word_dim": params.dims.word_dim,
            "pos_dim": params.dims.pos_dim,
            "max_distance": params.dims.max_distance,
            "max_length": params.dims.max_length,
            "entity_dim": params.dims.entity_dim,
        },
        "encoder": {
            "kind": params.encoder.kind,
            "hidden_dim": params.encoder.hidden_dim,
            "window": params.encoder.window,
            "layers": params.encoder.layers,
            "heads": params.encoder.heads,
        },
        "kb_model": params.kb_model,
        "aggregation": params.aggregation,
        "relation_vocab": params.relation_vocab,
        "entity_vocab": params.entity_vocab,
    }
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    buf.write(struct.pack("<Q", len(meta_bytes)))
    buf.write(meta_bytes)
    for name in params.tensor_names():
        data = params.tensors[name].data
        name_bytes = name.encode("utf-8")
        buf.write(struct.pack("<H", len(name_bytes)))
        buf.write(name_bytes)
        buf.write(struct.pack("<B", data.ndim))
        for s in data.shape:
            buf.write(struct.pack("<Q", s))
        buf.write(data.astype("<f8").tobytes())
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as f:
        f.write(buf.getvalue())
    os.replace(tmp, path)


def load_checkpoint(path) -> ModelParams:
    try:
        with open(path, "rb") as f:
            raw = f.read()
        view = memoryview(raw)
        if raw[:8] != CHECKPOINT_MAGIC:
            raise CheckpointError(f"{path}: not a cre checkpoint")
        offset = 8
        (meta_len,) = struct.unpack_from("<Q", view, offset)
        offset += 8
        meta = json.loads(bytes(view[offset : offset + meta_len]).decode("utf-8"))
        offset += meta_len
        if meta.get("format_version") != 1:
            raise CheckpointError(f"{path}: unsupported checkpoint version")
        tensors = {}
        while offset < len(raw):
            (name_len,) = struct.unpack_from("<H", view, offset)
            offset += 2
            name = bytes(view[offset : offset + name_len]).decode("utf-8")
            offset += name_len
            (ndim,) = struct.unpack_from("<B", view, offset)
            offset += 1
            shape = []
            for _ in range(ndim):
                (s,) = struct.unpack_from("<Q", view, offset)
                offset += 8
                shape.append(s)
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(view, dtype="<f8", count=count, offset=offset).reshape(shape)
            offset += count * 8
            tensors[name] = Tensor(data.copy(), requires_grad=True)
    except CheckpointError:
        raise
    except Exception as e:
        raise CheckpointError(f"{path}: corrupted checkpoint ({e})") from None

    d = meta["dims"]
    dims = ModelDims(d["word_dim"], d["pos_dim"], d["max_distance"], d["max_length"],
                     d["entity_dim"])
    e = meta["encoder"]
    encoder = EncoderConfig(e["kind"], e["hidden_dim"], e["window"], e["layers"], e["heads"])
    params = ModelParams(dims, encoder, meta["kb_model"], meta["aggregation"],
                         meta["relation_vocab"], meta["entity_vocab"], tensors)
    expected = _all_shapes(dims, encoder, params.num_relations, len(params.entity_vocab))
    if set(expected) != set(tensors):
        raise CheckpointError(f"{path}: checkpoint tensor set does not match metadata")
    for name, shape in expected.items():
        if tuple(tensors[name].data.shape) != tuple(shape):
            raise CheckpointError(
                f"{path}: tensor {name} has shape {tensors[name].data.shape}, "
                f"expected {shape}"
            )
    return params


def check_compatible(params: ModelParams, dataset: Dataset) -> None:
    if params.relation_vocab != dataset.relation_vocab:
        raise CheckpointError("checkpoint relation vocabulary does not match dataset")
    missing = set(dataset.entity_vocab) - set(params.entity_vocab)
    if missing:
        raise CheckpointError(f"dataset entities missing from checkpoint: {sorted(missing)[:5]}")
