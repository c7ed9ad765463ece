"""Training loop: Adam over per-epoch resampled views of the training
set, with the epoch-loss convergence rule and a finite-difference
gradient-verification harness.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import dataio
from .dataio import Dataset
from .embedding import WordEmbeddingTable
from .encoders import EncoderConfig
from .errors import ConfigError, CreError
from .model import (
    ModelDims,
    ModelParams,
    batch_loss,
    init_params,
    prepare_bag,
)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    lam: float = 1e-4
    batch_size: int = 16
    max_epochs: int = 50
    window: int = 10
    data_seed: int = 0
    model_seed: int = 0
    aggregation: str = "sum"
    negative_target: int | None = None  # default: largest positive relation

    def validate(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning rate must be positive")
        if self.window < 1:
            raise ConfigError("convergence window must be >= 1")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ConfigError("batch_size and max_epochs must be >= 1")


@dataclass
class EpochLog:
    epoch: int
    mean_loss: float
    wall_time: float


class Adam:
    def __init__(self, params: ModelParams, cfg: TrainConfig):
        self.cfg = cfg
        self.step_count = 0
        self.m = {n: np.zeros_like(t.data) for n, t in params.tensors.items()}
        self.v = {n: np.zeros_like(t.data) for n, t in params.tensors.items()}

    def step(self, params: ModelParams):
        self.step_count += 1
        c = self.cfg
        bc1 = 1.0 - c.beta1**self.step_count
        bc2 = 1.0 - c.beta2**self.step_count
        for name in params.tensor_names():
            t = params.tensors[name]
            g = t.grad if t.grad is not None else np.zeros_like(t.data)
            self.m[name] = c.beta1 * self.m[name] + (1.0 - c.beta1) * g
            self.v[name] = c.beta2 * self.v[name] + (1.0 - c.beta2) * g * g
            mhat = self.m[name] / bc1
            vhat = self.v[name] / bc2
            t.data -= c.learning_rate * mhat / (np.sqrt(vhat) + c.epsilon)


def converged(epoch_losses, window: int) -> bool:
    """True once the latest epoch loss is no less than the mean of the
    previous ``window`` epoch losses."""
    if len(epoch_losses) < window + 1:
        return False
    previous = epoch_losses[-window - 1 : -1]
    return epoch_losses[-1] >= sum(previous) / window


def simulate_stopping(epoch_losses, window: int, max_epochs=None) -> int:
    """Number of epochs a run would execute on a scripted loss sequence."""
    for i in range(1, len(epoch_losses) + 1):
        if max_epochs is not None and i >= max_epochs:
            return i
        if converged(epoch_losses[:i], window):
            return i
    return len(epoch_losses)


def train(
    dataset: Dataset,
    words: WordEmbeddingTable,
    dims: ModelDims,
    encoder: EncoderConfig,
    kb_model: str,
    cfg: TrainConfig,
):
    """Optimize a fresh model on ``dataset``; returns the parameters of
    the best (lowest mean loss) epoch and the per-epoch log."""
    cfg.validate()
    if not dataset.bags:
        raise CreError("cannot train on an empty dataset")
    params = init_params(
        dims, encoder, kb_model, cfg.aggregation,
        dataset.relation_vocab, dataset.entity_vocab, cfg.model_seed,
    )

    prep_cache = {id(b): prepare_bag(b, words, dims) for b in dataset.bags}
    target = cfg.negative_target
    if target is None:
        target = dataio.default_negative_target(dataset)

    logs = []
    losses = []
    best_loss = np.inf
    best_tensors = None
    opt = Adam(params, cfg)

    for epoch in range(1, cfg.max_epochs + 1):
        start = time.perf_counter()
        view = dataio.resample_negatives(dataset, target, [cfg.data_seed, epoch])
        order_rng = np.random.default_rng([cfg.model_seed, epoch])
        order = order_rng.permutation(len(view.bags))
        bags = [view.bags[int(i)] for i in order]

        epoch_losses = []
        for batch_start in range(0, len(bags), cfg.batch_size):
            batch = bags[batch_start : batch_start + cfg.batch_size]
            params.zero_grads()
            loss, per_pair = batch_loss(
                [(b, prep_cache[id(b)]) for b in batch], params, cfg.lam
            )
            if not np.isfinite(loss.data):
                pairs = ", ".join(f"({b.head_id},{b.tail_id})" for b in batch)
                raise CreError(
                    f"non-finite loss at epoch {epoch}, batch starting at "
                    f"pair {batch_start} [{pairs}]"
                )
            loss.backward()
            opt.step(params)
            epoch_losses.extend(per_pair)

        mean_loss = float(np.mean(epoch_losses))
        losses.append(mean_loss)
        logs.append(EpochLog(epoch, mean_loss, time.perf_counter() - start))
        if mean_loss < best_loss:
            best_loss = mean_loss
            best_tensors = {n: t.data.copy() for n, t in params.tensors.items()}
        if converged(losses, cfg.window):
            break

    if best_tensors is not None:
        for name, data in best_tensors.items():
            params.tensors[name].data = data
    params.zero_grads()
    return params, logs


# -- gradient verification ------------------------------------------------


def _tiny_fixture(encoder_kind: str, kb_model: str, seed: int):
    """Desk-scale model + one two-sentence bag for gradient checking.

    The fixture stream is decorrelated from plain model seeds: central
    differences at step 1e-5 carry ~1e-11 absolute round-off, so the
    fixture must avoid parameter points where some gradient component
    falls near that noise floor.
    """
    fixture_seed = [seed, 999]
    rng = np.random.default_rng(fixture_seed)
    dims = ModelDims(word_dim=8, pos_dim=2, max_distance=3, max_length=8, entity_dim=6)
    if encoder_kind == "cnn":
        enc = EncoderConfig(kind="cnn", hidden_dim=7, window=3)
    elif encoder_kind == "lstm":
        enc = EncoderConfig(kind="lstm", hidden_dim=7)
    else:
        enc = EncoderConfig(kind="transformer", hidden_dim=6, heads=2, layers=1)
    relations = ["N/A", "r1", "r2", "r3"]
    entities = ["Ea", "Eb"]
    vocab = [f"v{i}" for i in range(6)]
    words = WordEmbeddingTable(
        dims.word_dim,
        {w: rng.standard_normal(dims.word_dim) for w in ["<UNK>", *vocab]},
    )
    sentences = []
    for _ in range(2):
        n = int(rng.integers(5, dims.max_length + 1))
        tokens = [vocab[int(i)] for i in rng.integers(0, len(vocab), n)]
        head, tail = 0, n - 1
        tokens[head], tokens[tail] = "Ea", "Eb"
        sentences.append(
            dataio.SentenceExample(tuple(tokens), head, tail, "Ea", "Eb")
        )
    bag = dataio.EntityPairBag("Ea", "Eb", sentences, frozenset({1, 3}))
    params = init_params(dims, enc, kb_model, "sum", relations, entities, fixture_seed)
    return params, bag, words, dims


def grad_check(encoder_kind: str, kb_model: str, seed: int = 0, lam: float = 1e-3,
               fd_step: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients
    of the total loss over every learnable scalar."""
    params, bag, words, dims = _tiny_fixture(encoder_kind, kb_model, seed)
    preps = prepare_bag(bag, words, dims)

    def loss_value() -> float:
        loss, _ = batch_loss([(bag, preps)], params, lam)
        return float(loss.data)

    params.zero_grads()
    loss, _ = batch_loss([(bag, preps)], params, lam)
    loss.backward()
    analytic = {n: (t.grad.copy() if t.grad is not None else np.zeros_like(t.data))
                for n, t in params.tensors.items()}

    worst = 0.0
    for name in params.tensor_names():
        data = params.tensors[name].data
        flat = data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + fd_step
            up = loss_value()
            flat[i] = orig - fd_step
            down = loss_value()
            flat[i] = orig
            fd = (up - down) / (2.0 * fd_step)
            a = analytic[name].reshape(-1)[i]
            rel = abs(a - fd) / max(abs(a), abs(fd), 1e-8)
            worst = max(worst, rel)
    return worst
