"""Per-pair objective: score aggregation, normalization, targets,
cross-entropy-style loss, and top-k prediction.

The loss for one pair with normalized scores ns and gold set G is

  sum_r [ -m_r * log(ns_r) + (m_r - 1/|G|) * log(1 - ns_r) ]

with m_r = 1/|G| for gold relations and 0 otherwise; the second term
vanishes for gold relations and penalizes mass on the rest.
"""

from __future__ import annotations

import numpy as np

from .errors import CreError

AGGREGATION_MODES = ("sum", "max", "min", "mean")
LOG_EPS = 1e-12


def aggregate(sentence_scores, mode: str = "sum") -> np.ndarray:
    """Componentwise reduction of per-sentence score vectors."""
    if len(sentence_scores) == 0:
        raise CreError("aggregate requires at least one sentence")
    stacked = np.asarray(sentence_scores, dtype=np.float64)
    if mode == "sum":
        return stacked.sum(axis=0)
    if mode == "max":
        return stacked.max(axis=0)
    if mode == "min":
        return stacked.min(axis=0)
    if mode == "mean":
        return stacked.mean(axis=0)
    raise CreError(f"unknown aggregation mode: {mode}")


def normalize(scores: np.ndarray) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    if np.any(scores <= 0):
        raise CreError("normalize requires strictly positive scores")
    return scores / scores.sum()


def targets(gold, num_relations: int) -> np.ndarray:
    gold = set(gold)
    if not gold:
        raise CreError("gold relation set must be nonempty")
    m = np.zeros(num_relations)
    for r in gold:
        m[r] = 1.0 / len(gold)
    return m


def pair_loss(ns: np.ndarray, m: np.ndarray, gold_size: int) -> float:
    ns = np.clip(np.asarray(ns, dtype=np.float64), LOG_EPS, 1.0 - LOG_EPS)
    terms = -m * np.log(ns) + (m - 1.0 / gold_size) * np.log(1.0 - ns)
    return float(terms.sum())


def regularizer(tensors) -> float:
    """Sum of squared entries over every learnable tensor."""
    return float(sum(np.sum(np.square(t)) for t in tensors))


def total_loss(pair_losses, lam: float, tensors) -> float:
    return float(sum(pair_losses)) + lam * regularizer(tensors)


def top_k(ns: np.ndarray, k: int):
    """k highest-scoring relations, descending; ties broken by lower index."""
    if k < 1:
        raise CreError("k must be >= 1")
    ns = np.asarray(ns, dtype=np.float64)
    order = sorted(range(len(ns)), key=lambda r: (-ns[r], r))
    return [(r, float(ns[r])) for r in order[:k]]
