"""Pluggable knowledge-base scoring functions.

Both scoring functions map a (head embedding, relation embedding, tail
embedding) triple to a strictly positive bounded score so that the
downstream normalization is always well defined:

  transe:  1 - tanh(||H + r - T||_2)        in (0, 1]
  complex: 1 + tanh(Re<h, r, conj(t)>)      in (0, 2)

For the complex form each K-vector holds the real half in its first K/2
components and the imaginary half in the rest.
"""

from __future__ import annotations

import numpy as np

from .errors import CreError

SCORING_KINDS = ("transe", "complex")


def _check_dims(*vecs):
    dims = {len(v) for v in vecs}
    if len(dims) != 1:
        raise CreError(f"embedding dimension mismatch: {sorted(dims)}")


def score_transe(head: np.ndarray, relation: np.ndarray, tail: np.ndarray) -> float:
    head, relation, tail = (np.asarray(v, dtype=np.float64) for v in (head, relation, tail))
    _check_dims(head, relation, tail)
    return float(1.0 - np.tanh(np.linalg.norm(head + relation - tail)))


def complex_phi(head: np.ndarray, relation: np.ndarray, tail: np.ndarray) -> float:
    """Raw trilinear form Re<h, r, conj(t)> over split real/imaginary halves."""
    head, relation, tail = (np.asarray(v, dtype=np.float64) for v in (head, relation, tail))
    _check_dims(head, relation, tail)
    if len(head) % 2 != 0:
        raise CreError("complex scoring requires an even embedding dimension")
    k = len(head) // 2
    hr, hi = head[:k], head[k:]
    rr, ri = relation[:k], relation[k:]
    tr, ti = tail[:k], tail[k:]
    return float(np.sum(hr * rr * tr + hi * rr * ti + hr * ri * ti - hi * ri * tr))


def score_complex(head: np.ndarray, relation: np.ndarray, tail: np.ndarray) -> float:
    return float(1.0 + np.tanh(complex_phi(head, relation, tail)))


def score_sentence(head, cre_matrix, tail, kind: str) -> np.ndarray:
    """Score every relation row of one sentence's CRE matrix; returns (|R|,)."""
    if kind == "transe":
        fn = score_transe
    elif kind == "complex":
        fn = score_complex
    else:
        raise CreError(f"unknown scoring kind: {kind}")
    cre_matrix = np.asarray(cre_matrix, dtype=np.float64)
    return np.array([fn(head, row, tail) for row in cre_matrix])
