"""Span-score constructors.

Boundary representations are two d x L matrices whose columns are the
start-side and end-side vectors for each token position.  A similarity
function turns every (start column, end column) pair into one span score.
The four enumerated kinds share a single config switch so ablations are a
one-line change:

* ``dot``                     -- ``h_s . h_e`` (no parameters)
* ``weighted-dot``            -- ``w . (h_s * h_e)``,           w in R^d
* ``additive``                -- ``w . [h_s; h_e]``,            w in R^2d
* ``additive-weighted-dot``   -- ``w . [h_s; h_e; h_s * h_e]``, w in R^3d
* ``multiplicative-additive`` -- same form as above; the name used when the
  two inputs are question/passage vectors rather than boundary vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .numerics import MASK_VALID, ScoreMatrix, span_mask

KIND_DOT = "dot"
KIND_WEIGHTED_DOT = "weighted-dot"
KIND_ADDITIVE = "additive"
KIND_ADDITIVE_WEIGHTED_DOT = "additive-weighted-dot"
KIND_MULTIPLICATIVE_ADDITIVE = "multiplicative-additive"
SIMILARITY_KINDS = (
    KIND_DOT,
    KIND_WEIGHTED_DOT,
    KIND_ADDITIVE,
    KIND_ADDITIVE_WEIGHTED_DOT,
    KIND_MULTIPLICATIVE_ADDITIVE,
)

_WEIGHT_MULTIPLIER = {
    KIND_DOT: 0,
    KIND_WEIGHTED_DOT: 1,
    KIND_ADDITIVE: 2,
    KIND_ADDITIVE_WEIGHTED_DOT: 3,
    KIND_MULTIPLICATIVE_ADDITIVE: 3,
}


def weight_length(kind: str, dim: int) -> int:
    """Required weight-vector length for ``kind`` at model dimension ``dim``."""
    if kind not in _WEIGHT_MULTIPLIER:
        raise InvalidInputError(f"unknown similarity kind {kind!r}")
    return _WEIGHT_MULTIPLIER[kind] * dim


@dataclass(frozen=True)
class SimilarityParams:
    """Similarity kind plus its weight vector (``None`` for the dot product)."""

    kind: str
    w: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind not in SIMILARITY_KINDS:
            raise InvalidInputError(f"unknown similarity kind {self.kind!r}")
        if self.kind == KIND_DOT:
            if self.w is not None:
                raise InvalidInputError("dot similarity takes no weight vector")
        elif self.w is None:
            raise InvalidInputError(f"{self.kind} similarity requires a weight vector")

    def check_dim(self, dim: int) -> None:
        expected = weight_length(self.kind, dim)
        if expected == 0:
            return
        if self.w.shape != (expected,):
            raise InvalidInputError(
                f"{self.kind} weights must have shape ({expected},), got {self.w.shape}"
            )


@dataclass
class BoundaryRepresentations:
    """Start and end representations, both d x L with shared d and L."""

    h_start: np.ndarray
    h_end: np.ndarray

    def __post_init__(self) -> None:
        self.h_start = np.asarray(self.h_start, dtype=np.float64)
        self.h_end = np.asarray(self.h_end, dtype=np.float64)
        if self.h_start.ndim != 2 or self.h_start.shape != self.h_end.shape:
            raise InvalidInputError(
                f"boundary representations must share a d x L shape, got "
                f"{self.h_start.shape} and {self.h_end.shape}"
            )
        if not (np.isfinite(self.h_start).all() and np.isfinite(self.h_end).all()):
            raise InvalidInputError("boundary representations contain non-finite entries")

    @property
    def dim(self) -> int:
        return self.h_start.shape[0]

    @property
    def length(self) -> int:
        return self.h_start.shape[1]


def _split_weights(params: SimilarityParams, dim: int):
    """Split ``params.w`` into (start, end, product) weight blocks, each d or None."""
    params.check_dim(dim)
    k = params.kind
    if k == KIND_DOT:
        return None, None, None
    if k == KIND_WEIGHTED_DOT:
        return None, None, params.w
    if k == KIND_ADDITIVE:
        return params.w[:dim], params.w[dim:], None
    return params.w[:dim], params.w[dim : 2 * dim], params.w[2 * dim :]


def span_scores(
    reps: BoundaryRepresentations,
    params: SimilarityParams,
    policy: str = MASK_VALID,
) -> ScoreMatrix:
    """Pairwise span scores ``[i, j] = f_sim(h_start[:, i], h_end[:, j])``."""
    hs, he = reps.h_start, reps.h_end
    w_s, w_e, w_p = _split_weights(params, reps.dim)
    scores = np.zeros((reps.length, reps.length))
    if params.kind == KIND_DOT:
        scores = hs.T @ he
    else:
        if w_p is not None:
            scores = scores + (hs * w_p[:, None]).T @ he
        if w_s is not None:
            scores = scores + (w_s @ hs)[:, None] + (w_e @ he)[None, :]
    return ScoreMatrix(scores, span_mask(reps.length, policy))


def span_scores_grad(
    reps: BoundaryRepresentations,
    params: SimilarityParams,
    grad: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Chain an L x L score gradient back to (h_start, h_end, w).

    ``grad[i, j]`` is the loss gradient at score ``[i, j]``; masked cells must
    already be zero there.  The weight gradient is ``None`` for ``dot``.
    """
    hs, he = reps.h_start, reps.h_end
    w_s, w_e, w_p = _split_weights(params, reps.dim)
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != (reps.length, reps.length):
        raise InvalidInputError(f"score gradient shape {grad.shape} != L x L")

    d_hs = np.zeros_like(hs)
    d_he = np.zeros_like(he)
    if params.kind == KIND_DOT:
        d_hs += he @ grad.T
        d_he += hs @ grad
        return d_hs, d_he, None

    d_w = np.zeros_like(params.w)
    dim = reps.dim
    if w_p is not None:
        d_hs += w_p[:, None] * (he @ grad.T)
        d_he += w_p[:, None] * (hs @ grad)
        d_wp = (hs * (he @ grad.T)).sum(axis=1)
    if w_s is not None:
        row_mass = grad.sum(axis=1)
        col_mass = grad.sum(axis=0)
        d_hs += np.outer(w_s, row_mass)
        d_he += np.outer(w_e, col_mass)
        d_w[:dim] = hs @ row_mass
        d_w[dim : 2 * dim] = he @ col_mass
    if w_p is not None:
        d_w[-dim:] = d_wp
    return d_hs, d_he, d_w


def joint_boundary_reps(h: np.ndarray, w: np.ndarray, b: np.ndarray) -> BoundaryRepresentations:
    """Joint-head representations: start side is an affine map of ``h``, end side is ``h``."""
    h = np.asarray(h, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if h.ndim != 2:
        raise InvalidInputError(f"expected d x L representations, got shape {h.shape}")
    d = h.shape[0]
    if w.shape != (d, d) or b.shape != (d,):
        raise InvalidInputError(
            f"transform shapes {w.shape}, {b.shape} inconsistent with d={d}"
        )
    return BoundaryRepresentations(w @ h + b[:, None], h)


def bidaf_similarity(q_i: np.ndarray, p_j: np.ndarray, w: np.ndarray) -> float:
    """Multiplicative-additive similarity ``w . [q; p; q * p]`` of two vectors."""
    q_i = np.asarray(q_i, dtype=np.float64)
    p_j = np.asarray(p_j, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if q_i.shape != p_j.shape or q_i.ndim != 1:
        raise InvalidInputError(f"vector shapes differ: {q_i.shape} vs {p_j.shape}")
    if w.shape != (3 * q_i.size,):
        raise InvalidInputError(f"weights must have length {3 * q_i.size}, got {w.shape}")
    return float(w @ np.concatenate([q_i, p_j, q_i * p_j]))
