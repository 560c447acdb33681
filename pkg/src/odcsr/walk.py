"""Directed graph from the coefficient matrix and averaged random-walk scores.

The adjacency is A = |C|^T: the walk from point i jumps to the points that
participate in i's representation. Rows are normalized to transition
probabilities; a row whose sum is numerically zero (an all-zero
representation, possible on residual stages) becomes the uniform row, the
usual random-surfer fix.

Powers of a directed-graph transition matrix need not converge, so the score
is the running average of the first T step distributions rather than a
stationary vector. Mass drains from points whose representations lean on the
rest of the data (outliers) into the closed inlier set, so low averaged mass
flags outliers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .elastic_net import SelfRepresentation
from .errors import ConfigError, DimensionError

# row sums at or below this are treated as zero (dangling)
DANGLING_TOL = 1e-12

_SIMPLEX_TOL = 1e-10


@dataclass(frozen=True)
class ScoreVector:
    """A probability vector over the N points; low entries mark outliers."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 1:
            raise DimensionError("scores must be a 1-D vector")
        if np.any(probs < 0.0):
            raise ConfigError("scores must be nonnegative")
        total = probs.sum()
        if abs(total - 1.0) > _SIMPLEX_TOL:
            raise ConfigError(f"scores must sum to 1, got {total!r}")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, n: int) -> "ScoreVector":
        return cls(np.full(n, 1.0 / n))

    def __len__(self) -> int:
        return self.probs.shape[0]


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic N x N sparse matrix plus the rows that needed the
    dangling fix."""

    probs: sp.csr_matrix
    dangling: frozenset[int] = frozenset()

    def __post_init__(self):
        p = self.probs
        if p.shape[0] != p.shape[1]:
            raise ConfigError(f"transition matrix must be square, got {p.shape}")
        if p.nnz:
            if np.any(p.data < 0.0) or np.any(p.data > 1.0):
                raise ConfigError("transition probabilities must lie in [0, 1]")
        row_sums = np.asarray(p.sum(axis=1)).ravel()
        if np.any(np.abs(row_sums - 1.0) > DANGLING_TOL):
            worst = float(np.abs(row_sums - 1.0).max())
            raise ConfigError(f"rows must sum to 1 (worst deviation {worst:.3e})")

    @property
    def num_points(self) -> int:
        return self.probs.shape[0]


def build_transition(C: SelfRepresentation) -> TransitionMatrix:
    """Normalize the rows of A = |C|^T into transition probabilities."""
    A = sp.csr_matrix(abs(C.coeffs).T)
    n = A.shape[0]
    d = np.asarray(A.sum(axis=1)).ravel()
    dangling = np.flatnonzero(d <= DANGLING_TOL)

    scale = np.ones(n)
    live = d > DANGLING_TOL
    scale[live] = 1.0 / d[live]
    P = sp.diags(scale) @ A
    if dangling.size:
        rows = np.repeat(dangling, n)
        cols = np.tile(np.arange(n), dangling.size)
        uniform = sp.csr_matrix(
            (np.full(rows.size, 1.0 / n), (rows, cols)), shape=(n, n)
        )
        # dangling rows of P are all-zero, so this is assignment, not mixing
        P = P + uniform
    P = sp.csr_matrix(P)
    P.sort_indices()
    return TransitionMatrix(P, frozenset(int(i) for i in dangling))


def averaged_walk(P: TransitionMatrix, pi0: ScoreVector, T: int) -> ScoreVector:
    """Average of the first T step distributions, (1/T) sum_t pi0 P^t.

    One running vector accumulator; P^t is never materialized, so the cost is
    O(T * nnz(P)).
    """
    if T < 1:
        raise ConfigError(f"T must be >= 1, got {T}")
    if len(pi0) != P.num_points:
        raise DimensionError(
            f"initial distribution has {len(pi0)} entries for "
            f"{P.num_points} points"
        )
    Pt = sp.csr_matrix(P.probs.T)
    v = pi0.probs
    acc = np.zeros_like(v)
    for _ in range(T):
        v = Pt @ v
        acc += v
    acc /= T
    np.maximum(acc, 0.0, out=acc)  # clamp away sign dust from the matvec
    return ScoreVector(acc)


def classify(scores: ScoreVector, epsilon: float) -> np.ndarray:
    """Label points with score <= epsilon as outliers (1), the rest inliers (0)."""
    if epsilon < 0:
        raise ConfigError(f"epsilon must be >= 0, got {epsilon}")
    return (scores.probs <= epsilon).astype(np.int64)


def default_epsilon(n: int) -> float:
    """Scale-aware CLI default for the outlier threshold: 1e-4 / N."""
    return 1e-4 / n


def save_scores(scores: ScoreVector, path, point_ids=None) -> None:
    """One ``id,score`` line per point."""
    ids = point_ids if point_ids is not None else [str(i) for i in range(len(scores))]
    if len(ids) != len(scores):
        raise DimensionError(f"{len(ids)} ids for {len(scores)} scores")
    with open(path, "w") as fh:
        for pid, s in zip(ids, scores.probs):
            fh.write(f"{pid},{format(s, '.17g')}\n")


def load_scores(path) -> tuple[list[str], np.ndarray]:
    """Read an ``id,score`` CSV back into ids and raw score values."""
    ids: list[str] = []
    vals: list[float] = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            pid, _, raw = line.rpartition(",")
            ids.append(pid)
            vals.append(float(raw))
    return ids, np.asarray(vals)
