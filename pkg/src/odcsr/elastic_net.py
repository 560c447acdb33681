"""Per-column elastic-net self-expression solver.

Each data column x_j is expressed as a combination of the other columns by
minimizing, over c with entry j structurally removed,

    (gamma_j / 2) ||x_j - X c||^2  +  lam ||c||_1  +  ((1 - lam) / 2) ||c||^2

The zero-diagonal constraint rules out the trivial self-match. The l1 term
keeps each representation sparse (same-subspace support), the small l2 term
keeps the induced graph connected; lam in [0, 1) trades the two off.

All columns are solved jointly by accelerated proximal gradient on the Gram
matrix G = X^T X, so per-iteration cost does not depend on the feature
dimension. The proximal map of the combined penalty is closed form:
soft-threshold by step*lam, then divide by 1 + step*(1 - lam). The step is
1/L with L = gamma_j * sigma_max(X)^2 + (1 - lam), sigma_max^2 estimated once
by 30 power-iteration steps on G. Descent is enforced per column: a candidate
that raises the objective triggers a momentum restart, and a second
consecutive failure halves that column's step (covers a power-iteration
underestimate of L).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .data import DataMatrix
from .errors import ConfigError, ParseError

_ODCC_MAGIC = b"ODCC"

# entries below this magnitude are dropped from the sparse result
COEFF_DROP_TOL = 1e-12

_POWER_ITER_STEPS = 30


@dataclass(frozen=True)
class ElasticNetConfig:
    """Solver settings. ``gamma_mode`` is ``"fixed"`` (use ``gamma``) or
    ``"relative"`` (per-column gamma_j = alpha*lam/mu_j, mu_j the column's
    largest absolute correlation, which guarantees nonzero support whenever
    mu_j > 0)."""

    lam: float = 0.9
    gamma_mode: str = "relative"
    gamma: float | None = None
    alpha: float = 5.0
    max_iters: int = 2000
    tol: float = 1e-6

    def __post_init__(self):
        if not 0.0 <= self.lam < 1.0:
            raise ConfigError(f"lam must be in [0, 1), got {self.lam}")
        if self.gamma_mode == "fixed":
            if self.gamma is None or self.gamma <= 0:
                raise ConfigError("fixed gamma mode needs gamma > 0")
        elif self.gamma_mode == "relative":
            if self.alpha <= 1:
                raise ConfigError(
                    f"relative gamma mode needs alpha > 1, got {self.alpha} "
                    "(alpha <= 1 cannot guarantee nonzero support)"
                )
            if self.lam == 0.0:
                raise ConfigError(
                    "relative gamma mode needs lam > 0; with lam = 0 the "
                    "soft threshold vanishes, use a fixed gamma instead"
                )
        else:
            raise ConfigError(f"unknown gamma_mode {self.gamma_mode!r}")
        if self.max_iters < 0:
            raise ConfigError("max_iters must be >= 0")
        if self.tol <= 0:
            raise ConfigError("tol must be > 0")


@dataclass(frozen=True)
class SelfRepresentation:
    """N x N coefficient matrix C (column j represents point j) plus
    per-column solver diagnostics. The diagonal is structurally zero: the
    solver never creates variable j in column j's problem."""

    coeffs: sp.csc_matrix
    per_column_objective: np.ndarray
    per_column_iters: np.ndarray
    converged: np.ndarray

    def __post_init__(self):
        c = self.coeffs
        if c.shape[0] != c.shape[1]:
            raise ConfigError(f"coefficient matrix must be square, got {c.shape}")
        if c.nnz and not np.all(np.isfinite(c.data)):
            raise ConfigError("coefficient matrix has non-finite entries")
        if np.any(c.diagonal() != 0.0):
            raise ConfigError("coefficient matrix has nonzero diagonal entries")

    @property
    def num_points(self) -> int:
        return self.coeffs.shape[0]

    def all_converged(self) -> bool:
        return bool(np.all(self.converged))


class ColumnSolve(NamedTuple):
    coeffs: np.ndarray
    objective: float
    iters: int
    converged: bool


def _power_iteration(G: np.ndarray, steps: int = _POWER_ITER_STEPS) -> float:
    """Largest eigenvalue of the PSD Gram matrix, i.e. sigma_max(X)^2."""
    n = G.shape[0]
    v = np.full(n, 1.0 / np.sqrt(n))
    ev = 0.0
    for _ in range(steps):
        w = G @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        ev = norm
        v = w / norm
    return float(ev)


def _relative_gammas(G: np.ndarray, lam: float, alpha: float) -> np.ndarray:
    """Per-column gamma_j = alpha*lam/mu_j with mu_j = max_{i != j} |x_i.x_j|.

    mu_j at numerical zero (<= 1e-12) means the column is orthogonal to all
    others; gamma_j = alpha then, and the correct solution is zero anyway.
    """
    mu = np.abs(G).copy()
    np.fill_diagonal(mu, 0.0)
    mu = mu.max(axis=0)
    gammas = np.full(G.shape[0], float(alpha))
    live = mu > 1e-12
    gammas[live] = alpha * lam / mu[live]
    return gammas


def effective_gamma(X: DataMatrix, j: int, cfg: ElasticNetConfig) -> float:
    """The gamma used for column j under the config's relative mode."""
    if cfg.gamma_mode != "relative":
        raise ConfigError("effective_gamma applies to relative gamma mode only")
    x_j = X.values[:, j]
    corr = np.abs(X.values.T @ x_j)
    corr[j] = 0.0
    mu = float(corr.max())
    if mu <= 1e-12:
        return float(cfg.alpha)
    return float(cfg.alpha * cfg.lam / mu)


def _solve_columns(
    G: np.ndarray,
    columns: np.ndarray,
    gammas: np.ndarray,
    lam: float,
    max_iters: int,
    tol: float,
    smax2: float | None = None,
    record_history: bool = False,
):
    """Joint accelerated proximal gradient over the requested columns.

    Returns (C, objective, iters, converged[, history]) where C is dense
    N x len(columns). ``history[k]`` holds the accepted per-column objectives
    after iteration k+1 (used by descent property tests).
    """
    n = G.shape[0]
    m = columns.size
    if smax2 is None:
        smax2 = _power_iteration(G)
    g_cols = G[:, columns]                      # N x m, the linear terms
    g_diag = np.diag(G)[columns]                # ||x_j||^2
    step = 1.0 / (gammas * smax2 + (1.0 - lam))

    C = np.zeros((n, m))
    C_prev = np.zeros((n, m))
    Y = np.zeros((n, m))
    t_mom = np.ones(m)
    obj = 0.5 * gammas * g_diag                 # objective at c = 0
    iters = np.zeros(m, dtype=np.int64)
    converged = np.zeros(m, dtype=bool)
    just_restarted = np.zeros(m, dtype=bool)
    active = np.arange(m)
    history: list[np.ndarray] = []
    kkt_bound = tol * (1.0 + lam)

    for k in range(1, max_iters + 1):
        if active.size == 0:
            break
        cols_a = columns[active]
        Ya = Y[:, active]
        grad = gammas[active] * (G @ Ya - g_cols[:, active])
        V = Ya - step[active] * grad
        Z = np.sign(V) * np.maximum(np.abs(V) - step[active] * lam, 0.0)
        Z /= 1.0 + step[active] * (1.0 - lam)
        Z[cols_a, np.arange(active.size)] = 0.0  # structural zero diagonal

        GZ = G @ Z
        lin = np.einsum("ij,ij->j", g_cols[:, active], Z)
        quad = np.einsum("ij,ij->j", Z, GZ)
        res2 = np.maximum(g_diag[active] - 2.0 * lin + quad, 0.0)
        obj_z = (
            0.5 * gammas[active] * res2
            + lam * np.abs(Z).sum(axis=0)
            + 0.5 * (1.0 - lam) * (Z * Z).sum(axis=0)
        )

        accept = obj_z <= obj[active] + 1e-15 * (1.0 + np.abs(obj[active]))
        acc = active[accept]
        rej = active[~accept]

        if acc.size:
            Za = Z[:, accept]
            old_c = C[:, acc]
            t_old = t_mom[acc]
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_old * t_old))
            C_prev[:, acc] = old_c
            C[:, acc] = Za
            obj[acc] = obj_z[accept]
            Y[:, acc] = Za + ((t_old - 1.0) / t_new) * (Za - old_c)
            t_mom[acc] = t_new
            just_restarted[acc] = False

            # KKT residual at the accepted point; GZ is already in hand
            grad_s = (
                gammas[acc] * (GZ[:, accept] - g_cols[:, acc])
                + (1.0 - lam) * Za
            )
            viol = np.where(
                Za != 0.0,
                np.abs(grad_s + lam * np.sign(Za)),
                np.maximum(np.abs(grad_s) - lam, 0.0),
            )
            viol[columns[acc], np.arange(acc.size)] = 0.0
            ok = viol.max(axis=0) <= kkt_bound
            done = acc[ok]
            converged[done] = True
            iters[done] = k

        if rej.size:
            # First failure: restart momentum from the last accepted point.
            # Failure right after a restart means the step itself is too big.
            halve = rej[just_restarted[rej]]
            step[halve] *= 0.5
            Y[:, rej] = C[:, rej]
            t_mom[rej] = 1.0
            just_restarted[rej] = True

        if record_history:
            history.append(obj.copy())

        active = np.flatnonzero(~converged)

    iters[~converged] = max_iters
    if record_history:
        return C, obj, iters, converged, history
    return C, obj, iters, converged


def _gammas_for(G: np.ndarray, cfg: ElasticNetConfig) -> np.ndarray:
    if cfg.gamma_mode == "fixed":
        return np.full(G.shape[0], float(cfg.gamma))
    return _relative_gammas(G, cfg.lam, cfg.alpha)


def solve_column(X: DataMatrix, j: int, cfg: ElasticNetConfig) -> ColumnSolve:
    """Solve the representation of column j alone."""
    if not 0 <= j < X.num_points:
        raise IndexError(f"column {j} out of range for N={X.num_points}")
    G = X.values.T @ X.values
    gammas = _gammas_for(G, cfg)
    cols = np.array([j])
    C, obj, iters, conv = _solve_columns(
        G, cols, gammas[cols], cfg.lam, cfg.max_iters, cfg.tol
    )
    c = C[:, 0]
    c[np.abs(c) < COEFF_DROP_TOL] = 0.0
    return ColumnSolve(c, float(obj[0]), int(iters[0]), bool(conv[0]))


def solve_all(X: DataMatrix, cfg: ElasticNetConfig) -> SelfRepresentation:
    """Solve every column's representation; columns are independent problems."""
    n = X.num_points
    G = X.values.T @ X.values
    gammas = _gammas_for(G, cfg)
    cols = np.arange(n)
    C, obj, iters, conv = _solve_columns(
        G, cols, gammas, cfg.lam, cfg.max_iters, cfg.tol
    )
    C[np.abs(C) < COEFF_DROP_TOL] = 0.0
    coeffs = sp.csc_matrix(C)
    coeffs.eliminate_zeros()
    coeffs.sort_indices()
    return SelfRepresentation(coeffs, obj, iters, conv)


def objective_value(
    X: DataMatrix, j: int, c: np.ndarray, gamma: float, lam: float
) -> float:
    """The column-j objective at coefficients c (entry j must be zero)."""
    r = X.values[:, j] - X.values @ c
    return float(
        0.5 * gamma * (r @ r)
        + lam * np.abs(c).sum()
        + 0.5 * (1.0 - lam) * (c @ c)
    )


def kkt_residual(
    X: DataMatrix, j: int, c: np.ndarray, gamma: float, lam: float
) -> float:
    """Max KKT violation for column j's problem at coefficients c.

    g = gamma X^T (X c - x_j) + (1 - lam) c, entry j excluded; the residual is
    |g_i + lam sign(c_i)| on the support and max(|g_i| - lam, 0) off it.
    """
    g = gamma * (X.values.T @ (X.values @ c - X.values[:, j])) + (1.0 - lam) * c
    viol = np.where(
        c != 0.0,
        np.abs(g + lam * np.sign(c)),
        np.maximum(np.abs(g) - lam, 0.0),
    )
    viol[j] = 0.0
    return float(viol.max())


def save_coeffs(rep: SelfRepresentation, path) -> None:
    """Sparse triplet file: ``ODCC``, u64 N, u64 nnz, then (row u64, col u64,
    value f64) little-endian triplets sorted by (col, row)."""
    coo = rep.coeffs.tocoo()
    order = np.lexsort((coo.row, coo.col))
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sQQ", _ODCC_MAGIC, rep.num_points, coo.nnz))
        rows = coo.row[order].astype("<u8")
        cols = coo.col[order].astype("<u8")
        vals = coo.data[order].astype("<f8")
        packed = np.empty(coo.nnz, dtype=[("r", "<u8"), ("c", "<u8"), ("v", "<f8")])
        packed["r"], packed["c"], packed["v"] = rows, cols, vals
        fh.write(packed.tobytes())


def load_coeffs(path) -> sp.csc_matrix:
    """Read a triplet file back into the N x N coefficient matrix."""
    with open(path, "rb") as fh:
        head = fh.read(20)
        if len(head) < 20:
            raise ParseError(f"{path}: truncated header")
        magic, n, nnz = struct.unpack("<4sQQ", head)
        if magic != _ODCC_MAGIC:
            raise ParseError(f"{path}: bad magic {magic!r}")
        payload = fh.read(24 * nnz)
    if len(payload) != 24 * nnz:
        raise ParseError(f"{path}: truncated payload")
    packed = np.frombuffer(payload, dtype=[("r", "<u8"), ("c", "<u8"), ("v", "<f8")])
    mat = sp.coo_matrix(
        (packed["v"], (packed["r"].astype(np.int64), packed["c"].astype(np.int64))),
        shape=(n, n),
    )
    return mat.tocsc()
