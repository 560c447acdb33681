"""Multi-stage residual cascade with per-stage walk scoring and score fusion.

Stage 1 solves the self-representation of the input and scores points with
the averaged walk seeded by the uniform distribution. Every later stage
solves the representation of what is still unexplained,

    R^i = X - sum_{j<=i} Xhat^j,    Xhat^i = R^{i-1} C^i,

and seeds its walk with the previous stage's scores, so the stage hand-off
carries both the unexplained signal and the current belief about outliers.
The final score is a convex combination of the per-stage scores (uniform
mean by default).

Residual columns are unit-normalized before each stage's solve by default.
Raw residual columns have wildly uneven norms (well-explained points shrink,
outliers do not), which lets the large columns dominate every correlation and
collapse later-stage graphs onto the outliers; normalizing compares
directions, where the per-point structure survives. The stored stage
coefficients are rescaled (diag(1/s) C diag(s), s the column norms) so the
reconstruction identity Xhat^i = R^{i-1} C^i and the telescoping of residuals
hold exactly on the raw residuals either way.

A stage whose residual is numerically zero short-circuits: fully explained
data would make every graph row dangling, so remaining stages just carry the
previous scores forward.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .data import DataMatrix
from .elastic_net import ElasticNetConfig, SelfRepresentation, save_coeffs, solve_all
from .errors import ConfigError, DimensionError
from .walk import ScoreVector, averaged_walk, build_transition, save_scores

# a residual at or below this fraction of ||X||_F counts as fully explained
RESIDUAL_SHORTCIRCUIT_REL = 1e-10


@dataclass(frozen=True)
class CascadeConfig:
    num_stages: int = 3
    walk_steps: int = 1000
    en_config: ElasticNetConfig = field(default_factory=ElasticNetConfig)
    fusion: str = "mean"
    fusion_weights: tuple[float, ...] | None = None
    renormalize_residuals: bool = True

    def __post_init__(self):
        if self.num_stages < 1:
            raise ConfigError(f"num_stages must be >= 1, got {self.num_stages}")
        if self.walk_steps < 1:
            raise ConfigError(f"walk_steps must be >= 1, got {self.walk_steps}")
        if self.fusion == "weighted":
            if self.fusion_weights is None:
                raise ConfigError("weighted fusion needs fusion_weights")
            w = tuple(float(x) for x in self.fusion_weights)
            if len(w) != self.num_stages:
                raise ConfigError(
                    f"{len(w)} fusion weights for {self.num_stages} stages"
                )
            if any(x < 0 for x in w):
                raise ConfigError("fusion weights must be nonnegative")
            if abs(sum(w) - 1.0) > 1e-9:
                raise ConfigError(f"fusion weights must sum to 1, got {sum(w)!r}")
            object.__setattr__(self, "fusion_weights", w)
        elif self.fusion == "mean":
            if self.fusion_weights is not None:
                raise ConfigError("fusion_weights only apply to weighted fusion")
        else:
            raise ConfigError(f"unknown fusion {self.fusion!r}")


@dataclass(frozen=True)
class StageResult:
    """One cascade stage: coefficients, the reconstruction they produce from
    the stage's input residual, the walk scores, and the Frobenius norm of
    what remains unexplained after this stage."""

    coeffs: SelfRepresentation
    reconstruction: np.ndarray
    scores: ScoreVector
    residual_norm: float


@dataclass(frozen=True)
class CascadeResult:
    stages: tuple[StageResult, ...]
    fused: ScoreVector
    config: CascadeConfig
    stage_seconds: tuple[float, ...]


def fuse_scores(score_list, fusion: str = "mean", weights=None) -> ScoreVector:
    """Convex combination of per-stage score vectors."""
    if not score_list:
        raise ConfigError("nothing to fuse")
    n = len(score_list[0])
    for s in score_list:
        if len(s) != n:
            raise DimensionError("score vectors have mismatched lengths")
    if fusion == "mean":
        weights = np.full(len(score_list), 1.0 / len(score_list))
    elif fusion == "weighted":
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (len(score_list),):
            raise ConfigError(
                f"{weights.size} weights for {len(score_list)} score vectors"
            )
    else:
        raise ConfigError(f"unknown fusion {fusion!r}")
    fused = np.zeros(n)
    for w, s in zip(weights, score_list):
        fused += w * s.probs
    return ScoreVector(fused)


def _empty_representation(n: int) -> SelfRepresentation:
    return SelfRepresentation(
        sp.csc_matrix((n, n)),
        np.zeros(n),
        np.zeros(n, dtype=np.int64),
        np.ones(n, dtype=bool),
    )


def residual(X: DataMatrix, stages) -> np.ndarray:
    """X minus the stages' summed reconstructions; X itself for no stages."""
    R = X.values.copy()
    for st in stages:
        if st.reconstruction.shape != R.shape:
            raise DimensionError("stage reconstruction shape mismatch")
        R -= st.reconstruction
    return R


def run_cascade(X: DataMatrix, cfg: CascadeConfig) -> CascadeResult:
    n = X.num_points
    x_norm = float(np.linalg.norm(X.values))
    R = X.values.copy()
    pi = ScoreVector.uniform(n)
    stages: list[StageResult] = []
    timings: list[float] = []

    for i in range(cfg.num_stages):
        t0 = time.perf_counter()
        if np.linalg.norm(R) <= RESIDUAL_SHORTCIRCUIT_REL * x_norm:
            prev = stages[-1].scores if stages else pi
            stages.append(
                StageResult(
                    _empty_representation(n),
                    np.zeros_like(R),
                    prev,
                    float(np.linalg.norm(R)),
                )
            )
            timings.append(time.perf_counter() - t0)
            continue

        solve_input = R
        col_scale = None
        if cfg.renormalize_residuals and i > 0:
            norms = np.linalg.norm(R, axis=0)
            col_scale = np.where(norms > 0.0, norms, 1.0)
            solve_input = R / col_scale

        rep = solve_all(DataMatrix(solve_input), cfg.en_config)
        P = build_transition(rep)
        scores = averaged_walk(P, pi, cfg.walk_steps)

        coeffs = rep.coeffs
        if col_scale is not None:
            # rescale so reconstruction bookkeeping stays on the raw residual:
            # Xhat = R diag(1/s) Ctilde diag(s) = R C
            scale_in = sp.diags(1.0 / col_scale)
            scale_out = sp.diags(col_scale)
            coeffs = sp.csc_matrix(scale_in @ coeffs @ scale_out)
            rep = SelfRepresentation(
                coeffs, rep.per_column_objective, rep.per_column_iters, rep.converged
            )
        reconstruction = R @ coeffs
        R = R - reconstruction
        stages.append(
            StageResult(rep, reconstruction, scores, float(np.linalg.norm(R)))
        )
        timings.append(time.perf_counter() - t0)

        pi = scores
        drift = abs(float(scores.probs.sum()) - 1.0)
        if drift > 1e-10:
            pi = ScoreVector(scores.probs / scores.probs.sum())

    fused = fuse_scores(
        [st.scores for st in stages], cfg.fusion, cfg.fusion_weights
    )
    return CascadeResult(tuple(stages), fused, cfg, tuple(timings))


# --- manifest / run directory -------------------------------------------

def config_manifest_entries(cfg: CascadeConfig) -> dict[str, str]:
    en = cfg.en_config
    return {
        "stages": str(cfg.num_stages),
        "walk_steps": str(cfg.walk_steps),
        "fusion": cfg.fusion,
        "fusion_weights": (
            ",".join(repr(w) for w in cfg.fusion_weights)
            if cfg.fusion_weights is not None
            else "-"
        ),
        "renormalize_residuals": str(cfg.renormalize_residuals).lower(),
        "lambda": repr(en.lam),
        "gamma_mode": en.gamma_mode,
        "gamma": repr(en.gamma) if en.gamma is not None else "-",
        "alpha": repr(en.alpha),
        "max_iters": str(en.max_iters),
        "tol": repr(en.tol),
    }


def config_from_manifest(entries: dict[str, str]) -> CascadeConfig:
    en = ElasticNetConfig(
        lam=float(entries["lambda"]),
        gamma_mode=entries["gamma_mode"],
        gamma=None if entries["gamma"] == "-" else float(entries["gamma"]),
        alpha=float(entries["alpha"]),
        max_iters=int(entries["max_iters"]),
        tol=float(entries["tol"]),
    )
    weights = entries["fusion_weights"]
    return CascadeConfig(
        num_stages=int(entries["stages"]),
        walk_steps=int(entries["walk_steps"]),
        en_config=en,
        fusion=entries["fusion"],
        fusion_weights=(
            None if weights == "-" else tuple(float(w) for w in weights.split(","))
        ),
        renormalize_residuals=entries["renormalize_residuals"] == "true",
    )


def write_manifest(entries: dict[str, str], path) -> None:
    with open(path, "w") as fh:
        for key, value in entries.items():
            fh.write(f"{key}={value}\n")


def read_manifest(path) -> dict[str, str]:
    entries: dict[str, str] = {}
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            entries[key] = value
    return entries


def save_run(result: CascadeResult, out_dir, point_ids=None,
             extra_manifest: dict[str, str] | None = None) -> Path:
    """Write per-stage coefficients and scores, fused scores, and a manifest
    recording every effective hyperparameter plus residual norms and timings."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, st in enumerate(result.stages, start=1):
        save_coeffs(st.coeffs, out / f"stage_{i}_coeffs.odcc")
        save_scores(st.scores, out / f"stage_{i}_scores.csv", point_ids)
    save_scores(result.fused, out / "fused_scores.csv", point_ids)

    entries = dict(extra_manifest or {})
    entries.update(config_manifest_entries(result.config))
    for i, st in enumerate(result.stages, start=1):
        entries[f"residual_norm.{i}"] = repr(st.residual_norm)
    for i, sec in enumerate(result.stage_seconds, start=1):
        entries[f"stage_seconds.{i}"] = f"{sec:.3f}"
    write_manifest(entries, out / "manifest.txt")
    return out
