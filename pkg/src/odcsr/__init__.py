"""Outlier detection by cascaded self-representation.

Pipeline: express every point as an elastic-net combination of the other
points, run an averaged random walk on the induced graph to score points,
then repeat the whole step on the reconstruction residual, seeding each
stage's walk with the previous stage's scores. Per-stage scores are fused
into the final outlier score; low score means outlier.
"""

from .baselines import (
    POLARITY_HIGH,
    POLARITY_LOW,
    l1_preset,
    l1_thresholding_scores,
    rgraph_preset,
)
from .cascade import (
    CascadeConfig,
    CascadeResult,
    StageResult,
    config_from_manifest,
    config_manifest_entries,
    fuse_scores,
    read_manifest,
    residual,
    run_cascade,
    save_run,
    write_manifest,
)
from .data import (
    DataMatrix,
    SyntheticSpec,
    generate_synthetic,
    load_labels,
    load_matrix,
    normalize_columns,
    save_labels,
    save_matrix,
)
from .elastic_net import (
    ColumnSolve,
    ElasticNetConfig,
    SelfRepresentation,
    effective_gamma,
    kkt_residual,
    load_coeffs,
    objective_value,
    save_coeffs,
    solve_all,
    solve_column,
)
from .errors import ConfigError, ConvergenceError, DimensionError, ParseError
from .evaluation import EvalReport, UndefinedMetricError, auc, f1_at_count
from .walk import (
    ScoreVector,
    TransitionMatrix,
    averaged_walk,
    build_transition,
    classify,
    default_epsilon,
    load_scores,
    save_scores,
)

__version__ = "0.1.0"

__all__ = [
    "CascadeConfig",
    "CascadeResult",
    "ColumnSolve",
    "ConfigError",
    "ConvergenceError",
    "DataMatrix",
    "DimensionError",
    "ElasticNetConfig",
    "EvalReport",
    "POLARITY_HIGH",
    "POLARITY_LOW",
    "ParseError",
    "ScoreVector",
    "SelfRepresentation",
    "StageResult",
    "SyntheticSpec",
    "TransitionMatrix",
    "UndefinedMetricError",
    "auc",
    "averaged_walk",
    "build_transition",
    "classify",
    "config_from_manifest",
    "config_manifest_entries",
    "default_epsilon",
    "effective_gamma",
    "f1_at_count",
    "fuse_scores",
    "generate_synthetic",
    "kkt_residual",
    "l1_preset",
    "l1_thresholding_scores",
    "load_coeffs",
    "load_labels",
    "load_matrix",
    "load_scores",
    "normalize_columns",
    "objective_value",
    "read_manifest",
    "residual",
    "rgraph_preset",
    "run_cascade",
    "save_coeffs",
    "save_labels",
    "save_matrix",
    "save_run",
    "save_scores",
    "solve_all",
    "solve_column",
    "write_manifest",
]
