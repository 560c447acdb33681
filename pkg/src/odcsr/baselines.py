"""Reference detectors for comparison runs.

The l1-norm detector scores each point by the l1 norm of its representation:
points that need large, spread-out coefficients to be expressed by the rest
of the data are suspicious, so HIGH scores mark outliers (the opposite
polarity from walk scores; evaluation takes an explicit polarity tag).
The single-stage walk detector is just the cascade with one stage, exposed
as a preset instead of a second code path.
"""

from __future__ import annotations

import numpy as np

from .cascade import CascadeConfig
from .data import DataMatrix
from .elastic_net import ElasticNetConfig, solve_all

# the literature's pure-l1 program, approximated by pushing lam close to 1
L1_PRESET_LAMBDA = 0.99
L1_PRESET_ALPHA = 5.0

POLARITY_LOW = "low_is_outlier"
POLARITY_HIGH = "high_is_outlier"


def l1_preset_config(X: DataMatrix) -> ElasticNetConfig:
    """Default baseline config: one shared gamma for the whole dataset.

    The literature detector fits a single sparse program over all points, so
    the penalty level is global: gamma = alpha*lam / median_j mu_j with mu_j
    each column's largest absolute correlation. Points whose correlations sit
    below the shared threshold come out with small or empty representations,
    which is precisely the failure mode that makes this a weak baseline. A
    per-column adaptive gamma would paper over it.
    """
    gram = X.values.T @ X.values
    mu = np.abs(gram)
    np.fill_diagonal(mu, 0.0)
    med = float(np.median(mu.max(axis=0)))
    gamma = L1_PRESET_ALPHA * L1_PRESET_LAMBDA / max(med, 1e-12)
    return ElasticNetConfig(lam=L1_PRESET_LAMBDA, gamma_mode="fixed", gamma=gamma)


def l1_thresholding_scores(
    X: DataMatrix, en_cfg: ElasticNetConfig | None = None
) -> np.ndarray:
    """Per-point l1 norm of the elastic-net representation (high = outlier)."""
    rep = solve_all(X, en_cfg if en_cfg is not None else l1_preset_config(X))
    return np.asarray(abs(rep.coeffs).sum(axis=0)).ravel()


def rgraph_preset() -> CascadeConfig:
    """Single-stage walk detector: one representation, one averaged walk."""
    return CascadeConfig(num_stages=1, walk_steps=1000)
