"""Threshold-free and thresholded detection metrics.

Outliers are the positive class throughout. AUC is the rank statistic
(Mann-Whitney with midranks for ties); F1 is computed at the count-matched
operating point: the threshold that predicts exactly as many outliers as the
labels contain, which keeps the metric parameter-free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import ConfigError, DimensionError


class UndefinedMetricError(ValueError):
    """Both classes must be present to rank one against the other."""


_POLARITIES = ("low_is_outlier", "high_is_outlier")


def _check_inputs(scores, labels, polarity):
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel().astype(np.int64)
    if scores.shape != labels.shape:
        raise DimensionError(
            f"{scores.size} scores for {labels.size} labels"
        )
    if polarity not in _POLARITIES:
        raise ConfigError(f"polarity must be one of {_POLARITIES}, got {polarity!r}")
    if labels.min() == labels.max():
        raise UndefinedMetricError("labels contain a single class")
    return scores, labels


def auc(scores, labels, polarity: str = "low_is_outlier") -> float:
    """Probability a random outlier looks more outlier-like than a random
    inlier, ties counted half."""
    scores, labels = _check_inputs(scores, labels, polarity)
    key = -scores if polarity == "low_is_outlier" else scores
    ranks = rankdata(key, method="average")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    rank_sum = float(ranks[pos].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


@dataclass(frozen=True)
class EvalReport:
    auc: float
    f1: float
    threshold_used: float
    tp: int
    fp: int
    fn: int
    tn: int

    def to_kv(self) -> dict[str, str]:
        return {
            "auc": f"{self.auc:.6f}",
            "f1": f"{self.f1:.6f}",
            "threshold": repr(self.threshold_used),
            "tp": str(self.tp),
            "fp": str(self.fp),
            "fn": str(self.fn),
            "tn": str(self.tn),
        }

    CSV_HEADER = "auc,f1,threshold,tp,fp,fn,tn"

    def to_csv_row(self) -> str:
        return (
            f"{self.auc:.6f},{self.f1:.6f},{self.threshold_used!r},"
            f"{self.tp},{self.fp},{self.fn},{self.tn}"
        )


def f1_at_count(scores, labels, polarity: str = "low_is_outlier") -> EvalReport:
    """Full report at the threshold predicting the true number of outliers.

    The predicted-outlier set is the true-count prefix of the outlier-first
    ordering; ties at the cut are broken by stable index order.
    """
    scores, labels = _check_inputs(scores, labels, polarity)
    n = scores.size
    n_out = int((labels == 1).sum())
    key = scores if polarity == "low_is_outlier" else -scores
    order = np.argsort(key, kind="stable")  # most outlier-like first
    predicted = np.zeros(n, dtype=bool)
    predicted[order[:n_out]] = True
    threshold = float(scores[order[n_out - 1]])

    actual = labels == 1
    tp = int(np.sum(predicted & actual))
    fp = int(np.sum(predicted & ~actual))
    fn = int(np.sum(~predicted & actual))
    tn = int(np.sum(~predicted & ~actual))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (
        2.0 * precision * recall / (precision + recall)
        if precision + recall
        else 0.0
    )
    return EvalReport(
        auc=auc(scores, labels, polarity),
        f1=f1,
        threshold_used=threshold,
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
    )
