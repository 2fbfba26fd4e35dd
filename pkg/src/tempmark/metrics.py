"""Threshold-sweep ROC, AUC and confusion-matrix metrics.

Convention: a text is predicted positive when its score is >= the threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import DataError


@dataclass(frozen=True)
class RocCurve:
    """Step ROC curve; ``thresholds`` ascend, ending with the +inf sentinel."""

    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    @property
    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.thresholds.tolist(), self.fpr.tolist(), self.tpr.tolist()))

    def to_csv(self) -> str:
        lines = ["threshold,fpr,tpr"]
        lines += [f"{t!r},{f!r},{p!r}" for t, f, p in self.points]
        return "\n".join(lines) + "\n"


def _as_scores(values: Sequence[float], name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise DataError(f"{name} scores are empty")
    if np.isnan(arr).any():
        raise DataError(f"{name} scores contain NaN")
    return arr


def roc(positive_scores: Sequence[float], negative_scores: Sequence[float]) -> RocCurve:
    """Sweep every observed score plus +inf as a threshold; AUC by the trapezoid rule.

    Tied positive/negative scores move TPR and FPR at the same threshold, so
    the trapezoid credits them one half, matching P(p > n) + P(p = n) / 2.
    """
    pos = np.sort(_as_scores(positive_scores, "positive"))
    neg = np.sort(_as_scores(negative_scores, "negative"))
    thresholds = np.append(np.unique(np.concatenate([pos, neg])), np.inf)
    # count of scores >= threshold = n - (number strictly below)
    tpr = (pos.size - np.searchsorted(pos, thresholds, side="left")) / pos.size
    fpr = (neg.size - np.searchsorted(neg, thresholds, side="left")) / neg.size
    # thresholds ascend, so (fpr, tpr) descend; integrate in ascending fpr order
    x, y = fpr[::-1], tpr[::-1]
    auc = float(np.sum(np.diff(x) * (y[1:] + y[:-1]) / 2.0))
    return RocCurve(thresholds, fpr, tpr, auc)


def pairwise_auc(positive_scores: Sequence[float], negative_scores: Sequence[float]) -> float:
    """Brute-force P(p > n) + P(p = n) / 2 over all pairs."""
    pos = _as_scores(positive_scores, "positive")[:, None]
    neg = _as_scores(negative_scores, "negative")[None, :]
    return float(((pos > neg).sum() + 0.5 * (pos == neg).sum()) / (pos.size * neg.size))


@dataclass(frozen=True)
class ThresholdMetrics:
    f1: float
    tpr: float
    fpr: float
    precision: float
    tp: int
    fp: int
    fn: int
    tn: int

    def __iter__(self):
        # unpacks as (f1, tpr, fpr, precision)
        return iter((self.f1, self.tpr, self.fpr, self.precision))


def metrics_at_threshold(
    positive_scores: Sequence[float], negative_scores: Sequence[float], threshold: float
) -> ThresholdMetrics:
    pos = _as_scores(positive_scores, "positive")
    neg = _as_scores(negative_scores, "negative")
    tp = int((pos >= threshold).sum())
    fn = pos.size - tp
    fp = int((neg >= threshold).sum())
    tn = neg.size - fp
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / pos.size
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return ThresholdMetrics(f1, recall, fp / neg.size, precision, tp, fp, fn, tn)


def tpr_at_fpr(curve: RocCurve, fpr_target: float) -> float:
    """Largest TPR among curve points whose FPR does not exceed ``fpr_target``."""
    ok = curve.fpr <= fpr_target
    return float(curve.tpr[ok].max()) if ok.any() else 0.0


def best_f1_threshold(positive_scores: Sequence[float], negative_scores: Sequence[float]) -> float:
    """Observed score that maximizes F1 (lowest such threshold on ties)."""
    best_t, best_f1 = math.inf, -1.0
    for t in np.unique(np.concatenate([_as_scores(positive_scores, "positive"), _as_scores(negative_scores, "negative")])):
        f1 = metrics_at_threshold(positive_scores, negative_scores, t).f1
        if f1 > best_f1:
            best_t, best_f1 = float(t), f1
    return best_t
