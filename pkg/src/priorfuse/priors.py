"""Pointwise function-value priors and their hyperparameter fits.

A prior assigns each data point a Gaussian belief (mean, variance) about the
function value there. Variance may be +inf, meaning "no prior information at
this point"; fusion treats that as zero precision. Three concrete families:

* ``ConstantPrior``        - one (mean, variance) everywhere.
* ``BinaryGatedPrior``     - zero mean, two variance regimes keyed by an
                             auxiliary score against a threshold.
* ``LinearScaledScorePrior`` - mean is an affine transform of an auxiliary
                             score, constant variance.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.stats import rankdata

from .errors import ConfigError, FitError, InputError


class FunctionValuePrior(ABC):
    """Per-point Gaussian prior provider."""

    @abstractmethod
    def moments(
        self, features: np.ndarray, aux: Mapping[str, np.ndarray]
    ) -> tuple[np.ndarray, np.ndarray]:
        """Prior mean and variance arrays for each of the n points."""


def _n_points(features: np.ndarray | None, aux: Mapping[str, np.ndarray]) -> int:
    if features is not None:
        return int(np.asarray(features).shape[0])
    for column in aux.values():
        return int(np.asarray(column).shape[0])
    raise InputError("cannot infer point count without features or aux columns")


def _aux_column(aux: Mapping[str, np.ndarray], name: str) -> np.ndarray:
    if name not in aux:
        raise ConfigError(f"prior requires auxiliary column {name!r}, not provided")
    return np.asarray(aux[name], dtype=float)


def _check_variance(value: float, what: str) -> float:
    value = float(value)
    if not value > 0.0:  # +inf passes, NaN and <=0 fail
        raise InputError(f"{what} must be > 0 (or +inf), got {value}")
    return value


@dataclass(frozen=True)
class ConstantPrior(FunctionValuePrior):
    mean: float
    variance: float

    def __post_init__(self):
        _check_variance(self.variance, "constant prior variance")

    def moments(self, features, aux):
        n = _n_points(features, aux)
        return np.full(n, float(self.mean)), np.full(n, float(self.variance))


def no_information_prior() -> ConstantPrior:
    """Prior with infinite variance everywhere; fusion leaves the BNN unchanged."""
    return ConstantPrior(mean=0.0, variance=np.inf)


@dataclass(frozen=True)
class BinaryGatedPrior(FunctionValuePrior):
    """Zero-mean prior whose strength is gated by score <= threshold vs above."""

    score_column: str
    threshold: float
    variance_below: float
    variance_above: float
    mean: float = 0.0

    def __post_init__(self):
        _check_variance(self.variance_below, "variance_below")
        _check_variance(self.variance_above, "variance_above")

    def moments(self, features, aux):
        scores = _aux_column(aux, self.score_column)
        variances = np.where(scores <= self.threshold, self.variance_below, self.variance_above)
        return np.full(scores.shape[0], float(self.mean)), variances


@dataclass(frozen=True)
class LinearScaledScorePrior(FunctionValuePrior):
    score_column: str
    slope: float
    intercept: float
    variance: float

    def __post_init__(self):
        _check_variance(self.variance, "scaled-score prior variance")

    def moments(self, features, aux):
        scores = _aux_column(aux, self.score_column)
        means = self.slope * scores + self.intercept
        return means, np.full(scores.shape[0], float(self.variance))


def evaluate_prior(
    prior: FunctionValuePrior,
    features: np.ndarray | None,
    aux: Mapping[str, float] | None = None,
) -> tuple[float, float]:
    """Prior (mean, variance) at a single point."""
    point = None if features is None else np.asarray(features, dtype=float)[None, :]
    aux_arrays = {k: np.asarray([v], dtype=float) for k, v in (aux or {}).items()}
    means, variances = prior.moments(point, aux_arrays)
    return float(means[0]), float(variances[0])


def roc_auc(scores, labels) -> float:
    """P(random positive outscores random negative), ties counting one half."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise InputError("scores and labels must be 1-D with equal length")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise InputError("roc_auc needs both classes present")
    ranks = rankdata(scores)  # average ranks implement the tie rule
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def midpoint_grid(scores) -> np.ndarray:
    """Sorted midpoints between adjacent distinct scores: every achievable cut."""
    unique = np.unique(np.asarray(scores, dtype=float))
    if unique.size < 2:
        return unique.copy()
    return (unique[:-1] + unique[1:]) / 2.0


def fit_threshold_roc_auc(scores, fitness_labels, grid) -> float:
    """Grid threshold whose induced predictor (score > t) maximizes ROC-AUC.

    Ties are broken toward the smallest threshold.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise InputError("threshold grid must be non-empty")
    scores = np.asarray(scores, dtype=float)
    best_t = None
    best_auc = -np.inf
    for t in np.sort(grid):
        auc = roc_auc((scores > t).astype(float), fitness_labels)
        if auc > best_auc:
            best_auc = auc
            best_t = float(t)
    return best_t


def fit_gate_threshold(scores, fitness_labels, grid=None) -> tuple[float, float]:
    """Best separating cut for a gated prior, trying both score orientations.

    Some score conventions mark the favorable class with *low* values, so each
    candidate cut is scored as the better of (score > t) and (score < t).
    Returns (threshold, auc of the winning orientation).
    """
    scores = np.asarray(scores, dtype=float)
    if grid is None:
        grid = midpoint_grid(scores)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise InputError("threshold grid must be non-empty")
    best = (-np.inf, None)
    for t in np.sort(grid):
        auc_gt = roc_auc((scores > t).astype(float), fitness_labels)
        auc_lt = roc_auc((scores < t).astype(float), fitness_labels)
        auc = max(auc_gt, auc_lt)
        if auc > best[0]:
            best = (auc, float(t))
    return best[1], best[0]


def fit_linear_scaling(scores, labels) -> tuple[float, float]:
    """Ordinary least squares of labels on scores; returns (slope, intercept)."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise InputError("scores and labels must be 1-D with equal length")
    if np.unique(scores).size < 2:
        raise FitError("linear scaling needs at least 2 distinct scores")
    x_mean = scores.mean()
    y_mean = labels.mean()
    dx = scores - x_mean
    slope = float(dx @ (labels - y_mean) / (dx @ dx))
    return slope, float(y_mean - slope * x_mean)
