"""Evaluation metrics, split-level standard errors, and the paired signed-rank test."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import DegenerateDataError, InputError
from .gaussian import PosteriorPredictive

# above this sample size the exact 2^n sign-assignment distribution gives way
# to the normal approximation with tie and continuity corrections
EXACT_WILCOXON_LIMIT = 25


def gaussian_log_likelihood(labels: np.ndarray, means: np.ndarray, variances: np.ndarray) -> np.ndarray:
    """Pointwise log N(y | mean, variance)."""
    labels = np.asarray(labels, dtype=float)
    means = np.asarray(means, dtype=float)
    variances = np.asarray(variances, dtype=float)
    if np.any(variances <= 0.0):
        raise InputError("log-likelihood requires strictly positive variances")
    return -0.5 * (np.log(2.0 * np.pi * variances) + (labels - means) ** 2 / variances)


def _split_moments(preds: Sequence[PosteriorPredictive]) -> tuple[np.ndarray, np.ndarray]:
    means = np.array([p.mean for p in preds])
    totals = np.array([p.total_variance for p in preds])
    return means, totals


def _check_lengths(preds, labels) -> np.ndarray:
    labels = np.asarray(labels, dtype=float).ravel()
    if len(preds) == 0 or len(preds) != labels.size:
        raise InputError("predictions and labels must be non-empty and equal length")
    return labels


def mean_log_likelihood(preds: Sequence[PosteriorPredictive], labels) -> float:
    """Mean log-density of the labels under each predictive Gaussian."""
    labels = _check_lengths(preds, labels)
    means, totals = _split_moments(preds)
    return float(np.mean(gaussian_log_likelihood(labels, means, totals)))


def rmse(preds: Sequence[PosteriorPredictive], labels) -> float:
    labels = _check_lengths(preds, labels)
    means, _ = _split_moments(preds)
    return float(np.sqrt(np.mean((means - labels) ** 2)))


def mae(preds: Sequence[PosteriorPredictive], labels) -> float:
    labels = _check_lengths(preds, labels)
    means, _ = _split_moments(preds)
    return float(np.mean(np.abs(means - labels)))


def standard_error(values) -> float:
    """Sample standard deviation over sqrt(n)."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise InputError("standard_error needs at least 2 values")
    return float(values.std(ddof=1) / np.sqrt(values.size))


def _exact_tail_probability(ranks: np.ndarray, observed: float) -> float:
    """P(W+ >= observed) over all 2^n sign assignments of the fixed ranks.

    Average ranks are half-integers at worst, so doubling them gives an
    integer-valued rank-sum distribution computed by a counting DP (one
    polynomial-multiply per rank), never by literal enumeration.
    """
    ranks2 = np.rint(2.0 * ranks).astype(np.int64)
    total = int(ranks2.sum())
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    upto = 0
    for r in ranks2:
        counts[r : upto + r + 1] += counts[: upto + 1].copy()  # overlap-safe
        upto += r
    observed2 = int(np.rint(2.0 * observed))
    tail = int(counts[observed2:].sum())
    return tail / float(2 ** len(ranks2))


def wilcoxon_signed_rank(a, b, alternative: str = "a_greater") -> float:
    """One-sided signed-rank p-value for paired samples, testing a > b.

    Zero differences are dropped before ranking; tied absolute differences
    receive average ranks. The p-value is exact (sign-assignment DP) for
    n <= 25 and uses the tie/continuity-corrected normal approximation above.
    """
    if alternative != "a_greater":
        raise InputError(f"unsupported alternative {alternative!r}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise InputError("paired samples must be 1-D with equal length")
    diff = a - b
    diff = diff[diff != 0.0]
    n = diff.size
    if n == 0:
        raise DegenerateDataError("all paired differences are zero")
    if n < 5:
        raise InputError(f"need at least 5 non-zero differences, got {n}")

    abs_ranks = rankdata(np.abs(diff))
    w_plus = float(abs_ranks[diff > 0.0].sum())

    if n <= EXACT_WILCOXON_LIMIT:
        return _exact_tail_probability(abs_ranks, w_plus)

    mean = n * (n + 1) / 4.0
    variance = n * (n + 1) * (2 * n + 1) / 24.0
    _, tie_counts = np.unique(np.abs(diff), return_counts=True)
    variance -= float(((tie_counts**3 - tie_counts)).sum()) / 48.0
    z = (w_plus - mean - 0.5) / math.sqrt(variance)  # continuity-corrected
    return 0.5 * math.erfc(z / math.sqrt(2.0))
