"""Precision-weighted product of the network posterior and the function-value prior.

The product of two pointwise Gaussians is Gaussian with summed precisions:

    mean = (m_b / v_b + m_p / v_p) / (1 / v_b + 1 / v_p)
    var  = 1 / (1 / v_b + 1 / v_p)

so the fused mean is a convex combination of the two inputs, weighted toward
whichever side is more certain. Computation happens in precision space; an
infinite prior variance contributes zero precision and leaves the network
belief untouched, and a zero network variance short-circuits to the network
mean (the prior cannot move a certain belief).
"""

from __future__ import annotations

import math
from typing import Mapping, Protocol, Sequence

import numpy as np

from .errors import InputError
from .gaussian import GaussianPrediction, PosteriorPredictive
from .priors import FunctionValuePrior


class MomentBackend(Protocol):
    """Anything exposing pointwise posterior moment arrays (ensemble, Laplace)."""

    def moment_arrays(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...


def fuse(bnn: GaussianPrediction, prior: tuple[float, float]) -> GaussianPrediction:
    """Fuse one network belief with one prior belief (mean, variance)."""
    prior_mean, prior_var = prior
    if math.isnan(prior_var) or prior_var <= 0.0:
        raise InputError(f"prior variance must be > 0 (or +inf), got {prior_var}")
    if math.isinf(prior_var):
        return bnn
    if bnn.variance == 0.0:
        return GaussianPrediction(bnn.mean, 0.0)
    p_bnn = 1.0 / bnn.variance
    p_prior = 1.0 / prior_var
    total = p_bnn + p_prior
    return GaussianPrediction(
        mean=(p_bnn * bnn.mean + p_prior * prior_mean) / total,
        variance=1.0 / total,
    )


def fuse_arrays(
    bnn_means: np.ndarray,
    bnn_vars: np.ndarray,
    prior_means: np.ndarray,
    prior_vars: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`fuse` over aligned arrays."""
    bnn_means = np.asarray(bnn_means, dtype=float)
    bnn_vars = np.asarray(bnn_vars, dtype=float)
    prior_means = np.asarray(prior_means, dtype=float)
    prior_vars = np.asarray(prior_vars, dtype=float)
    if np.any(np.isnan(prior_vars)) or np.any(prior_vars <= 0.0):
        raise InputError("prior variances must be > 0 (or +inf)")
    if np.any(bnn_vars < 0.0) or not np.all(np.isfinite(bnn_vars)):
        raise InputError("network variances must be finite and >= 0")

    certain = bnn_vars == 0.0
    no_prior = np.isinf(prior_vars)
    safe_bnn_vars = np.where(certain, 1.0, bnn_vars)
    p_bnn = 1.0 / safe_bnn_vars
    p_prior = np.where(no_prior, 0.0, 1.0 / np.where(no_prior, 1.0, prior_vars))
    total = p_bnn + p_prior
    mean = (p_bnn * bnn_means + p_prior * np.where(no_prior, 0.0, prior_means)) / total
    var = 1.0 / total
    mean = np.where(certain, bnn_means, np.where(no_prior, bnn_means, mean))
    var = np.where(certain, 0.0, np.where(no_prior, bnn_vars, var))
    return mean, var


def posterior_predictive(fused: GaussianPrediction, noise_variance: float) -> PosteriorPredictive:
    """Add observation noise to a fused function belief."""
    if noise_variance < 0.0 or math.isnan(noise_variance):
        raise InputError(f"noise_variance must be >= 0, got {noise_variance}")
    return PosteriorPredictive(
        mean=fused.mean,
        function_variance=fused.variance,
        noise_variance=float(noise_variance),
    )


def estimate_noise_variance(predictions: Sequence[float], labels: Sequence[float]) -> float:
    """Observation-noise estimate: MSE of held-out predictions."""
    predictions = np.asarray(predictions, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if predictions.size == 0 or predictions.shape != labels.shape:
        raise InputError("predictions and labels must be non-empty and equal length")
    return float(np.mean((predictions - labels) ** 2))


def predict_fused(
    backend: MomentBackend,
    prior: FunctionValuePrior,
    noise_variance: float,
    X: np.ndarray,
    aux: Mapping[str, np.ndarray] | None = None,
) -> list[PosteriorPredictive]:
    """Backend moments -> prior moments -> fuse -> predictive, pointwise."""
    if noise_variance < 0.0:
        raise InputError(f"noise_variance must be >= 0, got {noise_variance}")
    bnn_means, bnn_vars = backend.moment_arrays(X)
    prior_means, prior_vars = prior.moments(X, aux or {})
    means, variances = fuse_arrays(bnn_means, bnn_vars, prior_means, prior_vars)
    return [
        PosteriorPredictive(float(m), float(v), float(noise_variance))
        for m, v in zip(means, variances)
    ]
