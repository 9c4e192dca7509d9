"""Linear stacking baseline: label ~ w_bnn * bnn_mean + w_prior * prior_mean + intercept.

Unlike fusion, the stacker's predictive variance is a single constant (its
validation residual MSE), so it cannot widen or narrow with the network's
epistemic uncertainty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FitError, InputError
from .gaussian import PosteriorPredictive

# guards the Gaussian likelihood when the stack fits the validation set exactly
_MIN_RESIDUAL_VARIANCE = 1e-12


@dataclass(frozen=True)
class StackingModel:
    w_bnn: float
    w_prior: float
    intercept: float
    residual_variance: float


def fit_stacker(val_bnn_means, val_prior_means, val_labels) -> StackingModel:
    """Least-squares fit of the two weights and intercept on validation data."""
    bnn = np.asarray(val_bnn_means, dtype=float).ravel()
    prior = np.asarray(val_prior_means, dtype=float).ravel()
    labels = np.asarray(val_labels, dtype=float).ravel()
    if not bnn.size == prior.size == labels.size:
        raise InputError("stacker inputs must have equal lengths")
    if bnn.size < 3:
        raise InputError("stacker needs at least 3 validation points")
    design = np.column_stack([bnn, prior, np.ones_like(bnn)])
    if np.linalg.matrix_rank(design) < 3:
        raise FitError("stacker features are collinear")
    coef, *_ = np.linalg.lstsq(design, labels, rcond=None)
    residual_variance = float(np.mean((design @ coef - labels) ** 2))
    return StackingModel(
        w_bnn=float(coef[0]),
        w_prior=float(coef[1]),
        intercept=float(coef[2]),
        residual_variance=max(residual_variance, _MIN_RESIDUAL_VARIANCE),
    )


def predict_stacker(model: StackingModel, bnn_mean: float, prior_mean: float) -> PosteriorPredictive:
    """Stacked mean with the constant residual variance as total variance."""
    mean = model.w_bnn * bnn_mean + model.w_prior * prior_mean + model.intercept
    return PosteriorPredictive(
        mean=float(mean),
        function_variance=0.0,
        noise_variance=model.residual_variance,
    )


def predict_stacker_batch(model: StackingModel, bnn_means, prior_means) -> list[PosteriorPredictive]:
    bnn_means = np.asarray(bnn_means, dtype=float).ravel()
    prior_means = np.asarray(prior_means, dtype=float).ravel()
    if bnn_means.shape != prior_means.shape:
        raise InputError("feature arrays must have equal length")
    return [predict_stacker(model, float(b), float(p)) for b, p in zip(bnn_means, prior_means)]
