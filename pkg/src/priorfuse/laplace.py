"""Last-layer Laplace backend: exact Gaussian posterior over the output layer.

With a Gaussian likelihood the output layer is a Bayesian linear regression on
the last hidden activations, so the Laplace approximation is exact and the
posterior has closed form. The backbone (all layers up to the last hidden one)
stays frozen at its trained weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import InputError, NumericalError
from .gaussian import GaussianPrediction
from .nn import TrainedNetwork, hidden_activations

# jitter ladder applied to the precision diagonal on Cholesky failure
_JITTERS = (0.0, 1e-10, 1e-9, 1e-8)


@dataclass(frozen=True)
class LaplacePosterior:
    """N(mean_last, covariance_last) over last-layer weights (bias included)."""

    backbone: TrainedNetwork
    mean_last: np.ndarray
    covariance_last: np.ndarray
    prior_precision: float
    noise_variance: float

    def design_matrix(self, X: np.ndarray) -> np.ndarray:
        """Last-hidden activations with a trailing bias column."""
        phi = hidden_activations(self.backbone.architecture, self.backbone.weights, X)
        return np.hstack([phi, np.ones((phi.shape[0], 1))])

    def moment_arrays(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        phi = self.design_matrix(X)
        if phi.shape[1] != self.mean_last.shape[0]:
            raise InputError("design width does not match posterior dimension")
        mean = phi @ self.mean_last
        # quadratic form phi^T Sigma phi per row; clip rounding noise
        var = np.maximum(np.einsum("ij,jk,ik->i", phi, self.covariance_last, phi), 0.0)
        return mean, var

    def predict_moments(self, X: np.ndarray) -> list[GaussianPrediction]:
        means, variances = self.moment_arrays(X)
        return [GaussianPrediction(float(m), float(v)) for m, v in zip(means, variances)]


def _posterior_from_design(
    phi: np.ndarray, y: np.ndarray, noise_variance: float, prior_precision: float
) -> tuple[np.ndarray, np.ndarray]:
    """Conjugate Gaussian posterior (mean, covariance) for a linear-Gaussian layer."""
    d = phi.shape[1]
    precision = phi.T @ phi / noise_variance + prior_precision * np.eye(d)
    chol = None
    for jitter in _JITTERS:
        try:
            chol = np.linalg.cholesky(precision + jitter * np.eye(d))
            break
        except np.linalg.LinAlgError:
            continue
    if chol is None:
        raise NumericalError("last-layer precision matrix is not positive definite")
    inv_chol = solve_triangular(chol, np.eye(d), lower=True)
    covariance = inv_chol.T @ inv_chol
    mean = covariance @ (phi.T @ y) / noise_variance
    return mean, covariance


def fit_last_layer_laplace(
    network: TrainedNetwork,
    train_set: tuple[np.ndarray, np.ndarray],
    noise_variance: float,
    prior_precision: float,
) -> LaplacePosterior:
    """Exact conjugate refit of the output layer on the frozen backbone."""
    if noise_variance <= 0:
        raise InputError(f"noise_variance must be > 0, got {noise_variance}")
    if prior_precision <= 0:
        raise InputError(f"prior_precision must be > 0, got {prior_precision}")
    X, y = train_set
    y = np.asarray(y, dtype=float).ravel()
    phi = hidden_activations(network.architecture, network.weights, np.asarray(X, dtype=float))
    phi = np.hstack([phi, np.ones((phi.shape[0], 1))])
    if phi.shape[0] != y.shape[0]:
        raise InputError("feature and label counts differ")
    mean, covariance = _posterior_from_design(phi, y, noise_variance, prior_precision)
    return LaplacePosterior(
        backbone=network,
        mean_last=mean,
        covariance_last=covariance,
        prior_precision=float(prior_precision),
        noise_variance=float(noise_variance),
    )


def predict_moments(laplace: LaplacePosterior, X: np.ndarray) -> list[GaussianPrediction]:
    """Module-level alias of :meth:`LaplacePosterior.predict_moments`."""
    return laplace.predict_moments(X)


def fit_prior_precision(
    network: TrainedNetwork,
    train_set: tuple[np.ndarray, np.ndarray],
    val_set: tuple[np.ndarray, np.ndarray],
    noise_variance: float,
    grid: np.ndarray,
) -> tuple[LaplacePosterior, float, list[tuple[float, float]]]:
    """Pick the prior precision maximizing validation predictive log-likelihood.

    Returns the winning posterior, its objective, and a (precision, objective)
    report covering every grid point. Ties keep the first (smallest) precision.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise InputError("prior_precision grid must be non-empty")
    X_va, y_va = val_set
    y_va = np.asarray(y_va, dtype=float).ravel()
    best: tuple[float, LaplacePosterior] | None = None
    report: list[tuple[float, float]] = []
    for precision in np.sort(grid):
        posterior = fit_last_layer_laplace(network, train_set, noise_variance, precision)
        mean, var = posterior.moment_arrays(X_va)
        total = var + noise_variance
        ll = float(np.mean(-0.5 * (np.log(2.0 * np.pi * total) + (y_va - mean) ** 2 / total)))
        report.append((float(precision), ll))
        if best is None or ll > best[0]:
            best = (ll, posterior)
    return best[1], best[0], report
