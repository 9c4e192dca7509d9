"""Hyperparameter selection by exhaustive grid search.

Two searches: prior strength parameters chosen to maximize the validation
log-likelihood of the fused predictive (an empirical-Bayes criterion), and the
architecture/weight-decay cross-validation sweep. Both evaluate every grid
cell, record a full report, and break ties by fixed deterministic rules.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConfigError
from .fusion import fuse_arrays
from .gaussian import GaussianPrediction
from .metrics import gaussian_log_likelihood
from .nn import NetworkArchitecture, TrainingConfig, train
from .priors import FunctionValuePrior


def default_variance_grid(label_variance: float, n_points: int = 13) -> np.ndarray:
    """Log-spaced variance grid spanning 1e-3..1e3 times the label variance."""
    if label_variance <= 0:
        raise ConfigError("label variance must be positive to build a variance grid")
    return np.geomspace(1e-3 * label_variance, 1e3 * label_variance, n_points)


@dataclass(frozen=True)
class PriorSearchResult:
    prior: FunctionValuePrior
    best_params: dict[str, float]
    best_objective: float
    report: tuple[tuple[dict[str, float], float], ...]


def grid_search_prior(
    prior_factory: Callable[..., FunctionValuePrior],
    grids: Mapping[str, Sequence[float]],
    bnn_val: Sequence[GaussianPrediction],
    val_labels,
    noise_variance: float,
    val_features: np.ndarray | None = None,
    val_aux: Mapping[str, np.ndarray] | None = None,
) -> PriorSearchResult:
    """Exhaustive Cartesian search maximizing validation predictive log-likelihood.

    ``prior_factory(**params)`` builds a candidate prior from one grid cell.
    The objective is the mean log-density of ``val_labels`` under the fused
    predictive (fused variance + ``noise_variance``). Ties go to the largest
    parameter values, i.e. the weakest prior.
    """
    if not grids or any(len(g) == 0 for g in grids.values()):
        raise ConfigError("each searched parameter needs a non-empty grid")
    val_labels = np.asarray(val_labels, dtype=float).ravel()
    bnn_means = np.array([p.mean for p in bnn_val])
    bnn_vars = np.array([p.variance for p in bnn_val])
    if bnn_means.size != val_labels.size:
        raise ConfigError("validation predictions and labels differ in length")
    val_aux = val_aux or {}
    if val_features is None:
        val_features = np.zeros((val_labels.size, 0))  # lets point-free priors infer n

    names = list(grids.keys())
    sorted_grids = [np.sort(np.asarray(grids[name], dtype=float)) for name in names]
    best: tuple[float, tuple[float, ...], FunctionValuePrior] | None = None
    report: list[tuple[dict[str, float], float]] = []
    for values in itertools.product(*sorted_grids):
        params = dict(zip(names, (float(v) for v in values)))
        prior = prior_factory(**params)
        prior_means, prior_vars = prior.moments(val_features, val_aux)
        means, variances = fuse_arrays(bnn_means, bnn_vars, prior_means, prior_vars)
        objective = float(
            np.mean(gaussian_log_likelihood(val_labels, means, variances + noise_variance))
        )
        report.append((params, objective))
        key = (objective, tuple(values))
        if best is None or key > (best[0], best[1]):
            best = (objective, tuple(values), prior)

    return PriorSearchResult(
        prior=best[2],
        best_params=dict(zip(names, best[1])),
        best_objective=best[0],
        report=tuple(report),
    )


@dataclass(frozen=True)
class CrossValidationSpec:
    n_folds: int
    seed: int = 0

    def fold_indices(self, n: int) -> list[np.ndarray]:
        if not 2 <= self.n_folds <= n:
            raise ConfigError(f"cannot make {self.n_folds} folds from {n} rows")
        perm = np.random.default_rng(self.seed).permutation(n)
        return [np.sort(chunk) for chunk in np.array_split(perm, self.n_folds)]


@dataclass(frozen=True)
class ArchitectureSearchResult:
    architecture: NetworkArchitecture
    weight_decay: float
    best_objective: float
    report: tuple[tuple[NetworkArchitecture, float, float], ...]


def _parameter_count(arch: NetworkArchitecture) -> int:
    dims = arch.layer_dims
    return sum((dims[i] + 1) * dims[i + 1] for i in range(len(dims) - 1))


def architecture_grid(
    input_dim: int,
    depths: Sequence[int] = (1, 2),
    widths: Sequence[int] = (100, 200, 300),
) -> list[NetworkArchitecture]:
    """Uniform-width candidates: every (depth, width) combination."""
    return [
        NetworkArchitecture(input_dim, (width,) * depth)
        for depth in depths
        for width in widths
    ]


def grid_search_architecture(
    candidates: Sequence[NetworkArchitecture],
    weight_decays: Sequence[float],
    folds: CrossValidationSpec,
    X: np.ndarray,
    y: np.ndarray,
    training: TrainingConfig,
) -> ArchitectureSearchResult:
    """Cross-validated MSE sweep over (architecture, weight_decay) pairs.

    Each cell trains on the complement of a fold with that fold as the early
    stopping validation set and scores its best validation MSE; cells are
    ranked by the mean across folds. Ties prefer fewer parameters, then
    larger decay.
    """
    if len(candidates) == 0 or len(weight_decays) == 0:
        raise ConfigError("need at least one architecture and one weight decay")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    fold_sets = folds.fold_indices(y.size)
    all_idx = np.arange(y.size)

    best: tuple[float, int, float, NetworkArchitecture] | None = None
    report: list[tuple[NetworkArchitecture, float, float]] = []
    for arch in candidates:
        for decay in weight_decays:
            config = TrainingConfig(
                learning_rate=training.learning_rate,
                weight_decay=float(decay),
                batch_size=training.batch_size,
                max_epochs=training.max_epochs,
                patience=training.patience,
                seed=training.seed,
                decoupled_weight_decay=training.decoupled_weight_decay,
            )
            scores = []
            for fold in fold_sets:
                rest = np.setdiff1d(all_idx, fold)
                net = train(arch, config, (X[rest], y[rest]), (X[fold], y[fold]))
                scores.append(net.best_val_loss)
            mean_mse = float(np.mean(scores))
            report.append((arch, float(decay), mean_mse))
            # minimize mse; ties -> fewer parameters, then larger decay
            key = (mean_mse, _parameter_count(arch), -float(decay))
            if best is None or key < (best[0], best[1], best[2]):
                best = (mean_mse, _parameter_count(arch), -float(decay), arch)

    return ArchitectureSearchResult(
        architecture=best[3],
        weight_decay=-best[2],
        best_objective=best[0],
        report=tuple(report),
    )
