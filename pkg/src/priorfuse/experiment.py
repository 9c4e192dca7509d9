"""Experiment orchestration: config -> data -> backend -> fitted prior -> predictions.

This is the composition layer behind the CLI verbs. It owns the order of
operations: materialize and encode the dataset, split it, train the chosen
backend, estimate observation noise from validation predictions, then fit the
prior's free parameters by validation log-likelihood.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig, PriorConfig
from .data import (
    Dataset,
    SplitIndices,
    fraction_split,
    generate_synthetic_1d,
    hamming_radius_split,
    load_csv,
    one_hot_encode,
)
from .ensemble import TrainedEnsemble, train_ensemble
from .errors import ConfigError
from .fusion import estimate_noise_variance, predict_fused
from .gaussian import GaussianPrediction, PosteriorPredictive
from .laplace import LaplacePosterior, fit_prior_precision
from .metrics import mae, mean_log_likelihood, rmse
from .nn import NetworkArchitecture, TrainedNetwork, train
from .priors import (
    BinaryGatedPrior,
    ConstantPrior,
    FunctionValuePrior,
    LinearScaledScorePrior,
    fit_gate_threshold,
    fit_linear_scaling,
    no_information_prior,
)
from .stacking import StackingModel, fit_stacker, predict_stacker_batch
from .tuning import (
    ArchitectureSearchResult,
    CrossValidationSpec,
    PriorSearchResult,
    architecture_grid,
    default_variance_grid,
    grid_search_architecture,
    grid_search_prior,
)

DEFAULT_PRECISION_GRID = tuple(np.geomspace(1e-3, 1e3, 13))


@dataclass(frozen=True)
class PointBackend:
    """Plain network as a zero-variance backend (the non-Bayes baseline)."""

    network: TrainedNetwork

    def moment_arrays(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        means = self.network.predict(X)
        return means, np.zeros_like(means)

    def predict_moments(self, X: np.ndarray) -> list[GaussianPrediction]:
        means, variances = self.moment_arrays(X)
        return [GaussianPrediction(float(m), float(v)) for m, v in zip(means, variances)]


@dataclass(frozen=True)
class MaterializedData:
    dataset: Dataset
    split: SplitIndices
    synthetic: bool

    def xy(self, indices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.dataset.features[indices], self.dataset.labels[indices]

    def aux(self, indices: np.ndarray) -> dict[str, np.ndarray]:
        return {k: v[indices] for k, v in self.dataset.aux.items()}


def materialize(config: ExperimentConfig) -> MaterializedData:
    """Load or generate the dataset, encode features, and apply the split."""
    ds_cfg = config.dataset
    if ds_cfg.kind == "synthetic_1d":
        synth = generate_synthetic_1d(
            n=ds_cfg.n, seed=config.seed, x_range=ds_cfg.x_range, noise_sd=ds_cfg.noise_sd
        )
        return MaterializedData(dataset=synth.dataset, split=synth.split, synthetic=True)

    dataset = load_csv(ds_cfg.path, ds_cfg.schema)
    if ds_cfg.encoding == "one_hot":
        if dataset.sequences is None:
            raise ConfigError("dataset.encoding: one_hot requires a sequence column")
        dataset = dataset.with_features(one_hot_encode(dataset.sequences, dataset.alphabet))
    split_cfg = config.split
    if split_cfg.mode == "hamming_radius":
        split = hamming_radius_split(
            dataset,
            wildtype_id=split_cfg.wildtype_id,
            radius=split_cfg.radius,
            n_sample=split_cfg.n_sample,
            train_fraction=split_cfg.train_fraction,
            seed=config.seed,
            balance_threshold=split_cfg.balance_threshold,
        )
    elif split_cfg.mode == "fraction":
        split = fraction_split(
            dataset,
            train_fraction=split_cfg.train_fraction,
            val_fraction_of_train=split_cfg.val_fraction_of_train,
            seed=config.seed,
            by_group=dataset.groups is not None,
        )
    else:
        raise ConfigError(f"split.mode: {split_cfg.mode} not valid for csv datasets")
    return MaterializedData(dataset=dataset, split=split, synthetic=False)


@dataclass(frozen=True)
class FittedModel:
    """Everything needed to predict: backend, fitted prior, noise estimate."""

    backend_kind: str
    backend: PointBackend | TrainedEnsemble | LaplacePosterior
    prior: FunctionValuePrior
    noise_variance: float
    architecture: NetworkArchitecture
    weight_decay: float
    prior_config: PriorConfig | None = None
    prior_search: PriorSearchResult | None = None
    architecture_search: ArchitectureSearchResult | None = None
    precision_report: tuple[tuple[float, float], ...] | None = None

    def predict(self, X: np.ndarray, aux: dict[str, np.ndarray] | None = None) -> list[PosteriorPredictive]:
        return predict_fused(self.backend, self.prior, self.noise_variance, X, aux)


def _resolve_architecture(config: ExperimentConfig, data: MaterializedData):
    input_dim = data.dataset.features.shape[1]
    search_cfg = config.architecture.search
    if search_cfg is None:
        arch = NetworkArchitecture(input_dim, config.architecture.hidden_dims)
        return arch, config.training.weight_decay, None
    trainval = np.concatenate([data.split.train, data.split.val])
    X, y = data.xy(trainval)
    result = grid_search_architecture(
        architecture_grid(input_dim, search_cfg.depths, search_cfg.widths),
        search_cfg.weight_decays,
        CrossValidationSpec(search_cfg.n_folds, seed=config.seed),
        X,
        y,
        config.training,
    )
    return result.architecture, result.weight_decay, result


def _train_backend(config, arch, weight_decay, train_xy, val_xy):
    from dataclasses import replace

    training = replace(config.training, weight_decay=weight_decay)
    kind = config.backend.kind
    if kind == "nn":
        network = train(arch, training, train_xy, val_xy)
        backend = PointBackend(network)
        noise = estimate_noise_variance(backend.moment_arrays(val_xy[0])[0], val_xy[1])
        return backend, noise, None
    if kind == "ensemble":
        ens = train_ensemble(arch, training, train_xy, val_xy, n_members=config.backend.ensemble_size)
        noise = estimate_noise_variance(ens.moment_arrays(val_xy[0])[0], val_xy[1])
        return ens, noise, None
    if kind == "laplace":
        backbone = train(arch, training, train_xy, val_xy)
        # noise estimated from the MAP backbone, then reused inside the posterior
        noise = estimate_noise_variance(backbone.predict(val_xy[0]), val_xy[1])
        noise = max(noise, 1e-12)
        grid = config.backend.prior_precision_grid or DEFAULT_PRECISION_GRID
        posterior, _, report = fit_prior_precision(backbone, train_xy, val_xy, noise, np.asarray(grid))
        return posterior, noise, tuple(report)
    raise ConfigError(f"backend.kind: unknown backend {kind!r}")


def _fit_prior(
    config: ExperimentConfig,
    data: MaterializedData,
    backend,
    noise_variance: float,
) -> tuple[FunctionValuePrior, PriorSearchResult | None]:
    prior_cfg = config.prior
    if prior_cfg.kind == "none":
        return no_information_prior(), None

    trainval = np.concatenate([data.split.train, data.split.val])
    labels_trainval = data.dataset.labels[trainval]
    X_val, y_val = data.xy(data.split.val)
    aux_val = data.aux(data.split.val)
    bnn_means, bnn_vars = backend.moment_arrays(X_val)
    bnn_val = [GaussianPrediction(float(m), float(v)) for m, v in zip(bnn_means, bnn_vars)]

    label_variance = float(np.var(labels_trainval))
    if prior_cfg.variance_grid is not None:
        grid = list(prior_cfg.variance_grid)
    else:
        grid = list(default_variance_grid(max(label_variance, 1e-12)))

    def fixed_variance() -> float | None:
        if prior_cfg.variance == "empirical":
            return label_variance
        if isinstance(prior_cfg.variance, float):
            return prior_cfg.variance
        return None

    if prior_cfg.kind == "constant":
        fixed = fixed_variance()
        if fixed is not None:
            return ConstantPrior(prior_cfg.mean, fixed), None
        factory = lambda variance: ConstantPrior(prior_cfg.mean, variance)
        result = grid_search_prior(
            factory, {"variance": grid}, bnn_val, y_val, noise_variance,
            val_features=X_val, val_aux=aux_val,
        )
        return result.prior, result

    if prior_cfg.kind == "scaled_score":
        scores_trainval = data.dataset.aux[prior_cfg.score_column][trainval]
        slope, intercept = fit_linear_scaling(scores_trainval, labels_trainval)
        fixed = fixed_variance()
        if fixed is not None:
            return LinearScaledScorePrior(prior_cfg.score_column, slope, intercept, fixed), None
        factory = lambda variance: LinearScaledScorePrior(
            prior_cfg.score_column, slope, intercept, variance
        )
        result = grid_search_prior(
            factory, {"variance": grid}, bnn_val, y_val, noise_variance,
            val_features=X_val, val_aux=aux_val,
        )
        return result.prior, result

    if prior_cfg.kind == "binary_gated":
        scores_trainval = data.dataset.aux[prior_cfg.score_column][trainval]
        fit_flags = labels_trainval > prior_cfg.fitness_threshold
        threshold, _ = fit_gate_threshold(scores_trainval, fit_flags)
        factory = lambda variance_below, variance_above: BinaryGatedPrior(
            prior_cfg.score_column, threshold, variance_below, variance_above, mean=prior_cfg.mean
        )
        result = grid_search_prior(
            factory,
            {"variance_below": grid, "variance_above": grid},
            bnn_val, y_val, noise_variance,
            val_features=X_val, val_aux=aux_val,
        )
        return result.prior, result

    raise ConfigError(f"prior.kind: unknown prior {prior_cfg.kind!r}")


def run_training(config: ExperimentConfig, data: MaterializedData | None = None) -> FittedModel:
    """Full training pipeline for one configuration on one split."""
    if data is None:
        data = materialize(config)
    arch, weight_decay, arch_search = _resolve_architecture(config, data)
    train_xy = data.xy(data.split.train)
    val_xy = data.xy(data.split.val)
    backend, noise_variance, precision_report = _train_backend(
        config, arch, weight_decay, train_xy, val_xy
    )
    prior, prior_search = _fit_prior(config, data, backend, noise_variance)
    return FittedModel(
        backend_kind=config.backend.kind,
        backend=backend,
        prior=prior,
        noise_variance=noise_variance,
        architecture=arch,
        weight_decay=weight_decay,
        prior_config=config.prior,
        prior_search=prior_search,
        architecture_search=arch_search,
        precision_report=precision_report,
    )


def evaluate_predictions(preds: list[PosteriorPredictive], labels) -> dict[str, float]:
    return {
        "ll": mean_log_likelihood(preds, labels),
        "rmse": rmse(preds, labels),
        "mae": mae(preds, labels),
    }


@dataclass(frozen=True)
class StackedModel:
    """Stacking baseline bundled with the pieces it combines."""

    backend: PointBackend | TrainedEnsemble | LaplacePosterior
    prior: FunctionValuePrior
    model: StackingModel

    def predict(self, X: np.ndarray, aux=None) -> list[PosteriorPredictive]:
        bnn_means, _ = self.backend.moment_arrays(X)
        prior_means, _ = self.prior.moments(X, aux or {})
        return predict_stacker_batch(self.model, bnn_means, prior_means)


def fit_stacked_model(
    fitted: FittedModel, data: MaterializedData
) -> StackedModel:
    """Fit the two-feature linear stacker on the validation split."""
    X_val, y_val = data.xy(data.split.val)
    aux_val = data.aux(data.split.val)
    bnn_means, _ = fitted.backend.moment_arrays(X_val)
    prior_means, _ = fitted.prior.moments(X_val, aux_val)
    model = fit_stacker(bnn_means, prior_means, y_val)
    return StackedModel(backend=fitted.backend, prior=fitted.prior, model=model)
