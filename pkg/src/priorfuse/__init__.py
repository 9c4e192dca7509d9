"""Probabilistic regression with function-value priors fused into BNN posteriors."""

from .data import (
    CsvSchema,
    Dataset,
    SplitIndices,
    Synthetic1D,
    fraction_split,
    generate_synthetic_1d,
    hamming_radius_split,
    load_csv,
    one_hot_encode,
)
from .ensemble import TrainedEnsemble, train_ensemble
from .errors import (
    ConfigError,
    DataError,
    DegenerateDataError,
    FitError,
    InputError,
    NumericalError,
    PriorFuseError,
    TrainingError,
)
from .fusion import estimate_noise_variance, fuse, fuse_arrays, posterior_predictive, predict_fused
from .gaussian import GaussianPrediction, PosteriorPredictive
from .laplace import LaplacePosterior, fit_last_layer_laplace, fit_prior_precision
from .metrics import mae, mean_log_likelihood, rmse, standard_error, wilcoxon_signed_rank
from .nn import NetworkArchitecture, TrainedNetwork, TrainingConfig, train
from .priors import (
    BinaryGatedPrior,
    ConstantPrior,
    FunctionValuePrior,
    LinearScaledScorePrior,
    evaluate_prior,
    fit_linear_scaling,
    fit_threshold_roc_auc,
    no_information_prior,
    roc_auc,
)
from .stacking import StackingModel, fit_stacker, predict_stacker
from .tuning import (
    CrossValidationSpec,
    default_variance_grid,
    grid_search_architecture,
    grid_search_prior,
)

__version__ = "0.1.0"

__all__ = [
    "BinaryGatedPrior",
    "ConfigError",
    "ConstantPrior",
    "CrossValidationSpec",
    "CsvSchema",
    "DataError",
    "Dataset",
    "DegenerateDataError",
    "FitError",
    "FunctionValuePrior",
    "GaussianPrediction",
    "InputError",
    "LaplacePosterior",
    "LinearScaledScorePrior",
    "NetworkArchitecture",
    "NumericalError",
    "PosteriorPredictive",
    "PriorFuseError",
    "SplitIndices",
    "StackingModel",
    "Synthetic1D",
    "TrainedEnsemble",
    "TrainedNetwork",
    "TrainingConfig",
    "TrainingError",
    "default_variance_grid",
    "estimate_noise_variance",
    "evaluate_prior",
    "fit_last_layer_laplace",
    "fit_linear_scaling",
    "fit_prior_precision",
    "fit_stacker",
    "fit_threshold_roc_auc",
    "fraction_split",
    "fuse",
    "fuse_arrays",
    "generate_synthetic_1d",
    "grid_search_architecture",
    "grid_search_prior",
    "hamming_radius_split",
    "load_csv",
    "mae",
    "mean_log_likelihood",
    "no_information_prior",
    "one_hot_encode",
    "posterior_predictive",
    "predict_fused",
    "predict_stacker",
    "rmse",
    "roc_auc",
    "standard_error",
    "train",
    "train_ensemble",
    "wilcoxon_signed_rank",
]
