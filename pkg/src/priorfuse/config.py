"""Experiment configuration: YAML schema, validation, and defaults.

One YAML file describes an experiment end to end: dataset + column roles,
split protocol, architecture (fixed or searched), optimizer settings, backend
choice, prior family, and plotting range. ``compare`` adds a method list run
on shared splits. Validation errors name the offending field path.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any

import yaml

from .data import CsvSchema
from .errors import ConfigError, InputError
from .nn import TrainingConfig

DATASET_KINDS = ("csv", "synthetic_1d")
SPLIT_MODES = ("synthetic", "hamming_radius", "fraction")
BACKEND_KINDS = ("nn", "ensemble", "laplace")
PRIOR_KINDS = ("none", "constant", "binary_gated", "scaled_score")
ENCODINGS = ("columns", "one_hot")


def _expect(mapping: Any, path: str) -> dict:
    if mapping is None:
        return {}
    if not isinstance(mapping, dict):
        raise ConfigError(f"{path}: expected a mapping")
    return mapping


def _field(mapping: dict, path: str, name: str, typ, default=None, required=False):
    if name not in mapping or mapping[name] is None:
        if required:
            raise ConfigError(f"{path}.{name}: required field missing")
        return default
    value = mapping[name]
    if typ is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, typ):
        raise ConfigError(f"{path}.{name}: expected {typ.__name__}, got {type(value).__name__}")
    return value


def _choice(mapping, path, name, options, default=None, required=False):
    value = _field(mapping, path, name, str, default=default, required=required)
    if value is not None and value not in options:
        raise ConfigError(f"{path}.{name}: must be one of {options}, got {value!r}")
    return value


def _float_list(mapping, path, name, default=None):
    value = mapping.get(name)
    if value is None:
        return default
    if not isinstance(value, (list, tuple)) or not all(isinstance(v, (int, float)) for v in value):
        raise ConfigError(f"{path}.{name}: expected a list of numbers")
    return [float(v) for v in value]


@dataclass(frozen=True)
class DatasetConfig:
    kind: str = "synthetic_1d"
    path: str | None = None
    schema: CsvSchema = CsvSchema()
    encoding: str = "columns"
    n: int = 1000
    x_range: tuple[float, float] = (-2.0, 2.0)
    noise_sd: float = 0.05


@dataclass(frozen=True)
class SplitConfig:
    mode: str = "synthetic"
    wildtype_id: str | None = None
    radius: int = 2
    n_sample: int = 3000
    train_fraction: float = 0.8
    balance_threshold: float | None = None
    val_fraction_of_train: float = 0.2


@dataclass(frozen=True)
class ArchitectureSearchConfig:
    depths: tuple[int, ...] = (1, 2)
    widths: tuple[int, ...] = (100, 200, 300)
    weight_decays: tuple[float, ...] = (0.01, 0.0001, 0.000001)
    n_folds: int = 3


@dataclass(frozen=True)
class ArchitectureConfig:
    hidden_dims: tuple[int, ...] = (50,)
    search: ArchitectureSearchConfig | None = None


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "ensemble"
    ensemble_size: int = 5
    prior_precision_grid: tuple[float, ...] | None = None


@dataclass(frozen=True)
class PriorConfig:
    kind: str = "none"
    mean: float = 0.0
    # None -> grid search; "empirical" -> variance of train+val labels; number -> fixed
    variance: float | str | None = None
    score_column: str | None = None
    fitness_threshold: float = 0.5
    variance_grid: tuple[float, ...] | None = None


@dataclass(frozen=True)
class PlotConfig:
    x_range: tuple[float, float] = (-6.0, 6.0)
    n_grid: int = 601


@dataclass(frozen=True)
class MethodSpec:
    name: str
    backend: BackendConfig
    prior: PriorConfig
    # fit the linear stacker of backend mean and prior mean instead of fusing
    stacking: bool = False


@dataclass(frozen=True)
class CompareConfig:
    n_splits: int = 10
    methods: tuple[MethodSpec, ...] = ()


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    dataset: DatasetConfig = DatasetConfig()
    split: SplitConfig = SplitConfig()
    architecture: ArchitectureConfig = ArchitectureConfig()
    training: TrainingConfig = TrainingConfig()
    backend: BackendConfig = BackendConfig()
    prior: PriorConfig = PriorConfig()
    plot: PlotConfig = PlotConfig()
    compare: CompareConfig | None = None

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed, training=replace(self.training, seed=seed))

    def with_method(self, method: MethodSpec) -> "ExperimentConfig":
        return replace(self, backend=method.backend, prior=method.prior)


def _parse_dataset(raw, path="dataset") -> DatasetConfig:
    raw = _expect(raw, path)
    kind = _choice(raw, path, "kind", DATASET_KINDS, default="synthetic_1d")
    encoding = _choice(raw, path, "encoding", ENCODINGS, default="columns")
    schema = CsvSchema(
        id_column=_field(raw, path, "id_column", str, default="id"),
        label_column=_field(raw, path, "label_column", str, default="label"),
        feature_columns=tuple(raw.get("feature_columns") or ()),
        sequence_column=_field(raw, path, "sequence_column", str),
        alphabet=_field(raw, path, "alphabet", str),
        aux_columns=tuple(raw.get("aux_columns") or ()),
        group_column=_field(raw, path, "group_column", str),
    )
    csv_path = _field(raw, path, "path", str)
    if kind == "csv" and csv_path is None:
        raise ConfigError(f"{path}.path: required for csv datasets")
    if encoding == "one_hot" and kind == "csv" and schema.sequence_column is None:
        raise ConfigError(f"{path}.sequence_column: required for one_hot encoding")
    x_range = _float_list(raw, path, "x_range", default=[-2.0, 2.0])
    if len(x_range) != 2:
        raise ConfigError(f"{path}.x_range: expected [low, high]")
    return DatasetConfig(
        kind=kind,
        path=csv_path,
        schema=schema,
        encoding=encoding,
        n=_field(raw, path, "n", int, default=1000),
        x_range=(x_range[0], x_range[1]),
        noise_sd=_field(raw, path, "noise_sd", float, default=0.05),
    )


def _parse_split(raw, path="split") -> SplitConfig:
    raw = _expect(raw, path)
    return SplitConfig(
        mode=_choice(raw, path, "mode", SPLIT_MODES, default="synthetic"),
        wildtype_id=_field(raw, path, "wildtype_id", str),
        radius=_field(raw, path, "radius", int, default=2),
        n_sample=_field(raw, path, "n_sample", int, default=3000),
        train_fraction=_field(raw, path, "train_fraction", float, default=0.8),
        balance_threshold=_field(raw, path, "balance_threshold", float),
        val_fraction_of_train=_field(raw, path, "val_fraction_of_train", float, default=0.2),
    )


def _parse_architecture(raw, path="architecture") -> ArchitectureConfig:
    raw = _expect(raw, path)
    search_raw = raw.get("search")
    search = None
    if search_raw is not None:
        search_raw = _expect(search_raw, f"{path}.search")
        search = ArchitectureSearchConfig(
            depths=tuple(search_raw.get("depths") or (1, 2)),
            widths=tuple(search_raw.get("widths") or (100, 200, 300)),
            weight_decays=tuple(
                _float_list(search_raw, f"{path}.search", "weight_decays",
                            default=[0.01, 0.0001, 0.000001])
            ),
            n_folds=_field(search_raw, f"{path}.search", "n_folds", int, default=3),
        )
    hidden = raw.get("hidden_dims")
    if hidden is not None and (
        not isinstance(hidden, list) or not all(isinstance(h, int) and h > 0 for h in hidden)
    ):
        raise ConfigError(f"{path}.hidden_dims: expected a list of positive integers")
    return ArchitectureConfig(
        hidden_dims=tuple(hidden) if hidden else (50,),
        search=search,
    )


def _parse_training(raw, seed, path="training") -> TrainingConfig:
    raw = _expect(raw, path)
    try:
        return TrainingConfig(
            learning_rate=_field(raw, path, "learning_rate", float, default=1e-3),
            weight_decay=_field(raw, path, "weight_decay", float, default=1e-4),
            batch_size=_field(raw, path, "batch_size", int, default=32),
            max_epochs=_field(raw, path, "max_epochs", int, default=500),
            patience=_field(raw, path, "patience", int, default=20),
            seed=seed,
            decoupled_weight_decay=_field(
                raw, path, "decoupled_weight_decay", bool, default=False
            ),
        )
    except InputError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_backend(raw, path="backend") -> BackendConfig:
    raw = _expect(raw, path)
    grid = _float_list(raw, path, "prior_precision_grid")
    size = _field(raw, path, "ensemble_size", int, default=5)
    if size < 2:
        raise ConfigError(f"{path}.ensemble_size: must be >= 2")
    return BackendConfig(
        kind=_choice(raw, path, "kind", BACKEND_KINDS, default="ensemble"),
        ensemble_size=size,
        prior_precision_grid=tuple(grid) if grid else None,
    )


def _parse_prior(raw, path="prior") -> PriorConfig:
    raw = _expect(raw, path)
    kind = _choice(raw, path, "kind", PRIOR_KINDS, default="none")
    variance = raw.get("variance")
    if variance is not None and not isinstance(variance, (int, float)) and variance != "empirical":
        raise ConfigError(f"{path}.variance: expected a number, 'empirical', or null")
    if isinstance(variance, (int, float)):
        variance = float(variance)
        if variance <= 0:
            raise ConfigError(f"{path}.variance: must be > 0")
    score_column = _field(raw, path, "score_column", str)
    if kind in ("binary_gated", "scaled_score") and score_column is None:
        raise ConfigError(f"{path}.score_column: required for {kind} priors")
    grid = _float_list(raw, path, "variance_grid")
    return PriorConfig(
        kind=kind,
        mean=_field(raw, path, "mean", float, default=0.0),
        variance=variance,
        score_column=score_column,
        fitness_threshold=_field(raw, path, "fitness_threshold", float, default=0.5),
        variance_grid=tuple(grid) if grid else None,
    )


def _parse_plot(raw, path="plot") -> PlotConfig:
    raw = _expect(raw, path)
    x_range = _float_list(raw, path, "x_range", default=[-6.0, 6.0])
    if len(x_range) != 2 or not x_range[0] < x_range[1]:
        raise ConfigError(f"{path}.x_range: expected [low, high] with low < high")
    return PlotConfig(
        x_range=(x_range[0], x_range[1]),
        n_grid=_field(raw, path, "n_grid", int, default=601),
    )


def _parse_compare(raw, path="compare") -> CompareConfig | None:
    if raw is None:
        return None
    raw = _expect(raw, path)
    methods_raw = raw.get("methods")
    if not methods_raw:
        raise ConfigError(f"{path}.methods: at least two methods required")
    methods = []
    for i, m in enumerate(methods_raw):
        m = _expect(m, f"{path}.methods[{i}]")
        name = _field(m, f"{path}.methods[{i}]", "name", str, required=True)
        methods.append(
            MethodSpec(
                name=name,
                backend=_parse_backend(m.get("backend"), f"{path}.methods[{i}].backend"),
                prior=_parse_prior(m.get("prior"), f"{path}.methods[{i}].prior"),
                stacking=_field(m, f"{path}.methods[{i}]", "stacking", bool, default=False),
            )
        )
    if len(methods) < 2:
        raise ConfigError(f"{path}.methods: at least two methods required")
    if len({m.name for m in methods}) != len(methods):
        raise ConfigError(f"{path}.methods: method names must be unique")
    return CompareConfig(
        n_splits=_field(raw, path, "n_splits", int, default=10),
        methods=tuple(methods),
    )


def parse_config(raw: dict) -> ExperimentConfig:
    """Build a validated ExperimentConfig from a parsed YAML mapping."""
    raw = _expect(raw, "config")
    seed = _field(raw, "config", "seed", int, default=0)
    if seed < 0:
        raise ConfigError("config.seed: must be >= 0")
    config = ExperimentConfig(
        seed=seed,
        dataset=_parse_dataset(raw.get("dataset")),
        split=_parse_split(raw.get("split")),
        architecture=_parse_architecture(raw.get("architecture")),
        training=_parse_training(raw.get("training"), seed),
        backend=_parse_backend(raw.get("backend")),
        prior=_parse_prior(raw.get("prior")),
        plot=_parse_plot(raw.get("plot")),
        compare=_parse_compare(raw.get("compare")),
    )
    _cross_validate(config)
    return config


def _cross_validate(config: ExperimentConfig):
    if config.split.mode == "hamming_radius":
        if config.dataset.kind != "csv":
            raise ConfigError("split.mode: hamming_radius requires a csv dataset")
        if config.split.wildtype_id is None:
            raise ConfigError("split.wildtype_id: required for hamming_radius splits")
        if config.dataset.schema.sequence_column is None:
            raise ConfigError("dataset.sequence_column: required for hamming_radius splits")
    if config.split.mode == "synthetic" and config.dataset.kind != "synthetic_1d":
        raise ConfigError("split.mode: synthetic only applies to synthetic_1d datasets")
    if config.prior.kind in ("binary_gated", "scaled_score"):
        col = config.prior.score_column
        if config.dataset.kind == "csv" and col not in config.dataset.schema.aux_columns:
            raise ConfigError(f"prior.score_column: {col!r} not among dataset.aux_columns")


def load_config(path) -> ExperimentConfig:
    """Load and validate a YAML experiment configuration file."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = yaml.safe_load(handle)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return parse_config(raw or {})
