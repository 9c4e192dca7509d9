"""Model directory serialization.

Layout written by the train command:

    manifest.json         backend kind, architecture, training, metrics, schema
    prior.json            fitted prior parameters
    network.bin           nn backend weights          (little-endian float64)
    member_00.bin ...     ensemble member weights     (one file per member)
    backbone.bin          laplace backbone weights
    posterior_mean.bin    laplace last-layer mean
    posterior_cov.bin     laplace last-layer covariance (row-major)
    prior_search.csv      grid report (when a search ran)
    precision_search.csv  laplace precision grid report
    arch_search.csv       architecture sweep report (when configured)
    splits.json           train/val/test row indices
    dataset.csv           synthetic datasets only (id, label, x)
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .data import CsvSchema, Dataset, SplitIndices
from .ensemble import TrainedEnsemble
from .errors import DataError
from .experiment import FittedModel, MaterializedData, PointBackend
from .laplace import LaplacePosterior
from .nn import NetworkArchitecture, TrainedNetwork
from .priors import (
    BinaryGatedPrior,
    ConstantPrior,
    FunctionValuePrior,
    LinearScaledScorePrior,
    no_information_prior,
)

MANIFEST_FORMAT = "priorfuse-model-v1"


def _write_weights(path: Path, weights: np.ndarray):
    path.write_bytes(np.ascontiguousarray(weights, dtype="<f8").tobytes())


def _read_weights(path: Path) -> np.ndarray:
    return np.frombuffer(path.read_bytes(), dtype="<f8").copy()


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, header: list[str], rows: list[list]):
    """Deterministic CSV: repr() floats, LF line endings."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def prior_to_dict(prior: FunctionValuePrior) -> dict:
    if isinstance(prior, ConstantPrior):
        if math.isinf(prior.variance):
            return {"kind": "none"}
        return {"kind": "constant", "mean": prior.mean, "variance": prior.variance}
    if isinstance(prior, BinaryGatedPrior):
        return {
            "kind": "binary_gated",
            "score_column": prior.score_column,
            "threshold": prior.threshold,
            "variance_below": prior.variance_below,
            "variance_above": prior.variance_above,
            "mean": prior.mean,
        }
    if isinstance(prior, LinearScaledScorePrior):
        return {
            "kind": "scaled_score",
            "score_column": prior.score_column,
            "slope": prior.slope,
            "intercept": prior.intercept,
            "variance": prior.variance,
        }
    raise DataError(f"cannot serialize prior of type {type(prior).__name__}")


def prior_from_dict(payload: dict) -> FunctionValuePrior:
    kind = payload.get("kind")
    if kind == "none":
        return no_information_prior()
    if kind == "constant":
        return ConstantPrior(payload["mean"], payload["variance"])
    if kind == "binary_gated":
        return BinaryGatedPrior(
            payload["score_column"],
            payload["threshold"],
            payload["variance_below"],
            payload["variance_above"],
            mean=payload.get("mean", 0.0),
        )
    if kind == "scaled_score":
        return LinearScaledScorePrior(
            payload["score_column"],
            payload["slope"],
            payload["intercept"],
            payload["variance"],
        )
    raise DataError(f"unknown prior kind {kind!r} in prior.json")


def _schema_to_dict(schema: CsvSchema) -> dict:
    return {
        "id_column": schema.id_column,
        "label_column": schema.label_column,
        "feature_columns": list(schema.feature_columns),
        "sequence_column": schema.sequence_column,
        "alphabet": schema.alphabet,
        "aux_columns": list(schema.aux_columns),
        "group_column": schema.group_column,
    }


def _schema_from_dict(payload: dict) -> CsvSchema:
    return CsvSchema(
        id_column=payload["id_column"],
        label_column=payload["label_column"],
        feature_columns=tuple(payload["feature_columns"]),
        sequence_column=payload["sequence_column"],
        alphabet=payload["alphabet"],
        aux_columns=tuple(payload["aux_columns"]),
        group_column=payload["group_column"],
    )


def _network_metrics(net: TrainedNetwork) -> dict:
    return {"best_val_loss": net.best_val_loss, "epochs_run": net.epochs_run}


def save_model(
    out_dir,
    model: FittedModel,
    config: ExperimentConfig,
    data: MaterializedData | None = None,
) -> Path:
    """Write the model directory; returns its path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    backend_info: dict = {"kind": model.backend_kind, "noise_variance": model.noise_variance}
    metrics: dict = {}
    backend = model.backend
    if isinstance(backend, PointBackend):
        _write_weights(out / "network.bin", backend.network.weights)
        metrics["network"] = _network_metrics(backend.network)
    elif isinstance(backend, TrainedEnsemble):
        backend_info["ensemble_size"] = backend.n_members
        backend_info["member_seeds"] = list(backend.member_seeds)
        metrics["members"] = []
        for k, member in enumerate(backend.members):
            _write_weights(out / f"member_{k:02d}.bin", member.weights)
            metrics["members"].append(_network_metrics(member))
    elif isinstance(backend, LaplacePosterior):
        backend_info["prior_precision"] = backend.prior_precision
        backend_info["posterior_dim"] = int(backend.mean_last.shape[0])
        _write_weights(out / "backbone.bin", backend.backbone.weights)
        _write_weights(out / "posterior_mean.bin", backend.mean_last)
        _write_weights(out / "posterior_cov.bin", backend.covariance_last.ravel())
        metrics["backbone"] = _network_metrics(backend.backbone)
    else:
        raise DataError(f"cannot serialize backend of type {type(backend).__name__}")

    if model.prior_search is not None:
        metrics["prior_search_objective"] = model.prior_search.best_objective
        names = list(model.prior_search.best_params.keys())
        write_csv(
            out / "prior_search.csv",
            names + ["objective"],
            [[params[n] for n in names] + [obj] for params, obj in model.prior_search.report],
        )
    if model.precision_report is not None:
        write_csv(
            out / "precision_search.csv",
            ["prior_precision", "objective"],
            [[p, obj] for p, obj in model.precision_report],
        )
    if model.architecture_search is not None:
        write_csv(
            out / "arch_search.csv",
            ["hidden_dims", "weight_decay", "mean_val_mse"],
            [
                ["x".join(str(h) for h in arch.hidden_dims), decay, score]
                for arch, decay, score in model.architecture_search.report
            ],
        )

    manifest = {
        "format": MANIFEST_FORMAT,
        "seed": config.seed,
        "backend": backend_info,
        "architecture": {
            "input_dim": model.architecture.input_dim,
            "hidden_dims": list(model.architecture.hidden_dims),
            "activation": model.architecture.activation,
        },
        "training": {
            "learning_rate": config.training.learning_rate,
            "weight_decay": model.weight_decay,
            "batch_size": config.training.batch_size,
            "max_epochs": config.training.max_epochs,
            "patience": config.training.patience,
            "seed": config.training.seed,
            "decoupled_weight_decay": config.training.decoupled_weight_decay,
        },
        "dataset": {
            "kind": config.dataset.kind,
            "encoding": config.dataset.encoding,
            "schema": _schema_to_dict(config.dataset.schema),
            "plot_x_range": list(config.plot.x_range),
            "plot_n_grid": config.plot.n_grid,
        },
        "metrics": metrics,
    }
    _write_json(out / "manifest.json", manifest)
    _write_json(out / "prior.json", prior_to_dict(model.prior))

    if data is not None:
        _write_json(
            out / "splits.json",
            {
                "train": [int(i) for i in data.split.train],
                "val": [int(i) for i in data.split.val],
                "test": [int(i) for i in data.split.test],
            },
        )
        if data.synthetic:
            write_csv(
                out / "dataset.csv",
                ["id", "label", "x"],
                [
                    [data.dataset.ids[i], float(data.dataset.labels[i]), float(data.dataset.features[i, 0])]
                    for i in range(data.dataset.n)
                ],
            )
    return out


def _load_manifest(model_dir: Path) -> dict:
    path = model_dir / "manifest.json"
    if not path.exists():
        raise DataError(f"no manifest.json in {model_dir}")
    manifest = json.loads(path.read_text(encoding="utf-8"))
    if manifest.get("format") != MANIFEST_FORMAT:
        raise DataError(f"unsupported model format {manifest.get('format')!r}")
    return manifest


def load_model(model_dir) -> FittedModel:
    """Reconstruct a FittedModel from a model directory."""
    model_dir = Path(model_dir)
    manifest = _load_manifest(model_dir)
    arch_info = manifest["architecture"]
    arch = NetworkArchitecture(
        arch_info["input_dim"], tuple(arch_info["hidden_dims"]), arch_info["activation"]
    )
    backend_info = manifest["backend"]
    kind = backend_info["kind"]
    noise_variance = backend_info["noise_variance"]
    metrics = manifest.get("metrics", {})

    def _network(weights_file: str, entry: dict) -> TrainedNetwork:
        return TrainedNetwork(
            architecture=arch,
            weights=_read_weights(model_dir / weights_file),
            best_val_loss=entry.get("best_val_loss", float("nan")),
            epochs_run=entry.get("epochs_run", 0),
        )

    if kind == "nn":
        backend = PointBackend(_network("network.bin", metrics.get("network", {})))
    elif kind == "ensemble":
        seeds = tuple(backend_info["member_seeds"])
        member_metrics = metrics.get("members", [{}] * len(seeds))
        members = tuple(
            _network(f"member_{k:02d}.bin", member_metrics[k]) for k in range(len(seeds))
        )
        backend = TrainedEnsemble(members=members, architecture=arch, member_seeds=seeds)
    elif kind == "laplace":
        dim = backend_info["posterior_dim"]
        backend = LaplacePosterior(
            backbone=_network("backbone.bin", metrics.get("backbone", {})),
            mean_last=_read_weights(model_dir / "posterior_mean.bin"),
            covariance_last=_read_weights(model_dir / "posterior_cov.bin").reshape(dim, dim),
            prior_precision=backend_info["prior_precision"],
            noise_variance=noise_variance,
        )
    else:
        raise DataError(f"unknown backend kind {kind!r} in manifest")

    prior = prior_from_dict(json.loads((model_dir / "prior.json").read_text(encoding="utf-8")))
    return FittedModel(
        backend_kind=kind,
        backend=backend,
        prior=prior,
        noise_variance=noise_variance,
        architecture=arch,
        weight_decay=manifest["training"]["weight_decay"],
    )


def load_manifest(model_dir) -> dict:
    return _load_manifest(Path(model_dir))


def load_splits(model_dir) -> SplitIndices:
    payload = json.loads((Path(model_dir) / "splits.json").read_text(encoding="utf-8"))
    return SplitIndices(
        train=np.asarray(payload["train"], dtype=int),
        val=np.asarray(payload["val"], dtype=int),
        test=np.asarray(payload["test"], dtype=int),
    )


def load_saved_dataset(model_dir) -> Dataset:
    """Synthetic dataset written next to the model (id, label, x columns)."""
    path = Path(model_dir) / "dataset.csv"
    if not path.exists():
        raise DataError(f"no dataset.csv in {model_dir}")
    from .data import load_csv

    return load_csv(path, CsvSchema(feature_columns=("x",)))
