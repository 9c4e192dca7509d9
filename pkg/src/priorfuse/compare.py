"""Multi-method comparison on shared seeded splits, with signed-rank significance.

Every method in the comparison trains and evaluates on the same sequence of
splits (split s uses seed base_seed + s), so per-split metrics are paired and
the one-sided signed-rank test applies. Per-method failures on a split are
recorded and skipped, never fatal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import CompareConfig, ExperimentConfig, MethodSpec
from .errors import ConfigError, DegenerateDataError, InputError, PriorFuseError
from .experiment import evaluate_predictions, fit_stacked_model, materialize, run_training
from .metrics import standard_error, wilcoxon_signed_rank

METRIC_NAMES = ("ll", "rmse", "mae")
# larger is better only for log-likelihood
_HIGHER_IS_BETTER = {"ll": True, "rmse": False, "mae": False}


@dataclass(frozen=True)
class SplitRecord:
    method: str
    split: int
    seed: int
    metrics: dict[str, float]
    # (id, label, mean, function_variance, total_variance) per test point, so
    # every table is recomputable from the emitted per-split prediction files
    predictions: tuple[tuple[str, float, float, float, float], ...] = ()


@dataclass(frozen=True)
class ComparisonResult:
    records: tuple[SplitRecord, ...]
    failures: tuple[tuple[str, int, str], ...]  # (method, split, message)

    def metric_values(self, method: str, metric: str) -> dict[int, float]:
        return {r.split: r.metrics[metric] for r in self.records if r.method == method}

    def methods(self) -> list[str]:
        seen: dict[str, None] = {}
        for r in self.records:
            seen.setdefault(r.method, None)
        return list(seen)

    def summary_rows(self) -> list[list]:
        rows = []
        for method in self.methods():
            row: list = [method]
            for metric in METRIC_NAMES:
                values = list(self.metric_values(method, metric).values())
                row.append(float(np.mean(values)))
                row.append(standard_error(values) if len(values) >= 2 else 0.0)
            row.append(len(self.metric_values(method, METRIC_NAMES[0])))
            rows.append(row)
        return rows

    def significance_rows(self) -> list[list]:
        """One-sided p-values that `reference` improves upon `other`, per metric."""
        rows = []
        for reference in self.methods():
            for other in self.methods():
                row: list = [reference, other]
                flags = []
                for metric in METRIC_NAMES:
                    ref_vals = self.metric_values(reference, metric)
                    oth_vals = self.metric_values(other, metric)
                    common = sorted(set(ref_vals) & set(oth_vals))
                    a = np.array([ref_vals[s] for s in common])
                    b = np.array([oth_vals[s] for s in common])
                    if not _HIGHER_IS_BETTER[metric]:
                        a, b = -a, -b  # improvement means smaller error
                    try:
                        p = wilcoxon_signed_rank(a, b)
                        flag = ""
                    except DegenerateDataError:
                        p, flag = 1.0, "degenerate"
                    except InputError:
                        p, flag = 1.0, "insufficient-pairs"
                    row.append(p)
                    flags.append(flag)
                row.append(";".join(f for f in flags if f) or "")
                rows.append(row)
        return rows


SUMMARY_HEADER = [
    "method",
    "ll_mean", "ll_se",
    "rmse_mean", "rmse_se",
    "mae_mean", "mae_se",
    "n_splits",
]
SPLIT_HEADER = ["method", "split", "seed", "ll", "rmse", "mae"]
SIGNIFICANCE_HEADER = ["reference", "other", "p_ll", "p_rmse", "p_mae", "flag"]


def _prediction_rows(data, preds):
    test_ids = [data.dataset.ids[i] for i in data.split.test]
    labels = data.dataset.labels[data.split.test]
    return tuple(
        (test_ids[i], float(labels[i]), p.mean, p.function_variance, p.total_variance)
        for i, p in enumerate(preds)
    )


def _run_method_on_split(base: ExperimentConfig, method: MethodSpec, seed: int):
    config = base.with_method(method).with_seed(seed)
    data = materialize(config)
    if data.split.test.size == 0:
        raise ConfigError("comparison requires a non-empty test partition")
    fitted = run_training(config, data)
    X_test, y_test = data.xy(data.split.test)
    aux_test = data.aux(data.split.test)
    preds = fitted.predict(X_test, aux_test)
    return evaluate_predictions(preds, y_test), _prediction_rows(data, preds)


def _run_stacking_on_split(base: ExperimentConfig, method: MethodSpec, seed: int):
    config = base.with_method(method).with_seed(seed)
    data = materialize(config)
    fitted = run_training(config, data)
    stacked = fit_stacked_model(fitted, data)
    X_test, y_test = data.xy(data.split.test)
    aux_test = data.aux(data.split.test)
    preds = stacked.predict(X_test, aux_test)
    return evaluate_predictions(preds, y_test), _prediction_rows(data, preds)


def run_comparison(base: ExperimentConfig, compare: CompareConfig | None = None) -> ComparisonResult:
    compare = compare or base.compare
    if compare is None or len(compare.methods) < 2:
        raise ConfigError("compare.methods: at least two methods required")
    records: list[SplitRecord] = []
    failures: list[tuple[str, int, str]] = []
    for split_index in range(compare.n_splits):
        seed = base.seed + split_index
        for method in compare.methods:
            runner = _run_stacking_on_split if method.stacking else _run_method_on_split
            try:
                metrics, predictions = runner(base, method, seed)
            except PriorFuseError as exc:
                failures.append((method.name, split_index, str(exc)))
                continue
            records.append(
                SplitRecord(method.name, split_index, seed, metrics, predictions)
            )
    return ComparisonResult(records=tuple(records), failures=tuple(failures))
