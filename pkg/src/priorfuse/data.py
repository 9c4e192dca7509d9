"""Dataset container, CSV ingestion, sequence encoding, split protocols, 1D generator.

Input CSV contract: header row, UTF-8, '.' decimal separator. Required columns
``id`` and ``label`` (names configurable via :class:`CsvSchema`); optional
numeric feature columns, a sequence column over a declared alphabet, named
auxiliary score columns, and a group column for grouped splits.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import pandas as pd

from .errors import DataError, InputError


@dataclass(frozen=True)
class Dataset:
    ids: tuple[str, ...]
    features: np.ndarray
    labels: np.ndarray
    aux: dict[str, np.ndarray] = field(default_factory=dict)
    sequences: tuple[str, ...] | None = None
    alphabet: str | None = None
    groups: tuple[str, ...] | None = None

    def __post_init__(self):
        n = len(self.ids)
        if self.features.ndim != 2 or self.features.shape[0] != n:
            raise DataError(f"features must be (n, d) with n={n}")
        if self.labels.shape != (n,):
            raise DataError(f"labels must have shape ({n},)")
        if not np.all(np.isfinite(self.features)):
            raise DataError("features contain non-finite values")
        if not np.all(np.isfinite(self.labels)):
            raise DataError("labels contain non-finite values")
        for name, column in self.aux.items():
            if column.shape != (n,):
                raise DataError(f"aux column {name!r} must have shape ({n},)")
        if self.sequences is not None:
            if len(self.sequences) != n:
                raise DataError("one sequence per row required")
            if self.alphabet is None:
                raise DataError("sequences require a declared alphabet")
            lengths = {len(s) for s in self.sequences}
            if len(lengths) > 1:
                raise DataError(f"sequences must share one length, found {sorted(lengths)}")
            allowed = set(self.alphabet)
            for i, seq in enumerate(self.sequences):
                bad = set(seq) - allowed
                if bad:
                    raise DataError(f"row {i}: characters {sorted(bad)} outside alphabet")
        if self.groups is not None and len(self.groups) != n:
            raise DataError("one group per row required")

    @property
    def n(self) -> int:
        return len(self.ids)

    def subset(self, indices: np.ndarray) -> "Dataset":
        indices = np.asarray(indices, dtype=int)
        return Dataset(
            ids=tuple(self.ids[i] for i in indices),
            features=self.features[indices],
            labels=self.labels[indices],
            aux={k: v[indices] for k, v in self.aux.items()},
            sequences=None if self.sequences is None else tuple(self.sequences[i] for i in indices),
            alphabet=self.alphabet,
            groups=None if self.groups is None else tuple(self.groups[i] for i in indices),
        )

    def with_features(self, features: np.ndarray) -> "Dataset":
        return replace(self, features=np.asarray(features, dtype=float))

    def xy(self) -> tuple[np.ndarray, np.ndarray]:
        return self.features, self.labels


@dataclass(frozen=True)
class CsvSchema:
    """Column roles for :func:`load_csv`."""

    id_column: str = "id"
    label_column: str = "label"
    feature_columns: tuple[str, ...] = ()
    sequence_column: str | None = None
    alphabet: str | None = None
    aux_columns: tuple[str, ...] = ()
    group_column: str | None = None


@dataclass(frozen=True)
class SplitIndices:
    """Disjoint train/val/test row indices covering the dataset."""

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def assert_partition(self, n: int):
        combined = np.concatenate([self.train, self.val, self.test])
        if combined.size != n or np.unique(combined).size != n:
            raise InputError("split is not a partition of the row indices")


def _numeric_column(frame: pd.DataFrame, name: str, what: str) -> np.ndarray:
    values = pd.to_numeric(frame[name], errors="coerce").to_numpy(dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise DataError(f"{what} column {name!r} has a non-finite value at row {row}")
    return values


def load_csv(path, schema: CsvSchema) -> Dataset:
    """Parse a CSV into a Dataset, rejecting missing columns and bad numerics."""
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except FileNotFoundError:
        raise DataError(f"dataset file not found: {path}") from None
    except pd.errors.ParserError as exc:
        raise DataError(f"cannot parse {path}: {exc}") from exc

    needed = [schema.id_column, schema.label_column, *schema.feature_columns, *schema.aux_columns]
    if schema.sequence_column:
        needed.append(schema.sequence_column)
    if schema.group_column:
        needed.append(schema.group_column)
    for name in needed:
        if name not in frame.columns:
            raise DataError(f"required column {name!r} missing from {path}")

    labels = _numeric_column(frame, schema.label_column, "label")
    if schema.feature_columns:
        features = np.column_stack(
            [_numeric_column(frame, c, "feature") for c in schema.feature_columns]
        )
    else:
        features = np.zeros((len(frame), 0))
    aux = {c: _numeric_column(frame, c, "aux") for c in schema.aux_columns}

    return Dataset(
        ids=tuple(frame[schema.id_column].astype(str)),
        features=features,
        labels=labels,
        aux=aux,
        sequences=tuple(frame[schema.sequence_column]) if schema.sequence_column else None,
        alphabet=schema.alphabet,
        groups=tuple(frame[schema.group_column].astype(str)) if schema.group_column else None,
    )


def one_hot_encode(sequences: Sequence[str], alphabet: str) -> np.ndarray:
    """n x (L * |alphabet|) binary matrix, position-major within each row."""
    if len(sequences) == 0:
        raise InputError("no sequences to encode")
    length = len(sequences[0])
    index = {c: i for i, c in enumerate(alphabet)}
    out = np.zeros((len(sequences), length * len(alphabet)))
    for i, seq in enumerate(sequences):
        if len(seq) != length:
            raise DataError(f"sequence {i} has length {len(seq)}, expected {length}")
        for pos, char in enumerate(seq):
            if char not in index:
                raise DataError(f"sequence {i} position {pos}: {char!r} not in alphabet")
            out[i, pos * len(alphabet) + index[char]] = 1.0
    return out


def decode_one_hot(matrix: np.ndarray, alphabet: str) -> list[str]:
    """Inverse of :func:`one_hot_encode` (used for round-trip checks)."""
    width = len(alphabet)
    if matrix.shape[1] % width != 0:
        raise InputError("matrix width is not a multiple of the alphabet size")
    length = matrix.shape[1] // width
    blocks = matrix.reshape(matrix.shape[0], length, width)
    return ["".join(alphabet[j] for j in row.argmax(axis=1)) for row in blocks]


def hamming_distance(a: str, b: str) -> int:
    if len(a) != len(b):
        raise InputError("hamming distance needs equal-length sequences")
    return sum(1 for x, y in zip(a, b) if x != y)


def balanced_sample(
    dataset: Dataset,
    fitness_threshold: float,
    within_indices: np.ndarray,
    n_sample: int,
    seed: int,
) -> np.ndarray:
    """ceil(n/2) rows with label > threshold plus floor(n/2) with label <= threshold."""
    within = np.asarray(within_indices, dtype=int)
    labels = dataset.labels[within]
    fit_pool = within[labels > fitness_threshold]
    unfit_pool = within[labels <= fitness_threshold]
    n_fit = (n_sample + 1) // 2
    n_unfit = n_sample // 2
    if fit_pool.size < n_fit:
        raise DataError(f"fit class exhausted: need {n_fit}, have {fit_pool.size}")
    if unfit_pool.size < n_unfit:
        raise DataError(f"unfit class exhausted: need {n_unfit}, have {unfit_pool.size}")
    rng = np.random.default_rng(seed)
    chosen_fit = rng.choice(fit_pool, size=n_fit, replace=False)
    chosen_unfit = rng.choice(unfit_pool, size=n_unfit, replace=False)
    return np.concatenate([chosen_fit, chosen_unfit])


def hamming_radius_split(
    dataset: Dataset,
    wildtype_id: str,
    radius: int = 2,
    n_sample: int = 3000,
    train_fraction: float = 0.8,
    seed: int = 0,
    balance_threshold: float | None = None,
) -> SplitIndices:
    """Sample train/val inside a mutation radius of the wild type; test is the rest."""
    if dataset.sequences is None:
        raise DataError("hamming_radius_split requires sequences")
    try:
        wt_index = dataset.ids.index(wildtype_id)
    except ValueError:
        raise DataError(f"wildtype id {wildtype_id!r} not in dataset") from None
    wt = dataset.sequences[wt_index]
    seq_matrix = np.array([list(s) for s in dataset.sequences])
    distances = (seq_matrix != np.array(list(wt))).sum(axis=1)
    pool = np.flatnonzero(distances <= radius)
    if pool.size < n_sample:
        raise DataError(
            f"only {pool.size} rows within radius {radius}, cannot sample {n_sample}"
        )
    rng = np.random.default_rng(seed)
    if balance_threshold is None:
        chosen = rng.choice(pool, size=n_sample, replace=False)
    else:
        chosen = balanced_sample(dataset, balance_threshold, pool, n_sample, seed)
    chosen = rng.permutation(chosen)
    n_train = int(round(n_sample * train_fraction))
    split = SplitIndices(
        train=np.sort(chosen[:n_train]),
        val=np.sort(chosen[n_train:]),
        test=np.sort(np.setdiff1d(np.arange(dataset.n), chosen)),
    )
    split.assert_partition(dataset.n)
    return split


def _units_in_first_occurrence_order(groups: Sequence[str]) -> list[np.ndarray]:
    """Row-index arrays per group, ordered by each group's first appearance."""
    seen: dict[str, list[int]] = {}
    for i, g in enumerate(groups):
        seen.setdefault(g, []).append(i)
    return [np.asarray(v, dtype=int) for v in seen.values()]


def fraction_split(
    dataset: Dataset,
    train_fraction: float = 0.6,
    val_fraction_of_train: float = 0.2,
    seed: int = 0,
    by_group: bool = False,
) -> SplitIndices:
    """Random train/val/test split by row, or by whole group when requested.

    Groups stand in for scaffold-style splitting: all rows of a group land on
    the same side of the train/test boundary. Validation is carved from the
    training rows at ``val_fraction_of_train``.
    """
    if not 0.0 < train_fraction < 1.0 or not 0.0 < val_fraction_of_train < 1.0:
        raise InputError("fractions must lie strictly between 0 and 1")
    if by_group:
        if dataset.groups is None:
            raise DataError("fraction_split by group requires a group column")
        units = _units_in_first_occurrence_order(dataset.groups)
    else:
        units = [np.array([i]) for i in range(dataset.n)]

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(units))
    target = int(round(train_fraction * dataset.n))
    trainval: list[np.ndarray] = []
    test: list[np.ndarray] = []
    count = 0
    for u in order:
        if count < target:
            trainval.append(units[u])
            count += len(units[u])
        else:
            test.append(units[u])
    trainval_rows = rng.permutation(np.concatenate(trainval))
    n_val = int(round(val_fraction_of_train * trainval_rows.size))
    split = SplitIndices(
        train=np.sort(trainval_rows[n_val:]),
        val=np.sort(trainval_rows[:n_val]),
        test=np.sort(np.concatenate(test)) if test else np.array([], dtype=int),
    )
    if split.train.size == 0 or split.val.size == 0 or split.test.size == 0:
        raise DataError("fraction split produced an empty partition")
    split.assert_partition(dataset.n)
    return split


def true_function(x: np.ndarray) -> np.ndarray:
    """Ground truth of the 1D task: 0.3 sin(pi x / 2) + 0.4 sin(pi x)."""
    x = np.asarray(x, dtype=float)
    return 0.3 * np.sin(np.pi * x / 2.0) + 0.4 * np.sin(np.pi * x)


@dataclass(frozen=True)
class Synthetic1D:
    dataset: Dataset
    split: SplitIndices
    true_fn: Callable[[np.ndarray], np.ndarray]


def generate_synthetic_1d(
    n: int = 1000,
    seed: int = 0,
    x_range: tuple[float, float] = (-2.0, 2.0),
    noise_sd: float = 0.05,
    train_fraction: float = 0.8,
) -> Synthetic1D:
    """Uniform x, noisy sine-mixture labels, pre-split train/val (default 800/200)."""
    if n < 2:
        raise InputError("need at least 2 points")
    lo, hi = float(x_range[0]), float(x_range[1])
    if not lo < hi:
        raise InputError(f"degenerate x_range {x_range}")
    if noise_sd < 0:
        raise InputError("noise_sd must be >= 0")
    rng = np.random.default_rng(seed)
    x = rng.uniform(lo, hi, size=n)
    y = true_function(x) + rng.normal(0.0, noise_sd, size=n)
    dataset = Dataset(
        ids=tuple(f"x{i:05d}" for i in range(n)),
        features=x[:, None],
        labels=y,
    )
    perm = rng.permutation(n)
    n_train = int(round(train_fraction * n))
    split = SplitIndices(
        train=np.sort(perm[:n_train]),
        val=np.sort(perm[n_train:]),
        test=np.array([], dtype=int),
    )
    return Synthetic1D(dataset=dataset, split=split, true_fn=true_function)
