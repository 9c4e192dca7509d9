"""Deep-ensemble backend: K independently initialized networks, pointwise moments.

The ensemble mean/variance across members is the diagonal-Gaussian posterior
approximation consumed by fusion. Members are point predictors, so the spread
is purely epistemic; observation noise is added later in the predictive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, TrainingError
from .gaussian import GaussianPrediction
from .nn import NetworkArchitecture, TrainedNetwork, TrainingConfig, predict, train


@dataclass(frozen=True)
class TrainedEnsemble:
    """Members sharing one architecture, canonically ordered by init seed."""

    members: tuple[TrainedNetwork, ...]
    architecture: NetworkArchitecture
    member_seeds: tuple[int, ...]

    def __post_init__(self):
        if len(self.members) < 2:
            raise InputError("an ensemble needs at least 2 members")
        if len(self.member_seeds) != len(self.members):
            raise InputError("one seed per member required")
        if len(set(self.member_seeds)) != len(self.member_seeds):
            raise InputError("member seeds must be pairwise distinct")
        if any(m.architecture != self.architecture for m in self.members):
            raise InputError("all members must share the ensemble architecture")
        # canonical seed order makes the reduction independent of construction order
        order = np.argsort(np.asarray(self.member_seeds))
        object.__setattr__(self, "members", tuple(self.members[i] for i in order))
        object.__setattr__(self, "member_seeds", tuple(self.member_seeds[i] for i in order))

    @property
    def n_members(self) -> int:
        return len(self.members)

    def member_outputs(self, X: np.ndarray) -> np.ndarray:
        """(K, n) member predictions, rows in canonical member order."""
        return np.stack([predict(self.architecture, m.weights, X) for m in self.members])

    def moment_arrays(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-point mean and unbiased (n-1) cross-member variance."""
        outputs = self.member_outputs(X)
        return outputs.mean(axis=0), outputs.var(axis=0, ddof=1)

    def predict_moments(self, X: np.ndarray) -> list[GaussianPrediction]:
        means, variances = self.moment_arrays(X)
        return [GaussianPrediction(float(m), float(v)) for m, v in zip(means, variances)]


def train_ensemble(
    arch: NetworkArchitecture,
    config: TrainingConfig,
    train_set: tuple[np.ndarray, np.ndarray],
    val_set: tuple[np.ndarray, np.ndarray],
    n_members: int = 5,
    base_seed: int | None = None,
) -> TrainedEnsemble:
    """Train K members identically except for the initialization seed (base + k)."""
    if n_members < 2:
        raise InputError(f"n_members must be >= 2, got {n_members}")
    base = config.seed if base_seed is None else base_seed
    seeds = tuple(base + k for k in range(n_members))
    members = []
    for k, seed in enumerate(seeds):
        try:
            members.append(train(arch, config, train_set, val_set, init_seed=seed))
        except TrainingError as exc:
            raise TrainingError(f"member {k}: {exc}", epoch=exc.epoch) from exc
    return TrainedEnsemble(members=tuple(members), architecture=arch, member_seeds=seeds)


def predict_moments(ensemble: TrainedEnsemble, X: np.ndarray) -> list[GaussianPrediction]:
    """Module-level alias of :meth:`TrainedEnsemble.predict_moments`."""
    return ensemble.predict_moments(X)
