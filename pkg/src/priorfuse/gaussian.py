"""Pointwise Gaussian value types shared by backends, priors, and fusion."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InputError


@dataclass(frozen=True)
class GaussianPrediction:
    """A per-point posterior belief N(mean, variance) over the function value.

    Units are those of the label (mean) and label squared (variance).
    Backends must produce finite moments; infinite variance is reserved
    for priors, which are carried as plain (mean, variance) pairs.
    """

    mean: float
    variance: float

    def __post_init__(self):
        if not math.isfinite(self.mean):
            raise InputError(f"prediction mean must be finite, got {self.mean}")
        if not (math.isfinite(self.variance) and self.variance >= 0.0):
            raise InputError(
                f"prediction variance must be finite and >= 0, got {self.variance}"
            )


@dataclass(frozen=True)
class PosteriorPredictive:
    """Predictive distribution N(mean, function_variance + noise_variance)."""

    mean: float
    function_variance: float
    noise_variance: float

    def __post_init__(self):
        if not math.isfinite(self.mean):
            raise InputError(f"predictive mean must be finite, got {self.mean}")
        if not (math.isfinite(self.function_variance) and self.function_variance >= 0.0):
            raise InputError(
                f"function variance must be finite and >= 0, got {self.function_variance}"
            )
        if not (math.isfinite(self.noise_variance) and self.noise_variance >= 0.0):
            raise InputError(
                f"noise variance must be finite and >= 0, got {self.noise_variance}"
            )

    @property
    def total_variance(self) -> float:
        return self.function_variance + self.noise_variance
