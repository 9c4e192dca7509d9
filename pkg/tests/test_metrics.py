"""Metric tests: Gaussian log-likelihood values, RMSE/MAE, signed-rank test vs enumeration."""

import itertools
import math

import numpy as np
import pytest
from scipy.stats import rankdata

from priorfuse.errors import DegenerateDataError, InputError
from priorfuse.gaussian import PosteriorPredictive
from priorfuse.metrics import (
    mae,
    mean_log_likelihood,
    rmse,
    standard_error,
    wilcoxon_signed_rank,
)


def _pp(mean, total_variance):
    return PosteriorPredictive(mean, 0.0, total_variance)


def enumerate_signed_rank_p(diff):
    """Literal enumeration over all 2^n sign assignments of the observed ranks."""
    diff = np.asarray(diff, dtype=float)
    diff = diff[diff != 0.0]
    ranks = rankdata(np.abs(diff))
    observed = ranks[diff > 0].sum()
    n = len(ranks)
    count = 0
    for signs in itertools.product((0, 1), repeat=n):
        w = sum(r for r, s in zip(ranks, signs) if s)
        if w >= observed:
            count += 1
    return count / 2**n


class TestMeanLogLikelihood:
    def test_value_at_the_mode_unit_variance(self):
        preds = [_pp(1.0, 1.0), _pp(-2.0, 1.0)]
        ll = mean_log_likelihood(preds, [1.0, -2.0])
        assert ll == pytest.approx(-0.5 * math.log(2 * math.pi))
        assert ll == pytest.approx(-0.918939, abs=1e-6)

    def test_doubling_variance_at_mode_costs_half_log_two(self):
        base = mean_log_likelihood([_pp(0.0, 1.0)], [0.0])
        doubled = mean_log_likelihood([_pp(0.0, 2.0)], [0.0])
        assert base - doubled == pytest.approx(0.5 * math.log(2))

    def test_zero_variance_rejected(self):
        with pytest.raises(InputError):
            mean_log_likelihood([PosteriorPredictive(0.0, 0.0, 0.0)], [0.0])

    def test_calibrated_predictor_lands_in_reported_range(self):
        # a calibrated predictor with sd 0.43 sits near -0.575 mean LL, inside
        # the [-4, 0] band that real benchmark runs report
        rng = np.random.default_rng(6)
        sd = 0.43
        means = rng.normal(size=20000)
        labels = means + rng.normal(0.0, sd, size=20000)
        ll = mean_log_likelihood([_pp(m, sd**2) for m in means], labels)
        assert -4.0 < ll < 0.0
        assert ll == pytest.approx(-0.5 * (math.log(2 * math.pi * sd**2) + 1.0), abs=0.02)

    def test_maximized_at_mse_variance(self):
        # mean LL over variance peaks where the variance equals the MSE
        rng = np.random.default_rng(0)
        means = rng.normal(size=30)
        labels = means + rng.normal(size=30)
        mse = float(np.mean((means - labels) ** 2))
        at_mse = mean_log_likelihood([_pp(m, mse) for m in means], labels)
        for factor in (0.5, 0.8, 1.25, 2.0):
            other = mean_log_likelihood([_pp(m, factor * mse) for m in means], labels)
            assert other < at_mse


class TestRmseMae:
    def test_perfect_predictions(self):
        preds = [_pp(1.0, 1.0), _pp(2.0, 1.0)]
        assert rmse(preds, [1.0, 2.0]) == 0.0
        assert mae(preds, [1.0, 2.0]) == 0.0

    def test_hand_computed_errors(self):
        preds = [_pp(3.0, 1.0), _pp(-4.0, 1.0)]
        labels = [0.0, 0.0]
        assert rmse(preds, labels) == pytest.approx(math.sqrt(12.5))
        assert mae(preds, labels) == pytest.approx(3.5)

    def test_rmse_at_least_mae(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            means = rng.normal(size=12)
            labels = rng.normal(size=12)
            preds = [_pp(m, 1.0) for m in means]
            assert rmse(preds, labels) >= mae(preds, labels) - 1e-15

    def test_empty_rejected(self):
        with pytest.raises(InputError):
            rmse([], [])


class TestStandardError:
    def test_constant_list(self):
        assert standard_error([2.0, 2.0, 2.0]) == 0.0

    def test_two_point_hand_value(self):
        assert standard_error([0.0, 2.0]) == pytest.approx(1.0)

    def test_scales_inverse_sqrt_n_under_replication(self):
        # replication preserves the sum of squared deviations per copy, so the
        # exact SE ratio for k copies of n values is sqrt((n-1) / (k*(kn-1)))
        values = [0.1, 0.9, 0.4, 0.7]
        n, k = len(values), 4
        base = standard_error(values)
        replicated = standard_error(values * k)
        assert replicated == pytest.approx(base * math.sqrt((n - 1) / (k * n - 1)), rel=1e-9)
        # and the broad 1/sqrt(n) trend holds
        assert replicated < base

    def test_too_few_values(self):
        with pytest.raises(InputError):
            standard_error([1.0])


class TestWilcoxonSignedRank:
    def test_all_positive_n10(self):
        a = np.arange(1.0, 11.0)
        b = a - 1.0
        p = wilcoxon_signed_rank(a, b)
        assert p == pytest.approx(1.0 / 2**10)
        assert round(p, 3) == 0.001

    def test_identical_samples_degenerate(self):
        with pytest.raises(DegenerateDataError):
            wilcoxon_signed_rank(np.ones(8), np.ones(8))

    def test_matches_enumeration_on_random_instances(self):
        rng = np.random.default_rng(2)
        for _ in range(40):
            n = int(rng.integers(5, 13))
            diff = rng.normal(size=n)
            diff[diff == 0.0] = 0.5
            p = wilcoxon_signed_rank(diff, np.zeros(n))
            assert p == enumerate_signed_rank_p(diff)

    def test_matches_enumeration_with_ties(self):
        rng = np.random.default_rng(3)
        for _ in range(40):
            n = int(rng.integers(5, 11))
            # nonzero integer differences so ties are common but none drop out
            magnitudes = rng.integers(1, 4, size=n).astype(float)
            signs = rng.choice([-1.0, 1.0], size=n)
            diff = magnitudes * signs
            p = wilcoxon_signed_rank(diff, np.zeros(n))
            assert p == enumerate_signed_rank_p(diff)

    def test_exact_p_is_dyadic_rational(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            n = int(rng.integers(6, 12))
            diff = rng.normal(size=n)
            p = wilcoxon_signed_rank(diff, np.zeros(n))
            numerator = p * 2**n
            assert numerator == pytest.approx(round(numerator), abs=1e-9)

    def test_normal_approximation_close_to_exact_at_boundary(self):
        # n just under/over the exact cutoff should roughly agree
        rng = np.random.default_rng(5)
        for _ in range(20):
            diff = rng.normal(loc=0.3, size=25)
            exact = wilcoxon_signed_rank(diff, np.zeros(25))
            padded = np.concatenate([diff, [1e-9]])  # n=26 -> approximation path
            approx = wilcoxon_signed_rank(padded, np.zeros(26))
            assert abs(exact - approx) < 0.02

    def test_too_few_nonzero_differences(self):
        with pytest.raises(InputError):
            wilcoxon_signed_rank([1.0, 2.0, 0.0, 0.0, 0.0], [0.0] * 5)

    def test_unsupported_alternative(self):
        with pytest.raises(InputError):
            wilcoxon_signed_rank(np.arange(6.0), np.zeros(6), alternative="two_sided")

    def test_zero_differences_dropped(self):
        a = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0])
        b = np.array([1.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0])  # first pair ties
        p_with_zero = wilcoxon_signed_rank(a, b)
        p_without = wilcoxon_signed_rank(a[1:], b[1:])
        assert p_with_zero == p_without
