"""Acceptance suite: one test per release criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion lines.
Criteria marked with runtime budgets are asserted against wall-clock time.
"""

import itertools
import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy.stats import rankdata

from landscape import build_landscape_csv, landscape_config_dict, ordering_methods
from priorfuse.cli import cmd_synth_demo, synthetic_demo_config
from priorfuse.compare import run_comparison
from priorfuse.config import parse_config
from priorfuse.data import true_function
from priorfuse.experiment import materialize, run_training
from priorfuse.fusion import fuse, fuse_arrays, posterior_predictive
from priorfuse.gaussian import GaussianPrediction
from priorfuse.laplace import fit_last_layer_laplace
from priorfuse.metrics import gaussian_log_likelihood, wilcoxon_signed_rank
from priorfuse.nn import (
    NetworkArchitecture,
    TrainedNetwork,
    WeightLayout,
    loss_and_gradient,
)
from priorfuse.priors import LinearScaledScorePrior
from priorfuse.tuning import default_variance_grid, grid_search_prior


@contextmanager
def criterion(number: int, name: str):
    try:
        yield
    except BaseException:
        print(f"\n[acceptance] criterion {number} ({name}): FAIL")
        raise
    print(f"\n[acceptance] criterion {number} ({name}): PASS")


def test_criterion_1_fusion_exactness():
    """Fused moments match the renormalized density product on 10,000 random cases."""
    with criterion(1, "fusion density-product exactness"):
        start = time.monotonic()
        rng = np.random.default_rng(20240811)
        n_cases, grid_points, span = 10_000, 10_001, 10.0
        chunk = 250
        worst_density_error = 0.0
        for lo in range(0, n_cases, chunk):
            size = min(chunk, n_cases - lo)
            m1 = rng.uniform(-10, 10, size=size)
            m2 = rng.uniform(-10, 10, size=size)
            v1 = 10.0 ** rng.uniform(-2, 2, size=size)
            v2 = 10.0 ** rng.uniform(-2, 2, size=size)
            means, variances = fuse_arrays(m1, v1, m2, v2)

            # invariants hold in every case
            lo_mean = np.minimum(m1, m2)
            hi_mean = np.maximum(m1, m2)
            assert np.all(means >= lo_mean - 1e-12) and np.all(means <= hi_mean + 1e-12)
            assert np.all(variances <= np.minimum(v1, v2) + 1e-15)

            # grid oracle: +-span combined standard deviations around the midpoint
            sd_comb = np.sqrt(v1) + np.sqrt(v2)
            center = (m1 + m2) / 2.0
            half_width = span * sd_comb + np.abs(m1 - m2)
            t = np.linspace(-1.0, 1.0, grid_points)
            x = center[:, None] + half_width[:, None] * t[None, :]
            log_prod = (
                -0.5 * (x - m1[:, None]) ** 2 / v1[:, None]
                - 0.5 * (x - m2[:, None]) ** 2 / v2[:, None]
            )
            log_prod -= log_prod.max(axis=1, keepdims=True)
            density = np.exp(log_prod)
            norm = np.trapezoid(density, x, axis=1)
            density /= norm[:, None]
            fused_density = np.exp(
                -0.5 * (x - means[:, None]) ** 2 / variances[:, None]
            ) / np.sqrt(2.0 * np.pi * variances[:, None])
            worst_density_error = max(
                worst_density_error, float(np.abs(density - fused_density).max())
            )
        elapsed = time.monotonic() - start
        assert worst_density_error < 1e-6, f"max density error {worst_density_error:.2e}"
        assert elapsed < 10.0, f"runtime {elapsed:.1f}s exceeds 10s budget"


@pytest.mark.slow
def test_criterion_2_figure_reproduction(tmp_path):
    """Zero-mean prior (variance 0.43^2) beats the bare ensemble in extrapolation."""
    with criterion(2, "1D extrapolation reversion"):
        start = time.monotonic()
        grid = np.linspace(-6.0, 6.0, 241)
        far = np.abs(grid) >= 3.0
        x_far = grid[far][:, None]
        truth_far = true_function(grid[far])
        bound = 1.1 * (0.43 + np.abs(truth_far))

        wins = 0
        for seed in range(10):
            if seed == 0:
                # run the full command once, including plot emission
                out = cmd_synth_demo(tmp_path / "demo", seed=0, prior_variance=0.1849)
                from priorfuse.modelio import load_model

                model = load_model(out)
            else:
                config = synthetic_demo_config(seed=seed, prior_variance=0.1849)
                model = run_training(config, materialize(config))
            plain_means, _ = model.backend.moment_arrays(x_far)
            fused_means = np.array([p.mean for p in model.predict(x_far)])
            if np.mean(np.abs(fused_means - truth_far)) < np.mean(np.abs(plain_means - truth_far)):
                wins += 1
            assert np.all(np.abs(fused_means) <= bound), (
                f"seed {seed}: reverted mean exceeds the prior envelope "
                f"(worst excess {np.max(np.abs(fused_means) - bound):+.3f})"
            )
        elapsed = time.monotonic() - start
        assert wins >= 9, f"prior-augmented model won only {wins}/10 seeds"
        assert elapsed < 300.0, f"runtime {elapsed:.0f}s exceeds 5 min budget"


def test_criterion_3_monotone_prior_reliance():
    """The weight on the prior mean strictly increases with network variance."""
    with criterion(3, "monotone reliance on the prior"):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            mu_bnn = rng.uniform(-5, 5)
            mu_fv = rng.uniform(-5, 5)
            if abs(mu_bnn - mu_fv) < 1e-3:
                mu_fv += 1.0
            var_fv = 10.0 ** rng.uniform(-2, 2)
            v_small, v_large = np.sort(10.0 ** rng.uniform(-3, 3, size=2))
            if v_small == v_large:
                v_large *= 2.0
            weights = []
            for v in (v_small, v_large):
                fused = fuse(GaussianPrediction(mu_bnn, v), (mu_fv, var_fv))
                weights.append((fused.mean - mu_bnn) / (mu_fv - mu_bnn))
            assert weights[1] > weights[0], (
                f"weight on prior mean did not grow: {weights} "
                f"(variances {v_small:.3g} -> {v_large:.3g})"
            )


def test_criterion_4_gradient_suite():
    """Finite-difference agreement across the reduced-width architecture grid."""
    with criterion(4, "gradient correctness across architectures"):
        start = time.monotonic()
        rng = np.random.default_rng(11)
        input_dim = 3
        architectures = [
            NetworkArchitecture(input_dim, (width,) * depth)
            for depth in (1, 2)
            for width in (4, 7, 10)
        ]
        eps = 1e-5
        for arch in architectures:
            layout = WeightLayout(arch)
            for _ in range(100):
                theta = rng.normal(size=layout.n_params)
                X = rng.normal(size=(4, input_dim))
                y = rng.normal(size=4)
                decay = float(rng.choice([0.0, 0.01]))
                _, grad = loss_and_gradient(arch, theta, (X, y), decay)
                fd = np.zeros_like(theta)
                for i in range(theta.size):
                    up = theta.copy(); up[i] += eps
                    down = theta.copy(); down[i] -= eps
                    l_up, _ = loss_and_gradient(arch, up, (X, y), decay)
                    l_down, _ = loss_and_gradient(arch, down, (X, y), decay)
                    fd[i] = (l_up - l_down) / (2 * eps)
                scale = np.maximum(np.maximum(np.abs(grad), np.abs(fd)), 1.0)
                worst = float(np.max(np.abs(grad - fd) / scale))
                assert worst < 1e-5, f"{arch.hidden_dims}: rel error {worst:.2e}"
        elapsed = time.monotonic() - start
        assert elapsed < 30.0, f"runtime {elapsed:.1f}s exceeds 30s budget"


def test_criterion_5_laplace_oracle():
    """Identity-backbone Laplace equals conjugate Bayesian linear regression."""
    with criterion(5, "last-layer posterior matches the conjugate oracle"):
        rng = np.random.default_rng(13)
        for _ in range(100):
            n = int(rng.integers(5, 51))
            d = int(rng.integers(1, 11))
            X = rng.uniform(0.05, 3.0, size=(n, d))  # positive orthant passes the ReLU
            y = rng.normal(size=n)
            noise = float(10.0 ** rng.uniform(-3, 0))
            precision = float(10.0 ** rng.uniform(-2, 2))

            layout = WeightLayout(NetworkArchitecture(d, (d,)))
            theta = layout.pack([(np.eye(d), np.zeros(d)), (np.zeros((d, 1)), np.zeros(1))])
            backbone = TrainedNetwork(NetworkArchitecture(d, (d,)), theta, 0.0, 1)
            posterior = fit_last_layer_laplace(backbone, (X, y), noise, precision)

            X_test = rng.uniform(0.05, 3.0, size=(10, d))
            mean, var = posterior.moment_arrays(X_test)

            phi = np.hstack([X, np.ones((n, 1))])
            cov_oracle = np.linalg.inv(phi.T @ phi / noise + precision * np.eye(d + 1))
            mean_oracle = cov_oracle @ phi.T @ y / noise
            phi_test = np.hstack([X_test, np.ones((10, 1))])
            np.testing.assert_allclose(mean, phi_test @ mean_oracle, atol=1e-10)
            np.testing.assert_allclose(
                var, np.einsum("ij,jk,ik->i", phi_test, cov_oracle, phi_test), atol=1e-10
            )


def test_criterion_6_wilcoxon_exactness():
    """DP p-values equal literal sign-pattern enumeration; n=10 all-positive anchor."""
    with criterion(6, "signed-rank exactness"):
        rng = np.random.default_rng(17)
        for _ in range(200):
            n = int(rng.integers(5, 13))
            if rng.random() < 0.5:
                diff = rng.normal(size=n)
                diff[diff == 0.0] = 0.25
            else:  # integer magnitudes force ties
                diff = rng.integers(1, 4, size=n) * rng.choice([-1.0, 1.0], size=n)
            p = wilcoxon_signed_rank(diff, np.zeros(n))

            ranks = rankdata(np.abs(diff))
            observed = ranks[diff > 0].sum()
            count = sum(
                1
                for signs in itertools.product((0, 1), repeat=n)
                if sum(r for r, s in zip(ranks, signs) if s) >= observed
            )
            assert p == count / 2**n

        anchor = wilcoxon_signed_rank(np.arange(1.0, 11.0), np.zeros(10))
        assert anchor == pytest.approx(2.0**-10)
        assert round(anchor, 3) == 0.001


def test_criterion_7_empirical_bayes_sanity():
    """A planted exact prior mean plus a far-off network selects a strong prior."""
    with criterion(7, "empirical-Bayes grid selects the planted prior"):
        strong = 0
        for seed in range(10):
            rng = np.random.default_rng(1000 + seed)
            truth = rng.normal(0.0, 1.0, size=40)
            offset = rng.choice([-4.0, 4.0])
            bnn_val = [GaussianPrediction(float(t + offset), 4.0) for t in truth]
            grid = list(default_variance_grid(1.0))

            factory = lambda variance: LinearScaledScorePrior("truth", 1.0, 0.0, variance)
            result = grid_search_prior(
                factory,
                {"variance": grid},
                bnn_val,
                truth,
                noise_variance=0.1,
                val_aux={"truth": truth},
            )
            if result.best_params["variance"] <= np.median(grid):
                strong += 1

            # oracle: independent scalar-route recomputation of every cell
            oracle_best = -np.inf
            for v in grid:
                preds = [
                    posterior_predictive(fuse(p, (float(t), v)), 0.1)
                    for p, t in zip(bnn_val, truth)
                ]
                means = np.array([p.mean for p in preds])
                totals = np.array([p.total_variance for p in preds])
                objective = float(np.mean(gaussian_log_likelihood(truth, means, totals)))
                oracle_best = max(oracle_best, objective)
            assert result.best_objective == oracle_best, (
                f"seed {seed}: selected objective differs from oracle maximum"
            )
        assert strong >= 9, f"strong prior selected only {strong}/10 times"


@pytest.mark.slow
def test_criterion_8_ordering_reproduction(tmp_path):
    """Held-out LL ordering on the landscape: fv(info) > fv(zero) > BNN > NN."""
    with criterion(8, "method ordering on the synthetic landscape"):
        csv_path = build_landscape_csv(tmp_path / "landscape.csv")
        payload = landscape_config_dict(csv_path, seed=100)
        payload["compare"] = {"n_splits": 10, "methods": ordering_methods()}
        config = parse_config(payload)
        result = run_comparison(config)
        assert not result.failures, f"method failures: {result.failures}"

        chain_ok = stacking_ok = 0
        for split in range(10):
            ll = {m: result.metric_values(m, "ll")[split] for m in result.methods()}
            if ll["fv-info"] > ll["fv-zero"] > ll["bnn"] > ll["nn"]:
                chain_ok += 1
            if ll["stacking"] < ll["fv-info"]:
                stacking_ok += 1
        assert chain_ok >= 8, f"LL ordering held in only {chain_ok}/10 splits"
        assert stacking_ok >= 8, f"stacking beat the fused model in {10 - stacking_ok}/10 splits"


@pytest.mark.slow
def test_criterion_9_cli_determinism(tmp_path):
    """Rerunning every CLI command with the same config/seed is byte-identical."""
    import yaml

    from priorfuse import cli

    with criterion(9, "CLI determinism"):
        demo_payload = {
            "seed": 5,
            "dataset": {"kind": "synthetic_1d", "n": 250, "x_range": [-2.0, 2.0], "noise_sd": 0.05},
            "split": {"mode": "synthetic"},
            "architecture": {"hidden_dims": [12]},
            "training": {"learning_rate": 0.01, "weight_decay": 0.0001, "batch_size": 32,
                          "max_epochs": 30, "patience": 30},
            "backend": {"kind": "ensemble", "ensemble_size": 3},
            "prior": {"kind": "constant", "mean": 0.0, "variance": 0.1849},
            "plot": {"x_range": [-6.0, 6.0], "n_grid": 61},
        }
        demo_cfg = tmp_path / "demo.yaml"
        demo_cfg.write_text(yaml.safe_dump(demo_payload))

        landscape_path = build_landscape_csv(tmp_path / "landscape.csv")
        cmp_payload = landscape_config_dict(landscape_path, seed=60)
        cmp_payload["training"]["max_epochs"] = 25
        cmp_payload["training"]["patience"] = 25
        cmp_payload["compare"] = {
            "n_splits": 3,
            "methods": [m for m in ordering_methods() if m["name"] in ("nn", "bnn")],
        }
        cmp_cfg = tmp_path / "compare.yaml"
        cmp_cfg.write_text(yaml.safe_dump(cmp_payload))

        train_payload = dict(cmp_payload)
        train_payload.pop("compare")
        train_payload["backend"] = {"kind": "ensemble", "ensemble_size": 3}
        train_payload["prior"] = {"kind": "constant", "mean": 0.0}
        train_cfg = tmp_path / "train.yaml"
        train_cfg.write_text(yaml.safe_dump(train_payload))

        def digest(root):
            out = {}
            for p in sorted(root.rglob("*")):
                if p.is_file():
                    out[str(p.relative_to(root))] = p.read_bytes()
            return out

        # train twice
        a = cli.cmd_train(train_cfg, tmp_path / "train_a")
        b = cli.cmd_train(train_cfg, tmp_path / "train_b")
        assert digest(a) == digest(b)

        # evaluate twice against the same model
        ea = cli.cmd_evaluate(a, landscape_path, tmp_path / "eval_a")
        eb = cli.cmd_evaluate(a, landscape_path, tmp_path / "eval_b")
        assert digest(ea) == digest(eb)

        # compare twice
        ca = cli.cmd_compare(cmp_cfg, tmp_path / "cmp_a")
        cb = cli.cmd_compare(cmp_cfg, tmp_path / "cmp_b")
        assert digest(ca) == digest(cb)

        # synth-demo twice (includes plot-1d)
        da = cli.cmd_synth_demo(tmp_path / "demo_a", seed=5, config_path=demo_cfg)
        db = cli.cmd_synth_demo(tmp_path / "demo_b", seed=5, config_path=demo_cfg)
        assert digest(da) == digest(db)

        # plot-1d twice from one model dir
        cli.cmd_plot_1d(da, tmp_path / "plot_a")
        cli.cmd_plot_1d(da, tmp_path / "plot_b")
        assert (tmp_path / "plot_a_bands.csv").read_bytes() == (tmp_path / "plot_b_bands.csv").read_bytes()
        assert (tmp_path / "plot_a.svg").read_bytes() == (tmp_path / "plot_b.svg").read_bytes()
