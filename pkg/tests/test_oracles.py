import numpy as np
import pytest

from graphsteer.errors import NumericalDomainError
from graphsteer.guidance import ControllerConfig
from graphsteer.oracles import (
    check_posterior,
    estimator_stats,
    finite_diff_grad,
    gaussian_posterior,
    run_suite,
)
from graphsteer.priors import GaussianPrior
from graphsteer.rewards import Reward
from graphsteer.schedule import build_schedule
from graphsteer.state import GraphState, full_dot, symmetrize

from conftest import random_state


class TestFiniteDiffGrad:
    def test_linear_returns_coefficients(self, rng):
        c = random_state(rng, 5, 2)
        g = random_state(rng, 5, 2)
        fd = finite_diff_grad(lambda s: full_dot(c, s), g)
        assert np.abs(fd.to_free_vector() - c.to_free_vector()).max() < 1e-9

    def test_constant_returns_zero(self, rng):
        fd = finite_diff_grad(lambda s: 4.2, random_state(rng, 4, 1))
        assert np.abs(fd.to_full_vector()).max() == 0.0

    def test_triangle_trace_identity(self, rng):
        g = random_state(rng, 6, 0)
        fd = finite_diff_grad(lambda s: float(np.trace(np.linalg.matrix_power(s.adjacency, 3))), g)
        analytic = symmetrize(3.0 * (g.adjacency @ g.adjacency))
        rel = np.abs(fd.adjacency - analytic).max() / np.abs(analytic).max()
        assert rel < 1e-5

    def test_richardson_fallback_for_large_scale(self, rng):
        # |f| > 1e3 triggers the extrapolation pass; accuracy must hold
        c = random_state(rng, 4, 1)
        g = random_state(rng, 4, 1)
        fd = finite_diff_grad(lambda s: full_dot(c, s) + 5e4, g)
        assert np.abs(fd.to_free_vector() - c.to_free_vector()).max() < 1e-6

    def test_non_finite_aborts(self, rng):
        with pytest.raises(NumericalDomainError):
            finite_diff_grad(lambda s: float("nan"), random_state(rng, 3, 1))


class TestEstimatorStats:
    def _setup(self):
        schedule = build_schedule(30, 1e-3, 0.05)
        model = GaussianPrior(schedule, 4, 1, std=1.0)
        rng = np.random.default_rng(0)
        c = random_state(rng, 4, 1)
        reward = Reward(name="lin", eval=lambda s: full_dot(c, s), grad=lambda s: c)
        g = random_state(rng, 4, 1)
        cfg = ControllerConfig(kind="two_point", mu_rule="constant", mu0=1e-2)
        return model, reward, g, cfg, c

    def test_reproducible_under_seed(self):
        model, reward, g, cfg, c = self._setup()
        runs = [
            estimator_stats("two_point", reward, model, g, 10, cfg, 200, 42, c)
            for _ in range(2)
        ]
        assert np.array_equal(
            runs[0].mean_direction.to_free_vector(), runs[1].mean_direction.to_free_vector()
        )
        assert runs[0].empirical_variance == runs[1].empirical_variance

    def test_minimum_samples_enforced(self):
        model, reward, g, cfg, c = self._setup()
        with pytest.raises(ValueError):
            estimator_stats("two_point", reward, model, g, 10, cfg, 99, 0, c)

    def test_cosine_sign(self):
        model, reward, g, cfg, c = self._setup()
        stats = estimator_stats("two_point", reward, model, g, 10, cfg, 2000, 7, c)
        assert stats.cosine_to_reference > 0.9
        negated = estimator_stats("two_point", reward, model, g, 10, cfg, 2000, 7, -1.0 * c)
        assert negated.cosine_to_reference < -0.9


class TestGaussianPosterior:
    def _prior(self, mean=None):
        schedule = build_schedule(10, 1e-3, 0.02)
        return GaussianPrior(schedule, 3, 1, mean=mean, std=1.0)

    def test_uninformative_limit(self, rng):
        mean = random_state(rng, 3, 1)
        prior = self._prior(mean)
        post_mean, _ = gaussian_posterior(prior, random_state(rng, 3, 1), 1e12)
        np.testing.assert_allclose(
            post_mean.to_free_vector(), mean.to_free_vector(), atol=1e-6
        )

    def test_hard_constraint_limit(self, rng):
        prior = self._prior()
        y = random_state(rng, 3, 1)
        post_mean, _ = gaussian_posterior(prior, y, 1e-12)
        np.testing.assert_allclose(post_mean.to_free_vector(), y.to_free_vector(), atol=1e-6)

    def test_equal_precision_fusion(self, rng):
        prior = self._prior()
        y = random_state(rng, 3, 1)
        post_mean, post_var = gaussian_posterior(prior, y, 1.0)
        np.testing.assert_allclose(post_mean.to_free_vector(), 0.5 * y.to_free_vector())
        assert post_var == 0.5

    def test_gamma_validation(self, rng):
        with pytest.raises(ValueError):
            gaussian_posterior(self._prior(), random_state(np.random.default_rng(0), 3, 1), 0.0)


class TestSuites:
    def test_gradients_suite_passes(self):
        results = run_suite("gradients")
        assert results and all(r.passed for r in results), [
            (r.name, r.detail) for r in results if not r.passed
        ]

    def test_posterior_suite_passes(self):
        assert all(r.passed for r in check_posterior())

    def test_unknown_suite_rejected(self):
        with pytest.raises(ValueError):
            run_suite("nope")
