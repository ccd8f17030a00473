"""Tests for the subordinated-diffusion Monte Carlo oracle."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ks_2samp

from fjko import (
    McConfig,
    build_grid,
    density_histogram,
    first_passage_time,
    first_passage_times,
    simulate_endpoint,
    simulate_endpoints,
    stable_increment,
    stable_samples,
)


def flat_grad(x):
    return np.zeros_like(x)


class TestStableIncrement:
    @settings(max_examples=40, deadline=None)
    @given(
        alpha=st.floats(min_value=0.05, max_value=0.95),
        ds=st.floats(min_value=1e-4, max_value=10.0),
        seed=st.integers(min_value=0, max_value=2**31),
    )
    def test_strictly_positive(self, alpha, ds, seed):
        rng = np.random.default_rng(seed)
        assert stable_increment(alpha, ds, rng) > 0.0

    def test_laplace_transform(self):
        alpha = 0.7
        rng = np.random.default_rng(10)
        s = stable_samples(alpha, rng, 300_000)
        for k in (0.5, 1.0, 2.0):
            est = np.exp(-k * s).mean()
            target = math.exp(-(k**alpha))
            assert abs(est - target) / target <= 0.02

    def test_self_similar_scaling(self):
        # increments over ds match ds^(1/alpha)-scaled unit samples in law
        alpha, ds = 0.6, 0.25
        rng = np.random.default_rng(3)
        a = ds ** (1.0 / alpha) * stable_samples(alpha, rng, 100_000)
        b = np.array([stable_increment(alpha, ds, rng) for _ in range(2000)])
        assert ks_2samp(a, b).pvalue > 0.01

    def test_rejects_bad_index(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            stable_increment(1.0, 0.1, rng)
        with pytest.raises(ValueError):
            stable_increment(0.5, -1.0, rng)


class TestFirstPassage:
    def test_zero_time(self):
        rng = np.random.default_rng(5)
        assert first_passage_time(0.6, 0.0, 1e-2, rng) == 0.0
        assert np.all(first_passage_times(0.6, 0.0, 1e-2, rng, 10) == 0.0)

    def test_nondecreasing_along_shared_stream(self):
        # the same seed reproduces the same increment stream, so passage
        # times inherit the monotonicity of the running maximum
        times = [0.1, 0.5, 1.0, 2.0, 5.0]
        vals = [first_passage_time(0.7, t, 1e-2, np.random.default_rng(42)) for t in times]
        assert all(a <= b for a, b in zip(vals, vals[1:]))

    def test_bounded_by_grid_resolution(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            s = first_passage_time(0.5, 1.0, 0.01, rng)
            assert s >= 0.0
            assert s / 0.01 == pytest.approx(round(s / 0.01, 6), abs=1.0)

    def test_mean_matches_inverted_transform(self):
        # moment identity E[S(t)] = t^alpha / Gamma(1+alpha), cross-checked by
        # numerically inverting the transform u -> u^-(1+alpha)
        from mpmath import invertlaplace, mp

        mp.dps = 30
        alpha = 0.8
        target = float(invertlaplace(lambda u: u ** (-(1 + alpha)), 1.0, method="talbot"))
        assert target == pytest.approx(1.0 / math.gamma(1 + alpha), rel=1e-8)
        rng = np.random.default_rng(17)
        s = first_passage_times(alpha, 1.0, 1e-3, rng, 20_000)
        assert abs(s.mean() - target) / target <= 0.05


class TestEndpoints:
    def test_single_path_stays_inside(self):
        g = build_grid(1, 8)
        cfg = McConfig(
            alpha=0.8, horizon=0.5, n_paths=1, seed=0, grid=g, grad_potential=flat_grad,
            ds=0.05, dt=0.05,
        )
        rng = np.random.default_rng(1)
        for _ in range(20):
            x = simulate_endpoint(cfg, rng)
            assert 0.0 <= x[0] <= 1.0

    def test_all_paths_inside_domain(self):
        g = build_grid(1, 8)
        cfg = McConfig(
            alpha=0.6, horizon=1.0, n_paths=500, seed=3, grid=g, grad_potential=flat_grad,
            ds=0.01, dt=0.01,
        )
        pts = simulate_endpoints(cfg)
        assert pts.shape == (500, 1)
        assert pts.min() >= 0.0 and pts.max() <= 1.0

    def test_free_diffusion_equilibrates_to_uniform(self):
        g = build_grid(1, 8)
        cfg = McConfig(
            alpha=0.9, horizon=3.0, n_paths=100_000, seed=11, grid=g,
            grad_potential=flat_grad, ds=0.01, dt=0.01,
        )
        hist = density_histogram(simulate_endpoints(cfg), g)
        assert np.abs(hist.p - 0.125).sum() <= 0.05

    def test_fixed_seed_reproduces_histogram(self):
        g = build_grid(1, 16)
        cfg = McConfig(
            alpha=0.7, horizon=0.5, n_paths=4000, seed=99, grid=g,
            grad_potential=lambda x: np.ones_like(x), ds=0.01, dt=0.01,
        )
        h1 = density_histogram(simulate_endpoints(cfg), g)
        h2 = density_histogram(simulate_endpoints(cfg), g)
        np.testing.assert_array_equal(h1.p, h2.p)

    def test_2d_endpoints(self):
        g = build_grid(2, 4)
        cfg = McConfig(
            alpha=0.7, horizon=0.3, n_paths=200, seed=5, grid=g, grad_potential=flat_grad,
            ds=0.02, dt=0.02,
        )
        pts = simulate_endpoints(cfg)
        assert pts.shape == (200, 2)
        assert pts.min() >= 0.0 and pts.max() <= 1.0


class TestHistogram:
    def test_single_cell(self):
        g = build_grid(1, 4)
        h = density_histogram(np.full(10, 0.3), g)
        np.testing.assert_array_equal(h.p, [0.0, 1.0, 0.0, 0.0])

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            density_histogram(np.zeros((0, 1)), build_grid(1, 4))

    def test_points_outside_domain_rejected(self):
        with pytest.raises(ValueError):
            density_histogram(np.array([1.2]), build_grid(1, 4))

    def test_uniform_points_near_uniform(self):
        g = build_grid(1, 16)
        rng = np.random.default_rng(0)
        n = 200_000
        h = density_histogram(rng.uniform(0.0, 1.0, n), g)
        assert np.abs(h.p - 1.0 / 16).sum() <= 3.0 * math.sqrt(16 / n)

    def test_2d_binning_row_major(self):
        g = build_grid(2, 2)
        pts = np.array([[0.1, 0.9], [0.9, 0.1]])
        h = density_histogram(pts, g)
        np.testing.assert_array_equal(h.p, [0.0, 0.5, 0.5, 0.0])
