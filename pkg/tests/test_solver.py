"""Tests for the memory-weighted JKO stepper."""
import math

import numpy as np
import pytest

from fjko import (
    DiscreteDensity,
    FractionalOrder,
    Potential,
    SolverConfig,
    SolverStepError,
    build_grid,
    dykstra_jko_step,
    free_energy,
    history_combination,
    history_weights,
    interpolant,
    jko_step,
    potential_from_function,
    solve,
)


def make_config(alpha=0.6, m=16, steps=8, horizon=1.0, forcing=lambda x: x, **kw):
    grid = build_grid(1, m)
    return SolverConfig(
        order=FractionalOrder(alpha),
        horizon=horizon,
        steps=steps,
        grid=grid,
        potential=potential_from_function(grid, forcing),
        **kw,
    )


class TestFreeEnergy:
    def test_uniform_with_zero_potential(self):
        g = build_grid(1, 8)
        p = DiscreteDensity(g, np.full(8, 0.125))
        assert free_energy(p, np.zeros(8)) == pytest.approx(-math.log(8))

    def test_one_hot_is_zero(self):
        g = build_grid(1, 8)
        p = np.zeros(8)
        p[3] = 1.0
        assert free_energy(DiscreteDensity(g, p), np.zeros(8)) == 0.0

    def test_two_cell_example(self):
        g = build_grid(1, 2)
        p = DiscreteDensity(g, np.array([0.5, 0.5]))
        got = free_energy(p, np.array([0.0, 1.0]))
        assert got == pytest.approx(-math.log(2) + 0.5)


class TestHistoryCombination:
    def test_first_level_returns_initial(self):
        g = build_grid(1, 4)
        p0 = DiscreteDensity(g, np.array([0.4, 0.3, 0.2, 0.1]))
        out = history_combination([p0], FractionalOrder(0.5), 1)
        np.testing.assert_array_equal(out.p, p0.p)

    def test_classical_order_returns_previous_bitwise(self):
        g = build_grid(1, 4)
        rng = np.random.default_rng(0)
        densities = []
        for _ in range(5):
            w = rng.uniform(0.1, 1.0, 4)
            densities.append(DiscreteDensity(g, w / w.sum()))
        for n in range(1, 6):
            out = history_combination(densities, FractionalOrder(1.0), n)
            assert out is densities[n - 1]

    def test_half_order_two_level_blend(self):
        g = build_grid(1, 2)
        p0 = DiscreteDensity(g, np.array([1.0, 0.0]))
        p1 = DiscreteDensity(g, np.array([0.0, 1.0]))
        out = history_combination([p0, p1], FractionalOrder(0.5), 2)
        np.testing.assert_allclose(out.p, [0.41421356237309515, 0.5857864376269049], atol=1e-15)

    def test_jensen_bound(self):
        # blended free energy never exceeds the blend of free energies
        g = build_grid(1, 8)
        rng = np.random.default_rng(3)
        densities = []
        for _ in range(6):
            w = rng.uniform(0.05, 1.0, 8)
            densities.append(DiscreteDensity(g, w / w.sum()))
        psi = np.linspace(0.0, 1.0, 8)
        order = FractionalOrder(0.4)
        for n in range(1, 7):
            blend = history_combination(densities, order, n)
            weights = history_weights(order, n).weights
            bound = sum(
                wi * free_energy(d, psi) for wi, d in zip(weights, densities[:n])
            )
            assert free_energy(blend, psi) <= bound + 1e-10

    def test_rejects_empty_prefix(self):
        with pytest.raises(ValueError):
            history_combination([], FractionalOrder(0.5), 1)


class TestJkoStep:
    def test_constant_potential_keeps_uniform(self):
        cfg = make_config(forcing=lambda x: np.full_like(x, 0.3), steps=4)
        p1, record = jko_step([cfg.initial_density()], cfg)
        np.testing.assert_allclose(p1.p, cfg.initial_density().p, atol=1e-6)
        assert record.level == 1

    def test_energy_decreases_up_to_slack(self):
        cfg = make_config(alpha=0.7, m=32, steps=10)
        trajectory = solve(cfg)
        slack = 10.0 * cfg.eps_value
        for rec in trajectory.steps:
            assert rec.free_energy <= rec.history_free_energy + slack

    def test_objective_surrogate_decreases(self):
        cfg = make_config(alpha=0.7, m=32, steps=10)
        trajectory = solve(cfg)
        slack = 10.0 * cfg.eps_value
        for rec in trajectory.steps:
            value = rec.plan_cost / cfg.tau_prime + rec.free_energy
            assert value <= rec.history_free_energy + slack


class TestSolve:
    def test_single_step_matches_direct_proximal_call(self):
        cfg = make_config(steps=1)
        trajectory = solve(cfg)
        direct, _ = dykstra_jko_step(
            cfg.initial_density(),
            cfg.build_kernel(),
            cfg.potential,
            cfg.tau_prime,
            cfg.eps_value,
            cfg.max_iter,
        )
        np.testing.assert_array_equal(trajectory.final.p, direct.p)

    def test_mass_conserved_along_trajectory(self):
        cfg = make_config(alpha=0.5, m=24, steps=12)
        trajectory = solve(cfg)
        for d in trajectory.densities:
            assert abs(d.total_mass - 1.0) <= 1e-8

    def test_classical_order_equals_handrolled_loop(self):
        cfg = make_config(alpha=1.0, m=32, steps=12)
        trajectory = solve(cfg)
        kernel = cfg.build_kernel()
        p = cfg.initial_density()
        for n in range(1, cfg.steps + 1):
            p, _ = dykstra_jko_step(
                p, kernel, cfg.potential, cfg.tau_prime, cfg.eps_value, cfg.max_iter
            )
            np.testing.assert_allclose(trajectory.densities[n].p, p.p, atol=1e-12)

    def test_self_convergence_under_step_refinement(self):
        ref = solve(make_config(alpha=0.6, m=16, steps=64)).final
        errs = []
        for steps in (4, 8, 16):
            p = solve(make_config(alpha=0.6, m=16, steps=steps)).final
            errs.append(np.abs(p.p - ref.p).sum())
        assert errs[0] > errs[1] > errs[2]

    def test_monotone_profile_for_linear_forcing(self):
        # the linear forcing pushes mass leftwards; the final profile at T=1
        # decreases from the left wall
        cfg = make_config(alpha=0.6, m=64, steps=20)
        final = solve(cfg).final
        assert final.p[0] > final.p[-1]
        assert np.all(np.diff(final.p[:32]) < 0.0)

    def test_step_failure_is_annotated_with_level(self):
        cfg = make_config(steps=3, eps=1e-16, max_iter=3)
        with pytest.raises(SolverStepError) as err:
            solve(cfg)
        assert err.value.level == 1

    def test_custom_initial_density(self):
        g = build_grid(1, 8)
        init = DiscreteDensity(g, np.array([0.5, 0.5, 0, 0, 0, 0, 0, 0.0]))
        cfg = SolverConfig(
            order=FractionalOrder(0.8),
            horizon=0.5,
            steps=2,
            grid=g,
            potential=potential_from_function(g, lambda x: x),
            initial=init,
        )
        trajectory = solve(cfg)
        assert trajectory.densities[0] is init
        assert np.all(trajectory.final.p > 0.0)


class TestInterpolant:
    def test_endpoints_and_half_step(self):
        cfg = make_config(steps=4, horizon=1.0)
        trajectory = solve(cfg)
        tau = cfg.tau
        assert interpolant(trajectory, 0.0) is trajectory.densities[0]
        assert interpolant(trajectory, cfg.horizon) is trajectory.densities[4]
        assert interpolant(trajectory, tau / 2) is trajectory.densities[1]
        assert interpolant(trajectory, tau) is trajectory.densities[1]
        assert interpolant(trajectory, 1.5 * tau) is trajectory.densities[2]

    def test_rejects_out_of_range(self):
        trajectory = solve(make_config(steps=2))
        with pytest.raises(ValueError):
            interpolant(trajectory, -0.1)
        with pytest.raises(ValueError):
            interpolant(trajectory, 1.1)
