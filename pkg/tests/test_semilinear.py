"""Regularized indicator properties and constrained Newton continuation."""

import math

import numpy as np
import pytest

from unstablefb import (
    ContinuationConfig,
    FixedPointError,
    ScalarField,
    SmoothedHeaviside,
    StageFailed,
    assemble,
    build_disk_grid,
    build_sector_grid,
    eval_origin,
    f_eps,
    f_eps_prime,
    field_from_function,
    initial_guess,
    newton_stage,
    residual_check,
    solve_fixed_point,
    transition_measure,
)

EPS_VALUES = [0.2, 0.1, 0.05, 0.0125]


class TestSmoothedIndicator:
    @pytest.mark.parametrize("eps", EPS_VALUES)
    def test_plateau_on_nonnegative_arguments(self, eps):
        z = np.linspace(0.0, 5.0, 101)
        assert np.all(f_eps(z, eps) == 1.0)

    @pytest.mark.parametrize("eps", EPS_VALUES)
    def test_vanishes_below_minus_eps(self, eps):
        z = np.linspace(-5.0, -eps, 101)
        assert np.all(f_eps(z, eps) == 0.0)

    @pytest.mark.parametrize("eps", EPS_VALUES)
    def test_dominates_indicator(self, eps):
        z = np.linspace(-1.0, 1.0, 2001)
        assert np.all(f_eps(z, eps) >= (z > 0).astype(float))

    def test_monotone_in_width(self):
        """Shrinking the width lowers the profile toward the indicator."""
        z = np.linspace(-1.0, 0.5, 1501)
        for wide, narrow in zip(EPS_VALUES, EPS_VALUES[1:]):
            assert np.all(f_eps(z, narrow) <= f_eps(z, wide) + 1e-15)

    def test_interior_values(self):
        # quintic ramp q(t) = 6t^5 - 15t^4 + 10t^3 evaluated at t = 1/2, 3/4
        eps = 0.08
        assert f_eps(-eps / 2.0, eps) == pytest.approx(0.5, abs=1e-15)
        assert f_eps(-eps / 4.0, eps) == pytest.approx(0.896484375, abs=1e-15)

    @pytest.mark.parametrize("eps", EPS_VALUES)
    def test_slope_bound(self, eps):
        z = np.linspace(-2.0, 1.0, 4001)
        bound = 15.0 / (8.0 * eps)
        d = f_eps_prime(z, eps)
        assert np.all(d >= 0.0)
        assert np.max(d) <= bound + 1e-12
        # the bound is attained at the ramp midpoint
        assert f_eps_prime(-eps / 2.0, eps) == pytest.approx(bound, rel=1e-12)

    def test_derivative_matches_finite_differences(self):
        eps = 0.1
        z = np.linspace(-0.15, 0.05, 401)
        h = 1e-7
        fd = (f_eps(z + h, eps) - f_eps(z - h, eps)) / (2.0 * h)
        assert np.max(np.abs(fd - f_eps_prime(z, eps))) < 1e-5

    def test_callable_wrapper_consistent(self):
        fw = SmoothedHeaviside(0.05)
        z = np.linspace(-0.2, 0.1, 301)
        assert np.array_equal(fw(z), f_eps(z, 0.05))
        assert np.array_equal(fw.derivative(z), f_eps_prime(z, 0.05))
        assert fw.derivative_bound == pytest.approx(15.0 / (8.0 * 0.05))

    def test_width_must_be_positive(self):
        with pytest.raises(ValueError):
            f_eps(0.0, 0.0)
        with pytest.raises(ValueError):
            SmoothedHeaviside(-0.1)


class TestContinuationConfig:
    def test_schedule_halves_down_to_floor(self):
        cfg = ContinuationConfig(eps_start=0.2, eps_min=0.0125, eps_ratio=0.5)
        assert cfg.schedule() == [0.2, 0.1, 0.05, 0.025, 0.0125]

    def test_schedule_clamps_last_step(self):
        cfg = ContinuationConfig(eps_start=0.2, eps_min=0.06, eps_ratio=0.5)
        assert cfg.schedule() == [0.2, 0.1, 0.06]

    def test_validation(self):
        with pytest.raises(ValueError):
            ContinuationConfig(eps_start=0.1, eps_min=0.2)
        with pytest.raises(ValueError):
            ContinuationConfig(eps_ratio=1.5)


class TestInitialGuess:
    def test_zero_data_reproduces_quarter_shift(self):
        grid = build_sector_grid(2, 64, 64)
        u0, kappa = initial_guess(grid, np.zeros(64))
        assert kappa == pytest.approx(0.25, abs=1e-3)
        assert abs(eval_origin(u0)) <= 1e-10

    def test_pure_mode_data_keeps_small_shift(self):
        grid = build_sector_grid(2, 64, 64)
        u0, kappa = initial_guess(grid, lambda p: np.cos(2.0 * p))
        # harmonic extension of cos(2 phi) vanishes at the origin, so the
        # shift still balances only the unit sink
        assert kappa == pytest.approx(0.25, abs=1e-3)
        assert abs(eval_origin(u0)) <= 1e-10


class TestNewtonStage:
    def test_converges_quickly_from_linear_predictor(self):
        grid = build_sector_grid(2, 64, 64)
        lap = assemble(grid)
        g = 40.0 * np.cos(2.0 * grid.phi)
        u0, kappa = initial_guess(grid, g, lap)
        cfg = ContinuationConfig(eps_start=0.2, eps_min=0.2)
        u, kappa, iters, pde_res, origin_res = newton_stage(
            lap, u0.values.ravel(), kappa, 0.2, g, cfg)
        assert iters <= 25
        assert pde_res <= cfg.newton_tol
        assert origin_res <= cfg.newton_tol

    def test_idempotent_on_converged_iterate(self):
        grid = build_sector_grid(2, 64, 64)
        lap = assemble(grid)
        g = np.zeros(64)
        cfg = ContinuationConfig(eps_start=0.2, eps_min=0.2)
        u0, kappa = initial_guess(grid, g, lap)
        u, kappa, _, _, _ = newton_stage(lap, u0.values.ravel(), kappa, 0.2, g, cfg)
        u2, kappa2, iters, _, _ = newton_stage(lap, u, kappa, 0.2, g, cfg)
        assert iters == 0
        assert np.array_equal(u, u2) and kappa == kappa2

    def test_width_below_grid_floor_rejected(self):
        grid = build_sector_grid(2, 64, 64)
        lap = assemble(grid)
        cfg = ContinuationConfig()
        with pytest.raises(ValueError):
            newton_stage(lap, np.zeros(grid.size), 0.0, 0.001, np.zeros(64), cfg)

    def test_unreachable_tolerance_fails_cleanly(self):
        grid = build_sector_grid(2, 32, 32)
        lap = assemble(grid)
        g = np.zeros(32)
        cfg = ContinuationConfig(eps_start=0.2, eps_min=0.2,
                                 newton_tol=1e-30, max_newton=3)
        u0, kappa = initial_guess(grid, g, lap)
        with pytest.raises(StageFailed):
            newton_stage(lap, u0.values.ravel(), kappa, 0.2, g, cfg)


class TestContinuation:
    def test_coarse_cross_solution(self):
        grid = build_sector_grid(2, 64, 64)
        cfg = ContinuationConfig(eps_start=0.2, eps_min=0.05)
        sol = solve_fixed_point(grid, lambda p: 40.0 * np.cos(2.0 * p), cfg)
        assert sol.converged
        assert sol.eps == 0.05
        assert sol.eps_schedule == [0.2, 0.1, 0.05]
        assert len(sol.newton_iters) == 3
        assert all(n <= 25 for n in sol.newton_iters)
        assert abs(eval_origin(sol.u)) <= 1e-8
        assert 0.0 < sol.kappa < 0.26
        max_res, zone = residual_check(sol)
        assert max_res <= 1e-8
        assert zone > 0.0
        assert len(sol.transition_measures) == 3

    def test_disk_grids_are_rejected(self):
        with pytest.raises(ValueError):
            solve_fixed_point(build_disk_grid(32, 32), lambda p: np.cos(2 * p))

    def test_width_floor_enforced_by_schedule(self):
        grid = build_sector_grid(2, 32, 32)
        cfg = ContinuationConfig(eps_min=0.0125)  # floor is 2/32 = 0.0625
        with pytest.raises(ValueError):
            solve_fixed_point(grid, lambda p: np.cos(2 * p), cfg)

    def test_failure_carries_last_converged_stage(self):
        grid = build_sector_grid(2, 32, 32)
        cfg = ContinuationConfig(eps_start=0.2, eps_min=0.2,
                                 newton_tol=1e-30, max_newton=2)
        with pytest.raises(FixedPointError) as info:
            solve_fixed_point(grid, lambda p: np.cos(2 * p), cfg)
        assert info.value.partial is None  # first stage already failed
        assert info.value.stage.eps == 0.2


class TestTransitionMeasure:
    def test_annulus_band_area(self):
        g = build_disk_grid(128, 128)
        u = field_from_function(g, lambda r, p: r - 0.5)
        eps = 0.05
        # {|r - 1/2| <= eps} is an annulus of area 2 pi eps; whole cells are
        # counted, so allow a one-cell rind on each side
        rind = 2.0 * (2.0 * math.pi * 0.5 * g.dr)
        assert abs(transition_measure(u, eps) - 2.0 * math.pi * eps) <= rind
