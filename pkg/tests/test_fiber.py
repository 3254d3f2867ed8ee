"""Tests for core.fiber - operator assembly, Sturm counts, eigenpairs, domain fitting."""

import math

import numpy as np
import pytest

from core.errors import ConfigError, UnboundedRegionError
from core.fiber import (
    Grid,
    GridPolicy,
    MagneticPotential,
    QuadraticPotential,
    assemble,
    auto_domain,
    count_below,
    eigenvalues_below,
    eigenvector,
    fit_domain,
    from_potential,
    near_threshold_buffer,
    nth_eigenvalue,
    solve_fiber,
    solve_lowest,
)
from core.fields import Gaussian, PowerLaw, eval_a
from core.spectrum import ess_threshold


class TestGrid:
    def test_centered_grid_is_odd_and_symmetric(self):
        grid = Grid.centered(1.0, 2.0, 0.3)
        assert grid.n % 2 == 1
        assert grid.spacing <= 0.3
        assert grid.points[grid.n // 2] == pytest.approx(1.0)

    def test_refined_halves_spacing(self):
        grid = Grid(-1.0, 1.0, 21)
        assert grid.refined().spacing == pytest.approx(grid.spacing / 2)

    def test_enlarged_keeps_spacing(self):
        grid = Grid(-1.0, 1.0, 21)
        big = grid.enlarged(2.0)
        assert big.spacing == pytest.approx(grid.spacing)
        assert (big.x_min, big.x_max) == pytest.approx((-2.0, 2.0))

    def test_rejects_empty_domain(self):
        with pytest.raises(ConfigError):
            Grid(1.0, 1.0, 11)

    def test_policy_validation(self):
        with pytest.raises(ConfigError):
            GridPolicy(points_per_length=2)
        with pytest.raises(ConfigError):
            GridPolicy(epsilon_trunc=2.0)


class TestSturmCount:
    @pytest.mark.parametrize("energy, expected", [(0.5, 0), (2.0, 1), (6.0, 3), (10.5, 5)])
    def test_oscillator_counts(self, oscillator, energy, expected):
        # N(E) = floor((E/(h v) + 1) / 2) away from the levels
        assert count_below(oscillator, energy) == expected

    def test_count_matches_dense_solver(self):
        grid = Grid(-6.0, 6.0, 301)
        T = from_potential(np.cos(grid.points) ** 2 + grid.points ** 2 / 10, 0.5, grid)
        dense = np.linalg.eigvalsh(np.diag(T.diag) + np.diag(T.offdiag, 1) + np.diag(T.offdiag, -1))
        for energy in (0.3, 1.0, 2.5):
            assert count_below(T, energy) == int(np.sum(dense < energy))

    def test_infinite_energy_rejected(self, oscillator):
        with pytest.raises(ConfigError):
            count_below(oscillator, math.inf)


class TestEigenvalues:
    def test_oscillator_levels(self, oscillator):
        values = eigenvalues_below(oscillator, 10.0, 5)
        assert len(values) == 5
        assert values == pytest.approx([1.0, 3.0, 5.0, 7.0, 9.0], abs=5e-3)
        assert values == sorted(values)

    def test_k_max_limits_output(self, oscillator):
        assert len(eigenvalues_below(oscillator, 10.0, 2)) == 2

    def test_nothing_below_ground_state(self, oscillator):
        assert eigenvalues_below(oscillator, 0.9, 3) == []

    def test_nth_eigenvalue_matches_sequence(self, oscillator):
        values = eigenvalues_below(oscillator, 10.0, 4)
        assert nth_eigenvalue(oscillator, 3) == pytest.approx(values[2], abs=1e-9)

    def test_bad_k_max(self, oscillator):
        with pytest.raises(ConfigError):
            eigenvalues_below(oscillator, 1.0, 0)


class TestEigenvector:
    def test_normalized_and_small_residual(self, oscillator):
        lam = eigenvalues_below(oscillator, 2.0, 1)[0]
        pair = eigenvector(oscillator, lam)
        assert np.sum(pair.psi ** 2) * oscillator.grid.spacing == pytest.approx(1.0)
        assert pair.residual <= 1e-8 * oscillator.norm

    def test_ground_state_shape(self, oscillator):
        lam = eigenvalues_below(oscillator, 2.0, 1)[0]
        pair = eigenvector(oscillator, lam)
        middle = oscillator.grid.n // 2
        # psi_0 = pi^(-1/4) exp(-s^2 / 2)
        assert pair.psi[middle] == pytest.approx(math.pi ** -0.25, rel=1e-3)
        assert np.all(pair.psi > -1e-8)

    def test_deterministic_for_a_seed(self, oscillator):
        lam = eigenvalues_below(oscillator, 4.0, 2)[1]
        first = eigenvector(oscillator, lam, seed=7)
        second = eigenvector(oscillator, lam, seed=7)
        assert np.array_equal(first.psi, second.psi)


class TestAssemble:
    def test_landau_fiber_entries(self, landau):
        grid = Grid(-8.0, 8.0, 801)
        T = assemble(landau, 0.5, 1.0, grid)
        expected = (0.5 - eval_a(landau, grid.points)) ** 2
        assert np.allclose(T.potential, expected)
        assert np.allclose(T.offdiag, -1.0 / grid.spacing ** 2)
        assert T.potential_floor == pytest.approx(expected.min())
        assert T.potential_floor >= 0

    def test_landau_levels_on_fixed_grid(self, landau):
        T = assemble(landau, 0.5, 1.0, Grid(-8.0, 8.0, 801))
        assert eigenvalues_below(T, 6.0, 3) == pytest.approx([1.0, 3.0, 5.0], abs=1e-3)


class TestFitDomain:
    def test_oscillator_domain_covers_allowed_region(self, policy):
        grid = fit_domain(QuadraticPotential(1.0), 1.0, 6.0, policy)
        half = math.sqrt(6.0)
        assert grid.x_min < -half and grid.x_max > half
        assert not grid.capped

    def test_empty_allowed_region(self, gaussian, policy):
        # V >= thr = 1 everywhere at xi = -1, so nothing lies below 0.5
        assert fit_domain(MagneticPotential(gaussian, -1.0), 1.0, 0.5, policy) is None

    def test_unbounded_allowed_region(self, gaussian, policy):
        with pytest.raises(UnboundedRegionError):
            fit_domain(MagneticPotential(gaussian, 0.5), 1.0, 0.3, policy)

    def test_buffer_grows_with_spacing(self):
        assert near_threshold_buffer(0.1) > near_threshold_buffer(0.01) > 1e-6

    def test_auto_domain_is_fit_domain_of_the_fiber(self, landau, policy):
        grid = auto_domain(landau, 0.5, 1.0, 6.0, policy)
        assert grid == fit_domain(MagneticPotential(landau, 0.5), 1.0, 6.0, policy)
        assert grid.x_min < 0.5 - math.sqrt(6.0) and grid.x_max > 0.5 + math.sqrt(6.0)

    def test_auto_domain_empty_outside_flux_range(self, gaussian, policy):
        assert auto_domain(gaussian, 2.0, 1.0, 0.5, policy) is None


class TestSolve:
    def test_richardson_beats_plain_grid(self):
        potential = QuadraticPotential(1.0)
        plain = solve_fiber(potential, 1.0, 6.0, 3, GridPolicy(richardson=False))
        extrapolated = solve_fiber(potential, 1.0, 6.0, 3, GridPolicy())
        exact = np.array([1.0, 3.0, 5.0])
        assert np.all(np.isnan(plain.errors))
        assert np.max(np.abs(extrapolated.eigenvalues - exact)) < np.max(np.abs(plain.eigenvalues - exact))
        assert np.max(np.abs(extrapolated.eigenvalues - exact)) < 1e-6

    def test_error_estimate_is_reported(self):
        solution = solve_fiber(QuadraticPotential(2.0), 0.5, 4.0, 2)
        assert solution.errors.shape == solution.eigenvalues.shape
        assert np.all(solution.errors >= 0)

    def test_solve_lowest_raises_cutoff_until_found(self):
        # without a velocity the cutoff starts at energy_cap = 10 (5 levels) and doubles
        solution = solve_lowest(QuadraticPotential(1.0), 1.0, 6, velocity=None)
        assert solution.eigenvalues.size == 6
        assert solution.eigenvalues[-1] == pytest.approx(11.0, abs=1e-5)

    def test_landau_fiber(self, landau):
        solution = solve_lowest(MagneticPotential(landau, 0.7), 1.0, 5, velocity=1.0)
        assert solution.eigenvalues == pytest.approx([1.0, 3.0, 5.0, 7.0, 9.0], abs=1e-6)

    def test_vectors_live_on_finest_grid(self):
        solution = solve_fiber(QuadraticPotential(1.0), 1.0, 4.0, 2, vectors=True)
        assert len(solution.pairs) == 2
        assert solution.pairs[0].grid == solution.operator.grid
        assert solution.operator.grid.n == 2 * solution.grid.n - 1


class TestDiscreteInvariants:
    def test_second_order_in_the_spacing(self):
        grids = [Grid(-10.0, 10.0, 401)]
        for _ in range(2):
            grids.append(grids[-1].refined())
        spacings = np.log([g.spacing for g in grids])
        for n, exact in enumerate([1.0, 3.0, 5.0], start=1):
            errors = [abs(nth_eigenvalue(from_potential(g.points ** 2, 1.0, g), n, 1e-13) - exact) for g in grids]
            slope = np.polyfit(spacings, np.log(errors), 1)[0]
            assert 1.7 <= slope <= 2.3, f"n={n}: slope {slope:.3f}"

    def test_nonnegative_bump_never_lowers_levels(self):
        grid = Grid(-8.0, 8.0, 801)
        x = grid.points
        base = from_potential(x ** 2, 1.0, grid)
        rng = np.random.default_rng(5)
        for _ in range(5):
            centers = rng.uniform(-3.0, 3.0, 3)
            heights = rng.uniform(0.0, 2.0, 3)
            bump = sum(c * np.exp(-(x - x0) ** 2) for c, x0 in zip(heights, centers))
            bumped = from_potential(x ** 2 + bump, 1.0, grid)
            for n in range(1, 6):
                assert nth_eigenvalue(bumped, n, 1e-12) >= nth_eigenvalue(base, n, 1e-12) - 1e-10

    def test_doubling_the_domain_keeps_levels(self, landau, policy):
        grid = auto_domain(landau, 0.5, 1.0, 6.0, policy)
        center = 0.5 * (grid.x_min + grid.x_max)
        half = 0.5 * (grid.x_max - grid.x_min)
        doubled = Grid(center - 2 * half, center + 2 * half, 2 * grid.n - 1)
        assert doubled.spacing == pytest.approx(grid.spacing)
        potential = MagneticPotential(landau, 0.5)
        tight = GridPolicy(tol_lambda=1e-13)
        fitted = solve_fiber(potential, 1.0, 6.0, 3, tight, grid=grid)
        wide = solve_fiber(potential, 1.0, 6.0, 3, tight, grid=doubled)
        assert fitted.eigenvalues.size == wide.eigenvalues.size == 3
        for lam, lam_wide in zip(fitted.eigenvalues, wide.eigenvalues):
            assert abs(lam - lam_wide) <= policy.tolerance(lam) + policy.epsilon_trunc

    def test_sturm_count_brackets_each_eigenvalue(self, oscillator):
        tol = 1e-8
        values = eigenvalues_below(oscillator, 10.0, 5)
        for k, lam in enumerate(values, start=1):
            assert count_below(oscillator, lam + tol) >= k
            assert count_below(oscillator, lam - tol) <= k - 1

    @pytest.mark.parametrize("shift", [-0.7, 0.25, 1.5])
    def test_gauge_shift_moves_the_fiber(self, gaussian, linear_field, shift):
        grid = Grid(-6.0, 6.0, 1201)
        for profile, shifted, xi in (
            (gaussian, Gaussian(a0=gaussian.gauge + shift), 0.5),
            (linear_field, PowerLaw(1.0, 1.0, a0=linear_field.gauge + shift), 2.0),
        ):
            T = assemble(profile, xi, 0.1, grid)
            T_shifted = assemble(shifted, xi + shift, 0.1, grid)
            assert np.allclose(T.potential, T_shifted.potential, atol=1e-12)
            assert eigenvalues_below(T_shifted, 0.45, 3) == pytest.approx(eigenvalues_below(T, 0.45, 3), abs=1e-9)
            assert ess_threshold(shifted, xi + shift) == pytest.approx(ess_threshold(profile, xi))
