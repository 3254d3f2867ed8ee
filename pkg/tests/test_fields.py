"""Tests for core.fields - profiles, gauge, fluxes, turning points."""

import math

import numpy as np
import pytest

from core.errors import ConfigError, DomainError
from core.fields import (
    Constant,
    Gaussian,
    PowerLaw,
    StepLike,
    Tabulated,
    build_profile,
    effective_hamiltonian,
    effective_velocity,
    eval_a,
    eval_b,
    flux_limits,
    theta_window,
    turning_point,
)


class TestGaussian:
    def test_field_at_origin(self, gaussian):
        assert eval_b(gaussian, 0.0) == pytest.approx(0.5641895835, abs=1e-10)

    def test_canonical_gauge_gives_fluxes_zero_and_one(self, gaussian):
        phi_minus, phi_plus, extrapolated = flux_limits(gaussian)
        assert phi_minus == pytest.approx(0.0, abs=1e-15)
        assert phi_plus == pytest.approx(1.0)
        assert extrapolated is False

    def test_a_at_origin_is_half(self, gaussian):
        assert eval_a(gaussian, 0.0) == pytest.approx(0.5)

    def test_explicit_gauge_shifts_fluxes(self):
        phi_minus, phi_plus, _ = flux_limits(Gaussian(a0=0.0))
        assert (phi_minus, phi_plus) == pytest.approx((-0.5, 0.5))

    @pytest.mark.parametrize("x", [-2.5, -0.7, 0.3, 1.3, 4.0])
    def test_closed_form_matches_quadrature(self, gaussian, x):
        assert eval_a(gaussian, x) == pytest.approx(eval_a(gaussian, x, method="quad"), abs=1e-9)

    def test_flux_scales_total(self):
        phi_minus, phi_plus, _ = flux_limits(Gaussian(flux_total=3.0))
        assert phi_plus - phi_minus == pytest.approx(3.0)


class TestPowerLaw:
    def test_linear_field_potential(self, linear_field):
        # a(x) = x|x|/2
        assert eval_a(linear_field, 4.0) == pytest.approx(8.0)
        assert eval_a(linear_field, -2.0) == pytest.approx(-2.0)

    def test_fluxes_are_infinite(self, linear_field):
        phi_minus, phi_plus, _ = flux_limits(linear_field)
        assert phi_minus == -math.inf and phi_plus == math.inf

    @pytest.mark.parametrize("x", [0.5, 1.9, 2.0, 3.0, 7.5, 40.0])
    def test_regularized_primitive_matches_quadrature(self, x):
        profile = PowerLaw(1.0, -0.5)
        assert profile.core == "regularized"
        assert eval_a(profile, x) == pytest.approx(eval_a(profile, x, method="quad"), rel=1e-9, abs=1e-10)

    def test_regularized_primitive_is_odd(self):
        profile = PowerLaw(2.0, 0.5, core="regularized")
        xs = np.array([0.3, 1.0, 2.5, 10.0])
        assert np.allclose(profile.a(-xs), -profile.a(xs))

    def test_band_exponent_and_coefficient(self, linear_field):
        assert linear_field.band_exponent() == pytest.approx(0.5)
        assert linear_field.band_coefficient(1) == pytest.approx(math.sqrt(2.0))
        assert linear_field.band_coefficient(2) == pytest.approx(3.0 * math.sqrt(2.0))

    def test_half_line_core_has_finite_left_flux(self):
        profile = PowerLaw(1.0, 1.0, core="half_line")
        phi_minus, phi_plus, _ = flux_limits(profile)
        assert math.isfinite(phi_minus)
        assert phi_plus == math.inf

    def test_pure_core_rejects_negative_alpha(self):
        with pytest.raises(ConfigError):
            PowerLaw(1.0, -0.5, core="pure")

    @pytest.mark.parametrize("alpha", [-1.0, 0.0, -2.0])
    def test_alpha_out_of_range(self, alpha):
        with pytest.raises(ConfigError) as info:
            PowerLaw(1.0, alpha)
        assert info.value.path == "profile.alpha"


class TestStepAndConstant:
    def test_step_plateaus(self, iwatsuka):
        assert eval_b(iwatsuka, -30.0) == pytest.approx(1.0)
        assert eval_b(iwatsuka, 30.0) == pytest.approx(2.0)

    def test_step_with_zero_plateau_has_finite_flux(self):
        phi_minus, phi_plus, _ = flux_limits(StepLike(0.0, 1.0, 1.0))
        assert phi_minus == pytest.approx(0.0)
        assert phi_plus == math.inf

    def test_step_primitive_matches_quadrature(self, iwatsuka):
        assert eval_a(iwatsuka, 2.7) == pytest.approx(eval_a(iwatsuka, 2.7, method="quad"), abs=1e-9)

    def test_negative_constant_is_not_monotone(self):
        assert Constant(-1.0).monotone is False
        with pytest.raises(DomainError):
            turning_point(Constant(-1.0), 0.5)

    def test_zero_constant_rejected(self):
        with pytest.raises(ConfigError):
            Constant(0.0)


class TestTabulated:
    def _table(self, tail="zero"):
        xs = np.linspace(-3.0, 3.0, 61)
        return Tabulated(tuple(xs), tuple(np.exp(-xs ** 2) / math.sqrt(math.pi)), tail=tail)

    def test_interpolates_samples(self):
        profile = self._table()
        assert eval_b(profile, 0.0) == pytest.approx(1.0 / math.sqrt(math.pi), rel=1e-12)

    def test_outside_grid_raises(self):
        with pytest.raises(DomainError):
            eval_b(self._table(), 3.5)

    def test_zero_tail_gives_finite_extrapolated_flux(self):
        phi_minus, phi_plus, extrapolated = flux_limits(self._table())
        assert extrapolated is True
        assert phi_plus - phi_minus == pytest.approx(1.0, abs=1e-4)

    def test_linear_tail_gives_infinite_flux(self):
        phi_minus, phi_plus, _ = flux_limits(self._table(tail="linear"))
        assert phi_minus == -math.inf and phi_plus == math.inf

    def test_rejects_unsorted_grid(self):
        with pytest.raises(ConfigError):
            Tabulated((0.0, 2.0, 1.0), (1.0, 1.0, 1.0))


class TestBuildProfile:
    def test_gaussian_from_spec(self):
        profile = build_profile({"kind": "gaussian", "flux": 2.0})
        assert isinstance(profile, Gaussian)
        assert profile.flux_total == 2.0

    def test_unknown_kind(self):
        with pytest.raises(ConfigError) as info:
            build_profile({"kind": "dipole"})
        assert info.value.path == "profile.kind"

    def test_unknown_key_carries_path(self):
        with pytest.raises(ConfigError) as info:
            build_profile({"kind": "constant", "b0": 1.0, "strength": 2.0})
        assert info.value.path == "profile.strength"

    def test_describe_echoes_gauge(self, gaussian):
        desc = gaussian.describe()
        assert desc["kind"] == "gaussian"
        assert desc["gauge"] == pytest.approx(0.5)


class TestTurningPoint:
    def test_gaussian_midpoint(self, gaussian):
        assert turning_point(gaussian, 0.5) == pytest.approx(0.0, abs=1e-10)

    def test_linear_field(self, linear_field):
        assert turning_point(linear_field, 8.0) == pytest.approx(4.0, rel=1e-10)
        assert turning_point(linear_field, -2.0) == pytest.approx(-2.0, rel=1e-10)

    MONOTONE = {
        "gaussian": Gaussian(),
        "linear": PowerLaw(1.0, 1.0),
        "step": StepLike(1.0, 2.0, 1.0),
        "half_line": PowerLaw(1.0, 1.0, core="half_line"),
        "decaying": PowerLaw(1.0, -0.5),
    }

    @pytest.mark.parametrize("name", sorted(MONOTONE))
    def test_inverts_a(self, name):
        profile = self.MONOTONE[name]
        for x in (-1.7, -0.6, 0.4, 1.1, 2.0):
            assert turning_point(profile, float(eval_a(profile, x))) == pytest.approx(x, abs=1e-8)

    @pytest.mark.parametrize("name", sorted(MONOTONE))
    def test_a_strictly_increasing(self, name):
        profile = self.MONOTONE[name]
        assert profile.monotone
        assert np.all(np.diff(eval_a(profile, np.linspace(-3.0, 3.0, 601))) > 0)

    @pytest.mark.parametrize("xi", [0.0, 1.0, -0.2, 1.5])
    def test_outside_flux_range_raises(self, gaussian, xi):
        with pytest.raises(DomainError):
            turning_point(gaussian, xi)

    def test_effective_velocity(self, gaussian):
        assert effective_velocity(gaussian, 0.5) == pytest.approx(1.0 / math.sqrt(math.pi))
        curve = effective_hamiltonian(gaussian, [0.3, 0.5, 0.7])
        assert curve[1] > curve[0] and curve[0] == pytest.approx(curve[2])

    def test_theta_window(self, gaussian, linear_field):
        assert theta_window(gaussian) == pytest.approx((0.1, 0.9))
        with pytest.raises(DomainError):
            theta_window(linear_field)
