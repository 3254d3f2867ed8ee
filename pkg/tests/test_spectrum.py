"""Tests for core.spectrum - slices, sweeps, Sigma_lambda, band derivatives, flatness."""

import math

import numpy as np
import pytest

import core.spectrum as spectrum
from core.errors import ConfigError, DomainError, NumericalError
from core.fiber import GridPolicy
from core.fields import PowerLaw
from core.spectrum import (
    CONVERGED,
    NEAR_THRESHOLD,
    BandDiagram,
    Interval,
    Verdict,
    band_derivative,
    component_samples,
    ess_threshold,
    exclusion_summary,
    finite_difference_derivative,
    flatband_samples,
    flatness_test,
    sigma_lambda,
    spectrum_slice,
    sweep_bands,
)

LANDAU_LEVELS = [1.0, 3.0, 5.0, 7.0, 9.0]


class TestThreshold:
    def test_gaussian_threshold(self, gaussian):
        for xi in (-0.4, 0.2, 0.5, 0.9, 1.7):
            assert ess_threshold(gaussian, xi) == pytest.approx(min(xi ** 2, (xi - 1) ** 2))

    def test_infinite_flux_has_no_essential_spectrum(self, landau, linear_field):
        assert ess_threshold(landau, 3.0) == math.inf
        assert ess_threshold(linear_field, -2.0) == math.inf


class TestSigmaLambda:
    def test_gaussian_three_components(self, gaussian):
        sigma = sigma_lambda(gaussian, 0.04)
        bounds = [c.to_list() for c in sigma.components]
        assert len(bounds) == 3
        assert bounds[0][0] == -math.inf and bounds[0][1] == pytest.approx(-0.2)
        assert bounds[1] == pytest.approx([0.2, 0.8])
        assert bounds[2][0] == pytest.approx(1.2) and bounds[2][1] == math.inf

    def test_overlapping_holes_merge(self, gaussian):
        sigma = sigma_lambda(gaussian, 0.3)
        assert len(sigma.components) == 2
        assert sigma.components[0].hi == pytest.approx(-math.sqrt(0.3))
        assert sigma.components[1].lo == pytest.approx(1 + math.sqrt(0.3))

    def test_whole_line_for_infinite_flux(self, landau):
        sigma = sigma_lambda(landau, 1.0)
        assert sigma.components == [Interval(-math.inf, math.inf)]

    def test_component_lookup(self, gaussian):
        sigma = sigma_lambda(gaussian, 0.04)
        assert sigma.component_of(0.5) == sigma.components[1]
        assert sigma.component_of(0.0) is None

    def test_negative_lambda_rejected(self, gaussian):
        with pytest.raises(ConfigError):
            sigma_lambda(gaussian, -0.1)

    def test_samples_stay_inside(self):
        component = Interval(0.2, 0.8)
        xs = component_samples(component, 9)
        assert xs.size == 9
        assert np.all((xs > 0.2) & (xs < 0.8))
        assert np.all(np.diff(xs) > 0)

    def test_samples_on_half_line(self):
        xs = component_samples(Interval(1.2, math.inf), 6, reach=4.0)
        assert np.all((xs > 1.2) & (xs < 5.2))


class TestSlice:
    def test_landau_levels(self, landau):
        result = spectrum_slice(landau, 0.0, k_max=5)
        assert result.eigenvalues == pytest.approx(LANDAU_LEVELS, abs=1e-6)
        assert result.flags == [CONVERGED] * 5
        assert result.ess_threshold == math.inf

    def test_no_eigenvalues_outside_flux_range(self, gaussian):
        # V >= thr everywhere when xi lies outside [0, 1]
        result = spectrum_slice(gaussian, 2.0)
        assert result.eigenvalues == []
        assert result.ess_threshold == pytest.approx(1.0)

    def test_semiclassical_slices_separate(self, gaussian, policy):
        first = spectrum_slice(gaussian, 0.3, h=0.01, k_max=1)
        second = spectrum_slice(gaussian, 0.5, h=0.01, k_max=1)
        gap = abs(first.eigenvalues[0] - second.eigenvalues[0])
        budget = (2 * max(first.errors[0], second.errors[0]) + policy.epsilon_trunc
                  + policy.tolerance(max(first.eigenvalues[0], second.eigenvalues[0])))
        assert gap > 3 * budget

    def test_eigenvalues_below_threshold(self, gaussian):
        result = spectrum_slice(gaussian, 0.5, h=0.05, k_max=4)
        assert result.eigenvalues
        assert all(lam < result.ess_threshold for lam in result.eigenvalues)
        assert result.eigenvalues == sorted(result.eigenvalues)

    def test_to_dict_has_grid_metadata(self, landau):
        data = spectrum_slice(landau, 1.0, k_max=2).to_dict()
        assert data["grid_points"] > 0
        assert data["spacing"] > 0
        assert len(data["eigenvalues"]) == 2


class TestSweep:
    def test_landau_bands_are_levels(self, landau):
        diagram = sweep_bands(landau, (-3.0, 3.0), 25, 5)
        assert diagram.values.shape == (25, 5)
        assert np.max(np.abs(diagram.values - np.array(LANDAU_LEVELS))) < 1e-6
        assert diagram.status.count("ok") == 25

    def test_empty_range_gives_empty_diagram(self, landau):
        diagram = sweep_bands(landau, (1.0, 1.0), 10, 3)
        assert diagram.empty
        assert diagram.values.shape == (0, 3)

    def test_iwatsuka_limits(self, iwatsuka):
        diagram = sweep_bands(iwatsuka, (0.0, 0.0), 2, 2, xis=[-30.0, 30.0])
        # lambda_n -> (2n - 1) b_- on the left, (2n - 1) b_+ on the right
        assert diagram.values[0] == pytest.approx([1.0, 3.0], abs=1e-5)
        assert diagram.values[1] == pytest.approx([2.0, 6.0], abs=1e-5)

    def test_failed_slice_becomes_gap(self, landau, monkeypatch):
        original = spectrum.spectrum_slice

        def flaky(profile, xi, *args, **kwargs):
            if xi > 0.25:
                raise NumericalError("forced failure")
            return original(profile, xi, *args, **kwargs)

        monkeypatch.setattr(spectrum, "spectrum_slice", flaky)
        diagram = sweep_bands(landau, (-1.0, 1.0), 5, 2)
        assert diagram.status == ["ok", "ok", "ok", "gap", "gap"]
        assert np.all(np.isnan(diagram.values[3:]))
        assert diagram.notes[4] == "forced failure"
        assert diagram.sample_flags(4) == "gap"
        assert diagram.sample_flags(0) == "ok"

    def test_sample_flags_name_the_band(self, landau):
        diagram = BandDiagram(landau, np.array([0.0]), np.array([[1.0, 2.9]]), np.zeros((1, 2)),
                              np.array([3.0]), [[CONVERGED, NEAR_THRESHOLD, "capped"]], ["ok"], [""], k_max=2)
        assert diagram.sample_flags(0) == "capped;near-threshold:2"

    def test_bad_arguments(self, landau):
        with pytest.raises(ConfigError):
            sweep_bands(landau, (-1.0, 1.0), 1, 2)
        with pytest.raises(ConfigError):
            sweep_bands(landau, (-1.0, 1.0), 5, 0)


class TestBandDerivative:
    def test_landau_bands_have_zero_slope(self, landau):
        assert band_derivative(landau, 0.4, 1) == pytest.approx(0.0, abs=1e-6)

    def _derivative_cases(self):
        rng = np.random.default_rng(3)
        cases = []
        for kind, lo, hi, bands, h, count in (
            ("constant", -2.0, 2.0, (1, 2), 1.0, 6),
            ("linear", 1.0, 4.0, (1, 2), 1.0, 8),
            ("gaussian", 0.35, 0.65, (1,), 0.1, 6),
            ("step", -2.0, 3.0, (1, 2), 1.0, 6),
        ):
            for _ in range(count):
                cases.append((kind, float(rng.uniform(lo, hi)), int(rng.choice(bands)), h))
        return cases

    def test_eigenfunction_formula_matches_difference(self, landau, linear_field, gaussian, iwatsuka):
        profiles = {"constant": landau, "linear": linear_field, "gaussian": gaussian, "step": iwatsuka}
        cases = self._derivative_cases()
        assert len(cases) >= 20
        for kind, xi, n, h in cases:
            result = finite_difference_derivative(profiles[kind], xi, n, h=h)
            assert result["difference"] < 1e-5 * max(1.0, abs(result["finite_difference"])), (kind, xi, n)

    def test_increasing_band_for_power_law(self, linear_field):
        assert band_derivative(linear_field, 3.0, 1) > 0

    def test_missing_band_raises(self, gaussian):
        with pytest.raises(DomainError):
            band_derivative(gaussian, 2.0, 1)


class TestFlatness:
    def _diagram(self, profile, lam, policy=GridPolicy(), k_max=3):
        xis = flatband_samples(profile, lam, 12)
        return sweep_bands(profile, (0.0, 0.0), 2, k_max, policy=policy, xis=xis)

    def test_landau_level_is_flat_at_its_energy(self, landau):
        verdicts = flatness_test(self._diagram(landau, 1.0), 1.0)
        assert all(v.verdict == Verdict.FLAT for v in verdicts)
        assert verdicts[0].matches_level
        assert exclusion_summary(verdicts) == "no"

    def test_landau_between_levels_is_excluded(self, landau):
        verdicts = flatness_test(self._diagram(landau, 2.0), 2.0)
        assert not any(v.matches_level for v in verdicts)
        assert exclusion_summary(verdicts) == "yes"

    @pytest.mark.parametrize("lam", [0.1, 0.3])
    def test_landau_bands_stay_flat_below_first_level(self, landau, lam):
        # bottom is 1 everywhere, above 2 lambda but not rising
        verdicts = flatness_test(self._diagram(landau, lam), lam)
        assert [v.verdict for v in verdicts] == [Verdict.FLAT] * 3
        assert not any(v.matches_level for v in verdicts)
        assert exclusion_summary(verdicts) == "yes"

    def test_bounded_component_gets_sampled_verdict(self, gaussian):
        sigma = sigma_lambda(gaussian, 0.04)
        verdicts = flatness_test(self._diagram(gaussian, 0.04), 0.04)
        middle = [v for v in verdicts if v.component == sigma.components[1]]
        assert middle
        assert all(v.verdict != Verdict.NON_FLAT_BY_DIVERGENCE for v in middle)
        outer = [v for v in verdicts if v.component != sigma.components[1]]
        assert all(v.verdict == Verdict.NON_FLAT_BY_DIVERGENCE for v in outer)

    @pytest.mark.parametrize("lam", [0.3, 0.5, 1.0])
    def test_gaussian_excluded_by_divergence(self, gaussian, lam):
        verdicts = flatness_test(self._diagram(gaussian, lam), lam)
        assert verdicts
        assert all(v.verdict == Verdict.NON_FLAT_BY_DIVERGENCE for v in verdicts)
        assert exclusion_summary(verdicts) == "yes"

    def test_power_law_bands_are_not_flat(self):
        profile = PowerLaw(1.0, 1.0)
        diagram = sweep_bands(profile, (0.0, 0.0), 2, 2, xis=np.linspace(-2.0, 2.0, 9))
        verdicts = flatness_test(diagram, 0.5)
        assert all(v.verdict in (Verdict.NON_FLAT, Verdict.NON_FLAT_BY_DIVERGENCE) for v in verdicts)

    def test_without_refinement_is_inconclusive(self, landau):
        diagram = self._diagram(landau, 1.0, policy=GridPolicy(richardson=False), k_max=1)
        verdicts = flatness_test(diagram, 1.0)
        assert [v.verdict for v in verdicts] == [Verdict.INCONCLUSIVE]
        assert exclusion_summary(verdicts) == "inconclusive"

    def test_too_few_samples_is_inconclusive(self, landau):
        diagram = sweep_bands(landau, (0.0, 0.0), 2, 1, xis=[0.0, 1.0])
        verdicts = flatness_test(diagram, 1.0, min_samples=5)
        assert verdicts[0].verdict == Verdict.INCONCLUSIVE

    def test_empty_verdicts_are_inconclusive(self):
        assert exclusion_summary([]) == "inconclusive"
