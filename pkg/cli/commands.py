"""
commands.py - One function per subcommand: RunConfig in, RunReport out.

Every command follows the same shape: pull its block out of the config,
call into core/, and append records (for JSON), table rows (for CSV) and
curves (for plotdata). Nothing here prints; main.py does that.
"""

import math
import time
import logging
from typing import Callable

import numpy as np

from cli.config import RunConfig
from cli.report import RunReport
from core.errors import NotEmbeddedError
from core.fields import effective_velocity, flux_limits
from core.fiber import MagneticPotential
from core.scattering import embedded_exclusion
from core.semiclassical import (
    AgmonWeight,
    agmon_identity_residual,
    agmon_rate,
    asymptotic_fit,
    compare_harmonic,
    counting_check,
    decay_study,
    eta_policy,
    inf_spectrum_check,
    window_velocities,
)
from core.spectrum import (
    Verdict,
    ess_threshold,
    exclusion_summary,
    flatband_samples,
    flatness_test,
    sigma_lambda,
    spectrum_slice,
    sweep_bands,
)

logger = logging.getLogger(__name__)


def _new_report(command: str, config: RunConfig, version: str) -> RunReport:
    return RunReport(command=command, config=config.to_dict(), version=version, seed=config.grid.seed)


def _window(config: RunConfig):
    window = config.harmonic.window
    return tuple(window) if window is not None else None


def _v_minus(config: RunConfig, theta: float) -> float:
    """min b(x_theta) over the window, or v_theta itself when no window exists."""
    phi_minus, phi_plus = flux_limits(config.profile)[:2]
    if config.harmonic.window is None and not (math.isfinite(phi_minus) and math.isfinite(phi_plus)):
        return effective_velocity(config.profile, theta)
    return window_velocities(config.profile, _window(config))[0]


# ----------------------------------------------------------------------
# slice / bands
# ----------------------------------------------------------------------

def cmd_slice(config: RunConfig, version: str, jobs: int = 1) -> RunReport:
    block = config.slice
    report = _new_report("slice", config, version)
    result = spectrum_slice(config.profile, block.xi, block.h, block.k_max, config.grid)
    report.record("spectrum", "spectrum_slice", {"xi": block.xi, "h": block.h, "k_max": block.k_max},
                  result.to_dict())
    table = report.table("eigenvalues", ["xi", "n", "lambda", "error", "flag", "ess_threshold"])
    for n, (lam, err, flag) in enumerate(zip(result.eigenvalues, result.errors, result.flags), start=1):
        table.add(block.xi, n, lam, err, flag, result.ess_threshold)
    report.verdicts["count"] = len(result.eigenvalues)
    return report


def cmd_bands(config: RunConfig, version: str, jobs: int = 1) -> RunReport:
    block = config.sweep
    report = _new_report("bands", config, version)
    diagram = sweep_bands(config.profile, (block.xi_min, block.xi_max), block.samples,
                          block.k_max, block.h, config.grid, jobs)
    report.record("spectrum", "sweep_bands",
                  {"xi_min": block.xi_min, "xi_max": block.xi_max, "samples": block.samples,
                   "k_max": block.k_max, "h": block.h},
                  {**diagram.metadata(), "xi": diagram.xi, "values": diagram.values,
                   "errors": diagram.errors, "thresholds": diagram.thresholds,
                   "flags": diagram.flags, "status": diagram.status, "notes": diagram.notes})
    bands = [f"lambda_{n}" for n in range(1, block.k_max + 1)]
    table = report.table("bands", ["xi", "ess_threshold", *bands, "flags"])
    for i, xi in enumerate(diagram.xi):
        table.add(xi, diagram.thresholds[i], *diagram.values[i], diagram.sample_flags(i))
    for n in range(1, block.k_max + 1):
        xs, lams = diagram.band(n)
        errs = diagram.errors[~np.isnan(diagram.values[:, n - 1]), n - 1]
        series = report.curve(f"band_{n}", ["xi", "lambda", "error"])
        for x, lam, err in zip(xs, lams, errs):
            series.add(x, lam, err)
    report.verdicts["gaps"] = diagram.status.count("gap")
    return report


# ----------------------------------------------------------------------
# flatband
# ----------------------------------------------------------------------

def cmd_flatband(config: RunConfig, version: str, jobs: int = 1) -> RunReport:
    block = config.flatband
    report = _new_report("flatband", config, version)
    table = report.table("verdicts", ["lambda", "component_lo", "component_hi", "band", "verdict",
                                      "oscillation", "budget", "reason"])
    summaries = {}
    for lam in block.lambdas:
        sigma = sigma_lambda(config.profile, lam)
        xis = flatband_samples(config.profile, lam, block.samples_per_component, block.reach)
        diagram = sweep_bands(config.profile, (0.0, 0.0), 2, block.k_max, 1.0, config.grid, jobs, xis=xis)
        verdicts = flatness_test(diagram, lam, block.min_samples)
        summary = exclusion_summary(verdicts)
        summaries[format(lam, "g")] = summary
        report.record("spectrum", "flatness_test",
                      {"lambda": lam, "components": [c.to_list() for c in sigma.components],
                       "samples": diagram.xi},
                      {"verdicts": [v.to_dict() for v in verdicts], "excluded": summary})
        for v in verdicts:
            table.add(lam, v.component.lo, v.component.hi, v.band, v.verdict.value,
                      v.oscillation, v.budget, v.reason)
        by_divergence = any(v.verdict == Verdict.NON_FLAT_BY_DIVERGENCE for v in verdicts)
        logger.info("lambda=%g excluded as eigenvalue: %s%s", lam, summary,
                    " (divergence rule)" if by_divergence else "")
    report.verdicts["excluded"] = summaries
    return report


# ----------------------------------------------------------------------
# harmonic / agmon
# ----------------------------------------------------------------------

def _agmon_point(config: RunConfig, theta: float, h: float) -> dict:
    """Identity residuals and the decay check for one (theta, h)."""
    block = config.agmon
    profile = config.profile
    potential = MagneticPotential(profile, theta)
    v = effective_velocity(profile, theta)
    threshold = ess_threshold(profile, theta)
    if math.isfinite(threshold):
        energy = block.energy_fraction * threshold
    else:
        energy = (2 * block.n + 2) * h * v
    if block.gamma is None:
        rate = agmon_rate(potential, energy, _v_minus(config, theta))
        gamma, kappa = rate.gamma, rate.kappa
    else:
        gamma, kappa = block.gamma, math.nan
    pair, operator, decay = decay_study(potential, h, block.n, gamma, energy, config.grid, block.ratio_bound)
    weight = AgmonWeight(gamma, pair.lam, block.cap, potential.center)
    return {
        "theta": theta,
        "h": h,
        "n": block.n,
        "lambda": pair.lam,
        "energy": energy,
        "gamma": gamma,
        "kappa": kappa,
        "eigen_residual": pair.residual,
        "identity_zero_weight": agmon_identity_residual(operator, pair),
        "identity_weighted": agmon_identity_residual(operator, pair, weight),
        "decay": decay.to_dict(),
    }


def _agmon_rows(report: RunReport, config: RunConfig, points) -> bool:
    table = report.table("agmon", ["theta", "h", "n", "lambda", "gamma", "eigen_residual",
                                   "identity_zero_weight", "identity_weighted", "ratio",
                                   "ratio_doubled", "passed"])
    all_passed = True
    for theta, h in points:
        row = _agmon_point(config, theta, h)
        report.record("semiclassical", "agmon_decay_check", {"theta": theta, "h": h, "n": row["n"]}, row)
        decay = row["decay"]
        table.add(theta, h, row["n"], row["lambda"], row["gamma"], row["eigen_residual"],
                  row["identity_zero_weight"], row["identity_weighted"], decay["ratio"],
                  decay["ratio_doubled"], decay["passed"])
        all_passed = all_passed and decay["passed"]
    return all_passed


def cmd_harmonic(config: RunConfig, version: str, jobs: int = 1) -> RunReport:
    block = config.harmonic
    profile = config.profile
    report = _new_report("harmonic", config, version)
    levels = report.table("harmonic", ["theta", "h", "n", "lambda", "harmonic", "relative_error"])
    counts = report.table("counting", ["theta", "h", "eta", "n_computed", "bound", "passed",
                                       "vacuous", "outside_regime"])
    lower = report.table("lower_bound", ["theta", "h", "lambda_1", "bound", "passed"])
    trends, counting_ok, lower_ok = {}, True, True

    for theta in block.theta:
        v = effective_velocity(profile, theta)
        threshold = ess_threshold(profile, theta)
        errors_by_n = {}
        for h in sorted(block.h, reverse=True):
            eta = block.compare_eta
            if eta is None:
                eta = min(threshold / 2, (2 * block.n_max + 1) * h * v)
            rows = compare_harmonic(profile, theta, h, block.n_max, eta, config.grid)
            report.record("semiclassical", "compare_harmonic", {"theta": theta, "h": h, "eta": eta},
                          [r.to_dict() for r in rows])
            for r in rows:
                levels.add(theta, h, r.n, r.lam, r.harmonic, r.relative_error)
                errors_by_n.setdefault(r.n, []).append(r.relative_error)

            counting_eta = block.counting_eta
            if counting_eta is None:
                counting_eta, _ = eta_policy(h, block.eta_c)
            check = counting_check(profile, theta, h, counting_eta, _window(config), config.grid)
            report.record("semiclassical", "counting_check", {"theta": theta, "h": h, "eta": counting_eta},
                          check.to_dict())
            counts.add(theta, h, counting_eta, check.n_computed, check.bound, check.passed,
                       check.vacuous, check.outside_regime)
            counting_ok = counting_ok and check.passed

            bound = inf_spectrum_check(profile, theta, h, config.grid)
            report.record("semiclassical", "inf_spectrum_check", {"theta": theta, "h": h}, bound)
            lower.add(theta, h, bound["lambda_1"], bound["bound"], bound["passed"])
            lower_ok = lower_ok and bound["passed"]

        trends[format(theta, "g")] = {
            str(n): bool(len(errs) < 2 or all(b < a for a, b in zip(errs, errs[1:])))
            for n, errs in errors_by_n.items()
        }

    points = [(theta, h) for theta in block.theta for h in config.agmon.h]
    report.verdicts["agmon"] = _agmon_rows(report, config, points)
    report.verdicts["error_decreasing"] = trends
    report.verdicts["counting"] = counting_ok
    report.verdicts["lower_bound"] = lower_ok
    return report


def cmd_agmon(config: RunConfig, version: str, jobs: int = 1) -> RunReport:
    block = config.agmon
    report = _new_report("agmon", config, version)
    points = [(theta, h) for theta in block.theta for h in block.h]
    report.verdicts["agmon"] = _agmon_rows(report, config, points)
    return report


# ----------------------------------------------------------------------
# asymptotics / scattering
# ----------------------------------------------------------------------

def cmd_asymptotics(config: RunConfig, version: str, jobs: int = 1) -> RunReport:
    block = config.asymptotics
    report = _new_report("asymptotics", config, version)
    xis = block.xi_samples()
    table = report.table("fit", ["n", "slope", "target_slope", "coefficient", "target_coefficient",
                                 "relative_coefficient_error", "residual"])
    verdicts = {}
    for n in block.n:
        fit = asymptotic_fit(config.profile, n, xis, config.grid)
        report.record("semiclassical", "asymptotic_fit", {"n": n, "xi": xis}, fit.to_dict())
        rel = abs(fit.coefficient - fit.target_coefficient) / fit.target_coefficient
        table.add(n, fit.slope, fit.target_slope, fit.coefficient, fit.target_coefficient, rel, fit.residual)
        series = report.curve(f"asymptotics_n{n}", ["xi", "lambda", "rescaled"])
        for xi, lam, rescaled in zip(fit.xi, fit.eigenvalues, fit.rescaled):
            series.add(xi, lam, int(rescaled))
        verdicts[str(n)] = {"slope_error": abs(fit.slope - fit.target_slope), "coefficient_error": rel}
    report.verdicts["fit"] = verdicts
    return report


def cmd_scattering(config: RunConfig, version: str, jobs: int = 1) -> RunReport:
    block = config.scattering
    report = _new_report("scattering", config, version)
    table = report.table("exclusion", ["xi", "lambda", "status", "side", "omega", "excluded",
                                       "sigma_min", "amplitude", "tail_bound", "x_cut"])
    results = {}
    for xi in block.xi:
        for lam in block.lambdas:
            key = f"xi={xi:g},lambda={lam:g}"
            inputs = {"xi": xi, "lambda": lam, "tail_tol": block.tail_tol}
            try:
                result = embedded_exclusion(config.profile, xi, lam, block.tail_tol)
            except NotEmbeddedError as e:
                report.record("scattering", "embedded_exclusion", inputs, {"status": "not-embedded", "reason": str(e)})
                table.add(xi, lam, "not-embedded", "", math.nan, False, math.nan, math.nan, math.nan, math.nan)
                results[key] = "not-embedded"
                continue
            report.record("scattering", "embedded_exclusion", inputs, result.to_dict())
            c = result.coefficients
            table.add(xi, lam, "embedded", result.side, result.omega, result.excluded,
                      result.sigma_min, c.amplitude, c.tail_bound, c.x_cut)
            results[key] = "excluded" if result.excluded else "not-excluded"
    report.verdicts["scattering"] = results
    return report


COMMANDS: dict[str, Callable] = {
    "slice": cmd_slice,
    "bands": cmd_bands,
    "flatband": cmd_flatband,
    "harmonic": cmd_harmonic,
    "asymptotics": cmd_asymptotics,
    "scattering": cmd_scattering,
    "agmon": cmd_agmon,
}


def run_command(name: str, config: RunConfig, version: str, jobs: int = 1) -> RunReport:
    """Run one subcommand and stamp the wall-clock time on its report."""
    start = time.perf_counter()
    report = COMMANDS[name](config, version, jobs)
    report.wall_clock_seconds = time.perf_counter() - start
    return report


def is_inconclusive(report: RunReport) -> bool:
    """True when a flat-band verdict came out inconclusive."""
    excluded = report.verdicts.get("excluded", {})
    return any(v == "inconclusive" for v in excluded.values())
