"""
spectrum.py - Thresholds, band diagrams and the flat-band test.

How this works (the big picture):
1. Each fiber L_xi has essential spectrum [min((xi - phi_-)^2, (xi - phi_+)^2), inf)
   over its finite fluxes, and nothing essential at all when both fluxes
   are infinite.
2. Below that threshold the spectrum is a list of simple eigenvalues
   lambda_1(xi) < lambda_2(xi) < ... Sampling them over a xi-grid gives
   the band diagram. Simplicity means bands never cross, so ordering is
   all the tracking we need.
3. A level lambda can only be an eigenvalue of the 2D operator if some band
   is identically lambda on a whole connected component of
       Sigma_lambda = { xi : lambda < threshold(xi) }
   flatness_test checks every (component, band) pair against a numerical
   error budget and reports FLAT, NON_FLAT or INCONCLUSIVE.
4. On an unbounded component where the bottom of the fiber spectrum runs
   off to infinity every band goes with it. When the sampled bottom rises
   steadily toward the infinite end and has passed 2 lambda there, every
   band on that component is NON_FLAT_BY_DIVERGENCE. A bottom that stays
   put (constant field) falls through to the sampled verdict.
"""

import math
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from core.errors import ConfigError, DomainError, NumericalError
from core.fields import FieldProfile, turning_point
from core.fiber import (
    DEFAULT_POLICY,
    GridPolicy,
    MagneticPotential,
    assemble,
    fit_domain,
    near_threshold_buffer,
    nth_eigenvalue,
    solve_fiber,
    solve_lowest,
)

logger = logging.getLogger(__name__)


# Minimum usable samples on a component before a verdict is attempted
MIN_SAMPLES = 5

# Oscillation must exceed the budget by this factor for NON_FLAT
NON_FLAT_FACTOR = 10.0

# Spectral bottom over lambda that triggers the divergence rule
DIVERGENCE_FACTOR = 2.0

# Outermost samples toward an infinite end that must show a rising bottom
DIVERGENCE_TAIL = 3

# Smallest distance kept between the fitting energy and a finite threshold
THRESHOLD_GAP = 1e-6

CONVERGED = "converged"
NEAR_THRESHOLD = "near-threshold"


def ess_threshold(profile: FieldProfile, xi: float) -> float:
    """Bottom of the essential spectrum of L_xi (inf when it is empty)."""
    finite = [phi for phi in profile.flux()[:2] if math.isfinite(phi)]
    if not finite:
        return math.inf
    return min((xi - phi) ** 2 for phi in finite)


# ----------------------------------------------------------------------
# Sigma_lambda
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    """Open interval (lo, hi); either end may be infinite."""

    lo: float
    hi: float

    def __contains__(self, x: float) -> bool:
        return self.lo < x < self.hi

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def to_list(self) -> list:
        return [self.lo, self.hi]


@dataclass
class SigmaSet:
    """Connected components of Sigma_lambda, left to right."""

    lam: float
    components: list

    def component_of(self, xi: float) -> Optional[Interval]:
        for comp in self.components:
            if xi in comp:
                return comp
        return None


def sigma_lambda(profile: FieldProfile, lam: float) -> SigmaSet:
    """
    Sigma_lambda by interval arithmetic.

    The complement is the union of the closed intervals [phi - sqrt(lam),
    phi + sqrt(lam)] over the finite fluxes; touching intervals merge.
    """
    if not lam >= 0:
        raise ConfigError(f"lambda must be >= 0, got {lam}", "flatband.lambdas")
    root = math.sqrt(lam)
    holes = sorted((phi - root, phi + root) for phi in profile.flux()[:2] if math.isfinite(phi))
    merged = []
    for lo, hi in holes:
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))

    components = []
    left = -math.inf
    for lo, hi in merged:
        if lo > left:
            components.append(Interval(left, lo))
        left = hi
    components.append(Interval(left, math.inf))
    return SigmaSet(lam, components)


def component_samples(component: Interval, count: int, reach: float = 4.0) -> np.ndarray:
    """
    Sample points strictly inside a component.

    Bounded components get Chebyshev nodes (dense near the ends, where bands
    dive into the threshold). Unbounded ends are covered out to `reach`
    beyond the finite end (or around 0 for the whole line).
    """
    if count < 1:
        raise ConfigError("need at least one sample", "flatband.samples")
    lo, hi = component.lo, component.hi
    if not math.isfinite(lo) and not math.isfinite(hi):
        lo, hi = -reach, reach
        return np.linspace(lo, hi, count)
    if not math.isfinite(lo):
        lo = hi - reach
    elif not math.isfinite(hi):
        hi = lo + reach
    k = np.arange(1, count + 1)
    nodes = 0.5 * (lo + hi) + 0.5 * (hi - lo) * np.cos((2 * k - 1) * math.pi / (2 * count))
    return np.sort(nodes)


# ----------------------------------------------------------------------
# Slices and sweeps
# ----------------------------------------------------------------------

@dataclass
class SpectrumSlice:
    """Discrete spectrum of one fiber below its essential threshold."""

    xi: float
    ess_threshold: float
    eigenvalues: list
    errors: list
    flags: list
    cutoff: float
    grid_points: int = 0
    spacing: float = math.nan
    capped: bool = False
    pairs: list = field(default_factory=list, repr=False)
    operator: object = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "xi": self.xi,
            "ess_threshold": self.ess_threshold,
            "eigenvalues": list(self.eigenvalues),
            "errors": list(self.errors),
            "flags": list(self.flags),
            "cutoff": self.cutoff,
            "grid_points": self.grid_points,
            "spacing": self.spacing,
            "capped": self.capped,
        }


def _harmonic_velocity(profile: FieldProfile, xi: float) -> Optional[float]:
    """|b(x_xi)| when the turning point exists, else None."""
    if not profile.monotone:
        return None
    phi_minus, phi_plus = profile.flux()[:2]
    if not phi_minus < xi < phi_plus:
        return None
    return abs(profile.b(turning_point(profile, xi)))


def spectrum_slice(profile: FieldProfile, xi: float, h: float = 1.0, k_max: int = 5,
                   policy: GridPolicy = DEFAULT_POLICY, vectors: bool = False) -> SpectrumSlice:
    """
    Eigenvalues of h^2 D^2 + (xi - a)^2 below the essential threshold.

    Finite threshold: the domain is fitted just under it and eigenvalues
    above threshold - buffer are flagged near-threshold. Infinite
    threshold: the lowest k_max eigenvalues are found by raising the cutoff.
    """
    threshold = ess_threshold(profile, xi)
    potential = MagneticPotential(profile, xi)
    if math.isfinite(threshold):
        grid = fit_domain(potential, h, threshold - THRESHOLD_GAP, policy)
        if grid is None:
            return SpectrumSlice(xi, threshold, [], [], [], threshold)
        solution = solve_fiber(potential, h, threshold, k_max, policy, vectors, grid=grid)
        buffer = near_threshold_buffer(grid.spacing)
    else:
        velocity = _harmonic_velocity(profile, xi)
        solution = solve_lowest(potential, h, k_max, velocity, 0.0, policy, vectors)
        buffer = 0.0

    keep = [i for i, lam in enumerate(solution.eigenvalues) if lam < threshold]
    values = [float(solution.eigenvalues[i]) for i in keep]
    errors = [float(solution.errors[i]) for i in keep]
    flags = [NEAR_THRESHOLD if lam > threshold - buffer else CONVERGED for lam in values]
    pairs = [solution.pairs[i] for i in keep] if vectors else []
    if any(flag == NEAR_THRESHOLD for flag in flags):
        logger.debug("xi=%g: %d eigenvalue(s) within %.2e of the threshold", xi, flags.count(NEAR_THRESHOLD), buffer)
    grid = solution.grid
    return SpectrumSlice(
        xi=float(xi),
        ess_threshold=threshold,
        eigenvalues=values,
        errors=errors,
        flags=flags,
        cutoff=solution.cutoff,
        grid_points=grid.n if grid else 0,
        spacing=grid.spacing if grid else math.nan,
        capped=solution.capped,
        pairs=pairs,
        operator=solution.operator if vectors else None,
    )


@dataclass
class BandDiagram:
    """
    lambda_n(xi) on a xi-grid.

    values[i, n-1] is lambda_n(xi_i) or NaN where the band does not exist;
    status[i] is "ok" or "gap" (the slice failed; message in notes[i]).
    """

    profile: FieldProfile
    xi: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    thresholds: np.ndarray
    flags: list
    status: list
    notes: list
    h: float = 1.0
    k_max: int = 0
    policy: GridPolicy = DEFAULT_POLICY

    @property
    def empty(self) -> bool:
        return self.xi.size == 0

    def band(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """(xi, lambda_n) where band n is defined."""
        column = self.values[:, n - 1]
        defined = ~np.isnan(column)
        return self.xi[defined], column[defined]

    def sample_flags(self, i: int) -> str:
        """';'-joined flags of sample i: "gap", "capped", "near-threshold:<n>", or "ok"."""
        if self.status[i] == "gap":
            return "gap"
        names = [f"{flag}:{n}" for n, flag in enumerate(self.flags[i], start=1)
                 if flag not in (CONVERGED, "capped")]
        if "capped" in self.flags[i]:
            names.insert(0, "capped")
        return ";".join(names) if names else "ok"

    def metadata(self) -> dict:
        return {
            "profile": self.profile.describe(),
            "h": self.h,
            "k_max": self.k_max,
            "grid_policy": self.policy.to_dict(),
            "samples": int(self.xi.size),
            "gaps": self.status.count("gap"),
        }


def _slice_worker(args):
    profile, xi, h, k_max, policy = args
    try:
        return spectrum_slice(profile, xi, h, k_max, policy), None
    except NumericalError as e:
        return None, str(e)


def sweep_bands(profile: FieldProfile, xi_range: Sequence[float], n_samples: int, k_max: int,
                h: float = 1.0, policy: GridPolicy = DEFAULT_POLICY, jobs: int = 1,
                xis: Optional[Sequence[float]] = None) -> BandDiagram:
    """
    Sample the band functions over xi.

    Args:
        profile: Field profile
        xi_range: (xi_min, xi_max); xi_max <= xi_min gives an empty diagram
        n_samples: Number of equally spaced samples (>= 2)
        k_max: Bands to track
        h: Semiclassical scale
        policy: Grid policy
        jobs: Worker processes (1 = run in-process)
        xis: Explicit sample points; overrides xi_range/n_samples

    A slice that fails numerically becomes a gap; the sweep never aborts.
    """
    if k_max < 1:
        raise ConfigError("k_max must be >= 1", "sweep.k_max")
    if xis is None:
        if n_samples < 2:
            raise ConfigError("need at least 2 samples", "sweep.samples")
        xi_min, xi_max = xi_range
        grid = np.linspace(xi_min, xi_max, n_samples) if xi_max > xi_min else np.array([])
    else:
        grid = np.sort(np.asarray(xis, dtype=float))

    tasks = [(profile, float(x), h, k_max, policy) for x in grid]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_slice_worker, tasks))
    else:
        results = [_slice_worker(t) for t in tasks]

    m = grid.size
    values = np.full((m, k_max), np.nan)
    errors = np.full((m, k_max), np.nan)
    thresholds = np.array([ess_threshold(profile, x) for x in grid])
    flags, status, notes = [], [], []
    for i, (result, message) in enumerate(results):
        if result is None:
            logger.warning("sweep: gap at xi=%g (%s)", grid[i], message)
            flags.append([])
            status.append("gap")
            notes.append(message)
            continue
        count = len(result.eigenvalues)
        values[i, :count] = result.eigenvalues
        errors[i, :count] = result.errors
        flags.append(list(result.flags) + (["capped"] if result.capped else []))
        status.append("ok")
        notes.append("")
    return BandDiagram(profile, grid, values, errors, thresholds, flags, status, notes, h, k_max, policy)


# ----------------------------------------------------------------------
# Band derivatives
# ----------------------------------------------------------------------

def _band_pair(profile: FieldProfile, xi: float, n: int, h: float, policy: GridPolicy):
    sl = spectrum_slice(profile, xi, h, n, policy, vectors=True)
    if len(sl.eigenvalues) < n:
        raise DomainError(f"band {n} is not defined at xi={xi} (only {len(sl.eigenvalues)} below threshold)")
    return sl.pairs[n - 1], sl.operator


def band_derivative(profile: FieldProfile, xi: float, n: int, h: float = 1.0,
                    policy: GridPolicy = DEFAULT_POLICY) -> float:
    """
    d lambda_n / d xi from the eigenfunction: sum of 2 (xi - a(x_i)) psi_i^2 D.

    Raises:
        DomainError: band n does not exist at xi
    """
    pair, _ = _band_pair(profile, xi, n, h, policy)
    x = pair.grid.points
    return float(np.sum(2.0 * (xi - profile.a(x)) * pair.psi ** 2) * pair.grid.spacing)


def finite_difference_derivative(profile: FieldProfile, xi: float, n: int, delta: float = 1e-3,
                                 h: float = 1.0, policy: GridPolicy = DEFAULT_POLICY) -> dict:
    """
    Centered difference of lambda_n next to the eigenfunction formula.

    Both use the same grid (the one band_derivative's eigenvector lives on),
    so their difference is the O(delta^2) difference error plus solver
    tolerance, with no discretization mismatch in between.
    """
    if not delta > 0:
        raise ConfigError("delta must be positive", "delta")
    pair, operator = _band_pair(profile, xi, n, h, policy)
    grid = operator.grid
    x = grid.points
    fh = float(np.sum(2.0 * (xi - profile.a(x)) * pair.psi ** 2) * grid.spacing)
    tol = policy.tolerance(pair.lam)
    upper = nth_eigenvalue(assemble(profile, xi + delta, h, grid), n, tol)
    lower = nth_eigenvalue(assemble(profile, xi - delta, h, grid), n, tol)
    fd = (upper - lower) / (2.0 * delta)
    return {"xi": xi, "n": n, "delta": delta, "feynman_hellmann": fh, "finite_difference": fd,
            "difference": abs(fh - fd), "spacing": grid.spacing}


# ----------------------------------------------------------------------
# Flat bands
# ----------------------------------------------------------------------

class Verdict(str, Enum):
    FLAT = "FLAT"
    NON_FLAT = "NON_FLAT"
    NON_FLAT_BY_DIVERGENCE = "NON_FLAT_BY_DIVERGENCE"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class FlatnessVerdict:
    """Outcome for one (component, band) pair."""

    band: int
    component: Interval
    samples: int
    oscillation: float
    derivative_bound: float
    budget: float
    verdict: Verdict
    matches_level: bool = False
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "band": self.band,
            "component": self.component.to_list(),
            "samples": self.samples,
            "oscillation": self.oscillation,
            "derivative_bound": self.derivative_bound,
            "budget": self.budget,
            "verdict": self.verdict.value,
            "matches_level": self.matches_level,
            "reason": self.reason,
        }


def _bottom(diagram: BandDiagram, i: int) -> float:
    first = diagram.values[i, 0]
    return float(first) if not np.isnan(first) else float(diagram.thresholds[i])


def _bottom_margin(diagram: BandDiagram, i: int, bottom: float) -> float:
    """Smallest step in the bottom that counts as a real rise at sample i."""
    err = diagram.errors[i, 0]
    err = 0.0 if np.isnan(err) or np.isnan(diagram.values[i, 0]) else float(err)
    policy = diagram.policy
    return NON_FLAT_FACTOR * (2.0 * err + policy.epsilon_trunc + policy.tolerance(bottom))


def _diverging_sample(diagram: BandDiagram, usable: list, comp: Interval, lam: float) -> Optional[int]:
    """
    Outermost sample of an infinite end of `comp` along which the spectral
    bottom rises steadily and ends at >= DIVERGENCE_FACTOR * lambda, or None.
    """
    ends = []
    if comp.hi == math.inf:
        ends.append(usable)
    if comp.lo == -math.inf:
        ends.append(usable[::-1])
    for ordered in ends:
        tail = ordered[-DIVERGENCE_TAIL:]
        if len(tail) < DIVERGENCE_TAIL:
            continue
        bottoms = [_bottom(diagram, i) for i in tail]
        if not all(math.isfinite(b) for b in bottoms):
            continue
        rising = all(b1 - b0 > _bottom_margin(diagram, i, b1)
                     for b0, b1, i in zip(bottoms, bottoms[1:], tail[1:]))
        if rising and bottoms[-1] >= DIVERGENCE_FACTOR * lam and bottoms[-1] > lam:
            return tail[-1]
    return None


def flatness_test(diagram: BandDiagram, lam: float, min_samples: int = MIN_SAMPLES) -> list:
    """
    Check every band on every component of Sigma_lambda for constancy.

    Error budget per sample: 2 * (Richardson error) + eps_trunc + tol_lambda,
    maximized over the component. FLAT needs oscillation <= budget, NON_FLAT
    needs oscillation > 10 * budget, anything between is INCONCLUSIVE. Too
    few samples is INCONCLUSIVE as well, never a silent pass.
    """
    sigma = sigma_lambda(diagram.profile, lam)
    policy = diagram.policy
    verdicts = []
    for comp in sigma.components:
        inside = [i for i, x in enumerate(diagram.xi) if x in comp]
        usable = [i for i in inside if diagram.status[i] == "ok"]
        bands = range(1, diagram.k_max + 1)

        hit = _diverging_sample(diagram, usable, comp, lam)
        if hit is not None:
            xi_hit = float(diagram.xi[hit])
            for n in bands:
                verdicts.append(FlatnessVerdict(
                    n, comp, len(usable), math.nan, math.nan, math.nan, Verdict.NON_FLAT_BY_DIVERGENCE,
                    reason=f"spectral bottom rising to {_bottom(diagram, hit):.6g} >= {DIVERGENCE_FACTOR:g} * lambda at xi={xi_hit:g}",
                ))
            continue

        if len(usable) < min_samples:
            for n in bands:
                verdicts.append(FlatnessVerdict(
                    n, comp, len(usable), math.nan, math.nan, math.nan, Verdict.INCONCLUSIVE,
                    reason=f"{len(usable)} usable samples, need {min_samples}",
                ))
            continue

        for n in bands:
            column = diagram.values[usable, n - 1]
            errs = diagram.errors[usable, n - 1]
            if np.any(np.isnan(column)):
                missing = float(diagram.xi[usable][np.isnan(column)][0])
                verdicts.append(FlatnessVerdict(
                    n, comp, len(usable), math.nan, math.nan, math.nan, Verdict.NON_FLAT,
                    reason=f"band absent at xi={missing:g}",
                ))
                continue
            if np.any(np.isnan(errs)):
                verdicts.append(FlatnessVerdict(
                    n, comp, len(usable), math.nan, math.nan, math.nan, Verdict.INCONCLUSIVE,
                    reason="no refinement error estimate (richardson disabled)",
                ))
                continue
            tols = np.array([policy.tolerance(v) for v in column])
            budget = float(np.max(2.0 * errs + policy.epsilon_trunc + tols))
            oscillation = float(column.max() - column.min())
            xs = diagram.xi[usable]
            slopes = np.abs(np.diff(column) / np.diff(xs)) if xs.size > 1 else np.array([0.0])
            if oscillation <= budget:
                verdict = Verdict.FLAT
            elif oscillation > NON_FLAT_FACTOR * budget:
                verdict = Verdict.NON_FLAT
            else:
                verdict = Verdict.INCONCLUSIVE
            verdicts.append(FlatnessVerdict(
                n, comp, len(usable), oscillation, float(slopes.max()), budget, verdict,
                matches_level=bool(abs(float(column.mean()) - lam) <= budget),
            ))
    return verdicts


def exclusion_summary(verdicts: list) -> str:
    """
    "no" if some band is flat at the level (lambda may be an eigenvalue),
    "yes" if every band is non-flat or flat at another level, otherwise
    "inconclusive".
    """
    if not verdicts:
        return "inconclusive"
    if any(v.verdict == Verdict.FLAT and v.matches_level for v in verdicts):
        return "no"
    if all(v.verdict != Verdict.INCONCLUSIVE for v in verdicts):
        return "yes"
    return "inconclusive"


def flatband_samples(profile: FieldProfile, lam: float, per_component: int, reach: float = 4.0) -> np.ndarray:
    """Sample points covering every component of Sigma_lambda."""
    points = [component_samples(c, per_component, reach) for c in sigma_lambda(profile, lam).components]
    return np.unique(np.concatenate(points)) if points else np.array([])


if __name__ == "__main__":
    from core.fields import Constant, Gaussian

    print("=" * 50)
    print("Spectrum Self-Test")
    print("=" * 50)

    result = spectrum_slice(Constant(1.0), 0.0, k_max=3)
    print(f"\n1. Landau slice at xi=0: {np.round(result.eigenvalues, 8)}")

    sigma = sigma_lambda(Gaussian(), 0.04)
    print(f"\n2. Gaussian Sigma_0.04: {[c.to_list() for c in sigma.components]}")

    diagram = sweep_bands(Gaussian(), (0.0, 1.0), 5, 2, jobs=1)
    print(f"\n3. Gaussian lowest band on [0, 1]: {np.round(diagram.values[:, 0], 6)}")

    print("\n" + "=" * 50)
    print("Done.")
    print("=" * 50)
