"""
semiclassical.py - Harmonic approximation, counting bounds, Agmon checks, large-xi asymptotics.

How this works (the big picture):
1. Near its minimum x_theta the fiber potential (theta - a(x))^2 looks like
   v_theta^2 s^2 with v_theta = b(x_theta), so the low eigenvalues of
   h^2 D^2 + V_theta are close to the oscillator levels (2n - 1) h v_theta.
   compare_harmonic measures the gap, counting_check tests the lower bound
   on how many eigenvalues sit below a small energy eta.
2. Eigenfunctions decay exponentially away from the well. Two checks:
   - the weighted energy identity, evaluated exactly on the grid for a
     capped linear weight Phi (zero for an exact eigenpair, up to O(D))
   - the weighted mass sum(exp(2 gamma |s| / sqrt(lambda)) psi^2), which
     must stay bounded and stable when the domain doubles
3. For power-law fields the bands grow like xi^(alpha/(1+alpha)). Large xi
   is a semiclassical limit in disguise: rescaling x = x_xi (1 + s) turns
   L_xi into xi^2 (h_xi^2 D_s^2 + V_xi(s)) with h_xi = 1/(xi x_xi), which
   is what asymptotic_fit solves once h_xi gets small.
"""

import math
import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from core.errors import ConfigError, DomainError, InsufficientRangeError, UnboundedRegionError
from core.fields import FieldProfile, PowerLaw, effective_velocity, theta_window, turning_point
from core.fiber import (
    DEFAULT_POLICY,
    EigenPair,
    GridPolicy,
    MagneticPotential,
    Potential,
    TridiagonalOperator,
    allowed_by_inversion,
    count_below,
    eigenvalues_below,
    eigenvector,
    fit_domain,
    from_potential,
    solve_fiber,
    solve_lowest,
)
from core.spectrum import ess_threshold, spectrum_slice

logger = logging.getLogger(__name__)


# Default bound on the weighted mass ratio
DECAY_RATIO_BOUND = 1e4

# Ratio change under domain doubling still counted as stable
DECAY_STABILITY_FACTOR = 2.0

# kappa values tried when establishing V >= min(c_E s^2, (1 + 2 kappa) E)
KAPPA_GRID = np.linspace(0.05, 4.0, 80)

# Odd sample count for the theta-window scans of v_- and v_+
WINDOW_SAMPLES = 41

# Minimum max(xi) / min(xi) for a log-log fit
MIN_DYNAMIC_RANGE = 10.0


# ----------------------------------------------------------------------
# Harmonic approximation
# ----------------------------------------------------------------------

@dataclass
class HarmonicComparison:
    n: int
    h: float
    theta: float
    lam: float
    harmonic: float
    relative_error: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def harmonic_levels(profile: FieldProfile, theta: float, h: float, n_max: int) -> list:
    """[(2n - 1) h v_theta for n = 1..n_max]."""
    v = effective_velocity(profile, theta)
    return [(2 * n - 1) * h * v for n in range(1, n_max + 1)]


def compare_harmonic(profile: FieldProfile, theta: float, h: float, n_max: int, eta: float,
                     policy: GridPolicy = DEFAULT_POLICY) -> list:
    """
    Eigenvalues of h^2 D^2 + (theta - a(x))^2 up to eta, paired with the oscillator levels.

    Raises:
        ConfigError: eta above half the essential threshold at theta
    """
    threshold = ess_threshold(profile, theta)
    if not 0 < eta <= threshold / 2:
        raise ConfigError(f"eta={eta} must lie in (0, threshold/2 = {threshold / 2:g}]", "harmonic.eta")
    levels = harmonic_levels(profile, theta, h, n_max)
    solution = solve_fiber(MagneticPotential(profile, theta), h, eta, n_max, policy)
    rows = []
    for n, lam in enumerate(solution.eigenvalues, start=1):
        if lam > eta:
            break
        harmonic = levels[n - 1]
        rows.append(HarmonicComparison(n, h, theta, float(lam), harmonic, abs(lam - harmonic) / ((2 * n - 1) * h)))
    return rows


def window_velocities(profile: FieldProfile, window: Optional[tuple] = None,
                      samples: int = WINDOW_SAMPLES) -> tuple[float, float]:
    """(v_-, v_+): min and max of b(x_theta) over the theta window."""
    if window is None:
        window = theta_window(profile)
    if samples % 2 == 0:
        samples += 1
    thetas = np.linspace(window[0], window[1], samples)
    velocities = [effective_velocity(profile, float(t)) for t in thetas]
    return min(velocities), max(velocities)


def eta_policy(h: float, c: float = 1.0) -> tuple[float, bool]:
    """eta_h = c |ln h|^-7 and whether eta |ln h|^6 <= 1 (inside the asymptotic regime)."""
    log_h = abs(math.log(h))
    eta = c * log_h ** -7
    return eta, eta * log_h ** 6 <= 1.0


@dataclass
class CountingCheck:
    theta: float
    h: float
    eta: float
    n_computed: int
    bound: float
    v_plus: float
    passed: bool
    vacuous: bool
    outside_regime: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def count_levels(potential: Potential, h: float, eta: float, policy: GridPolicy = DEFAULT_POLICY) -> int:
    """Sturm count of eigenvalues below eta on a domain fitted at eta."""
    grid = fit_domain(potential, h, eta, policy)
    if grid is None:
        return 0
    return count_below(from_potential(potential(grid.points), h, grid), eta)


def counting_check(profile: FieldProfile, theta: float, h: float, eta: float,
                   window: Optional[tuple] = None, policy: GridPolicy = DEFAULT_POLICY) -> CountingCheck:
    """N(eta) >= eta / (4 v_+ h) - 1, with v_+ the max of b(x_theta) over the window."""
    _, v_plus = window_velocities(profile, window)
    bound = eta / (4.0 * v_plus * h) - 1.0
    n = count_levels(MagneticPotential(profile, theta), h, eta, policy)
    outside = eta * abs(math.log(h)) ** 6 > 1.0
    if outside:
        logger.info("counting_check: eta=%g is outside the eta |ln h|^6 <= 1 regime at h=%g", eta, h)
    return CountingCheck(theta, h, eta, n, bound, v_plus, n >= bound, bound <= 0, outside)


def inf_spectrum_check(profile: FieldProfile, theta: float, h: float,
                       policy: GridPolicy = DEFAULT_POLICY) -> dict:
    """lambda_1(h, theta) >= h v_theta / 2, allowing for the discretization error."""
    v = effective_velocity(profile, theta)
    threshold = ess_threshold(profile, theta)
    potential = MagneticPotential(profile, theta)
    if math.isfinite(threshold):
        cutoff = min(3.0 * h * v, threshold - 1e-6)
        solution = solve_fiber(potential, h, cutoff, 1, policy)
    else:
        solution = solve_lowest(potential, h, 1, v, 0.0, policy)
    bound = 0.5 * h * v
    if not solution.eigenvalues.size:
        return {"theta": theta, "h": h, "lambda_1": None, "bound": bound, "passed": True, "vacuous": True}
    lam = float(solution.eigenvalues[0])
    slack = float(np.nan_to_num(solution.errors[0])) + policy.tolerance(lam)
    return {"theta": theta, "h": h, "lambda_1": lam, "bound": bound,
            "passed": lam >= bound - slack, "vacuous": False}


# ----------------------------------------------------------------------
# Agmon estimates
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class AgmonWeight:
    """Phi(s) = min(gamma |s - center| / sqrt(lam), cap)."""

    gamma: float
    lam: float
    cap: float
    center: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.cap) or self.cap < 0:
            raise ConfigError("the weight must be bounded: cap has to be finite and >= 0", "agmon.cap")
        if self.gamma < 0 or not self.lam > 0:
            raise ConfigError("need gamma >= 0 and lambda > 0", "agmon.gamma")

    @property
    def rate(self) -> float:
        return self.gamma / math.sqrt(self.lam)

    def phi(self, x: np.ndarray) -> np.ndarray:
        return np.minimum(self.rate * np.abs(x - self.center), self.cap)

    def dphi(self, x: np.ndarray) -> np.ndarray:
        r = x - self.center
        slope = self.rate * np.sign(r)
        return np.where(self.rate * np.abs(r) < self.cap, slope, 0.0)


ZERO_WEIGHT = AgmonWeight(0.0, 1.0, 0.0)


def rayleigh_defect(T: TridiagonalOperator, pair: EigenPair) -> float:
    """|<T psi, psi> D - lambda| for a pair normalized to sum(psi^2) D = 1."""
    return abs(float(pair.psi @ T.matvec(pair.psi)) * T.grid.spacing - pair.lam)


def agmon_identity_residual(T: TridiagonalOperator, pair: EigenPair, weight: AgmonWeight = ZERO_WEIGHT) -> float:
    """
    Discrete weighted energy identity for u = exp(Phi) psi:

        h^2 sum |(u_{i+1} - u_i)/D|^2 D + sum (V_i - h^2 Phi'(x_i)^2 - lambda) u_i^2 D

    with zero ghost values past both ends. For Phi = 0 this is exactly
    <(T - lambda) psi, psi> D.
    """
    grid = T.grid
    x = grid.points
    d = grid.spacing
    u = np.exp(weight.phi(x)) * pair.psi
    padded = np.concatenate(([0.0], u, [0.0]))
    kinetic = T.h ** 2 * np.sum(np.diff(padded) ** 2) / d
    potential = np.sum((T.potential - T.h ** 2 * weight.dphi(x) ** 2 - pair.lam) * u ** 2) * d
    return abs(float(kinetic + potential))


@dataclass
class DecayCheck:
    gamma: float
    lam: float
    ratio: float
    ratio_doubled: Optional[float]
    stable: bool
    passed: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def weighted_mass_ratio(pair: EigenPair, lam: float, gamma: float, center: float = 0.0) -> float:
    """sum exp(2 gamma |s| / sqrt(lam)) psi^2 / sum psi^2, in log space."""
    if gamma == 0:
        return 1.0
    s = pair.grid.points - center
    with np.errstate(divide="ignore"):
        log_mass = np.log(pair.psi ** 2)
    weighted = logsumexp(2.0 * gamma * np.abs(s) / math.sqrt(lam) + log_mass)
    log_ratio = float(weighted - logsumexp(log_mass))
    return math.exp(log_ratio) if log_ratio < 700.0 else math.inf


def agmon_decay_check(pair: EigenPair, lam: float, gamma: float, center: float = 0.0,
                      doubled: Optional[EigenPair] = None, bound: float = DECAY_RATIO_BOUND) -> DecayCheck:
    """
    Weighted-mass bound, optionally with the same eigenpair on a doubled domain.

    Passes when the ratio is <= bound and (if a doubled pair is given)
    changes by less than a factor 2.
    """
    ratio = weighted_mass_ratio(pair, lam, gamma, center)
    ratio_doubled = None
    stable = True
    if doubled is not None:
        ratio_doubled = weighted_mass_ratio(doubled, lam, gamma, center)
        stable = max(ratio, ratio_doubled) < DECAY_STABILITY_FACTOR * min(ratio, ratio_doubled)
    passed = bool(math.isfinite(ratio) and ratio <= bound and stable)
    return DecayCheck(gamma, lam, ratio, ratio_doubled, bool(stable), passed)


@dataclass
class AgmonRate:
    gamma: float
    kappa: float
    c_e: float


def agmon_rate(potential: Potential, energy: float, v_minus: float,
               kappas: Sequence[float] = KAPPA_GRID) -> AgmonRate:
    """
    Largest kappa on the grid with V(s) >= min(c_E s^2, (1 + 2 kappa) E) and c_E > 0.

    Returns gamma = v_- sqrt(kappa) / 2. kappa = 0 (gamma = 0) when no grid
    value works, which makes the decay check trivial rather than wrong.
    """
    best = AgmonRate(0.0, 0.0, 0.0)
    for kappa in kappas:
        level = (1.0 + 2.0 * kappa) * energy
        try:
            interval = potential.allowed_interval(level)
        except UnboundedRegionError:
            break
        if interval is None:
            continue
        s = np.linspace(interval[0], interval[1], 4001) - potential.center
        s = s[np.abs(s) > 1e-12]
        values = potential(s + potential.center)
        c_e = float(np.min(values / s ** 2))
        if c_e <= 0:
            break
        best = AgmonRate(0.5 * v_minus * math.sqrt(kappa), float(kappa), c_e)
    return best


def decay_study(potential: Potential, h: float, n: int, gamma: float, energy: float,
                policy: GridPolicy = DEFAULT_POLICY, bound: float = DECAY_RATIO_BOUND) -> tuple:
    """
    Eigenpair n on the domain fitted at `energy`, the same on the doubled
    domain, and the resulting decay check.

    Returns (pair, operator, DecayCheck).
    """
    grid = fit_domain(potential, h, energy, policy)
    if grid is None:
        raise DomainError(f"no allowed region below E={energy}")
    operator = from_potential(potential(grid.points), h, grid)
    pair = _nth_pair(operator, n, energy, policy)
    big = grid.enlarged(2.0)
    big_operator = from_potential(potential(big.points), h, big)
    big_pair = _nth_pair(big_operator, n, energy, policy)
    check = agmon_decay_check(pair, pair.lam, gamma, potential.center, big_pair, bound)
    return pair, operator, check


def _nth_pair(T: TridiagonalOperator, n: int, energy: float, policy: GridPolicy) -> EigenPair:
    tol = policy.tolerance(energy)
    values = eigenvalues_below(T, energy, n, tol)
    if len(values) < n:
        raise DomainError(f"only {len(values)} eigenvalues below E={energy}, wanted n={n}")
    return eigenvector(T, values[n - 1], tol, policy.seed)


# ----------------------------------------------------------------------
# Large-xi rescaling
# ----------------------------------------------------------------------

class RescaledPotential(Potential):
    """V_xi(s) = (1 - a(x_xi (1 + s)) / xi)^2, zero at s = 0."""

    def __init__(self, profile: FieldProfile, xi: float, x_xi: float):
        self.profile = profile
        self.xi = xi
        self.x_xi = x_xi
        self.center = 0.0

    def __call__(self, s):
        return (1.0 - self.profile.a(self.x_xi * (1.0 + np.asarray(s, dtype=float))) / self.xi) ** 2

    def allowed_interval(self, energy):
        if energy < 0:
            return None
        span = allowed_by_inversion(self.profile, self.xi, abs(self.xi) * math.sqrt(energy))
        if span is None:
            return None
        ends = sorted(x / self.x_xi - 1.0 for x in span)
        return (ends[0], ends[1])


@dataclass
class RescaledFiber:
    xi: float
    x_xi: float
    h_xi: float
    v_xi: float
    potential: RescaledPotential


def rescaled_fiber(profile: FieldProfile, xi: float) -> RescaledFiber:
    """
    The unitarily equivalent fiber in s = x / x_xi - 1.

    Raises:
        DomainError: xi x_xi <= 0 (no positive semiclassical scale)
    """
    x_xi = turning_point(profile, xi)
    if not xi * x_xi > 0:
        raise DomainError(f"rescaling needs xi * x_xi > 0, got xi={xi}, x_xi={x_xi}")
    h_xi = 1.0 / (xi * x_xi)
    v_xi = x_xi * profile.b(x_xi) / xi
    return RescaledFiber(xi, x_xi, h_xi, v_xi, RescaledPotential(profile, xi, x_xi))


def rescaled_eigenvalues(profile: FieldProfile, xi: float, k: int,
                         policy: GridPolicy = DEFAULT_POLICY) -> np.ndarray:
    """
    xi^2 times the k lowest eigenvalues of h_xi^2 D^2 + V_xi.

    The rescaled eigenvalues are O(h_xi), so the eigenvalue tolerance
    shrinks with h_xi to stay relative.
    """
    fiber = rescaled_fiber(profile, xi)
    policy = replace(policy, tol_lambda=policy.tol_lambda * min(1.0, fiber.h_xi))
    threshold = ess_threshold(profile, xi) / xi ** 2
    if math.isfinite(threshold):
        solution = solve_fiber(fiber.potential, fiber.h_xi, threshold - 1e-9, k, policy)
    else:
        solution = solve_lowest(fiber.potential, fiber.h_xi, k, fiber.v_xi, 0.0, policy)
    return xi ** 2 * solution.eigenvalues[:k]


def direct_eigenvalues(profile: FieldProfile, xi: float, k: int,
                       policy: GridPolicy = DEFAULT_POLICY) -> np.ndarray:
    """
    The k lowest eigenvalues of L_xi on its own grid.

    With a finite essential threshold only eigenvalues below it count, as in
    spectrum_slice; otherwise the cutoff is raised until k are found.
    """
    if math.isfinite(ess_threshold(profile, xi)):
        return np.array(spectrum_slice(profile, xi, 1.0, k, policy).eigenvalues[:k])
    v = abs(profile.b(turning_point(profile, xi)))
    return solve_lowest(MagneticPotential(profile, xi), 1.0, k, v, 0.0, policy).eigenvalues[:k]


@dataclass
class AsymptoticFit:
    n: int
    xi: list
    eigenvalues: list
    slope: float
    coefficient: float
    target_slope: float
    target_coefficient: float
    residual: float
    rescaled: list

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def asymptotic_fit(profile: PowerLaw, n: int, xis: Sequence[float],
                   policy: GridPolicy = DEFAULT_POLICY) -> AsymptoticFit:
    """
    Least-squares fit of ln lambda_n against ln xi.

    Raises:
        ConfigError: not a power-law profile, or non-positive xi
        InsufficientRangeError: max(xi) / min(xi) < 10
    """
    if not isinstance(profile, PowerLaw):
        raise ConfigError("asymptotic_fit needs a power_law profile", "profile.kind")
    xis = sorted(float(x) for x in xis)
    if len(xis) < 2 or xis[0] <= 0:
        raise ConfigError("need at least two positive xi samples", "asymptotics.xi")
    if xis[-1] / xis[0] < MIN_DYNAMIC_RANGE:
        raise InsufficientRangeError(f"xi range {xis[0]:g}..{xis[-1]:g} spans less than a factor {MIN_DYNAMIC_RANGE:g}")

    values, used_rescaling = [], []
    for xi in xis:
        fiber = rescaled_fiber(profile, xi)
        rescale = fiber.h_xi < policy.rescale_below_h
        lams = rescaled_eigenvalues(profile, xi, n, policy) if rescale else direct_eigenvalues(profile, xi, n, policy)
        if lams.size < n:
            raise DomainError(f"band {n} not found at xi={xi:g}")
        values.append(float(lams[n - 1]))
        used_rescaling.append(bool(rescale))
        logger.debug("asymptotic_fit: xi=%g lambda_%d=%.12g (rescaled=%s)", xi, n, values[-1], rescale)

    log_xi, log_lam = np.log(xis), np.log(values)
    slope, intercept = np.polyfit(log_xi, log_lam, 1)
    residual = float(np.sqrt(np.mean((log_lam - (slope * log_xi + intercept)) ** 2)))
    return AsymptoticFit(
        n=n, xi=xis, eigenvalues=values,
        slope=float(slope), coefficient=float(math.exp(intercept)),
        target_slope=profile.band_exponent(), target_coefficient=profile.band_coefficient(n),
        residual=residual, rescaled=used_rescaling,
    )


# --- Quick self-test ---
if __name__ == "__main__":
    from core.fields import Gaussian

    print("=" * 50)
    print("Semiclassical Self-Test")
    print("=" * 50)

    g = Gaussian()
    for h in (0.1, 0.03, 0.01):
        rows = compare_harmonic(g, 0.5, h, 3, 0.12)
        print(f"\n h={h}: " + ", ".join(f"n={r.n} err={r.relative_error:.3e}" for r in rows))

    check = counting_check(g, 0.5, 0.001, 0.02)
    print(f"\nCounting: N={check.n_computed} bound={check.bound:.3f} pass={check.passed}")

    fit = asymptotic_fit(PowerLaw(1.0, 1.0), 1, [1e2, 10 ** 2.5, 1e3, 10 ** 3.5, 1e4])
    print(f"\nAsymptotics: slope {fit.slope:.4f} (target {fit.target_slope}), "
          f"coefficient {fit.coefficient:.4f} (target {fit.target_coefficient:.4f})")

    print("\n" + "=" * 50)
    print("Done.")
    print("=" * 50)
