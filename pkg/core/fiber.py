"""
fiber.py - One fiber operator h^2 D^2 + V(x) as a symmetric tridiagonal matrix.

How this works (the big picture):
1. Pick a potential V on the real line (for a magnetic fiber V = (xi - a(x))^2)
2. Fit a truncated domain to the energy window we care about:
   - the classically allowed region {V <= E} is found by inverting a
     (monotone profiles) or by a coarse scan (everything else)
   - outside it, eigenfunctions decay like exp(-d(x)/h) where d is the
     Agmon distance, so we walk outwards until d reaches ln(1/eps_trunc)
   - the spacing resolves both the oscillator length sqrt(h/v) and the
     shortest local wavelength h/sqrt(E - floor)
3. Discretize with the 3-point stencil and Dirichlet ends:
   diag = 2h^2/D^2 + V(x_i), offdiag = -h^2/D^2
4. Count eigenvalues below E with the Sturm sequence (LDL^T pivots),
   pull out the lowest ones with LAPACK bisection (stebz), and get
   eigenvectors by inverse iteration.
5. Optionally repeat on the half-spaced grid and Richardson-extrapolate,
   which lifts the accuracy to fourth order and hands us an error estimate.

Key concepts:
- Sturm count: the number of negative pivots of T - E equals the number
  of eigenvalues of T below E. Exact, monotone in E, no eigenvalues needed.
- Near-threshold buffer: 10 D^2 + 1e-6 below an essential threshold. The
  continuum operator has nothing discrete there that the grid can trust.
"""

import math
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, eigvalsh_tridiagonal, solve_banded

from core.errors import ConfigError, ConvergenceError, NumericalError, UnboundedRegionError
from core.fields import FieldProfile, turning_point

logger = logging.getLogger(__name__)


# Grid points per characteristic length (oscillator length or wavelength)
POINTS_PER_LENGTH = 24

# Target size of eigenfunctions at the Dirichlet ends, exp(-Agmon distance)
EPSILON_TRUNC = 1e-12

# Multiplier on the Agmon distance used for the truncation margin
AGMON_SAFETY = 1.0

# Absolute bisection tolerance, scaled by max(1, E)
TOL_LAMBDA = 1e-10

# Steps of size D the margin walk may take before we give up and flag it
MAX_MARGIN_STEPS = 20_000

# Cutoff used when the essential spectrum is empty and nothing better is known
ENERGY_CAP = 10.0

# Doublings of the cutoff before we stop hunting for k_max eigenvalues
MAX_CUTOFF_DOUBLINGS = 12

# Below this semiclassical scale h_xi, large-xi solves go through the rescaled fiber
RESCALE_BELOW_H = 1e-3

# Refuse grids larger than this (memory, and a sign the inputs are off)
MAX_POINTS = 2_000_001

# Inverse-iteration sweeps before declaring non-convergence
INVERSE_ITERATIONS = 10

# Relative residual accepted for an eigenpair, times the matrix norm
RESIDUAL_BOUND = 1e-8

# Samples for coarse scans of V (allowed region, slope estimate)
SCAN_POINTS = 4001

# Largest half-width the coarse scan will try before calling a region unbounded
SCAN_MAX_RADIUS = 1e6


@dataclass(frozen=True)
class GridPolicy:
    """Numerical knobs shared by every fiber solve in a run."""

    points_per_length: int = POINTS_PER_LENGTH
    epsilon_trunc: float = EPSILON_TRUNC
    agmon_safety: float = AGMON_SAFETY
    tol_lambda: float = TOL_LAMBDA
    max_margin_steps: int = MAX_MARGIN_STEPS
    richardson: bool = True
    energy_cap: float = ENERGY_CAP
    max_cutoff_doublings: int = MAX_CUTOFF_DOUBLINGS
    rescale_below_h: float = RESCALE_BELOW_H
    max_points: int = MAX_POINTS
    seed: int = 0

    def __post_init__(self):
        if self.points_per_length < 4:
            raise ConfigError("points_per_length must be >= 4", "grid.points_per_length")
        for name in ("epsilon_trunc", "agmon_safety", "tol_lambda", "energy_cap", "rescale_below_h"):
            if not getattr(self, name) > 0:
                raise ConfigError("must be positive", f"grid.{name}")
        if not 0 < self.epsilon_trunc < 1:
            raise ConfigError("must lie in (0, 1)", "grid.epsilon_trunc")
        if self.max_margin_steps < 1 or self.max_cutoff_doublings < 0 or self.max_points < 3:
            raise ConfigError("step limits must be positive", "grid.max_margin_steps")

    def tolerance(self, energy: float) -> float:
        """Absolute eigenvalue tolerance at energy scale E."""
        scale = abs(energy) if math.isfinite(energy) else 1.0
        return self.tol_lambda * max(1.0, scale)

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


DEFAULT_POLICY = GridPolicy()


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [x_min, x_max] with n points, Dirichlet at both ends."""

    x_min: float
    x_max: float
    n: int
    capped: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max) and self.x_min < self.x_max):
            raise ConfigError(f"need finite x_min < x_max, got [{self.x_min}, {self.x_max}]", "grid")
        if self.n < 3:
            raise ConfigError("need at least 3 grid points", "grid.n")

    @classmethod
    def centered(cls, center: float, half_width: float, spacing: float, capped: bool = False) -> "Grid":
        """Odd-sized grid symmetric about `center` with spacing <= `spacing`."""
        half_steps = max(1, math.ceil(half_width / spacing))
        return cls(center - half_width, center + half_width, 2 * half_steps + 1, capped)

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n)

    def refined(self) -> "Grid":
        """Same domain, half the spacing."""
        return replace(self, n=2 * self.n - 1)

    def enlarged(self, factor: float) -> "Grid":
        """Same center and spacing, `factor` times the half-width."""
        center = 0.5 * (self.x_min + self.x_max)
        half = 0.5 * (self.x_max - self.x_min) * factor
        return Grid.centered(center, half, self.spacing, self.capped)


# ----------------------------------------------------------------------
# Potentials
# ----------------------------------------------------------------------

class Potential(ABC):
    """A nonnegative potential with enough structure to fit a domain to it."""

    center: float = 0.0

    @abstractmethod
    def __call__(self, x: np.ndarray) -> np.ndarray:
        """V evaluated at each x."""

    def allowed_interval(self, energy: float) -> Optional[tuple[float, float]]:
        """
        Hull of {V <= E}, or None when empty.

        The default scans a window around `center`, doubling it until the
        allowed set no longer touches the window edges.

        Raises:
            UnboundedRegionError: Still touching the edges at SCAN_MAX_RADIUS
        """
        radius = 1.0
        while radius <= SCAN_MAX_RADIUS:
            xs = np.linspace(self.center - radius, self.center + radius, SCAN_POINTS)
            allowed = np.nonzero(self(xs) <= energy)[0]
            if allowed.size and (allowed[0] == 0 or allowed[-1] == SCAN_POINTS - 1):
                radius *= 2.0
                continue
            if not allowed.size:
                if radius >= SCAN_MAX_RADIUS / 2:
                    return None
                radius *= 2.0
                continue
            step = xs[1] - xs[0]
            return (xs[allowed[0]] - step, xs[allowed[-1]] + step)
        raise UnboundedRegionError(f"{{V <= {energy}}} reaches |x| = {SCAN_MAX_RADIUS:g}")


def allowed_by_inversion(profile: FieldProfile, level: float, radius: float) -> Optional[tuple[float, float]]:
    """
    {x : |level - a(x)| <= radius} for strictly increasing a.

    Returns None when the band [level - radius, level + radius] misses the
    range (phi_-, phi_+) of a.

    Raises:
        UnboundedRegionError: The band reaches phi_- or phi_+
    """
    phi_minus, phi_plus = profile.flux()[:2]
    low_value, high_value = level - radius, level + radius
    if low_value >= phi_plus or high_value <= phi_minus:
        return None
    if low_value <= phi_minus or high_value >= phi_plus:
        raise UnboundedRegionError(
            f"allowed region unbounded: [{low_value:.6g}, {high_value:.6g}] reaches "
            f"the flux range ({phi_minus}, {phi_plus}); lower the energy"
        )
    return (turning_point(profile, low_value), turning_point(profile, high_value))


class MagneticPotential(Potential):
    """V(x) = (xi - a(x))^2, the potential of the fiber at momentum xi."""

    def __init__(self, profile: FieldProfile, xi: float):
        self.profile = profile
        self.xi = float(xi)
        self.center = 0.0
        if profile.monotone:
            phi_minus, phi_plus = profile.flux()[:2]
            if phi_minus < self.xi < phi_plus:
                self.center = turning_point(profile, self.xi)

    def __call__(self, x):
        return (self.xi - self.profile.a(x)) ** 2

    def allowed_interval(self, energy):
        if energy < 0:
            return None
        if self.profile.monotone:
            return allowed_by_inversion(self.profile, self.xi, math.sqrt(energy))
        return super().allowed_interval(energy)


class QuadraticPotential(Potential):
    """V(s) = v^2 (s - center)^2, the harmonic oracle with levels (2n-1) h v."""

    def __init__(self, v: float, center: float = 0.0):
        if not v > 0:
            raise ConfigError("v must be positive", "harmonic.v")
        self.v = float(v)
        self.center = float(center)

    def __call__(self, x):
        return (self.v * (np.asarray(x, dtype=float) - self.center)) ** 2

    def allowed_interval(self, energy):
        if energy < 0:
            return None
        half = math.sqrt(energy) / self.v
        return (self.center - half, self.center + half)


# ----------------------------------------------------------------------
# Operator and eigenpairs
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class TridiagonalOperator:
    """Symmetric tridiagonal discretization of h^2 D^2 + V on a grid."""

    diag: np.ndarray
    offdiag: np.ndarray
    h: float
    grid: Grid
    potential_floor: float

    @property
    def potential(self) -> np.ndarray:
        return self.diag - 2.0 * self.h ** 2 / self.grid.spacing ** 2

    @property
    def norm(self) -> float:
        """Gershgorin (infinity) norm."""
        row = np.abs(self.diag).copy()
        row[:-1] += np.abs(self.offdiag)
        row[1:] += np.abs(self.offdiag)
        return float(row.max())

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[:-1] += self.offdiag * v[1:]
        out[1:] += self.offdiag * v[:-1]
        return out


@dataclass
class EigenPair:
    """Eigenvalue, eigenvector normalized to sum(psi^2) * D = 1, and residual."""

    lam: float
    psi: np.ndarray
    residual: float
    grid: Grid


def from_potential(values: np.ndarray, h: float, grid: Grid) -> TridiagonalOperator:
    """Assemble the operator from potential samples V(x_i)."""
    if not h > 0:
        raise ConfigError("h must be positive", "h")
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n,):
        raise ConfigError(f"expected {grid.n} potential samples, got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise NumericalError("potential has non-finite samples on the grid")
    kinetic = h * h / grid.spacing ** 2
    return TridiagonalOperator(
        diag=2.0 * kinetic + values,
        offdiag=np.full(grid.n - 1, -kinetic),
        h=float(h),
        grid=grid,
        potential_floor=float(values.min()),
    )


def assemble(profile: FieldProfile, xi: float, h: float, grid: Grid) -> TridiagonalOperator:
    """Fiber operator h^2 D^2 + (xi - a(x))^2 on `grid`."""
    return from_potential(MagneticPotential(profile, xi)(grid.points), h, grid)


def count_below(T: TridiagonalOperator, energy: float) -> int:
    """
    Number of eigenvalues of T strictly below `energy` (Sturm count).

    Runs the LDL^T pivot recurrence of T - E and counts negative pivots.
    """
    if not math.isfinite(energy):
        raise ConfigError("energy must be finite for a Sturm count")
    d = (T.diag - energy).tolist()
    e2 = (T.offdiag ** 2).tolist()
    pivmin = np.finfo(float).tiny * max(1.0, max(e2, default=1.0))
    count = 0
    q = d[0]
    for i in range(len(d)):
        if i:
            q = d[i] - e2[i - 1] / q
        if abs(q) < pivmin:
            # a zero pivot means E hits an eigenvalue of the leading block;
            # nudging up keeps an exact hit out of the "strictly below" count
            q = pivmin
        if q < 0:
            count += 1
    return count


def eigenvalues_below(T: TridiagonalOperator, energy: float, k_max: int, tol: Optional[float] = None) -> list[float]:
    """
    The min(count_below(T, E), k_max) smallest eigenvalues, ascending.

    Uses LAPACK's Sturm bisection (stebz) restricted to the index range, so
    cost scales with k_max rather than n.
    """
    if k_max < 1:
        raise ConfigError("k_max must be >= 1", "k_max")
    k = min(count_below(T, energy), k_max)
    if k == 0:
        return []
    if tol is None:
        tol = DEFAULT_POLICY.tolerance(energy)
    values = eigvalsh_tridiagonal(
        T.diag, T.offdiag,
        select="i", select_range=(0, k - 1),
        lapack_driver="stebz", tol=tol,
    )
    return sorted(float(v) for v in values)


def nth_eigenvalue(T: TridiagonalOperator, n: int, tol: Optional[float] = None) -> float:
    """The n-th smallest eigenvalue of T (n counts from 1)."""
    if not 1 <= n <= T.grid.n:
        raise ConfigError(f"band index {n} out of range 1..{T.grid.n}", "n")
    if tol is None:
        tol = DEFAULT_POLICY.tol_lambda
    value = eigvalsh_tridiagonal(
        T.diag, T.offdiag, select="i", select_range=(n - 1, n - 1),
        lapack_driver="stebz", tol=tol,
    )
    return float(value[0])


def _residual(T: TridiagonalOperator, lam: float, v: np.ndarray) -> float:
    return float(np.linalg.norm(T.matvec(v) - lam * v) / np.linalg.norm(v))


def eigenvector(
    T: TridiagonalOperator,
    lam: float,
    tol: Optional[float] = None,
    seed: int = 0,
    max_iter: int = INVERSE_ITERATIONS,
) -> EigenPair:
    """
    Eigenvector for an isolated eigenvalue by shifted inverse iteration.

    The start vector comes from a seeded generator, so repeated calls give
    bit-identical output. The sign is fixed by making the largest entry
    positive.

    Raises:
        ConvergenceError: residual still above RESIDUAL_BOUND * ||T||
    """
    if tol is None:
        tol = DEFAULT_POLICY.tolerance(lam)
    n = T.grid.n
    bound = RESIDUAL_BOUND * T.norm
    shift = lam + tol
    banded = np.zeros((3, n))
    banded[0, 1:] = T.offdiag
    banded[2, :-1] = T.offdiag
    banded[1, :] = T.diag - shift

    v = np.random.default_rng(seed).standard_normal(n)
    v /= np.linalg.norm(v)
    residual = math.inf
    for _ in range(max_iter):
        try:
            w = solve_banded((1, 1), banded, v, check_finite=False)
        except LinAlgError:
            # shift landed exactly on the spectrum; move it by one more tol
            shift += tol
            banded[1, :] = T.diag - shift
            continue
        v = w / np.linalg.norm(w)
        residual = _residual(T, lam, v)
        if residual <= bound:
            break
    else:
        raise ConvergenceError(
            f"inverse iteration at lambda={lam:.12g} stalled (residual {residual:.3e} > {bound:.3e}); "
            "eigenvalues may be clustered, try a tighter tolerance"
        )

    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    psi = v / math.sqrt(T.grid.spacing)
    return EigenPair(lam=float(lam), psi=psi, residual=residual, grid=T.grid)


# ----------------------------------------------------------------------
# Domain fitting
# ----------------------------------------------------------------------

def near_threshold_buffer(spacing: float) -> float:
    """Distance below an essential threshold where eigenvalues get flagged."""
    return 10.0 * spacing ** 2 + 1e-6


def _slope_and_floor(potential: Potential, lo: float, hi: float) -> tuple[float, float]:
    """max |d sqrt(V)/dx| and min V over [lo, hi]."""
    xs = np.linspace(lo, hi, SCAN_POINTS)
    values = np.maximum(potential(xs), 0.0)
    slope = np.abs(np.gradient(np.sqrt(values), xs))
    return float(slope.max()), float(values.min())


def _walk_margin(potential: Potential, edge: float, direction: int, energy: float, h: float,
                 step: float, target: float, max_steps: int) -> tuple[float, bool]:
    """
    Distance from `edge` until the Agmon distance reaches `target`.

    Returns (distance, capped). Walks in chunks of steps of size `step`.
    """
    chunk = 512
    distance = 0.0
    taken = 0
    prev = math.sqrt(max(float(potential(np.array([edge]))[0]) - energy, 0.0))
    while taken < max_steps:
        count = min(chunk, max_steps - taken)
        xs = edge + direction * step * np.arange(taken + 1, taken + count + 1)
        roots = np.sqrt(np.maximum(potential(xs) - energy, 0.0))
        pieces = 0.5 * step * (np.concatenate(([prev], roots[:-1])) + roots) / h
        totals = distance + np.cumsum(pieces)
        reached = np.nonzero(totals >= target)[0]
        if reached.size:
            return step * (taken + reached[0] + 1), False
        distance = float(totals[-1])
        prev = float(roots[-1])
        taken += count
    return step * taken, True


def fit_domain(potential: Potential, h: float, energy: float, policy: GridPolicy = DEFAULT_POLICY) -> Optional[Grid]:
    """
    Grid covering {V <= E} plus an Agmon margin on each side.

    Returns None when {V <= E} is empty (no eigenvalues below E).

    Raises:
        UnboundedRegionError: {V <= E} is not bounded
        NumericalError: the grid would exceed policy.max_points
    """
    if not h > 0:
        raise ConfigError("h must be positive", "h")
    interval = potential.allowed_interval(energy)
    if interval is None:
        return None
    lo, hi = interval
    width = hi - lo
    if width <= 0:
        lo, hi = lo - 0.5, hi + 0.5
    slope, floor = _slope_and_floor(potential, lo, hi)
    scales = []
    if slope > 0:
        oscillator = math.sqrt(h / slope)
        scales += [oscillator, max(width, 0.25 * oscillator)]
    elif width > 0:
        scales.append(width)
    if energy > floor:
        scales.append(h / math.sqrt(energy - floor))
    spacing = (min(scales) if scales else 1.0) / policy.points_per_length

    target = policy.agmon_safety * math.log(1.0 / policy.epsilon_trunc)
    left, capped_left = _walk_margin(potential, lo, -1, energy, h, spacing, target, policy.max_margin_steps)
    right, capped_right = _walk_margin(potential, hi, +1, energy, h, spacing, target, policy.max_margin_steps)
    capped = capped_left or capped_right
    if capped:
        logger.info(
            "Agmon margin capped after %d steps (E=%.6g, h=%g); eigenvalues near E are unreliable",
            policy.max_margin_steps, energy, h,
        )
    x_min, x_max = lo - left, hi + right
    grid = Grid.centered(0.5 * (x_min + x_max), 0.5 * (x_max - x_min), spacing, capped)
    if grid.n * (2 if policy.richardson else 1) > policy.max_points:
        raise NumericalError(f"grid of {grid.n} points exceeds max_points={policy.max_points}")
    logger.debug("fit_domain: [%.6g, %.6g] n=%d spacing=%.3e", grid.x_min, grid.x_max, grid.n, grid.spacing)
    return grid


def auto_domain(profile: FieldProfile, xi: float, h: float, energy: float,
                policy: GridPolicy = DEFAULT_POLICY) -> Optional[Grid]:
    """fit_domain for the magnetic fiber at momentum xi."""
    return fit_domain(MagneticPotential(profile, xi), h, energy, policy)


# ----------------------------------------------------------------------
# Full solves
# ----------------------------------------------------------------------

@dataclass
class FiberSolution:
    """
    Eigenvalues of one fiber below a cutoff.

    `eigenvalues` are Richardson-extrapolated when the policy asks for it,
    `errors` holds |lambda(D/2) - lambda(D)| / 3 (NaN without refinement).
    Eigenpairs, when requested, live on `operator` (the finest grid used).
    """

    eigenvalues: np.ndarray
    errors: np.ndarray
    cutoff: float
    grid: Optional[Grid]
    operator: Optional[TridiagonalOperator] = None
    pairs: list = field(default_factory=list)

    @property
    def capped(self) -> bool:
        return bool(self.grid is not None and self.grid.capped)


def solve_fiber(potential: Potential, h: float, energy: float, k_max: int,
                policy: GridPolicy = DEFAULT_POLICY, vectors: bool = False,
                grid: Optional[Grid] = None) -> FiberSolution:
    """
    Lowest min(k_max, #) eigenvalues of h^2 D^2 + V below `energy`.

    Args:
        potential: The fiber potential
        h: Semiclassical scale (1 for the plain fiber)
        energy: Cutoff E
        k_max: Maximum number of eigenvalues
        policy: Grid policy
        vectors: Also compute eigenpairs (on the finest grid)
        grid: Use this grid instead of fitting one
    """
    if grid is None:
        grid = fit_domain(potential, h, energy, policy)
    if grid is None:
        empty = np.array([])
        return FiberSolution(empty, empty, energy, None)

    tol = policy.tolerance(energy)
    coarse = from_potential(potential(grid.points), h, grid)
    values = np.array(eigenvalues_below(coarse, energy, k_max, tol))
    operator, raw = coarse, values
    errors = np.full(values.shape, np.nan)

    if policy.richardson and values.size:
        fine_grid = grid.refined()
        fine = from_potential(potential(fine_grid.points), h, fine_grid)
        fine_values = np.array(eigenvalues_below(fine, energy, k_max, tol))
        k = min(values.size, fine_values.size)
        errors = np.abs(fine_values[:k] - values[:k]) / 3.0
        values = (4.0 * fine_values[:k] - values[:k]) / 3.0
        operator, raw = fine, fine_values[:k]

    pairs = []
    if vectors:
        pairs = [eigenvector(operator, lam, tol, policy.seed) for lam in raw]
    return FiberSolution(values, errors, energy, grid, operator, pairs)


def solve_lowest(potential: Potential, h: float, k_max: int, velocity: Optional[float] = None,
                 floor: float = 0.0, policy: GridPolicy = DEFAULT_POLICY,
                 vectors: bool = False) -> FiberSolution:
    """
    The k_max lowest eigenvalues of a confining potential (no essential spectrum).

    Starts the cutoff at the harmonic estimate floor + (2 k_max + 2) h v, or at
    policy.energy_cap without a velocity, and doubles the distance to the
    floor until k_max eigenvalues are found.
    """
    if velocity is not None and velocity > 0:
        energy = floor + (2 * k_max + 2) * h * velocity
    else:
        energy = floor + policy.energy_cap
    solution = solve_fiber(potential, h, energy, k_max, policy, vectors)
    for _ in range(policy.max_cutoff_doublings):
        if solution.eigenvalues.size >= k_max:
            break
        energy = floor + 2.0 * (energy - floor)
        logger.debug("solve_lowest: %d/%d found, raising cutoff to %.6g", solution.eigenvalues.size, k_max, energy)
        solution = solve_fiber(potential, h, energy, k_max, policy, vectors)
    else:
        if solution.eigenvalues.size < k_max:
            logger.warning("solve_lowest: only %d of %d eigenvalues below %.6g", solution.eigenvalues.size, k_max, energy)
    return solution


# --- Quick self-test ---
if __name__ == "__main__":
    print("=" * 50)
    print("Fiber Solver Self-Test")
    print("=" * 50)

    grid = Grid(-12.0, 12.0, 4001)
    T = from_potential(grid.points ** 2, 1.0, grid)
    print(f"\n1. Harmonic oracle: count_below(6) = {count_below(T, 6.0)}")
    print(f"   eigenvalues = {eigenvalues_below(T, 6.0, 5)}")

    pair = eigenvector(T, eigenvalues_below(T, 6.0, 1)[0])
    print(f"\n2. Ground state residual {pair.residual:.2e}, psi(0) = {pair.psi[grid.n // 2]:.6f}")

    sol = solve_fiber(QuadraticPotential(1.0), 1.0, 6.0, 5)
    print(f"\n3. Richardson on fitted grid (n={sol.grid.n}): {sol.eigenvalues}")

    print("\n" + "=" * 50)
    print("Done.")
    print("=" * 50)
