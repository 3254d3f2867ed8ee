"""
scattering.py - Half-line Jost asymptotics and exclusion of embedded eigenvalues.

How this works (the big picture):
1. On a half-line where the potential settles to a constant, the fiber
   equation reads -psi'' - omega^2 psi + w psi = 0 with w integrable.
   Every solution then behaves like a e^{i omega x} + b e^{-i omega x}
   (omega > 0) or a + b x (omega = 0) at infinity.
2. We track (a, b) directly: write psi = a(x) e^{i omega x} + b(x) e^{-i omega x}
   and psi' = i omega (a(x) e^{i omega x} - b(x) e^{-i omega x}). The pair then
   obeys V' = M(x) V with M proportional to w, so V(x) converges once the
   remaining integral of |w| is negligible. For omega = 0 the same works
   with psi = a(x) + b(x) x, psi' = b(x).
3. A fifth state component accumulates the integral of ||M||, which gives
   the Gronwall bound ||V(x)|| <= ||V(x0)|| exp(int ||M||) to check at every
   accepted step.
4. If every nonzero start vector ends with (a, b) != 0 the solution is not
   square integrable, so lambda cannot be an eigenvalue. We certify that by
   the smallest singular value of the 2x2 map (psi, psi') -> (a, b).
"""

import math
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from core.errors import ConvergenceError, ConfigError, L1CheckError, NotEmbeddedError
from core.fields import FieldProfile, adaptive_integral
from core.spectrum import ess_threshold

logger = logging.getLogger(__name__)


# Runge-Kutta tolerances for the coefficient ODE
ODE_RTOL = 1e-10
ODE_ATOL = 1e-12

# Default bound on the integral of ||M|| beyond the cut
TAIL_TOL = 1e-10

# The cut point doubles until this far out, then gives up
MAX_CUT = 1e6

# |w| below this over [x, 2x] starts the tail test
W_NEGLIGIBLE = 1e-14

# sigma_min^2 must beat this multiple of (rtol + tail) to exclude
EXCLUSION_FACTOR = 1e3


@dataclass
class HalfLineProblem:
    """-psi'' - omega^2 psi + w psi = 0 on [x_start, inf) with data at x_start."""

    omega: float
    w: Callable[[float], float]
    x_start: float = 0.0
    psi0: complex = 1.0
    dpsi0: complex = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.omega) and self.omega >= 0):
            raise ConfigError(f"omega must be finite and >= 0, got {self.omega}", "scattering.omega")
        if not self.x_start >= 0:
            raise ConfigError("x_start must be >= 0", "scattering.x_start")

    def m_norm(self, x: float) -> float:
        """Operator norm of the coefficient matrix M(x)."""
        w = abs(self.w(x))
        if self.omega > 0:
            return w / self.omega
        return w * (1.0 + x * x)


@dataclass
class JostCoefficients:
    a: complex
    b: complex
    omega: float
    tail_bound: float
    x_cut: float
    gronwall_ok: bool = True
    stable: bool = True
    change: float = 0.0

    @property
    def amplitude(self) -> float:
        return abs(self.a) ** 2 + abs(self.b) ** 2

    def to_dict(self) -> dict:
        return {
            "a": [self.a.real, self.a.imag],
            "b": [self.b.real, self.b.imag],
            "omega": self.omega,
            "amplitude": self.amplitude,
            "tail_bound": self.tail_bound,
            "x_cut": self.x_cut,
            "gronwall_ok": self.gronwall_ok,
            "stable": self.stable,
            "change": self.change,
        }


def free_solution_coefficients(omega: float, psi0: complex, dpsi0: complex, x0: float = 0.0) -> tuple[complex, complex]:
    """Exact (a, b) of the w = 0 solution with psi(x0) = psi0, psi'(x0) = dpsi0."""
    if omega > 0:
        a = 0.5 * (psi0 + dpsi0 / (1j * omega)) * np.exp(-1j * omega * x0)
        b = 0.5 * (psi0 - dpsi0 / (1j * omega)) * np.exp(1j * omega * x0)
        return complex(a), complex(b)
    return complex(psi0 - dpsi0 * x0), complex(dpsi0)


def _to_psi(omega: float, x: np.ndarray, a: np.ndarray, b: np.ndarray):
    if omega > 0:
        plus, minus = np.exp(1j * omega * x), np.exp(-1j * omega * x)
        return a * plus + b * minus, 1j * omega * (a * plus - b * minus)
    return a + b * x, b


def _rhs(problem: HalfLineProblem):
    omega = problem.omega

    def rhs(x, u):
        a = u[0] + 1j * u[1]
        b = u[2] + 1j * u[3]
        w = problem.w(x)
        if omega > 0:
            k = w / (2j * omega)
            phase = np.exp(2j * omega * x)
            da = k * (a + b / phase)
            db = -k * (a * phase + b)
        else:
            psi = a + b * x
            da = -x * w * psi
            db = w * psi
        return [da.real, da.imag, db.real, db.imag, problem.m_norm(x)]

    return rhs


def _integrate(problem: HalfLineProblem, start: float, stop: float, state: np.ndarray):
    sol = solve_ivp(
        _rhs(problem), (start, stop), state,
        method="RK45", rtol=ODE_RTOL, atol=ODE_ATOL,
    )
    if not sol.success:
        raise ConvergenceError(f"coefficient ODE failed on [{start:g}, {stop:g}]: {sol.message}")
    return sol


def _initial_state(problem: HalfLineProblem) -> np.ndarray:
    a, b = free_solution_coefficients(problem.omega, problem.psi0, problem.dpsi0, problem.x_start)
    return np.array([a.real, a.imag, b.real, b.imag, 0.0])


def _gronwall_holds(y: np.ndarray, start_norm: float) -> bool:
    norms = np.sqrt(y[0] ** 2 + y[1] ** 2 + y[2] ** 2 + y[3] ** 2)
    bounds = start_norm * np.exp(y[4])
    return bool(np.all(norms <= bounds * (1.0 + 1e-8) + ODE_ATOL))


def tail_integral(problem: HalfLineProblem, x_cut: float) -> float:
    """Integral of ||M|| from x_cut to infinity."""
    return adaptive_integral(problem.m_norm, x_cut, math.inf)


def choose_cut(problem: HalfLineProblem, tail_tol: float = TAIL_TOL) -> tuple[float, float]:
    """
    Smallest x_cut = 2^k max(1, 2 x_start) where w is negligible and the tail
    of ||M|| is below tail_tol.

    Returns (x_cut, tail).

    Raises:
        L1CheckError: Not reached by MAX_CUT
    """
    x = max(1.0, 2.0 * problem.x_start)
    while x <= MAX_CUT:
        samples = np.linspace(x, 2.0 * x, 64)
        if max(abs(problem.w(float(s))) for s in samples) < W_NEGLIGIBLE:
            tail = tail_integral(problem, x)
            if tail <= tail_tol:
                logger.debug("choose_cut: x_cut=%g tail=%.3e", x, tail)
                return x, tail
        x *= 2.0
    raise L1CheckError(
        f"tail integral of ||M|| still above {tail_tol:g} at x={MAX_CUT:g}; "
        "w does not look integrable at this tolerance"
    )


def volterra_coefficients(problem: HalfLineProblem, x_cut: Optional[float] = None,
                          tail_tol: float = TAIL_TOL) -> JostCoefficients:
    """
    Asymptotic coefficients (a, b) of the solution fixed by the initial data.

    Integrates the coefficient ODE to x_cut, then on to 2 x_cut to measure
    how much (a, b) still move.

    Args:
        problem: Equation and initial data
        x_cut: Where to read off (a, b); chosen by choose_cut when None
        tail_tol: Largest acceptable integral of ||M|| beyond x_cut

    Raises:
        ConfigError: x_cut not after x_start
        L1CheckError: tail_tol unattainable
    """
    if x_cut is None:
        x_cut, tail = choose_cut(problem, tail_tol)
    else:
        if x_cut <= problem.x_start:
            raise ConfigError(f"x_cut={x_cut} must lie after x_start={problem.x_start}", "scattering.x_cut")
        tail = tail_integral(problem, x_cut)
        if tail > tail_tol:
            raise L1CheckError(f"tail integral {tail:.3e} beyond x_cut={x_cut:g} exceeds {tail_tol:g}")

    state = _initial_state(problem)
    start_norm = float(np.linalg.norm(state[:4]))
    first = _integrate(problem, problem.x_start, x_cut, state)
    at_cut = first.y[:, -1]
    second = _integrate(problem, x_cut, 2.0 * x_cut, at_cut)
    at_double = second.y[:, -1]
    gronwall_ok = _gronwall_holds(first.y, start_norm) and _gronwall_holds(second.y, start_norm)
    if not gronwall_ok:
        logger.warning("Gronwall bound violated along the coefficient ODE (omega=%g)", problem.omega)

    a = complex(at_cut[0], at_cut[1])
    b = complex(at_cut[2], at_cut[3])
    size = float(np.linalg.norm(at_cut[:4]))
    tail_bound = tail * size * math.exp(tail)
    change = float(np.linalg.norm(at_double[:4] - at_cut[:4]))
    stable = change <= tail_bound + 1e-8 * (1.0 + size)
    return JostCoefficients(a, b, problem.omega, tail_bound, x_cut, gronwall_ok, bool(stable), change)


def integrate_solution(problem: HalfLineProblem, xs: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """psi and psi' at the points xs (all >= x_start), integrating to each point in turn."""
    xs = np.sort(np.asarray(xs, dtype=float))
    if xs.size == 0:
        return np.array([], dtype=complex), np.array([], dtype=complex)
    if xs[0] < problem.x_start:
        raise ConfigError("evaluation points must lie at or after x_start", "scattering.xs")
    state = _initial_state(problem)
    position = problem.x_start
    a = np.empty(xs.size, dtype=complex)
    b = np.empty(xs.size, dtype=complex)
    for i, x in enumerate(xs):
        if x > position:
            state = _integrate(problem, position, float(x), state).y[:, -1]
            position = float(x)
        a[i] = complex(state[0], state[1])
        b[i] = complex(state[2], state[3])
    return _to_psi(problem.omega, xs, a, b)


def wronskian(u1: complex, du1: complex, u2: complex, du2: complex) -> complex:
    """u1 u2' - u1' u2."""
    return u1 * du2 - du1 * u2


# ----------------------------------------------------------------------
# Embedded eigenvalues of a fiber
# ----------------------------------------------------------------------

@dataclass
class EmbeddedExclusion:
    xi: float
    lam: float
    side: str
    omega: float
    excluded: bool
    sigma_min: float
    threshold: float
    coefficients: JostCoefficients

    def to_dict(self) -> dict:
        return {
            "xi": self.xi,
            "lambda": self.lam,
            "side": self.side,
            "omega": self.omega,
            "excluded": self.excluded,
            "sigma_min": self.sigma_min,
            "exclusion_threshold": self.threshold,
            "coefficients": self.coefficients.to_dict(),
        }


def tail_problem(profile: FieldProfile, xi: float, lam: float, side: str) -> HalfLineProblem:
    """
    Half-line equation for L_xi - lam on the given side ("plus" or "minus").

    The minus side is reflected onto [0, inf) with y = -x.
    """
    phi_minus, phi_plus = profile.flux()[:2]
    limit = phi_plus if side == "plus" else phi_minus
    if not math.isfinite(limit):
        raise NotEmbeddedError(f"flux on the {side} side is infinite")
    level = (xi - limit) ** 2
    if lam < level:
        raise NotEmbeddedError(f"lambda={lam} below (xi - phi_{side})^2 = {level}")
    sign = 1.0 if side == "plus" else -1.0

    def w(y):
        return (xi - profile.a(sign * y)) ** 2 - level

    return HalfLineProblem(omega=math.sqrt(lam - level), w=w)


def embedded_exclusion(profile: FieldProfile, xi: float, lam: float,
                       tail_tol: float = TAIL_TOL) -> EmbeddedExclusion:
    """
    Certify that lam in the essential spectrum of L_xi is not an eigenvalue.

    Picks a side with finite flux whose limit level lies at or below lam,
    preferring the plus side, and checks that no nonzero data at x = 0 yields
    a decaying solution there.

    Raises:
        NotEmbeddedError: lam below the essential threshold
        L1CheckError: The tail potential is not integrable to tail_tol
    """
    threshold = ess_threshold(profile, xi)
    if not math.isfinite(threshold) or lam < threshold:
        raise NotEmbeddedError(
            f"lambda={lam} is below the essential threshold {threshold} at xi={xi}; "
            "use the discrete solver instead"
        )
    phi_minus, phi_plus = profile.flux()[:2]
    side = "plus"
    if not (math.isfinite(phi_plus) and lam >= (xi - phi_plus) ** 2):
        side = "minus"
    base = tail_problem(profile, xi, lam, side)

    columns = []
    for psi0, dpsi0 in ((1.0, 0.0), (0.0, 1.0)):
        problem = HalfLineProblem(base.omega, base.w, 0.0, psi0, dpsi0)
        columns.append(volterra_coefficients(problem, tail_tol=tail_tol))
    matrix = np.array([[c.a for c in columns], [c.b for c in columns]])
    sigma_min = float(np.linalg.svd(matrix, compute_uv=False)[-1])
    tail = max(c.tail_bound for c in columns)
    cutoff = EXCLUSION_FACTOR * (ODE_RTOL + tail)
    excluded = sigma_min ** 2 > cutoff and all(c.stable for c in columns)
    logger.debug("embedded_exclusion: xi=%g lam=%g side=%s sigma_min=%.3e", xi, lam, side, sigma_min)
    return EmbeddedExclusion(xi, lam, side, base.omega, bool(excluded), sigma_min, cutoff, columns[0])


# --- Quick self-test ---
if __name__ == "__main__":
    from core.fields import Gaussian

    print("=" * 50)
    print("Scattering Self-Test")
    print("=" * 50)

    free = HalfLineProblem(1.0, lambda x: 0.0, 0.0, 1.0, 1j)
    c = volterra_coefficients(free)
    print(f"\n1. Free plane wave: a={c.a:.6f}, b={c.b:.6f}")

    psi, dpsi = integrate_solution(HalfLineProblem(2.0, lambda x: 0.0, 0.0, 0.0, 2.0), [0.0, 1.0, 2.0])
    print(f"\n2. sin(2x) at 0, 1, 2: {np.round(psi.real, 8)}")

    result = embedded_exclusion(Gaussian(), 0.5, 0.3)
    print(f"\n3. Gaussian xi=0.5, lambda=0.3: excluded={result.excluded}, sigma_min={result.sigma_min:.4f}")

    print("\n" + "=" * 50)
    print("Done.")
    print("=" * 50)
