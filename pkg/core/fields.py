"""
fields.py - Magnetic field profiles b(x), their potentials a(x) and fluxes.

How this works (the big picture):
1. A profile describes a magnetic field b(x) that depends on one coordinate only
2. The vector potential is a(x) = a0 + integral of b from 0 to x
   - every analytic kind has a closed-form primitive (erf, log-cosh, hyp2f1, ...)
   - tabulated data goes through a monotone cubic (PCHIP) spline whose
     antiderivative is exact, so a(x) never needs a quadrature per call
3. The fluxes phi_- and phi_+ are the limits of a(x) at -inf and +inf
   (float('-inf') / float('inf') when the field does not decay)
4. For a field that stays positive, a is an increasing bijection onto
   (phi_-, phi_+), so every xi in that interval has a unique turning point
   x_xi with a(x_xi) = xi. The field at that point, b(x_xi), is the
   "effective velocity" of the harmonic approximation.

Gauge:
- a0 = None picks the canonical gauge: phi_- = 0 whenever phi_- is finite,
  otherwise a(0) = 0. Passing a number fixes a0 explicitly.

Profiles are frozen dataclasses. Nothing is mutated after construction, so
they can be shared freely between worker processes.
"""

import math
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Optional

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.special import binom, erf, hyp2f1

from core.errors import ConfigError, DomainError, QuadratureError

logger = logging.getLogger(__name__)


# Absolute tolerance for adaptive quadrature (reference path and L1 checks)
QUAD_EPSABS = 1e-10

# Subinterval budget for scipy.integrate.quad before we call it non-convergent
QUAD_LIMIT = 400

# |a(x_xi) - xi| target for turning_point, relative to 1 + |xi|
TURNING_TOL = 1e-12

# Past this |x| the regularized power-law primitive switches from hyp2f1 to
# a binomial series in 1/x^2 (converges like 4^-k at the switch point)
_SERIES_SWITCH = 2.0
_SERIES_TERMS = 60

POWER_LAW_CORES = ("auto", "pure", "regularized", "half_line")
TABULATED_TAILS = ("zero", "linear")


class FluxLimits(NamedTuple):
    """(phi_-, phi_+) with a flag telling whether a tail model was assumed."""
    minus: float
    plus: float
    extrapolated: bool = False


# ----------------------------------------------------------------------
# Quadrature helper
# ----------------------------------------------------------------------

def adaptive_integral(func, lo: float, hi: float, epsabs: float = QUAD_EPSABS) -> float:
    """
    Integrate func over [lo, hi] with adaptive Gauss-Kronrod (QUADPACK).

    Either limit may be infinite.

    Raises:
        QuadratureError: If QUADPACK reports anything but clean convergence
    """
    result = quad(func, lo, hi, epsabs=epsabs, epsrel=0.0, limit=QUAD_LIMIT, full_output=1)
    # quad appends a message only when ier != 0
    if len(result) > 3:
        raise QuadratureError(f"quadrature on [{lo}, {hi}] did not converge: {result[3]}")
    return float(result[0])


def _like_input(x: Any, values: np.ndarray):
    """Return a Python float for scalar input, the array otherwise."""
    if np.ndim(x) == 0:
        return float(values)
    return values


# ----------------------------------------------------------------------
# Profiles
# ----------------------------------------------------------------------

class FieldProfile(ABC):
    """
    Base class for field profiles.

    Subclasses provide the field, the primitive from 0 and the raw limits of
    that primitive. The base class layers the gauge on top.
    """

    kind: str = "abstract"
    a0: Optional[float]

    @abstractmethod
    def field(self, x: np.ndarray) -> np.ndarray:
        """b(x) on the whole real line (tail model included)."""

    @abstractmethod
    def primitive(self, x: np.ndarray) -> np.ndarray:
        """Integral of b from 0 to x."""

    @abstractmethod
    def primitive_limits(self) -> tuple[float, float]:
        """Limits of the primitive at -inf and +inf."""

    @abstractmethod
    def params(self) -> dict:
        """Kind-specific parameters, in config-file form."""

    @property
    def monotone(self) -> bool:
        """True when b > 0 everywhere, so a is strictly increasing."""
        return False

    @property
    def hull(self) -> tuple[float, float]:
        """Range where eval_b is defined."""
        return (-math.inf, math.inf)

    @property
    def extrapolated(self) -> bool:
        return False

    @property
    def gauge(self) -> float:
        if self.a0 is not None:
            return float(self.a0)
        lower, _ = self.primitive_limits()
        return -lower if math.isfinite(lower) else 0.0

    def a(self, x):
        x_arr = np.asarray(x, dtype=float)
        return _like_input(x, self.gauge + self.primitive(x_arr))

    def b(self, x):
        x_arr = np.asarray(x, dtype=float)
        return _like_input(x, self.field(x_arr))

    def flux(self) -> FluxLimits:
        lower, upper = self.primitive_limits()
        g = self.gauge
        return FluxLimits(lower + g, upper + g, self.extrapolated)

    def describe(self) -> dict:
        """Config echo: kind, parameters and the resolved gauge constant."""
        out = {"kind": self.kind, **self.params()}
        out["a0"] = self.a0
        out["gauge"] = self.gauge
        return out


def _check_a0(a0) -> Optional[float]:
    if a0 is None:
        return None
    if not math.isfinite(a0):
        raise ConfigError("a0 must be finite", "profile.a0")
    return float(a0)


@dataclass(frozen=True)
class Constant(FieldProfile):
    """b(x) = b0. Landau levels (2n-1)|b0| are the exact fiber spectrum."""

    b0: float = 1.0
    a0: Optional[float] = None
    kind = "constant"

    def __post_init__(self):
        if self.b0 == 0 or not math.isfinite(self.b0):
            raise ConfigError("b0 must be finite and nonzero", "profile.b0")
        object.__setattr__(self, "a0", _check_a0(self.a0))

    def field(self, x):
        return np.full_like(x, self.b0, dtype=float)

    def primitive(self, x):
        return self.b0 * x

    def primitive_limits(self):
        return (-math.inf, math.inf) if self.b0 > 0 else (math.inf, -math.inf)

    def params(self):
        return {"b0": self.b0}

    @property
    def monotone(self):
        return self.b0 > 0


def _regularized_primitive(x: np.ndarray, alpha: float) -> np.ndarray:
    """Integral from 0 to x of (1 + u^2)^(alpha/2); odd in x."""
    p = alpha / 2.0
    x1 = np.atleast_1d(x).astype(float)
    u = np.abs(x1)
    out = np.empty_like(u)

    def near(v):
        z = v * v / (1.0 + v * v)
        return v / np.sqrt(1.0 + v * v) * hyp2f1(1.5 + p, 0.5, 1.5, z)

    def series(v):
        # (1+v^2)^p = v^(2p) * sum_k binom(p, k) v^(-2k)
        total = np.zeros_like(v)
        for k in range(_SERIES_TERMS):
            e = 2.0 * p - 2.0 * k + 1.0
            if abs(e) < 1e-12:
                term = np.log(v) - math.log(_SERIES_SWITCH)
            else:
                term = (v ** e - _SERIES_SWITCH ** e) / e
            total += binom(p, k) * term
        return total

    inner = u <= _SERIES_SWITCH
    out[inner] = near(u[inner])
    if np.any(~inner):
        out[~inner] = float(near(np.array(_SERIES_SWITCH))) + series(u[~inner])
    return (np.sign(x1) * out).reshape(np.shape(x))


@dataclass(frozen=True)
class PowerLaw(FieldProfile):
    """
    b(x) ~ c1 x^alpha as x -> +inf, with a choice of core near the origin.

    Cores:
        pure        b = c1 |x|^alpha (alpha > 0 only)
        regularized b = c1 (1 + x^2)^(alpha/2), C^1 everywhere
        half_line   regularized for x >= 0, c1 exp(-x^2) for x < 0,
                    which makes phi_- = -c1 sqrt(pi)/2 finite
        auto        pure when alpha > 0, regularized otherwise
    """

    c1: float = 1.0
    alpha: float = 1.0
    core: str = "auto"
    a0: Optional[float] = None
    kind = "power_law"

    def __post_init__(self):
        if not (self.c1 > 0 and math.isfinite(self.c1)):
            raise ConfigError("c1 must be positive", "profile.c1")
        if not (self.alpha > -1 and self.alpha != 0 and math.isfinite(self.alpha)):
            raise ConfigError("alpha must lie in (-1, 0) or (0, inf)", "profile.alpha")
        if self.core not in POWER_LAW_CORES:
            raise ConfigError(f"core must be one of {POWER_LAW_CORES}", "profile.core")
        resolved = self.core
        if resolved == "auto":
            resolved = "pure" if self.alpha > 0 else "regularized"
        if resolved == "pure" and self.alpha < 0:
            raise ConfigError("pure core needs alpha > 0 (b would blow up at 0)", "profile.core")
        object.__setattr__(self, "core", resolved)
        object.__setattr__(self, "a0", _check_a0(self.a0))

    def field(self, x):
        if self.core == "pure":
            return self.c1 * np.abs(x) ** self.alpha
        right = self.c1 * (1.0 + x * x) ** (self.alpha / 2.0)
        if self.core == "regularized":
            return right
        return np.where(x >= 0, right, self.c1 * np.exp(-x * x))

    def primitive(self, x):
        if self.core == "pure":
            return self.c1 * np.sign(x) * np.abs(x) ** (1.0 + self.alpha) / (1.0 + self.alpha)
        right = self.c1 * _regularized_primitive(x, self.alpha)
        if self.core == "regularized":
            return right
        left = self.c1 * 0.5 * math.sqrt(math.pi) * erf(x)
        return np.where(x >= 0, right, left)

    def primitive_limits(self):
        if self.core == "half_line":
            return (-0.5 * self.c1 * math.sqrt(math.pi), math.inf)
        return (-math.inf, math.inf)

    def params(self):
        return {"c1": self.c1, "alpha": self.alpha, "core": self.core}

    @property
    def monotone(self):
        # pure core vanishes only at the origin; a is still strictly increasing
        return True

    @property
    def c0(self) -> float:
        """c1 / (1 + alpha), the constant of a(x) ~ c0 x^(1+alpha)."""
        return self.c1 / (1.0 + self.alpha)

    def band_exponent(self) -> float:
        """alpha / (1 + alpha): growth exponent of lambda_n(xi) at large xi."""
        return self.alpha / (1.0 + self.alpha)

    def band_coefficient(self, n: int) -> float:
        """(2n - 1) c1 c0^(-alpha/(1+alpha)): leading constant of lambda_n(xi)."""
        return (2 * n - 1) * self.c1 * self.c0 ** (-self.band_exponent())


@dataclass(frozen=True)
class Gaussian(FieldProfile):
    """b(x) = flux * exp(-x^2) / sqrt(pi); total flux equals `flux`."""

    flux_total: float = 1.0
    a0: Optional[float] = None
    kind = "gaussian"

    def __post_init__(self):
        if not (self.flux_total > 0 and math.isfinite(self.flux_total)):
            raise ConfigError("flux must be positive", "profile.flux")
        object.__setattr__(self, "a0", _check_a0(self.a0))

    def field(self, x):
        return self.flux_total * np.exp(-x * x) / math.sqrt(math.pi)

    def primitive(self, x):
        return 0.5 * self.flux_total * erf(x)

    def primitive_limits(self):
        return (-0.5 * self.flux_total, 0.5 * self.flux_total)

    def params(self):
        return {"flux": self.flux_total}

    @property
    def monotone(self):
        return True


@dataclass(frozen=True)
class StepLike(FieldProfile):
    """
    Smooth step from b_minus (x -> -inf) to b_plus (x -> +inf).

    b(x) = b_- + (b_+ - b_-) (1 + tanh(x/w)) / 2. Either plateau may be 0,
    in which case the corresponding flux is finite.
    """

    b_minus: float = 1.0
    b_plus: float = 2.0
    width: float = 1.0
    a0: Optional[float] = None
    kind = "step"

    def __post_init__(self):
        if self.b_minus < 0 or self.b_plus < 0 or (self.b_minus == 0 and self.b_plus == 0):
            raise ConfigError("plateaus must be >= 0 and not both zero", "profile.b_minus")
        if not self.width > 0:
            raise ConfigError("width must be positive", "profile.width")
        object.__setattr__(self, "a0", _check_a0(self.a0))

    def field(self, x):
        jump = self.b_plus - self.b_minus
        return self.b_minus + 0.5 * jump * (1.0 + np.tanh(x / self.width))

    def primitive(self, x):
        w = self.width
        jump = self.b_plus - self.b_minus
        log_cosh = np.logaddexp(x / w, -x / w) - math.log(2.0)
        return self.b_minus * x + 0.5 * jump * (x + w * log_cosh)

    def primitive_limits(self):
        shift = 0.5 * (self.b_plus - self.b_minus) * self.width * math.log(2.0)
        lower = -math.inf if self.b_minus > 0 else -shift
        upper = math.inf if self.b_plus > 0 else -shift
        return (lower, upper)

    def params(self):
        return {"b_minus": self.b_minus, "b_plus": self.b_plus, "width": self.width}

    @property
    def monotone(self):
        return True


@dataclass(frozen=True)
class Tabulated(FieldProfile):
    """
    Field given on a strictly increasing grid, interpolated with PCHIP.

    Outside the grid the tail model applies: "zero" (b = 0, finite flux) or
    "linear" (b frozen at the edge values). Either way the fluxes carry the
    extrapolated flag.
    """

    x: tuple = ()
    values: tuple = ()
    tail: str = "zero"
    a0: Optional[float] = None
    kind = "tabulated"
    _spline: Any = field(default=None, init=False, repr=False, compare=False)
    _antiderivative: Any = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        xs = np.asarray(self.x, dtype=float)
        bs = np.asarray(self.values, dtype=float)
        if xs.ndim != 1 or xs.size < 2 or xs.shape != bs.shape:
            raise ConfigError("need matching 1D x and b arrays with >= 2 samples", "profile.x")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(bs))):
            raise ConfigError("tabulated values must be finite", "profile.b")
        if np.any(np.diff(xs) <= 0):
            raise ConfigError("grid must be strictly increasing", "profile.x")
        if self.tail not in TABULATED_TAILS:
            raise ConfigError(f"tail must be one of {TABULATED_TAILS}", "profile.tail")
        spline = PchipInterpolator(xs, bs, extrapolate=False)
        object.__setattr__(self, "x", tuple(xs.tolist()))
        object.__setattr__(self, "values", tuple(bs.tolist()))
        object.__setattr__(self, "_spline", spline)
        object.__setattr__(self, "_antiderivative", spline.antiderivative())
        object.__setattr__(self, "a0", _check_a0(self.a0))

    @property
    def hull(self):
        return (self.x[0], self.x[-1])

    @property
    def extrapolated(self):
        return True

    @property
    def monotone(self):
        # PCHIP never overshoots the data, so positive samples stay positive
        return min(self.values) > 0

    def _edge_values(self) -> tuple[float, float]:
        if self.tail == "zero":
            return 0.0, 0.0
        return self.values[0], self.values[-1]

    def field(self, x):
        lo, hi = self.hull
        b_lo, b_hi = self._edge_values()
        inside = np.clip(x, lo, hi)
        vals = self._spline(inside)
        return np.where(x < lo, b_lo, np.where(x > hi, b_hi, vals))

    def _from_left(self, x):
        lo, hi = self.hull
        b_lo, b_hi = self._edge_values()
        core = self._antiderivative(np.clip(x, lo, hi))
        return core + b_lo * np.minimum(x - lo, 0.0) + b_hi * np.maximum(x - hi, 0.0)

    def primitive(self, x):
        return self._from_left(x) - self._from_left(np.asarray(0.0))

    def primitive_limits(self):
        b_lo, b_hi = self._edge_values()
        lo, hi = self.hull
        origin = float(self._from_left(np.asarray(0.0)))
        total = float(self._antiderivative(hi))
        lower = -math.copysign(math.inf, b_lo) if b_lo != 0 else -origin
        upper = math.copysign(math.inf, b_hi) if b_hi != 0 else total - origin
        return (lower, upper)

    def params(self):
        return {"x": list(self.x), "b": list(self.values), "tail": self.tail}


def build_profile(spec: dict) -> FieldProfile:
    """
    Build a profile from its config-file form.

    Args:
        spec: Mapping with a "kind" key plus kind-specific keys, e.g.
              {"kind": "power_law", "c1": 1.0, "alpha": 1.0}

    Raises:
        ConfigError: Unknown kind, unknown key or invalid value
    """
    spec = dict(spec)
    kind = spec.pop("kind", None)
    spec.pop("gauge", None)
    builders = {
        "constant": (Constant, {"b0": "b0", "a0": "a0"}),
        "power_law": (PowerLaw, {"c1": "c1", "alpha": "alpha", "core": "core", "a0": "a0"}),
        "gaussian": (Gaussian, {"flux": "flux_total", "a0": "a0"}),
        "step": (StepLike, {"b_minus": "b_minus", "b_plus": "b_plus", "width": "width", "a0": "a0"}),
        "tabulated": (Tabulated, {"x": "x", "b": "values", "tail": "tail", "a0": "a0"}),
    }
    if kind not in builders:
        raise ConfigError(f"unknown kind {kind!r}; expected one of {sorted(builders)}", "profile.kind")
    cls, keymap = builders[kind]
    kwargs = {}
    for key, value in spec.items():
        if key not in keymap:
            raise ConfigError(f"unknown key for {kind} profile", f"profile.{key}")
        kwargs[keymap[key]] = value
    try:
        return cls(**kwargs)
    except TypeError as e:
        raise ConfigError(str(e), "profile") from e


# ----------------------------------------------------------------------
# Operations
# ----------------------------------------------------------------------

def eval_b(profile: FieldProfile, x):
    """
    Evaluate b at x (scalar or array).

    Raises:
        DomainError: x outside the tabulated grid
    """
    lo, hi = profile.hull
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < lo) or np.any(x_arr > hi):
        raise DomainError(f"x outside the supported range [{lo}, {hi}]")
    return profile.b(x)


def eval_a(profile: FieldProfile, x, method: str = "closed"):
    """
    Evaluate a(x) = a0 + integral of b from 0 to x.

    Args:
        profile: Field profile
        x: Point(s) of evaluation
        method: "closed" for the closed-form/spline primitive, "quad" for
                adaptive quadrature of b (reference path, scalar x only)

    Raises:
        QuadratureError: quad did not converge
    """
    if method == "closed":
        return profile.a(x)
    if method != "quad":
        raise ConfigError(f"unknown method {method!r}")
    x = float(x)
    return profile.gauge + adaptive_integral(lambda u: float(profile.b(u)), 0.0, x)


def flux_limits(profile: FieldProfile) -> FluxLimits:
    """(phi_-, phi_+) in the profile's gauge; +-inf for infinite flux."""
    return profile.flux()


def turning_point(profile: FieldProfile, xi: float) -> float:
    """
    Solve a(x) = xi for a strictly increasing a.

    Brackets the root by doubling outwards from 0, then runs a safeguarded
    Newton iteration (falls back to bisection whenever the Newton step
    leaves the bracket or b vanishes).

    Raises:
        DomainError: Profile not monotone, or xi outside (phi_-, phi_+)
    """
    if not profile.monotone:
        raise DomainError(f"{profile.kind} profile is not monotone; turning point undefined")
    phi_minus, phi_plus = profile.flux()[:2]
    if not (phi_minus < xi < phi_plus):
        raise DomainError(f"xi={xi} outside the range ({phi_minus}, {phi_plus}) of a")

    tol = TURNING_TOL * (1.0 + abs(xi))
    lo, hi = -1.0, 1.0
    for _ in range(1100):
        if profile.a(lo) < xi:
            break
        lo *= 2.0
    for _ in range(1100):
        if profile.a(hi) > xi:
            break
        hi *= 2.0
    if not (profile.a(lo) <= xi <= profile.a(hi)):
        raise DomainError(f"could not bracket the turning point for xi={xi}")

    x = 0.5 * (lo + hi)
    for _ in range(400):
        residual = profile.a(x) - xi
        if abs(residual) <= tol:
            return x
        if residual > 0:
            hi = x
        else:
            lo = x
        slope = profile.b(x)
        step_ok = False
        if slope > 0:
            candidate = x - residual / slope
            step_ok = lo < candidate < hi
        x = candidate if step_ok else 0.5 * (lo + hi)
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(x)):
            return x
    logger.warning("turning_point: stopped at residual %.3e for xi=%g", profile.a(x) - xi, xi)
    return x


def effective_velocity(profile: FieldProfile, theta: float) -> float:
    """
    v_theta = b(x_theta), the curvature scale of the fiber well at theta.

    Raises:
        DomainError: turning point undefined, or b(x_theta) <= 0
    """
    v = profile.b(turning_point(profile, theta))
    if v <= 0:
        raise DomainError(f"b(x_theta) = {v} is not positive at theta={theta}")
    return v


def theta_window(profile: FieldProfile, fraction: float = 0.8) -> tuple[float, float]:
    """Central `fraction` of the flux range (phi_-, phi_+); needs both finite."""
    phi_minus, phi_plus = profile.flux()[:2]
    if not (math.isfinite(phi_minus) and math.isfinite(phi_plus)):
        raise DomainError("theta window needs finite fluxes; pass the window explicitly")
    if not 0 < fraction < 1:
        raise ConfigError("fraction must lie in (0, 1)", "harmonic.window_fraction")
    mid = 0.5 * (phi_minus + phi_plus)
    half = 0.5 * fraction * (phi_plus - phi_minus)
    return (mid - half, mid + half)


def effective_hamiltonian(profile: FieldProfile, thetas) -> np.ndarray:
    """The curve theta -> b(x_theta) sampled at each theta."""
    return np.array([effective_velocity(profile, float(t)) for t in np.atleast_1d(thetas)])


# --- Quick self-test ---
if __name__ == "__main__":
    print("=" * 50)
    print("Field Profiles Self-Test")
    print("=" * 50)

    g = Gaussian()
    print(f"\n1. Gaussian b(0) = {eval_b(g, 0.0):.12f} (1/sqrt(pi) = {1 / math.sqrt(math.pi):.12f})")
    print(f"   a(0) = {eval_a(g, 0.0)}, fluxes = {flux_limits(g)}")
    print(f"   quad a(1.3) = {eval_a(g, 1.3, method='quad'):.12f} vs closed {eval_a(g, 1.3):.12f}")

    p = PowerLaw(c1=1.0, alpha=1.0)
    print(f"\n2. PowerLaw a(4) = {eval_a(p, 4.0)}, x_8 = {turning_point(p, 8.0):.12f}")

    r = PowerLaw(c1=1.0, alpha=-0.5)
    for x in (1.0, 2.0, 5.0):
        print(f"   regularized a({x}) closed {eval_a(r, x):.12f} quad {eval_a(r, x, method='quad'):.12f}")

    s = StepLike(1.0, 2.0, 1.0)
    print(f"\n3. Step v at theta=50: {effective_velocity(s, 50.0):.12f}")

    print("\n" + "=" * 50)
    print("Done.")
    print("=" * 50)
