"""
config.py - Run configuration: TOML file -> validated RunConfig tree.

How this works (the big picture):
1. The file is read with tomllib into plain dicts.
2. Each table maps onto one dataclass block. Keys are checked against the
   block's fields; an unknown key or a value of the wrong type is a
   ConfigError carrying its dotted path ("sweep.samples").
3. Blocks validate their own ranges in __post_init__, the [grid] table
   becomes a GridPolicy, and [profile] is handed to build_profile.
4. RunConfig.to_dict() is the echo written into every report; feeding it
   back to RunConfig.from_dict() gives the same run.
"""

import math

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

from core.errors import ConfigError
from core.fiber import GridPolicy
from core.fields import FieldProfile, build_profile


# Formats a run may write
OUTPUT_FORMATS = ("csv", "json", "plotdata")


def _coerce(value: Any, default: Any, path: str) -> Any:
    """Check `value` against the type of the field default."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"expected true/false, got {value!r}", path)
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", path)
        return value
    if isinstance(default, float):
        return _number(value, path)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", path)
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            value = [value]
        return [float(v) if isinstance(v, (int, float)) and not isinstance(v, bool) else v for v in value]
    return value


def _number(value: Any, path: str) -> float:
    """Float from a TOML number or one of the strings "inf", "-inf", "nan"."""
    if isinstance(value, bool):
        raise ConfigError(f"expected a number, got {value!r}", path)
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str) and value.strip().lower() in ("inf", "+inf", "-inf", "nan"):
        return float(value)
    raise ConfigError(f"expected a number, got {value!r}", path)


def _block(cls, data: Optional[dict], name: str):
    """Build dataclass `cls` from table `data`, rejecting unknown keys."""
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError("expected a table", name)
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) {', '.join(unknown)}", f"{name}.{unknown[0]}")
    defaults = cls()
    kwargs = {}
    for key, value in data.items():
        default = getattr(defaults, key)
        path = f"{name}.{key}"
        if default is None:
            kwargs[key] = value if isinstance(value, list) else _number(value, path)
        else:
            kwargs[key] = _coerce(value, default, path)
    return cls(**kwargs)


def _positive(value: float, path: str):
    if not (isinstance(value, (int, float)) and value > 0 and math.isfinite(value)):
        raise ConfigError(f"must be a positive finite number, got {value!r}", path)


def _numbers(values: list, path: str):
    for i, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"expected a finite number, got {v!r}", f"{path}[{i}]")


def _pair(value: Optional[list], path: str) -> Optional[tuple]:
    if value is None:
        return None
    _numbers(value, path)
    if len(value) != 2 or not value[0] < value[1]:
        raise ConfigError("expected [low, high] with low < high", path)
    return (float(value[0]), float(value[1]))


# ----------------------------------------------------------------------
# Blocks
# ----------------------------------------------------------------------

@dataclass
class SliceBlock:
    xi: float = 0.0
    h: float = 1.0
    k_max: int = 5

    def __post_init__(self):
        _positive(self.h, "slice.h")
        if self.k_max < 1:
            raise ConfigError("must be >= 1", "slice.k_max")


@dataclass
class SweepBlock:
    xi_min: float = -3.0
    xi_max: float = 3.0
    samples: int = 25
    k_max: int = 5
    h: float = 1.0

    def __post_init__(self):
        if self.samples < 2:
            raise ConfigError("sample count must be >= 2", "sweep.samples")
        if self.k_max < 1:
            raise ConfigError("must be >= 1", "sweep.k_max")
        _positive(self.h, "sweep.h")


@dataclass
class FlatbandBlock:
    """lambdas to test; the xi samples are placed inside each component of Sigma_lambda."""

    lambdas: list = field(default_factory=lambda: [0.3, 0.5, 1.0])
    samples_per_component: int = 12
    reach: float = 4.0
    k_max: int = 3
    min_samples: int = 5

    def __post_init__(self):
        if not self.lambdas:
            raise ConfigError("need at least one lambda", "flatband.lambdas")
        _numbers(self.lambdas, "flatband.lambdas")
        for i, lam in enumerate(self.lambdas):
            if not lam >= 0:
                raise ConfigError("lambda must be >= 0", f"flatband.lambdas[{i}]")
        if self.samples_per_component < 2:
            raise ConfigError("sample count must be >= 2", "flatband.samples_per_component")
        if self.min_samples < 2:
            raise ConfigError("sample count must be >= 2", "flatband.min_samples")
        _positive(self.reach, "flatband.reach")
        if self.k_max < 1:
            raise ConfigError("must be >= 1", "flatband.k_max")


@dataclass
class HarmonicBlock:
    """
    compare_eta: cutoff for the level comparison (default: threshold / 2).
    counting_eta: absolute eta for the counting bound; when unset the
    eta_c |ln h|^-7 policy is used.
    """

    theta: list = field(default_factory=lambda: [0.5])
    h: list = field(default_factory=lambda: [0.1, 0.03, 0.01, 0.003])
    n_max: int = 3
    compare_eta: Optional[float] = None
    counting_eta: Optional[float] = None
    eta_c: float = 1.0
    window: Optional[list] = None

    def __post_init__(self):
        if not self.theta:
            raise ConfigError("need at least one theta", "harmonic.theta")
        _numbers(self.theta, "harmonic.theta")
        if not self.h:
            raise ConfigError("need at least one h", "harmonic.h")
        for i, h in enumerate(self.h):
            _positive(h, f"harmonic.h[{i}]")
            if not h < 1:
                raise ConfigError("semiclassical h must be < 1", f"harmonic.h[{i}]")
        if self.n_max < 1:
            raise ConfigError("must be >= 1", "harmonic.n_max")
        for name in ("compare_eta", "counting_eta"):
            if getattr(self, name) is not None:
                _positive(getattr(self, name), f"harmonic.{name}")
        _positive(self.eta_c, "harmonic.eta_c")
        _pair(self.window, "harmonic.window")


@dataclass
class AgmonBlock:
    """gamma unset: take it from the kappa scan at the cutoff energy."""

    theta: list = field(default_factory=lambda: [0.5])
    h: list = field(default_factory=lambda: [0.05, 0.02])
    n: int = 1
    cap: float = 3.0
    gamma: Optional[float] = None
    energy_fraction: float = 0.5
    ratio_bound: float = 1e4

    def __post_init__(self):
        if not self.theta or not self.h:
            raise ConfigError("need at least one theta and one h", "agmon.theta")
        _numbers(self.theta, "agmon.theta")
        for i, h in enumerate(self.h):
            _positive(h, f"agmon.h[{i}]")
        if self.n < 1:
            raise ConfigError("must be >= 1", "agmon.n")
        if not (math.isfinite(self.cap) and self.cap >= 0):
            raise ConfigError("weight cap must be finite and >= 0", "agmon.cap")
        if self.gamma is not None and not self.gamma >= 0:
            raise ConfigError("must be >= 0", "agmon.gamma")
        if not 0 < self.energy_fraction < 1:
            raise ConfigError("must lie in (0, 1)", "agmon.energy_fraction")
        _positive(self.ratio_bound, "agmon.ratio_bound")


@dataclass
class AsymptoticsBlock:
    """xi samples: points_per_decade per decade between 10^decades[0] and 10^decades[1]."""

    decades: list = field(default_factory=lambda: [2.0, 4.0])
    points_per_decade: int = 2
    n: list = field(default_factory=lambda: [1, 2])

    def __post_init__(self):
        _pair(self.decades, "asymptotics.decades")
        if self.points_per_decade < 1:
            raise ConfigError("must be >= 1", "asymptotics.points_per_decade")
        if not self.n:
            raise ConfigError("need at least one band index", "asymptotics.n")
        if any(not isinstance(k, (int, float)) or k != int(k) for k in self.n):
            raise ConfigError("band indices must be integers", "asymptotics.n")
        self.n = [int(k) for k in self.n]
        if any(k < 1 for k in self.n):
            raise ConfigError("band indices start at 1", "asymptotics.n")

    def xi_samples(self) -> list:
        lo, hi = self.decades
        count = max(2, int(round((hi - lo) * self.points_per_decade)) + 1)
        return [10.0 ** (lo + (hi - lo) * i / (count - 1)) for i in range(count)]


@dataclass
class ScatteringBlock:
    xi: list = field(default_factory=lambda: [0.5])
    lambdas: list = field(default_factory=lambda: [0.3])
    tail_tol: float = 1e-10

    def __post_init__(self):
        if not self.xi or not self.lambdas:
            raise ConfigError("need at least one xi and one lambda", "scattering.xi")
        _numbers(self.xi, "scattering.xi")
        _numbers(self.lambdas, "scattering.lambdas")
        _positive(self.tail_tol, "scattering.tail_tol")


@dataclass
class OutputBlock:
    path: str = "results"
    formats: list = field(default_factory=lambda: ["json"])

    def __post_init__(self):
        if not self.formats:
            raise ConfigError("formats must not be empty", "output.formats")
        for i, fmt in enumerate(self.formats):
            if fmt not in OUTPUT_FORMATS:
                raise ConfigError(f"unknown format {fmt!r}, choose from {OUTPUT_FORMATS}", f"output.formats[{i}]")


# [grid] keys and the GridPolicy fields they set
GRID_KEYS = (
    "points_per_length", "epsilon_trunc", "agmon_safety", "tol_lambda", "max_margin_steps",
    "richardson", "energy_cap", "max_cutoff_doublings", "rescale_below_h", "max_points", "seed",
)


def _grid_policy(data: Optional[dict]) -> GridPolicy:
    if data is None:
        return GridPolicy()
    if not isinstance(data, dict):
        raise ConfigError("expected a table", "grid")
    unknown = sorted(set(data) - set(GRID_KEYS))
    if unknown:
        raise ConfigError(f"unknown key(s) {', '.join(unknown)}", f"grid.{unknown[0]}")
    defaults = GridPolicy()
    kwargs = {key: _coerce(value, getattr(defaults, key), f"grid.{key}") for key, value in data.items()}
    return GridPolicy(**kwargs)


# ----------------------------------------------------------------------
# RunConfig
# ----------------------------------------------------------------------

BLOCKS = {
    "slice": SliceBlock,
    "sweep": SweepBlock,
    "flatband": FlatbandBlock,
    "harmonic": HarmonicBlock,
    "agmon": AgmonBlock,
    "asymptotics": AsymptoticsBlock,
    "scattering": ScatteringBlock,
    "output": OutputBlock,
}


@dataclass
class RunConfig:
    profile_spec: dict
    profile: FieldProfile
    grid: GridPolicy = field(default_factory=GridPolicy)
    slice: SliceBlock = field(default_factory=SliceBlock)
    sweep: SweepBlock = field(default_factory=SweepBlock)
    flatband: FlatbandBlock = field(default_factory=FlatbandBlock)
    harmonic: HarmonicBlock = field(default_factory=HarmonicBlock)
    agmon: AgmonBlock = field(default_factory=AgmonBlock)
    asymptotics: AsymptoticsBlock = field(default_factory=AsymptoticsBlock)
    scattering: ScatteringBlock = field(default_factory=ScatteringBlock)
    output: OutputBlock = field(default_factory=OutputBlock)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        """
        Build and validate a run configuration.

        Raises:
            ConfigError: unknown table or key, wrong type, out-of-range value
        """
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a table")
        unknown = sorted(set(data) - set(BLOCKS) - {"profile", "grid"})
        if unknown:
            raise ConfigError("unknown table", unknown[0])
        if "profile" not in data:
            raise ConfigError("missing [profile] table", "profile")
        spec = data["profile"]
        if not isinstance(spec, dict):
            raise ConfigError("expected a table", "profile")
        blocks = {name: _block(block, data.get(name), name) for name, block in BLOCKS.items()}
        return cls(
            profile_spec=dict(spec),
            profile=build_profile(spec),
            grid=_grid_policy(data.get("grid")),
            **blocks,
        )

    def to_dict(self) -> dict:
        """Config echo; from_dict(to_dict()) rebuilds the same run."""
        echo = {"profile": dict(self.profile_spec), "grid": self.grid.to_dict()}
        for name in BLOCKS:
            block = getattr(self, name)
            echo[name] = {f.name: getattr(block, f.name) for f in fields(block)
                          if getattr(block, f.name) is not None}
        return echo


def load_config(path) -> RunConfig:
    """
    Read and validate a TOML run configuration.

    Raises:
        ConfigError: missing file, TOML syntax error, invalid content
    """
    path = Path(path)
    try:
        with path.open("rb") as handle:
            data = tomllib.load(handle)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}")
    return RunConfig.from_dict(data)
