"""Shared fixtures for the fiberband test suite."""

import pytest

from core.fiber import Grid, GridPolicy, QuadraticPotential, from_potential
from core.fields import Constant, Gaussian, PowerLaw, StepLike


@pytest.fixture
def landau():
    """Constant field b = 1; every fiber has the Landau levels 2n - 1."""
    return Constant(1.0)


@pytest.fixture
def gaussian():
    """Unit-flux Gaussian field in the canonical gauge, fluxes (0, 1)."""
    return Gaussian()


@pytest.fixture
def linear_field():
    """b = |x|, the alpha = 1 power law with a pure core."""
    return PowerLaw(1.0, 1.0)


@pytest.fixture
def iwatsuka():
    """Smooth step from b = 1 on the left to b = 2 on the right."""
    return StepLike(1.0, 2.0, 1.0)


@pytest.fixture
def policy():
    return GridPolicy()


@pytest.fixture
def oscillator():
    """h = 1, V = s^2 on a fixed grid: the harmonic oracle with levels 1, 3, 5, ..."""
    grid = Grid(-12.0, 12.0, 2401)
    return from_potential(QuadraticPotential(1.0)(grid.points), 1.0, grid)


@pytest.fixture
def write_config(tmp_path):
    """Write TOML text to a file in tmp_path and return its path."""
    def _write(text, name="run.toml"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return _write
