"""Tests for cli.config - TOML loading, validation paths, config echo."""

import math

import pytest

from cli.config import RunConfig, load_config
from core.errors import ConfigError
from core.fields import Gaussian


GAUSSIAN_RUN = """
[profile]
kind = "gaussian"
flux = 1.0

[grid]
points_per_length = 32
richardson = true

[harmonic]
theta = [0.3, 0.5]
h = [0.05, 0.01]
counting_eta = 0.02

[output]
formats = ["json", "csv"]
"""


class TestLoad:
    def test_full_file(self, write_config):
        config = load_config(write_config(GAUSSIAN_RUN))
        assert isinstance(config.profile, Gaussian)
        assert config.grid.points_per_length == 32
        assert config.harmonic.theta == [0.3, 0.5]
        assert config.harmonic.counting_eta == 0.02
        assert config.output.formats == ["json", "csv"]

    def test_defaults_fill_missing_tables(self, write_config):
        config = load_config(write_config('[profile]\nkind = "constant"\n'))
        assert config.sweep.samples == 25
        assert config.flatband.lambdas == [0.3, 0.5, 1.0]
        assert config.harmonic.compare_eta is None

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "absent.toml")

    def test_toml_syntax_error(self, write_config):
        with pytest.raises(ConfigError):
            load_config(write_config("[profile\nkind = "))

    def test_missing_profile(self, write_config):
        with pytest.raises(ConfigError) as info:
            load_config(write_config("[sweep]\nsamples = 5\n"))
        assert info.value.path == "profile"

    def test_bundled_configs_load(self):
        from pathlib import Path
        configs = sorted(Path(__file__).resolve().parent.parent.joinpath("configs").glob("*.toml"))
        assert configs
        for path in configs:
            load_config(path)


class TestValidation:
    def test_unknown_key_reports_path(self, write_config):
        text = '[profile]\nkind = "constant"\n\n[sweep]\nsampels = 10\n'
        with pytest.raises(ConfigError) as info:
            load_config(write_config(text))
        assert info.value.path == "sweep.sampels"
        assert "sweep.sampels" in str(info.value)

    def test_unknown_table(self, write_config):
        with pytest.raises(ConfigError) as info:
            load_config(write_config('[profile]\nkind = "constant"\n\n[plots]\nx = 1\n'))
        assert info.value.path == "plots"

    def test_wrong_type(self, write_config):
        with pytest.raises(ConfigError) as info:
            load_config(write_config('[profile]\nkind = "constant"\n\n[sweep]\nsamples = "many"\n'))
        assert info.value.path == "sweep.samples"

    def test_range_check(self, write_config):
        with pytest.raises(ConfigError) as info:
            load_config(write_config('[profile]\nkind = "constant"\n\n[sweep]\nsamples = 1\n'))
        assert info.value.path == "sweep.samples"

    def test_bad_grid_key(self, write_config):
        with pytest.raises(ConfigError) as info:
            load_config(write_config('[profile]\nkind = "constant"\n\n[grid]\npoints = 10\n'))
        assert info.value.path == "grid.points"

    def test_bad_format(self, write_config):
        with pytest.raises(ConfigError) as info:
            load_config(write_config('[profile]\nkind = "constant"\n\n[output]\nformats = ["xml"]\n'))
        assert info.value.path == "output.formats[0]"

    def test_infinite_cap_rejected(self, write_config):
        with pytest.raises(ConfigError) as info:
            load_config(write_config('[profile]\nkind = "constant"\n\n[agmon]\ncap = "inf"\n'))
        assert info.value.path == "agmon.cap"

    def test_semiclassical_h_below_one(self):
        with pytest.raises(ConfigError) as info:
            RunConfig.from_dict({"profile": {"kind": "gaussian"}, "harmonic": {"h": [0.1, 2.0]}})
        assert info.value.path == "harmonic.h[1]"

    def test_profile_errors_keep_their_path(self):
        with pytest.raises(ConfigError) as info:
            RunConfig.from_dict({"profile": {"kind": "power_law", "alpha": -3.0}})
        assert info.value.path == "profile.alpha"


class TestEcho:
    def test_round_trip(self, write_config):
        config = load_config(write_config(GAUSSIAN_RUN))
        echo = config.to_dict()
        again = RunConfig.from_dict(echo)
        assert again.to_dict() == echo
        assert again.grid == config.grid

    def test_unset_options_are_omitted(self):
        echo = RunConfig.from_dict({"profile": {"kind": "constant"}}).to_dict()
        assert "compare_eta" not in echo["harmonic"]
        assert echo["profile"] == {"kind": "constant"}

    def test_asymptotic_samples(self):
        config = RunConfig.from_dict({"profile": {"kind": "power_law"},
                                      "asymptotics": {"decades": [2, 4], "points_per_decade": 2}})
        xis = config.asymptotics.xi_samples()
        assert len(xis) == 5
        assert xis[0] == pytest.approx(100.0) and xis[-1] == pytest.approx(1e4)
        assert all(math.isfinite(x) for x in xis)
