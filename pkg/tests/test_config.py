import json
import math

import pytest

from src.core.exceptions import ConfigError, OutOfRangeError, ParseError, UnknownKeyError
from src.core.models import FitModelKind, ModelKind, SweepMode
from src.persistence.config_parser import emit_config, load_config_file, parse_config
from src.persistence.manifest import build_manifest, read_manifest, write_manifest

MINIMAL_TWO_LEVEL = """
# bistable point
model = two_level
Delta = 18.5
Omega = 2
V = 100
gamma_D = 10
"""

FULL_THREE_LEVEL = """
model = three_level
Delta = -4.15
Omega_MW2 = 0.949
noise_sigma = 0.2
t_total = 2000
n_traj = 4
base_seed = 11
sweep_param = beta_db
sweep_values = -10, -15, -20
sweep_paired_param = Delta
sweep_paired_values = -4.15, -3.95, -3.87
fit_model = damped_sine
bin_width = 5
"""


class TestParse:
    def test_minimal_two_level_defaults(self):
        config = parse_config(MINIMAL_TWO_LEVEL)
        assert config.model == ModelKind.TWO_LEVEL
        p = config.two_level
        assert (p.kappa, p.D) == (0.1, 1.0)
        assert p.Delta == 18.5 and p.Omega == 2.0
        assert config.three_level is None
        assert config.ensemble.n_traj == 32
        assert config.bin_width() == pytest.approx(5.0)
        assert config.transient() == pytest.approx(200.0)

    def test_sections_are_routed(self):
        config = parse_config(FULL_THREE_LEVEL)
        assert config.three_level.t_total == 2000.0
        assert config.ensemble.base_seed == 11
        assert config.sweep.sweep_values == [-10.0, -15.0, -20.0]
        assert config.sweep.sweep_mode == SweepMode.CONTRAST
        assert config.fit.fit_model == FitModelKind.DAMPED_SINE
        assert config.analysis.bin_width == 5.0
        assert config.transient() == pytest.approx(500.0)

    def test_negative_step(self):
        with pytest.raises(OutOfRangeError):
            parse_config("model = two_level\ndt = -1\n")

    def test_empty_ensemble(self):
        with pytest.raises(ConfigError):
            parse_config("model = three_level\nn_traj = 0\n")

    def test_unknown_key(self):
        with pytest.raises(UnknownKeyError):
            parse_config("model = two_level\ncolour = blue\n")

    def test_key_of_other_model(self):
        with pytest.raises(UnknownKeyError):
            parse_config("model = three_level\nV = 100\n")

    def test_bad_number_reports_line(self):
        with pytest.raises(ParseError) as info:
            parse_config("model = two_level\n\n# detuning\nDelta = abc\n")
        assert info.value.line == 4
        assert str(info.value).startswith("line 4: ")

    def test_duplicate_key(self):
        with pytest.raises(ParseError) as info:
            parse_config("model = two_level\nDelta = 1\nDelta = 2\n")
        assert info.value.line == 3

    def test_missing_value(self):
        with pytest.raises(ParseError):
            parse_config("model = two_level\nDelta =\n")

    def test_model_required(self):
        with pytest.raises(ParseError):
            parse_config("Delta = 1\n")
        with pytest.raises(ParseError):
            parse_config("model = four_level\n")

    def test_unpaired_sweep(self):
        with pytest.raises(ConfigError):
            parse_config("model = two_level\nsweep_param = Delta\nsweep_values = 1, 2\n"
                         "sweep_paired_param = Omega\nsweep_paired_values = 1\n")


class TestUnits:
    def test_modulation_in_hertz(self):
        config = parse_config("model = two_level\ngamma_hz = 1000\ndelta_f_hz = 10\n")
        assert config.two_level.delta_f == pytest.approx(0.01)
        assert config.period == pytest.approx(100.0)

    def test_modulation_as_angular_frequency(self):
        config = parse_config("model = two_level\ngamma_hz = 30000\nomega_mod_per_ms = 1.88\n")
        assert config.two_level.delta_f == pytest.approx(1880.0 / (2 * math.pi) / 30000.0)
        assert config.period == pytest.approx(100.26, rel=1e-3)

    def test_angular_frequency_conflicts_with_hertz(self):
        with pytest.raises(ParseError):
            parse_config("model = two_level\ngamma_hz = 30000\ndelta_f_hz = 300\nomega_mod_per_ms = 3\n")

    def test_hertz_needs_gamma(self):
        with pytest.raises(ConfigError):
            parse_config("model = two_level\ndelta_f_hz = 10\n")

    def test_conflicting_units(self):
        with pytest.raises(ParseError):
            parse_config("model = two_level\ngamma_hz = 1000\ndelta_f_hz = 10\ndelta_f = 0.02\n")

    def test_beta_db(self):
        config = parse_config("model = three_level\nOmega_MW1 = 3\nbeta_db = -10\n")
        assert config.three_level.Omega_MW2 == pytest.approx(0.9487, abs=1e-4)

    def test_beta_db_needs_three_level(self):
        with pytest.raises(UnknownKeyError):
            parse_config("model = two_level\nbeta_db = -10\n")


class TestRoundTrip:
    @pytest.mark.parametrize("text", [MINIMAL_TWO_LEVEL, FULL_THREE_LEVEL,
                                      "model = three_level\nOmega_MW1 = 3\nbeta_db = -15\n",
                                      "model = two_level\ngamma_hz = 1000\ndelta_f_hz = 20\n"])
    def test_emit_then_parse(self, text):
        config = parse_config(text)
        emitted = emit_config(config)
        assert parse_config(emitted) == config
        assert emit_config(parse_config(emitted)) == emitted

    def test_with_param(self):
        config = parse_config(FULL_THREE_LEVEL)
        updated = config.with_param("beta_db", -20.0)
        assert updated.three_level.Omega_MW2 == pytest.approx(0.3, abs=1e-3)
        assert config.three_level.Omega_MW2 == 0.949
        with pytest.raises(ValueError):
            config.with_param("V", 1.0)


class TestFiles:
    def test_load_document(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text(MINIMAL_TWO_LEVEL)
        config, text = load_config_file(path)
        assert text == MINIMAL_TWO_LEVEL
        assert config.two_level.gamma_D == 10.0

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config_file(tmp_path / "absent.conf")

    def test_rerun_from_manifest(self, tmp_path):
        config = parse_config(MINIMAL_TWO_LEVEL)
        output = tmp_path / "trajectory_0000.csv"
        output.write_text("t,n\n")
        manifest = build_manifest("simulate", emit_config(config), 0, [output], tmp_path)
        path = write_manifest(manifest, tmp_path)

        assert read_manifest(path) == manifest
        assert json.loads(path.read_text())["outputs"] == ["trajectory_0000.csv"]
        reloaded, _ = load_config_file(path)
        assert reloaded == config

    def test_broken_manifest(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text("{\"command\": 3}")
        with pytest.raises(ParseError):
            load_config_file(path)
