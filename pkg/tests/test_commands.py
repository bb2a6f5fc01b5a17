import json

import numpy as np
import pytest

from src.cli import main
from src.commands import (
    cmd_analyze,
    cmd_fit,
    cmd_noise_dump,
    cmd_phase_diagram,
    cmd_potential,
    cmd_simulate,
    cmd_sweep,
)
from src.core.exceptions import ConfigError, NoJumpsDetectedError
from src.core.models import FitModelKind
from src.core.series import TimeSeries, Trajectory
from src.analysis.fitting import FitModel, model_eval
from src.analysis.jumps import build_histogram
from src.persistence.config_parser import parse_config
from src.persistence.csv_io import read_columns, read_histogram, read_series, write_histogram, write_trajectory

TWO_LEVEL = """
model = two_level
t_total = 50
dt = 0.01
n_traj = 2
base_seed = 3
"""

THREE_LEVEL = """
model = three_level
t_total = 100
n_traj = 2
"""

ANALYSIS = """
model = two_level
mu = 0.5
alpha = 0.1
filter_tau = 0
transient = 0
"""


def files_of(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


def write_series(path, series: TimeSeries):
    return write_trajectory(path, Trajectory(series.times, series.values, seed=0, column="n"))


class TestSimulate:
    def test_two_level_outputs(self, tmp_path):
        outputs = cmd_simulate(parse_config(TWO_LEVEL), tmp_path)
        names = sorted(p.name for p in outputs)
        assert names == ["manifest.json", "trajectory_0000.csv", "trajectory_0001.csv"]

        series, column = read_series(tmp_path / "trajectory_0001.csv")
        assert column == "n"
        assert series.times[-1] == pytest.approx(50.0)
        text = (tmp_path / "trajectory_0001.csv").read_text()
        assert "# seed = 3" in text and "# index = 1" in text and "# model = two_level" in text

        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["command"] == "simulate"
        assert manifest["outputs"] == ["trajectory_0000.csv", "trajectory_0001.csv"]

    def test_rerun_is_byte_identical(self, tmp_path):
        config = parse_config(TWO_LEVEL)
        cmd_simulate(config, tmp_path / "a")
        cmd_simulate(config, tmp_path / "b", threads=2)
        assert files_of(tmp_path / "a") == files_of(tmp_path / "b")

    def test_three_level(self, tmp_path):
        cmd_simulate(parse_config(THREE_LEVEL), tmp_path)
        series, column = read_series(tmp_path / "trajectory_0000.csv")
        assert column == "n_R"
        assert np.all((series.values >= -1e-9) & (series.values <= 1 + 1e-9))


class TestAnalyze:
    def test_pooling_copies_doubles_counts(self, tmp_path, make_telegraph):
        switches = []
        for up in (10.0, 111.0, 312.0, 413.0, 614.0):
            switches += [up, up + 30.0]
        path = write_series(tmp_path / "in.csv", make_telegraph(switches, 700.0, dt=0.05))
        config = parse_config(ANALYSIS)

        cmd_analyze(config, [path], tmp_path / "one")
        cmd_analyze(config, [path, path], tmp_path / "two")
        one = read_histogram(tmp_path / "one" / "histogram.csv")
        two = read_histogram(tmp_path / "two" / "histogram.csv")
        assert one.n_intervals == 4
        assert np.array_equal(two.counts, 2 * one.counts)

        summary = (tmp_path / "two" / "summary.txt").read_text()
        assert "up_events=10" in summary and "status=ok" in summary
        events, names = read_columns(tmp_path / "two" / "events.csv", 3)
        assert names == ["trajectory", "t", "direction"]
        assert events.shape == (20, 3)

    def test_flat_trajectory(self, tmp_path):
        path = write_series(tmp_path / "flat.csv", TimeSeries(np.arange(0.0, 500.0, 0.5), np.full(1000, 0.2)))
        with pytest.raises(NoJumpsDetectedError):
            cmd_analyze(parse_config(ANALYSIS), [path], tmp_path / "out")
        assert "status=no_jumps" in (tmp_path / "out" / "summary.txt").read_text()
        assert (tmp_path / "out" / "manifest.json").exists()

    def test_needs_inputs(self, tmp_path):
        with pytest.raises(ConfigError):
            cmd_analyze(parse_config(ANALYSIS), [], tmp_path)


class TestSweepCommand:
    def test_failures_do_not_abort(self, tmp_path):
        config = parse_config(TWO_LEVEL + "sweep_param = bogus\nsweep_values = 1, 2\n")
        cmd_sweep(config, tmp_path)
        lines = (tmp_path / "sweep.csv").read_text().splitlines()
        assert lines[0].startswith("param,value,")
        assert len(lines) == 3
        assert all("failed" in line for line in lines[1:])

    def test_small_contrast_sweep(self, tmp_path):
        config = parse_config(TWO_LEVEL + "transient = 0\nsweep_param = Delta\nsweep_values = 18.5\n")
        cmd_sweep(config, tmp_path)
        assert (tmp_path / "point_000_histogram.csv").exists()
        assert (tmp_path / "point_000_summary.txt").exists()
        rows = (tmp_path / "sweep.csv").read_text().splitlines()
        assert rows[1].startswith("Delta,18.5,")

    def test_empty_grid(self, tmp_path):
        with pytest.raises(ConfigError):
            cmd_sweep(parse_config(TWO_LEVEL + "sweep_param = Delta\n"), tmp_path)


class TestStaticCommands:
    def test_single_cell_phase_diagram(self, tmp_path):
        config = parse_config("model = two_level\ndelta_min = 18.5\ndelta_steps = 1\n"
                              "omega_min = 2\nomega_steps = 1\n")
        cmd_phase_diagram(config, tmp_path)
        data, names = read_columns(tmp_path / "phase_diagram.csv", 4)
        assert names == ["delta", "omega", "stable_count", "marginal"]
        assert data.tolist() == [[18.5, 2.0, 2.0, 0.0]]

    def test_phase_diagram_needs_two_level(self, tmp_path):
        with pytest.raises(ConfigError):
            cmd_phase_diagram(parse_config(THREE_LEVEL), tmp_path)

    def test_potentials(self, tmp_path):
        outputs = cmd_potential(parse_config("model = two_level\n"), tmp_path)
        names = sorted(p.name for p in outputs)
        assert names == ["manifest.json", "potential_16.csv", "potential_18.5.csv", "potential_23.csv"]
        text = (tmp_path / "potential_18.5.csv").read_text()
        assert text.count("fixed_point = ") == 3
        data, _ = read_columns(tmp_path / "potential_18.5.csv", 2)
        assert data.shape == (501, 2)

    def test_fit(self, tmp_path):
        x = 5.0 * np.arange(60) + 2.5
        counts = np.round(model_eval(FitModel(FitModelKind.EXPONENTIAL, (400.0, 0.05)), x))
        deltas = np.repeat(x, counts.astype(int))
        path = write_histogram(tmp_path / "h.csv", build_histogram(deltas, 5.0))
        cmd_fit(parse_config("model = two_level\nfit_model = exponential\n"), path, tmp_path / "fit")
        text = (tmp_path / "fit" / "fit.txt").read_text()
        assert text.startswith("model=exponential")
        lam = float([line for line in text.splitlines() if line.startswith("lam=")][0].split("=")[1])
        assert lam == pytest.approx(0.05, rel=0.05)
        assert (tmp_path / "fit" / "fit_curve.csv").exists()

    def test_three_level_noise_dump(self, tmp_path):
        config = parse_config("model = three_level\nt_total = 10000\nn_traj = 2\n")
        cmd_noise_dump(config, tmp_path)
        data, _ = read_columns(tmp_path / "noise_0001.csv", 2)
        assert data.shape == (1001, 2)
        assert 0.18 <= np.std(data[:, 1]) <= 0.22

    def test_two_level_noise_dump(self, tmp_path):
        cmd_noise_dump(parse_config(TWO_LEVEL), tmp_path)
        data, _ = read_columns(tmp_path / "noise_0000.csv", 2)
        assert data.shape == (101, 2)
        assert data[0, 1] == 0.0


class TestCli:
    def test_success(self, tmp_path):
        config = tmp_path / "run.conf"
        config.write_text(TWO_LEVEL)
        assert main(["simulate", "--config", str(config), "--out", str(tmp_path / "out"), "--seed", "9"]) == 0
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["base_seed"] == 9

    def test_rerun_from_manifest(self, tmp_path):
        config = tmp_path / "run.conf"
        config.write_text(TWO_LEVEL)
        main(["simulate", "--config", str(config), "--out", str(tmp_path / "a")])
        main(["simulate", "--config", str(tmp_path / "a" / "manifest.json"), "--out", str(tmp_path / "b")])
        assert (tmp_path / "a" / "trajectory_0000.csv").read_bytes() == \
            (tmp_path / "b" / "trajectory_0000.csv").read_bytes()

    def test_config_error_exit_code(self, tmp_path):
        config = tmp_path / "run.conf"
        config.write_text("model = two_level\ndt = -1\n")
        assert main(["simulate", "--config", str(config), "--out", str(tmp_path)]) == 2

    def test_missing_config(self, tmp_path):
        assert main(["potential", "--config", str(tmp_path / "nope.conf"), "--out", str(tmp_path)]) == 2

    def test_no_jumps_exit_code(self, tmp_path):
        config = tmp_path / "run.conf"
        config.write_text(ANALYSIS)
        flat = write_series(tmp_path / "flat.csv", TimeSeries(np.arange(0.0, 10.0, 0.5), np.zeros(20)))
        assert main(["analyze", "--config", str(config), "--out", str(tmp_path / "o"), str(flat)]) == 4

    def test_analyze_rerun_from_manifest(self, tmp_path, make_telegraph):
        switches = []
        for up in (10.0, 111.0, 312.0, 413.0):
            switches += [up, up + 30.0]
        path = write_series(tmp_path / "in.csv", make_telegraph(switches, 600.0, dt=0.05))
        config = tmp_path / "analysis.conf"
        config.write_text(ANALYSIS)
        assert main(["analyze", "--config", str(config), "--out", str(tmp_path / "a"), str(path)]) == 0

        manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
        assert manifest["inputs"] == [str(path.resolve())]
        assert main(["analyze", "--config", str(tmp_path / "a" / "manifest.json"),
                     "--out", str(tmp_path / "b")]) == 0
        assert (tmp_path / "a" / "histogram.csv").read_bytes() == (tmp_path / "b" / "histogram.csv").read_bytes()

    def test_analyze_without_inputs(self, tmp_path):
        config = tmp_path / "analysis.conf"
        config.write_text(ANALYSIS)
        assert main(["analyze", "--config", str(config), "--out", str(tmp_path / "o")]) == 2
