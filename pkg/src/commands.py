"""Command implementations behind the CLI.

Each command takes a resolved RunConfig and an output directory, writes
its files, and finishes by writing the run manifest.
"""

import logging
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .analysis.fitting import fit, model_eval
from .analysis.pipeline import EnsembleAnalysis, analyze_ensemble
from .core.exceptions import ConfigError, NoJumpsDetectedError
from .core.models import AnalysisSummary, ModelKind, RunConfig
from .core.series import Trajectory
from .dynamics.noise import NoiseSignal, generate_white_noise
from .dynamics.two_level import detuning_noise, fixed_points, phase_diagram, potential_landscape
from .orchestration.ensemble import run_ensemble
from .orchestration.sweep import SweepPoint, aggregate_rows, run_optimum_sweep, run_sweep
from .persistence.config_parser import emit_config
from .persistence.csv_io import (
    read_histogram,
    read_series,
    write_columns,
    write_histogram,
    write_rows,
    write_text,
    write_trajectory,
)
from .persistence.manifest import build_manifest, write_manifest

logger = logging.getLogger(__name__)


def _finish(command: str, config: RunConfig, out_dir: Path, outputs: List[Path],
            inputs: Sequence[Path] = ()) -> List[Path]:
    manifest = build_manifest(command, emit_config(config), config.ensemble.base_seed, outputs, out_dir,
                              inputs=inputs)
    return outputs + [write_manifest(manifest, out_dir)]


def _replay_noises(config: RunConfig) -> Optional[List[NoiseSignal]]:
    pattern = config.noise.noise_file
    if not pattern:
        return None
    if config.model != ModelKind.THREE_LEVEL:
        raise ConfigError("noise_file replay is only available for the three-level model")
    return [NoiseSignal.from_csv(pattern.format(index=i)) for i in range(config.ensemble.n_traj)]


def simulate(config: RunConfig, threads: Optional[int] = None) -> List[Trajectory]:
    return run_ensemble(
        config.params, config.ensemble.n_traj, config.ensemble.base_seed, threads=threads,
        dt_out=config.dt_out(), noise_mode=config.noise.noise_mode,
        noise_spacing=config.noise.noise_spacing, noises=_replay_noises(config),
    )


def _write_analysis(result: EnsembleAnalysis, out_dir: Path, prefix: str = "") -> List[Path]:
    histogram = write_histogram(out_dir / f"{prefix}histogram.csv", result.histogram,
                                header=f"direction = {result.summary.direction.value}")
    summary = write_text(out_dir / f"{prefix}summary.txt", result.summary.to_text())

    index, times, signs = [], [], []
    for i, events in enumerate(result.events):
        t, s = events.merged()
        index.append(np.full(t.size, i))
        times.append(t)
        signs.append(s)
    events = write_columns(out_dir / f"{prefix}events.csv", ["trajectory", "t", "direction"],
                           [np.concatenate(index), np.concatenate(times), np.concatenate(signs)],
                           header="direction: +1 up, -1 down", fmt=["%d", "%.17g", "%d"])
    return [histogram, summary, events]


def cmd_simulate(config: RunConfig, out_dir: Path, threads: Optional[int] = None) -> List[Path]:
    out_dir = Path(out_dir)
    header = emit_config(config)
    outputs = [
        write_trajectory(out_dir / f"trajectory_{traj.index:04d}.csv", traj, header=header)
        for traj in simulate(config, threads)
    ]
    logger.info(f"Wrote {len(outputs)} trajectories to {out_dir}")
    return _finish("simulate", config, out_dir, outputs)


def cmd_analyze(config: RunConfig, files: Sequence[Path], out_dir: Path) -> List[Path]:
    """Pooled histogram and summary of trajectory files.

    Raises NoJumpsDetectedError after the outputs are written when no
    event was found in any file.
    """
    if not files:
        raise ConfigError("analyze needs at least one trajectory file")
    out_dir = Path(out_dir)
    series = [read_series(path)[0] for path in files]
    result = analyze_ensemble(series, config)
    outputs = _finish("analyze", config, out_dir, _write_analysis(result, out_dir), inputs=files)
    if result.summary.status == "no_jumps":
        raise NoJumpsDetectedError(f"no jumps detected in {len(files)} trajectories")
    return outputs


def cmd_sweep(config: RunConfig, out_dir: Path, threads: Optional[int] = None) -> List[Path]:
    out_dir = Path(out_dir)
    outputs: List[Path] = []

    if config.sweep.sweep_mode.value == "optimum":
        def intervals_for(point_cfg: RunConfig) -> np.ndarray:
            return analyze_ensemble([t.as_series() for t in simulate(point_cfg, threads)], point_cfg).pooled

        scan = run_optimum_sweep(config, intervals_for)
        outputs.append(write_rows(out_dir / "optimum.csv", ["Delta", "window_count", "status"], scan.rows()))
        outputs.append(write_text(out_dir / "optimum.txt", f"best_Delta={scan.best_delta!r}\n"))
        logger.info(f"Optimum detuning {scan.best_delta:g}")
        return _finish("sweep", config, out_dir, outputs)

    def evaluate(point_cfg: RunConfig, point: SweepPoint) -> AnalysisSummary:
        trajectories = simulate(point_cfg, threads)
        result = analyze_ensemble([t.as_series() for t in trajectories], point_cfg)
        outputs.extend(_write_analysis(result, out_dir, prefix=f"point_{point.index:03d}_"))
        return result.summary

    state = run_sweep(config, evaluate)
    header, rows = aggregate_rows(state)
    outputs.append(write_rows(out_dir / "sweep.csv", header, rows))
    logger.info(f"Sweep finished: {len(state.completed)} ok, {len(state.failed)} failed")
    return _finish("sweep", config, out_dir, outputs)


def cmd_phase_diagram(config: RunConfig, out_dir: Path) -> List[Path]:
    if config.model != ModelKind.TWO_LEVEL:
        raise ConfigError("phase-diagram is only implemented for the two-level model")
    out_dir = Path(out_dir)
    grid = config.phase
    diagram = phase_diagram(grid.delta_values(), grid.omega_values(), config.two_level)
    rows = list(diagram.rows())
    path = write_columns(
        out_dir / "phase_diagram.csv", ["delta", "omega", "stable_count", "marginal"],
        [np.array([r[0] for r in rows]), np.array([r[1] for r in rows]),
         np.array([r[2] for r in rows]), np.array([int(r[3]) for r in rows])],
        header=f"V = {config.two_level.V!r}\ngamma_D = {config.two_level.gamma_D!r}",
        fmt=["%.17g", "%.17g", "%d", "%d"],
    )
    return _finish("phase-diagram", config, out_dir, [path])


def cmd_potential(config: RunConfig, out_dir: Path) -> List[Path]:
    if config.model != ModelKind.TWO_LEVEL:
        raise ConfigError("potential is only implemented for the two-level model")
    out_dir = Path(out_dir)
    p = config.two_level
    outputs = []
    for delta in config.phase.potential_deltas:
        n, energy = potential_landscape(p, delta)
        roots = fixed_points(p, delta)
        header = f"Delta = {delta!r}\n" + "\n".join(
            f"fixed_point = {root.n!r} {root.stability.value}" for root in roots.roots
        )
        outputs.append(write_columns(out_dir / f"potential_{delta:g}.csv", ["n", "E"], [n, energy], header))
    return _finish("potential", config, out_dir, outputs)


def cmd_fit(config: RunConfig, histogram_file: Path, out_dir: Path) -> List[Path]:
    out_dir = Path(out_dir)
    histogram_file = Path(histogram_file)
    histogram = read_histogram(histogram_file)
    settings = config.fit
    result = fit(settings.fit_model, histogram, starts=settings.fit_starts, seed=settings.fit_seed,
                 weighting=settings.fit_weighting)
    text = write_text(out_dir / "fit.txt", result.to_text(gamma_hz=config.units.gamma_hz))
    curve = write_columns(out_dir / "fit_curve.csv", ["t", "count", "model"],
                          [histogram.centers, histogram.counts, model_eval(result.model, histogram.centers)])
    return _finish("fit", config, out_dir, [text, curve], inputs=[histogram_file])


def cmd_noise_dump(config: RunConfig, out_dir: Path) -> List[Path]:
    """Noise realisation of every ensemble member, `t,value`."""
    out_dir = Path(out_dir)
    seed = config.ensemble.base_seed
    outputs = []
    for index in range(config.ensemble.n_traj):
        path = out_dir / f"noise_{index:04d}.csv"
        header = f"seed = {seed}\nindex = {index}"
        if config.model == ModelKind.THREE_LEVEL:
            p = config.three_level
            signal = generate_white_noise(p.t_total, p.noise_sigma, seed, index,
                                          mode=config.noise.noise_mode,
                                          spacing=config.noise.noise_spacing, period=p.period)
            outputs.append(signal.to_csv(path, header=header))
        else:
            times, values = detuning_noise(config.two_level, seed, index, dt_out=config.dt_out())
            outputs.append(write_columns(path, ["t", "value"], [times, values], header))
    return _finish("noise-dump", config, out_dir, outputs)
