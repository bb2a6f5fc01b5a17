from typing import Callable, List, Optional, Tuple
from dataclasses import dataclass, field
from datetime import datetime, timezone
import logging

import numpy as np

from ..analysis.jumps import OptimumScan, optimum_detuning_scan
from ..core.exceptions import ConfigError, RydbergJumpsError
from ..core.models import AnalysisSummary, RunConfig

logger = logging.getLogger(__name__)

OPTIMUM_PARAM = "Delta"


@dataclass(frozen=True)
class SweepPoint:
    index: int
    param: str
    value: float
    paired_param: Optional[str] = None
    paired_value: Optional[float] = None


@dataclass
class SweepPointResult:
    point: SweepPoint
    summary: Optional[AnalysisSummary] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class SweepState:
    points: List[SweepPoint]
    completed: List[SweepPointResult] = field(default_factory=list)
    failed: List[SweepPointResult] = field(default_factory=list)
    started_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))

    def is_complete(self) -> bool:
        return len(self.completed) + len(self.failed) >= len(self.points)

    def get_progress(self) -> float:
        if not self.points:
            return 1.0
        return (len(self.completed) + len(self.failed)) / len(self.points)

    def results(self) -> List[SweepPointResult]:
        return sorted(self.completed + self.failed, key=lambda r: r.point.index)


def fork_points(config: RunConfig) -> List[SweepPoint]:
    spec = config.sweep
    if not spec.sweep_param:
        raise ConfigError("sweep_param is required for a sweep")
    if not spec.sweep_values:
        raise ConfigError("sweep_values is empty")
    paired = spec.sweep_paired_values if spec.sweep_paired_param else [None] * len(spec.sweep_values)
    return [
        SweepPoint(index=i, param=spec.sweep_param, value=float(v),
                   paired_param=spec.sweep_paired_param,
                   paired_value=None if pv is None else float(pv))
        for i, (v, pv) in enumerate(zip(spec.sweep_values, paired))
    ]


def point_config(config: RunConfig, point: SweepPoint) -> RunConfig:
    updated = config.with_param(point.param, point.value)
    if point.paired_param:
        updated = updated.with_param(point.paired_param, point.paired_value)
    return updated


def run_sweep(config: RunConfig, evaluate: Callable[[RunConfig, SweepPoint], AnalysisSummary]) -> SweepState:
    """Evaluate every grid point in order; a failing point is recorded and skipped."""
    state = SweepState(points=fork_points(config))
    logger.info(f"Sweep over {state.points[0].param}: {len(state.points)} points")

    for point in state.points:
        try:
            summary = evaluate(point_config(config, point), point)
            state.completed.append(SweepPointResult(point=point, summary=summary))
            logger.info(f"Sweep point {point.param}={point.value:g}: contrast {summary.contrast}, "
                        f"status {summary.status}")
        except (RydbergJumpsError, ValueError) as e:
            logger.warning(f"Sweep point {point.param}={point.value:g} failed: {e}")
            state.failed.append(SweepPointResult(point=point, error=str(e)))
        logger.debug(f"Sweep progress {state.get_progress():.0%}")

    return state


def aggregate_rows(state: SweepState) -> Tuple[List[str], List[list]]:
    """Header and rows of the aggregate table, one row per grid point."""
    header = ["param", "value", "paired_param", "paired_value", "C", "h1", "h2", "h_min",
              "window_count", "up_events", "up_intervals", "status"]
    rows = []
    for result in state.results():
        p, s = result.point, result.summary
        if s is None:
            tail = [None] * 7 + [f"failed: {result.error}"]
        else:
            tail = [s.contrast, s.h1, s.h2, s.h_min, s.window_count, s.up_events,
                    s.up_intervals, s.status]
        rows.append([p.param, p.value, p.paired_param, p.paired_value] + tail)
    return header, rows


def run_optimum_sweep(config: RunConfig,
                      intervals_for: Callable[[RunConfig], np.ndarray]) -> OptimumScan:
    """Detuning scan for the largest [1.85T, 2.15T] count."""
    points = fork_points(config)
    if points[0].param != OPTIMUM_PARAM:
        raise ConfigError(f"optimum sweep_mode scans {OPTIMUM_PARAM}, not {points[0].param}")
    if config.period is None:
        raise ConfigError("optimum sweep needs a modulation period (delta_f > 0 or T)")

    by_value = {point.value: point for point in points}

    def runner(delta: float) -> np.ndarray:
        return intervals_for(point_config(config, by_value[delta]))

    return optimum_detuning_scan(runner, [point.value for point in points], config.period)
