import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..core.exceptions import HistogramRangeError, NoSecondPeakError
from ..core.models import AnalysisSummary, JumpConfig, JumpDirection, RunConfig
from ..core.series import IntervalHistogram, JumpEvents, TimeSeries
from .jumps import (
    build_histogram,
    contrast_details,
    default_filter_tau,
    discard_transient,
    estimate_threshold,
    extract_events,
    pooled_intervals,
    window_count,
)
from .units import gamma_time_to_ms

logger = logging.getLogger(__name__)


@dataclass
class EnsembleAnalysis:
    events: List[JumpEvents]
    intervals: List[np.ndarray]
    histogram: IntervalHistogram
    summary: AnalysisSummary

    @property
    def pooled(self) -> np.ndarray:
        return np.concatenate(self.intervals) if self.intervals else np.empty(0)


def resolve_jump_config(series: Sequence[TimeSeries], config: RunConfig,
                        transient: float) -> JumpConfig:
    """Explicit mu/alpha/filter_tau from the config, the rest estimated from
    the pooled post-transient values."""
    analysis = config.analysis
    mu, alpha = analysis.mu, analysis.alpha
    if mu is None or alpha is None:
        values = np.concatenate([discard_transient(s, s.times[0] + transient).values
                                 for s in series if len(s)])
        mu_est, alpha_est = estimate_threshold(values)
        mu = mu_est if mu is None else mu
        alpha = alpha_est if alpha is None else alpha
    tau = analysis.filter_tau
    if tau is None:
        tau = default_filter_tau(config.period, config.params.dt if config.params else 1.0)
    return JumpConfig(mu=mu, alpha=alpha, filter_tau=tau, direction=analysis.direction)


def analyze_ensemble(series: Sequence[TimeSeries], config: RunConfig,
                     transient: Optional[float] = None) -> EnsembleAnalysis:
    """Events, pooled intervals, histogram and summary for a set of trajectories.

    Never raises for a quiet ensemble: the summary status says what was
    missing (no jumps, no second peak, histogram too short).
    """
    if not series:
        raise ValueError("need at least one trajectory to analyze")
    transient = config.transient() if transient is None else transient
    cfg = resolve_jump_config(series, config, transient)
    dt_out = config.analysis.dt_out

    events = [extract_events(s, cfg, transient=transient, dt_out=dt_out) for s in series]
    upward = cfg.direction == JumpDirection.UP
    intervals = pooled_intervals(events, upward=upward)
    ups = pooled_intervals(events, upward=True)
    downs = pooled_intervals(events, upward=False)

    period = config.period
    bin_width = config.bin_width()
    histogram = build_histogram(np.empty(0), bin_width, pool=intervals,
                                max_time=3.0 * period if period else None)

    summary = AnalysisSummary(
        n_trajectories=len(series),
        up_events=sum(e.up_times.size for e in events),
        down_events=sum(e.down_times.size for e in events),
        up_intervals=sum(a.size for a in ups),
        down_intervals=sum(a.size for a in downs),
        direction=cfg.direction,
        mu=cfg.mu,
        alpha=cfg.alpha,
        filter_tau=cfg.filter_tau,
        transient=transient,
        bin_width=bin_width,
        T=period,
    )
    gamma_hz = config.units.gamma_hz
    if gamma_hz is not None:
        summary.bin_width_ms = gamma_time_to_ms(bin_width, gamma_hz)
        summary.T_ms = gamma_time_to_ms(period, gamma_hz) if period else None

    if summary.up_events + summary.down_events == 0:
        summary.status = "no_jumps"
    elif period:
        pooled = np.concatenate(intervals) if intervals else np.empty(0)
        summary.window_count = window_count(pooled, period)
        try:
            details = contrast_details(histogram, period)
            summary.contrast = details.contrast
            summary.h1, summary.h2, summary.h_min = details.h1, details.h2, details.h_min
        except NoSecondPeakError:
            summary.status = "no_second_peak"
        except HistogramRangeError:
            summary.status = "short_histogram"

    logger.info(f"Analysis: {summary.up_events} up / {summary.down_events} down events, "
                f"{histogram.n_intervals} intervals, contrast {summary.contrast}")
    return EnsembleAnalysis(events=events, intervals=intervals, histogram=histogram, summary=summary)
