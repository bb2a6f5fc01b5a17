"""Jump extraction pipeline: transient cut, resampling, low-pass filtering,
hysteresis detection, interval histograms and contrast.
"""

import math
import logging
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from numba import njit

from ..core.exceptions import (
    AllZeroCountsError,
    EmptySeriesError,
    HistogramRangeError,
    NoSecondPeakError,
    RydbergJumpsError,
)
from ..core.models import JumpConfig
from ..core.series import IntervalHistogram, JumpEvents, TimeSeries

logger = logging.getLogger(__name__)

WINDOW_LO = 1.85
WINDOW_HI = 2.15


def default_filter_tau(period: Optional[float], dt: float) -> float:
    if period:
        return period / (40.0 * math.pi)
    return 10.0 * dt


@njit(cache=True, nogil=True)
def _low_pass_kernel(times, values, tau):
    out = np.empty_like(values)
    if values.size == 0:
        return out
    y = values[0]
    out[0] = y
    for i in range(1, values.size):
        a = 1.0 - math.exp(-(times[i] - times[i - 1]) / tau)
        y = y + a * (values[i] - y)
        out[i] = y
    return out


def low_pass(series: TimeSeries, tau: float) -> TimeSeries:
    """Causal single-pole filter, y' = (x - y) / tau, started at the first sample."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if tau == 0 or len(series) == 0:
        return series
    return TimeSeries(series.times, _low_pass_kernel(series.times, series.values, float(tau)))


def resample_linear(series: TimeSeries, dt_out: float) -> TimeSeries:
    if dt_out <= 0:
        raise ValueError("dt_out must be positive")
    if len(series) == 0:
        raise EmptySeriesError("cannot resample an empty series")
    t0, t1 = series.times[0], series.times[-1]
    count = int(math.floor((t1 - t0) / dt_out + 1e-9)) + 1
    grid = t0 + dt_out * np.arange(count)
    return TimeSeries(grid, np.interp(grid, series.times, series.values))


def discard_transient(series: TimeSeries, t_min: float) -> TimeSeries:
    keep = series.times >= t_min
    return TimeSeries(series.times[keep], series.values[keep])


def estimate_threshold(values: np.ndarray) -> Tuple[float, float]:
    """Two-cluster split of the value distribution.

    The split minimises within-cluster variance; mu is the midpoint of the
    two cluster means and alpha a tenth of their separation.
    """
    x = np.sort(np.asarray(values, dtype=float).ravel())
    if x.size == 0:
        raise EmptySeriesError("cannot estimate a threshold from no values")
    if x.size == 1 or x[0] == x[-1]:
        level = float(x[0])
        return level, max(abs(level), 1.0) * 1e-12

    n = x.size
    k = np.arange(1, n)
    csum = np.cumsum(x)[:-1]
    low_mean = csum / k
    high_mean = (x.sum() - csum) / (n - k)
    between = k * (n - k) * (high_mean - low_mean) ** 2
    best = int(np.argmax(between))
    m0, m1 = float(low_mean[best]), float(high_mean[best])
    separation = m1 - m0
    return 0.5 * (m0 + m1), max(0.1 * separation, 1e-12)


def detect_jumps(series: TimeSeries, cfg: JumpConfig) -> JumpEvents:
    """Hysteresis detector.

    Samples above mu + alpha are HIGH, below mu - alpha LOW, anything in
    the band keeps the previous state. Every LOW->HIGH transit is an upward
    event timed at the last interpolated mu crossing inside the transit;
    HIGH->LOW likewise gives a downward event.
    """
    t, v = series.times, series.values
    empty = JumpEvents(np.empty(0), np.empty(0))
    if v.size < 2:
        return empty

    state = np.zeros(v.size, dtype=np.int8)
    state[v > cfg.mu + cfg.alpha] = 1
    state[v < cfg.mu - cfg.alpha] = -1
    definite = np.flatnonzero(state)
    if definite.size < 2:
        return empty

    levels = state[definite]
    changes = np.flatnonzero(levels[1:] != levels[:-1])
    up, down = [], []
    for c in changes:
        i, j = definite[c], definite[c + 1]
        rising = levels[c + 1] > 0
        above = v[i:j + 1] > cfg.mu if rising else v[i:j + 1] < cfg.mu
        # last sample on the old side of mu before the new state is reached
        k = i + int(np.flatnonzero(~above[:-1] & above[1:])[-1])
        frac = (cfg.mu - v[k]) / (v[k + 1] - v[k])
        when = t[k] + frac * (t[k + 1] - t[k])
        (up if rising else down).append(when)

    return JumpEvents(np.asarray(up, dtype=float), np.asarray(down, dtype=float))


def upward_intervals(events: JumpEvents) -> np.ndarray:
    return np.diff(events.up_times)


def downward_intervals(events: JumpEvents) -> np.ndarray:
    return np.diff(events.down_times)


def build_histogram(deltas: Iterable[float], bin_width: float,
                    pool: Optional[Sequence[np.ndarray]] = None,
                    max_time: Optional[float] = None, total_events: Optional[int] = None) -> IntervalHistogram:
    """Bins [k w, (k+1) w) from 0, covering the data and at least max_time."""
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    parts = [np.asarray(deltas, dtype=float).ravel()]
    parts += [np.asarray(extra, dtype=float).ravel() for extra in (pool or [])]
    data = np.concatenate(parts)
    if np.any(data < 0):
        raise ValueError("intervals must be non-negative")

    index = np.floor(data / bin_width).astype(np.int64)
    n_bins = int(index.max()) + 1 if index.size else 1
    if max_time is not None:
        n_bins = max(n_bins, int(math.ceil(max_time / bin_width - 1e-9)))
    counts = np.bincount(index, minlength=n_bins)
    edges = bin_width * np.arange(n_bins + 1)
    if total_events is None:
        # k intervals come from k + 1 events of one trajectory
        total_events = sum(part.size + 1 for part in parts if part.size)
    return IntervalHistogram(bin_width=float(bin_width), bin_edges=edges, counts=counts,
                             total_events=int(total_events))


@dataclass(frozen=True)
class ContrastResult:
    contrast: float
    h1: int
    h2: int
    h_min: int
    first_peak: float
    second_peak: float


def contrast_details(h: IntervalHistogram, T: float) -> ContrastResult:
    if T <= 0:
        raise ValueError("T must be positive")
    if h.bin_edges[-1] < 2.5 * T * (1.0 - 1e-9):
        raise HistogramRangeError(f"histogram ends at {h.bin_edges[-1]:g}, need at least 2.5T = {2.5 * T:g}")

    centers = h.centers
    first = np.flatnonzero((centers >= 0.5 * T) & (centers < 1.5 * T))
    second = np.flatnonzero((centers >= 1.5 * T) & (centers <= 2.5 * T))
    if first.size == 0 or second.size == 0:
        raise HistogramRangeError("bin width too coarse to resolve the peak windows")

    p1 = int(first[np.argmax(h.counts[first])])
    p2 = int(second[np.argmax(h.counts[second])])
    h2 = int(h.counts[p2])
    if h2 == 0:
        raise NoSecondPeakError("no intervals near 2T")
    between = h.counts[p1 + 1:p2]
    h_min = int(between.min()) if between.size else h2
    value = min(1.0, max(0.0, (h2 - h_min) / h2))
    return ContrastResult(contrast=value, h1=int(h.counts[p1]), h2=h2, h_min=h_min,
                          first_peak=float(centers[p1]), second_peak=float(centers[p2]))


def contrast(h: IntervalHistogram, T: float) -> float:
    """C = (h2 - h_min) / h2 for the peaks near T and 2T."""
    return contrast_details(h, T).contrast


def window_count(deltas: np.ndarray, T: float, lo: float = WINDOW_LO, hi: float = WINDOW_HI) -> int:
    deltas = np.asarray(deltas, dtype=float)
    return int(np.count_nonzero((deltas >= lo * T) & (deltas <= hi * T)))


@dataclass(frozen=True)
class OptimumScan:
    best_delta: float
    deltas: np.ndarray
    counts: np.ndarray
    errors: Tuple[Optional[str], ...] = ()

    @property
    def failed(self) -> List[float]:
        return [float(d) for d, e in zip(self.deltas, self.errors) if e is not None]

    def rows(self):
        errors = self.errors or (None,) * self.deltas.size
        return [(d, c, "ok" if e is None else f"failed: {e}")
                for d, c, e in zip(self.deltas.tolist(), self.counts.tolist(), errors)]


def optimum_detuning_scan(runner: Callable[[float], np.ndarray], delta_grid: Iterable[float],
                          T: float) -> OptimumScan:
    """Evaluate `runner(delta)` (pooled intervals) over the grid and pick the
    detuning with the most intervals in [1.85T, 2.15T]; ties go to smaller |delta|.

    A detuning whose runner fails counts 0 and keeps its error message.
    """
    deltas = np.asarray(list(delta_grid), dtype=float)
    if deltas.size == 0:
        raise ValueError("detuning grid is empty")

    counts = np.zeros(deltas.size, dtype=int)
    errors: List[Optional[str]] = [None] * deltas.size
    for i, delta in enumerate(deltas):
        try:
            counts[i] = window_count(runner(float(delta)), T)
        except (RydbergJumpsError, ValueError) as e:
            errors[i] = str(e)
            logger.warning(f"Detuning {delta:g} failed: {e}")
            continue
        logger.info(f"Detuning {delta:g}: {counts[i]} intervals in window")

    if not counts.any():
        failed = sum(e is not None for e in errors)
        raise AllZeroCountsError(f"no intervals in the 2T window at any detuning ({failed} failed)")
    best = min(np.flatnonzero(counts == counts.max()), key=lambda i: (abs(deltas[i]), i))
    return OptimumScan(best_delta=float(deltas[best]), deltas=deltas, counts=counts, errors=tuple(errors))


def extract_events(series: TimeSeries, cfg: JumpConfig, transient: float = 0.0,
                   dt_out: Optional[float] = None) -> JumpEvents:
    """Transient cut, optional resampling and filtering, then detection."""
    series = discard_transient(series, series.times[0] + transient if len(series) else 0.0)
    if len(series) < 2:
        return JumpEvents(np.empty(0), np.empty(0))
    if dt_out is not None and not series.is_uniform:
        series = resample_linear(series, dt_out)
    return detect_jumps(low_pass(series, cfg.filter_tau), cfg)


def pooled_intervals(events: Sequence[JumpEvents], upward: bool = True) -> List[np.ndarray]:
    pick = upward_intervals if upward else downward_intervals
    return [pick(e) for e in events]
