from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np


@dataclass(frozen=True)
class TimeSeries:
    """Sampled observable: strictly increasing times and equal-length values."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape or times.ndim != 1:
            raise ValueError("times and values must be 1-D arrays of equal length")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def is_uniform(self) -> bool:
        if self.times.size < 3:
            return True
        steps = np.diff(self.times)
        return bool(np.allclose(steps, steps[0], rtol=1e-9, atol=0.0))


@dataclass(frozen=True)
class Trajectory:
    """One simulated run. `values` holds n_R (three-level) or n (two-level)."""

    times: np.ndarray
    values: np.ndarray
    seed: int
    index: int = 0
    column: str = "n_R"
    noise: Optional[np.ndarray] = None
    diagnostics: Dict[str, float] = field(default_factory=dict)

    def as_series(self) -> TimeSeries:
        return TimeSeries(self.times, self.values)

    def __len__(self) -> int:
        return int(np.asarray(self.times).size)


@dataclass(frozen=True)
class JumpEvents:
    up_times: np.ndarray
    down_times: np.ndarray

    @property
    def count(self) -> int:
        return int(self.up_times.size + self.down_times.size)

    def merged(self):
        """Events in time order as (time, +1 for up / -1 for down)."""
        times = np.concatenate([self.up_times, self.down_times])
        signs = np.concatenate([np.ones(self.up_times.size, dtype=int),
                                -np.ones(self.down_times.size, dtype=int)])
        order = np.argsort(times, kind="stable")
        return times[order], signs[order]


@dataclass(frozen=True)
class IntervalHistogram:
    bin_width: float
    bin_edges: np.ndarray
    counts: np.ndarray
    total_events: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def n_intervals(self) -> int:
        return int(self.counts.sum())
