"""Stochastic detuning inputs.

White noise for the three-level model is pre-sampled on a coarse grid and
linearly interpolated, so every realisation is an ordinary continuous
function of time. The two-level model uses an Ornstein-Uhlenbeck detuning
advanced with its exact Gaussian transition.

Random streams: ``numpy.random.Generator(PCG64(SeedSequence(base_seed,
spawn_key=(index,))))``. The generator identity is part of the output
contract; changing it changes every stored trajectory.
"""

import math
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
from numba import njit

from ..core.exceptions import NoiseSpanError
from ..core.models import NoiseMode, OUParams
from ..persistence.csv_io import read_columns, write_columns

logger = logging.getLogger(__name__)


def seeded_stream(base_seed: int, stream_index: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(base_seed), spawn_key=(int(stream_index),))
    return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True)
class NoiseSignal:
    """Uniformly sampled detuning noise, linearly interpolated between samples."""

    sample_times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.sample_times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or times.size < 2:
            raise ValueError("noise needs at least two samples with matching times")
        steps = np.diff(times)
        if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ValueError("noise sample times must be uniform and increasing")
        object.__setattr__(self, "sample_times", times)
        object.__setattr__(self, "values", values)

    @property
    def spacing(self) -> float:
        return float(self.sample_times[1] - self.sample_times[0])

    @property
    def start(self) -> float:
        return float(self.sample_times[0])

    @property
    def end(self) -> float:
        return float(self.sample_times[-1])

    def covers(self, t_start: float, t_end: float) -> bool:
        tol = 1e-9 * max(1.0, abs(self.end))
        return self.start <= t_start + tol and self.end >= t_end - tol

    def evaluate(self, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < self.start) or np.any(t_arr > self.end):
            raise NoiseSpanError(
                f"noise evaluated outside [{self.start}, {self.end}]"
            )
        result = np.interp(t_arr, self.sample_times, self.values)
        return float(result) if np.ndim(t) == 0 else result

    def to_csv(self, path: Union[str, Path], header: str = "") -> Path:
        return write_columns(path, ["t", "value"], [self.sample_times, self.values], header)

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "NoiseSignal":
        data, _ = read_columns(path, 2)
        logger.info(f"Replaying noise from {path} ({data.shape[0]} samples)")
        return cls(data[:, 0], data[:, 1])


def zero_noise(duration: float) -> NoiseSignal:
    return NoiseSignal(np.array([0.0, duration]), np.zeros(2))


def white_noise_sample_count(duration: float, mode: NoiseMode = NoiseMode.PER_UNIT_TIME,
                             spacing: float = 10.0, period: Optional[float] = None) -> int:
    if mode == NoiseMode.PER_UNIT_TIME:
        return int(math.ceil(duration / spacing - 1e-12)) + 1
    if period is None:
        raise ValueError("literal_total noise needs a modulation period")
    return max(2, int(math.ceil(period / 10.0 - 1e-12)))


def generate_white_noise(duration: float, sigma: float, seed: int, stream_index: int = 0,
                         mode: NoiseMode = NoiseMode.PER_UNIT_TIME, spacing: float = 10.0,
                         period: Optional[float] = None) -> NoiseSignal:
    """I.i.d. Normal(0, sigma^2) samples on a uniform grid covering [0, duration].

    ``per_unit_time`` places one sample every `spacing` (10/gamma by default);
    ``literal_total`` spreads gamma*T/10 samples evenly over the whole duration.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")

    count = white_noise_sample_count(duration, mode, spacing, period)
    if mode == NoiseMode.PER_UNIT_TIME:
        times = spacing * np.arange(count, dtype=float)
    else:
        times = np.linspace(0.0, duration, count)

    rng = seeded_stream(seed, stream_index)
    values = sigma * rng.standard_normal(count)
    return NoiseSignal(times, values)


@njit(cache=True, nogil=True)
def _ou_coefficients(dt, kappa, D, gamma):
    if kappa == 0.0:
        return 1.0, gamma * math.sqrt(D * dt)
    decay = math.exp(-kappa * dt)
    return decay, gamma * math.sqrt(D * (1.0 - math.exp(-2.0 * kappa * dt)) / (2.0 * kappa))


def ou_step(x: float, dt: float, p: OUParams, xi: float) -> float:
    """Exact OU transition: x e^{-kappa dt} + gamma sqrt(D (1 - e^{-2 kappa dt}) / 2 kappa) xi."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    decay, scale = _ou_coefficients(dt, p.kappa, p.D, p.gamma)
    return x * decay + scale * xi


def ou_euler_step(x: float, dt: float, p: OUParams, xi: float) -> float:
    """Euler-Maruyama step, kept for cross-checks against the exact update."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return x - p.kappa * x * dt + p.gamma * math.sqrt(p.D * dt) * xi


@njit(cache=True, nogil=True)
def _ou_path_kernel(x0, decay, scale, xi):
    out = np.empty(xi.size + 1)
    out[0] = x0
    x = x0
    for i in range(xi.size):
        x = x * decay + scale * xi[i]
        out[i + 1] = x
    return out


def ou_path(x0: float, dt: float, n_steps: int, p: OUParams,
            rng: np.random.Generator) -> np.ndarray:
    """Exact OU path with n_steps transitions (n_steps + 1 values, x0 first)."""
    decay, scale = _ou_coefficients(dt, p.kappa, p.D, p.gamma)
    return _ou_path_kernel(float(x0), decay, scale, rng.standard_normal(int(n_steps)))
