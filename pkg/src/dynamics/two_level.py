"""Mean-field two-level model: full (n, q) dynamics, the adiabatic density
equation, its effective potential, fixed points, and the stochastic
dynamics with Ornstein-Uhlenbeck detuning noise and periodic modulation.
"""

import math
import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

import numpy as np
from numba import njit
from scipy.optimize import brentq

from ..core.exceptions import DegenerateInteractionError, NonFiniteStateError, StateBoundsError
from ..core.models import Stability, TwoLevelParams
from ..core.series import Trajectory
from ..core.settings import get_settings
from .noise import _ou_coefficients, _ou_path_kernel, seeded_stream

logger = logging.getLogger(__name__)

SCAN_POINTS = 2001
MARGINAL_SLOPE = 1e-8
BOUND_TOLERANCE = 1e-9


@dataclass(frozen=True)
class TwoLevelState:
    n: float
    q: complex


@dataclass(frozen=True)
class FixedPoint:
    n: float
    stability: Stability
    slope: float

    @property
    def stable(self) -> bool:
        return self.stability == Stability.STABLE


@dataclass(frozen=True)
class FixedPointSet:
    roots: Tuple[FixedPoint, ...]

    @property
    def stable_roots(self) -> List[FixedPoint]:
        return [root for root in self.roots if root.stable]

    @property
    def stable_count(self) -> int:
        return len(self.stable_roots)

    @property
    def has_marginal(self) -> bool:
        return any(root.stability == Stability.MARGINAL for root in self.roots)

    def __len__(self) -> int:
        return len(self.roots)


@dataclass(frozen=True)
class PhaseDiagram:
    deltas: np.ndarray
    omegas: np.ndarray
    stable_counts: np.ndarray  # shape (len(deltas), len(omegas))
    marginal: np.ndarray

    def rows(self):
        for i, delta in enumerate(self.deltas):
            for j, omega in enumerate(self.omegas):
                yield float(delta), float(omega), int(self.stable_counts[i, j]), bool(self.marginal[i, j])


@dataclass(frozen=True)
class FullTrajectory:
    times: np.ndarray
    n: np.ndarray
    q: np.ndarray
    seed: int


def modulated_detuning(t, p: TwoLevelParams):
    return p.Delta - p.A * np.cos(2.0 * np.pi * p.delta_f * t)


def full_rhs(t: float, s: TwoLevelState, p: TwoLevelParams, delta_s: float = 0.0) -> Tuple[float, complex]:
    delta = modulated_detuning(t, p) + delta_s
    dn = p.Omega * s.q.imag - p.gamma * s.n
    dq = (-1j * (delta - s.n * p.V) * s.q - 1j * p.Omega * s.n
          - p.Gamma * s.q + 0.5j * p.Omega)
    return float(dn), complex(dq)


def q_nullcline(n, delta_inst: float, p: TwoLevelParams):
    """Coherence that makes dq/dt vanish at density n."""
    return (0.5j * p.Omega - 1j * p.Omega * n) / (1j * (delta_inst - n * p.V) + p.Gamma)


def adiabatic_rhs(n, delta_inst: float, p: TwoLevelParams):
    return _adiabatic(np.asarray(n, dtype=float), delta_inst, p.Omega, p.V, p.gamma, p.Gamma)


def adiabatic_slope(n, delta_inst: float, p: TwoLevelParams):
    return _adiabatic_slope(np.asarray(n, dtype=float), delta_inst, p.Omega, p.V, p.gamma, p.Gamma)


def _adiabatic(n, delta_inst, omega, v, gamma, big_gamma):
    x = delta_inst - n * v
    return -omega ** 2 * big_gamma * (n - 0.5) / (big_gamma ** 2 + x ** 2) - gamma * n


def _adiabatic_slope(n, delta_inst, omega, v, gamma, big_gamma):
    x = delta_inst - n * v
    denom = big_gamma ** 2 + x ** 2
    return -omega ** 2 * big_gamma * (denom + 2.0 * v * x * (n - 0.5)) / denom ** 2 - gamma


def potential(n, delta_inst: float, p: TwoLevelParams):
    """Effective potential E(n) with dn/dt = -dE/dn."""
    if p.V == 0:
        raise DegenerateInteractionError("potential is undefined for V = 0; use adiabatic_rhs")
    n = np.asarray(n, dtype=float)
    omega2, v, big_gamma = p.Omega ** 2, p.V, p.Gamma
    x = delta_inst - n * v
    return (p.gamma * n ** 2 / 2.0
            - (omega2 / v) * (delta_inst / v - 0.5) * np.arctan(x / big_gamma)
            + (omega2 * big_gamma / (2.0 * v ** 2)) * np.log1p((x / big_gamma) ** 2))


def potential_landscape(p: TwoLevelParams, delta_inst: float,
                        n_grid: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    n_grid = np.linspace(0.0, 1.0, 501) if n_grid is None else np.asarray(n_grid, dtype=float)
    return n_grid, potential(n_grid, delta_inst, p)


def _fixed_points(omega: float, v: float, gamma: float, big_gamma: float,
                  delta_inst: float) -> FixedPointSet:
    grid = np.linspace(0.0, 1.0, SCAN_POINTS)
    values = _adiabatic(grid, delta_inst, omega, v, gamma, big_gamma)

    def f(n):
        return _adiabatic(n, delta_inst, omega, v, gamma, big_gamma)

    locations = []
    for i in range(grid.size):
        if values[i] == 0.0:
            locations.append(float(grid[i]))
        elif i + 1 < grid.size and values[i] * values[i + 1] < 0.0:
            locations.append(brentq(f, grid[i], grid[i + 1], xtol=1e-15, maxiter=200))

    roots = []
    for n_star in locations:
        slope = float(_adiabatic_slope(n_star, delta_inst, omega, v, gamma, big_gamma))
        if abs(slope) < MARGINAL_SLOPE:
            stability = Stability.MARGINAL
        elif slope < 0:
            stability = Stability.STABLE
        else:
            stability = Stability.UNSTABLE
        roots.append(FixedPoint(n=float(n_star), stability=stability, slope=slope))
    return FixedPointSet(roots=tuple(roots))


def fixed_points(p: TwoLevelParams, delta_inst: Optional[float] = None) -> FixedPointSet:
    """Roots of the adiabatic equation on [0, 1] with their stability."""
    delta_inst = p.Delta if delta_inst is None else delta_inst
    return _fixed_points(p.Omega, p.V, p.gamma, p.Gamma, delta_inst)


def phase_diagram(delta_values: Iterable[float], omega_values: Iterable[float],
                  p: TwoLevelParams) -> PhaseDiagram:
    """Number of stable fixed points over a (Delta, Omega) grid at A = 0."""
    deltas = np.asarray(list(delta_values), dtype=float)
    omegas = np.asarray(list(omega_values), dtype=float)
    if deltas.size == 0 or omegas.size == 0:
        raise ValueError("phase diagram grids must be non-empty")

    counts = np.zeros((deltas.size, omegas.size), dtype=int)
    marginal = np.zeros((deltas.size, omegas.size), dtype=bool)
    for i, delta in enumerate(deltas):
        for j, omega in enumerate(omegas):
            result = _fixed_points(float(omega), p.V, p.gamma, p.Gamma, float(delta))
            counts[i, j] = result.stable_count
            marginal[i, j] = result.has_marginal

    logger.info(f"Phase diagram: {deltas.size}x{omegas.size} cells, "
                f"{int(np.sum(counts == 2))} bistable")
    return PhaseDiagram(deltas=deltas, omegas=omegas, stable_counts=counts, marginal=marginal)


def initial_density(p: TwoLevelParams) -> float:
    """Low-density stable root of the adiabatic equation at t = 0."""
    result = fixed_points(p, float(modulated_detuning(0.0, p)))
    stable = result.stable_roots or list(result.roots)
    return stable[0].n


@njit(cache=True, nogil=True)
def _adiabatic_scalar(n, delta_inst, omega, v, gamma, big_gamma):
    x = delta_inst - n * v
    return -omega * omega * big_gamma * (n - 0.5) / (big_gamma * big_gamma + x * x) - gamma * n


@njit(cache=True, nogil=True)
def _stochastic_chunk(n, ds, step0, xi, dt, record_every, delta, a, delta_f, omega, v,
                      gamma, big_gamma, decay, scale, out_n, out_ds):
    half = 0.5 * dt
    w = 2.0 * np.pi * delta_f
    for i in range(xi.size):
        step = step0 + i
        t = step * dt
        d0 = delta - a * math.cos(w * t) + ds
        dh = delta - a * math.cos(w * (t + half)) + ds
        d1 = delta - a * math.cos(w * (t + dt)) + ds
        k1 = _adiabatic_scalar(n, d0, omega, v, gamma, big_gamma)
        k2 = _adiabatic_scalar(n + half * k1, dh, omega, v, gamma, big_gamma)
        k3 = _adiabatic_scalar(n + half * k2, dh, omega, v, gamma, big_gamma)
        k4 = _adiabatic_scalar(n + dt * k3, d1, omega, v, gamma, big_gamma)
        n = n + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        # noise held fixed over the RK4 step, then advanced exactly
        ds = ds * decay + scale * xi[i]
        if (step + 1) % record_every == 0:
            if not math.isfinite(n):
                return n, ds, step + 1
            j = (step + 1) // record_every
            out_n[j] = n
            out_ds[j] = ds
    return n, ds, -1


@njit(cache=True, nogil=True)
def _full_chunk(n, q, ds, step0, xi, dt, record_every, delta, a, delta_f, omega, v,
                gamma, big_gamma, decay, scale, out_n, out_q):
    half = 0.5 * dt
    w = 2.0 * np.pi * delta_f
    for i in range(xi.size):
        step = step0 + i
        t = step * dt
        d0 = delta - a * math.cos(w * t) + ds
        dh = delta - a * math.cos(w * (t + half)) + ds
        d1 = delta - a * math.cos(w * (t + dt)) + ds

        dn1 = omega * q.imag - gamma * n
        dq1 = -1j * (d0 - n * v) * q - 1j * omega * n - big_gamma * q + 0.5j * omega
        n2, q2 = n + half * dn1, q + half * dq1
        dn2 = omega * q2.imag - gamma * n2
        dq2 = -1j * (dh - n2 * v) * q2 - 1j * omega * n2 - big_gamma * q2 + 0.5j * omega
        n3, q3 = n + half * dn2, q + half * dq2
        dn3 = omega * q3.imag - gamma * n3
        dq3 = -1j * (dh - n3 * v) * q3 - 1j * omega * n3 - big_gamma * q3 + 0.5j * omega
        n4, q4 = n + dt * dn3, q + dt * dq3
        dn4 = omega * q4.imag - gamma * n4
        dq4 = -1j * (d1 - n4 * v) * q4 - 1j * omega * n4 - big_gamma * q4 + 0.5j * omega

        n = n + (dt / 6.0) * (dn1 + 2.0 * dn2 + 2.0 * dn3 + dn4)
        q = q + (dt / 6.0) * (dq1 + 2.0 * dq2 + 2.0 * dq3 + dq4)
        ds = ds * decay + scale * xi[i]
        if (step + 1) % record_every == 0:
            if not (math.isfinite(n) and math.isfinite(q.real) and math.isfinite(q.imag)):
                return n, q, ds, step + 1
            j = (step + 1) // record_every
            out_n[j] = n
            out_q[j] = q
    return n, q, ds, -1


def _sampling(p: TwoLevelParams, dt_out: Optional[float]) -> Tuple[int, int]:
    if dt_out is None:
        dt_out = p.period / 200.0 if p.period else 1.0
    if dt_out < p.dt:
        raise ValueError("dt_out must be at least the integrator step")
    n_steps = int(round(p.t_total / p.dt))
    record_every = max(1, int(round(dt_out / p.dt)))
    return n_steps, record_every


def _chunks(n_steps: int, chunk_steps: int):
    start = 0
    while start < n_steps:
        size = min(chunk_steps, n_steps - start)
        yield start, size
        start += size


def integrate_stochastic_two_level(p: TwoLevelParams, seed: int, index: int = 0,
                                   n0: Optional[float] = None, dt_out: Optional[float] = None,
                                   chunk_steps: Optional[int] = None) -> Trajectory:
    """RK4 on the adiabatic equation driven by Delta(t) + Delta_S(t).

    Delta_S starts at 0 and follows the exact OU update on the integrator
    grid; its standard-normal draws come from stream (seed, index). The
    chunk size only bounds memory and never changes the draws.
    Raises StateBoundsError if n leaves [0, 1] at any recorded sample.
    """
    n_steps, record_every = _sampling(p, dt_out)
    chunk_steps = chunk_steps or get_settings().chunk_steps
    n = initial_density(p) if n0 is None else float(n0)
    ds = 0.0
    decay, scale = _ou_coefficients(p.dt, p.kappa, p.D, p.gamma)
    rng = seeded_stream(seed, index)

    n_out = n_steps // record_every + 1
    out_n = np.empty(n_out)
    out_ds = np.empty(n_out)
    out_n[0], out_ds[0] = n, ds

    for start, size in _chunks(n_steps, chunk_steps):
        xi = rng.standard_normal(size)
        n, ds, failed_at = _stochastic_chunk(
            n, ds, start, xi, float(p.dt), record_every, float(p.Delta), float(p.A),
            float(p.delta_f), float(p.Omega), float(p.V), float(p.gamma), float(p.Gamma),
            decay, scale, out_n, out_ds,
        )
        if failed_at >= 0:
            raise NonFiniteStateError(
                f"non-finite density at step {failed_at} (t={failed_at * p.dt:.6g}); reduce dt",
                step=failed_at, time=failed_at * p.dt,
            )

    times = np.arange(n_out) * record_every * p.dt
    diagnostics = {"n_min": float(out_n.min()), "n_max": float(out_n.max())}
    outside = np.flatnonzero((out_n < -BOUND_TOLERANCE) | (out_n > 1.0 + BOUND_TOLERANCE))
    if outside.size:
        first = outside[0]
        raise StateBoundsError(
            f"trajectory {index}: density {out_n[first]:.6g} outside [0, 1] at t={times[first]:.6g}; reduce dt",
            time=float(times[first]),
        )
    logger.debug(f"Two-level trajectory {index}: {diagnostics}")

    return Trajectory(times=times, values=out_n, seed=seed, index=index, column="n",
                      noise=out_ds, diagnostics=diagnostics)


def detuning_noise(p: TwoLevelParams, seed: int, index: int = 0, dt_out: Optional[float] = None,
                   chunk_steps: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Delta_S at the output samples of trajectory (seed, index), without
    integrating n. Uses the same draws as integrate_stochastic_two_level."""
    n_steps, record_every = _sampling(p, dt_out)
    chunk_steps = chunk_steps or get_settings().chunk_steps
    decay, scale = _ou_coefficients(p.dt, p.kappa, p.D, p.gamma)
    rng = seeded_stream(seed, index)

    samples = [np.zeros(1)]
    x = 0.0
    for start, size in _chunks(n_steps, chunk_steps):
        path = _ou_path_kernel(x, decay, scale, rng.standard_normal(size))
        x = path[-1]
        # path[k] is the value after step start + k; keep whole multiples of record_every
        first = (-start) % record_every or record_every
        samples.append(path[first::record_every])
    values = np.concatenate(samples)
    times = np.arange(values.size) * record_every * p.dt
    return times, values


def integrate_full_two_level(p: TwoLevelParams, seed: int = 0, index: int = 0,
                             state0: Optional[TwoLevelState] = None,
                             dt_out: Optional[float] = None,
                             chunk_steps: Optional[int] = None) -> FullTrajectory:
    """Same drive and noise as the adiabatic run, but evolving both n and q."""
    n_steps, record_every = _sampling(p, dt_out)
    chunk_steps = chunk_steps or get_settings().chunk_steps
    state0 = state0 or TwoLevelState(n=0.0, q=0j)
    n, q, ds = float(state0.n), complex(state0.q), 0.0
    decay, scale = _ou_coefficients(p.dt, p.kappa, p.D, p.gamma)
    rng = seeded_stream(seed, index)

    n_out = n_steps // record_every + 1
    out_n = np.empty(n_out)
    out_q = np.empty(n_out, dtype=np.complex128)
    out_n[0], out_q[0] = n, q

    for start, size in _chunks(n_steps, chunk_steps):
        xi = rng.standard_normal(size)
        n, q, ds, failed_at = _full_chunk(
            n, q, ds, start, xi, float(p.dt), record_every, float(p.Delta), float(p.A),
            float(p.delta_f), float(p.Omega), float(p.V), float(p.gamma), float(p.Gamma),
            decay, scale, out_n, out_q,
        )
        if failed_at >= 0:
            raise NonFiniteStateError(f"non-finite (n, q) at step {failed_at}", step=failed_at,
                                      time=failed_at * p.dt)

    times = np.arange(n_out) * record_every * p.dt
    return FullTrajectory(times=times, n=out_n, q=out_q, seed=seed)
