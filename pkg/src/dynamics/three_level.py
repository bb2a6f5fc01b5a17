"""Mean-field Lindblad dynamics of the three-level atom (|g>, |r>, |s>).

The optical drive couples g-r with Rabi frequency Omega, the dual-tone microwave
couples r-s with Omega_s(t) = Omega_MW1 + Omega_MW2 exp(-2 pi i delta_f t),
and the Rydberg levels carry density-dependent (mean-field) detuning shifts.
Both Rydberg levels decay to |g>.

The detuning noise is a pre-generated NoiseSignal, so each realisation is a
deterministic non-autonomous ODE and fixed-step RK4 applies directly.
"""

import math
import logging
from typing import Optional, Tuple

import numpy as np
from numba import njit

from ..core.exceptions import NonFiniteStateError, NoiseSpanError
from ..core.models import NoiseMode, ThreeLevelParams
from ..core.series import Trajectory
from .noise import NoiseSignal, generate_white_noise, zero_noise

logger = logging.getLogger(__name__)

G, R, S = 0, 1, 2
POSITIVITY_TOLERANCE = 1e-6

# (Omega_MW2, Delta) for drive strengths beta = -10, -15, -20 dB at delta_f = 0.01
DRIVE_PRESETS = ((0.949, -4.15), (0.533, -3.95), (0.3, -3.87))


def ground_state() -> np.ndarray:
    rho = np.zeros((3, 3), dtype=np.complex128)
    rho[G, G] = 1.0
    return rho


def basis_projector(level: int) -> np.ndarray:
    rho = np.zeros((3, 3), dtype=np.complex128)
    rho[level, level] = 1.0
    return rho


def check_density_matrix(rho: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (3, 3):
        raise ValueError(f"expected a 3x3 density matrix, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise ValueError("density matrix does not have unit trace")
    return rho


def omega_mw2_from_beta(omega_mw1: float, beta_db: float) -> float:
    return omega_mw1 * 10.0 ** (beta_db / 20.0)


def dual_tone_rabi(t: float, p: ThreeLevelParams) -> complex:
    return p.Omega_MW1 + p.Omega_MW2 * np.exp(-2j * np.pi * p.delta_f * t)


def effective_detunings(rho: np.ndarray, p: ThreeLevelParams, w: float = 0.0) -> Tuple[float, float]:
    rho_rr = float(np.real(rho[R, R]))
    rho_ss = float(np.real(rho[S, S]))
    delta = p.Delta + w
    return (delta - p.V1 * rho_rr - p.V2 * rho_ss,
            delta - p.V3 * rho_rr - p.V4 * rho_ss)


def hamiltonian(t: float, rho: np.ndarray, p: ThreeLevelParams, w: float = 0.0) -> np.ndarray:
    d1, d2 = effective_detunings(rho, p, w)
    omega_s = dual_tone_rabi(t, p)
    return np.array([
        [0.0, p.Omega / 2, 0.0],
        [np.conj(p.Omega) / 2, -d1, omega_s / 2],
        [0.0, np.conj(omega_s) / 2, -d2],
    ], dtype=np.complex128)


@njit(cache=True, nogil=True)
def _lindblad_rhs(t, rho, omega, delta, v1, v2, v3, v4, mw1, mw2, delta_f,
                  gamma_r, gamma_s, w, h, out):
    rho_rr = rho[1, 1].real
    rho_ss = rho[2, 2].real
    d1 = delta + w - v1 * rho_rr - v2 * rho_ss
    d2 = delta + w - v3 * rho_rr - v4 * rho_ss
    omega_s = mw1 + mw2 * np.exp(-2j * np.pi * delta_f * t)

    h[:, :] = 0.0
    h[0, 1] = 0.5 * omega
    h[1, 0] = 0.5 * omega
    h[1, 1] = -d1
    h[1, 2] = 0.5 * omega_s
    h[2, 1] = 0.5 * np.conj(omega_s)
    h[2, 2] = -d2

    decay = (0.0, gamma_r, gamma_s)
    # Upper triangle only; the lower one is filled by conjugation
    for j in range(3):
        for k in range(j, 3):
            comm = 0.0j
            for m in range(3):
                comm += h[j, m] * rho[m, k] - rho[j, m] * h[m, k]
            value = -1j * comm - 0.5 * (decay[j] + decay[k]) * rho[j, k]
            if j == 0 and k == 0:
                value += gamma_r * rho_rr + gamma_s * rho_ss
            if j == k:
                out[j, k] = value.real
            else:
                out[j, k] = value
                out[k, j] = np.conj(value)


@njit(cache=True, nogil=True)
def _noise_at(t, t0, spacing, values):
    x = (t - t0) / spacing
    k = int(math.floor(x))
    last = values.size - 1
    if k >= last:
        return values[last]
    if k < 0:
        return values[0]
    frac = x - k
    return values[k] + frac * (values[k + 1] - values[k])


@njit(cache=True, nogil=True)
def _integrate_kernel(rho0, n_steps, dt, record_every, omega, delta, v1, v2, v3, v4,
                      mw1, mw2, delta_f, gamma_r, gamma_s, noise_t0, noise_spacing,
                      noise_values):
    n_out = n_steps // record_every + 1
    snapshots = np.empty((n_out, 3, 3), dtype=np.complex128)
    rho = rho0.copy()
    snapshots[0] = rho
    h = np.empty((3, 3), dtype=np.complex128)
    stage = np.empty((3, 3), dtype=np.complex128)
    k1 = np.empty((3, 3), dtype=np.complex128)
    k2 = np.empty((3, 3), dtype=np.complex128)
    k3 = np.empty((3, 3), dtype=np.complex128)
    k4 = np.empty((3, 3), dtype=np.complex128)
    half = 0.5 * dt
    sixth = dt / 6.0

    for step in range(n_steps):
        t = step * dt
        w0 = _noise_at(t, noise_t0, noise_spacing, noise_values)
        wh = _noise_at(t + half, noise_t0, noise_spacing, noise_values)
        w1 = _noise_at(t + dt, noise_t0, noise_spacing, noise_values)

        _lindblad_rhs(t, rho, omega, delta, v1, v2, v3, v4, mw1, mw2, delta_f,
                      gamma_r, gamma_s, w0, h, k1)
        for j in range(3):
            for k in range(3):
                stage[j, k] = rho[j, k] + half * k1[j, k]
        _lindblad_rhs(t + half, stage, omega, delta, v1, v2, v3, v4, mw1, mw2,
                      delta_f, gamma_r, gamma_s, wh, h, k2)
        for j in range(3):
            for k in range(3):
                stage[j, k] = rho[j, k] + half * k2[j, k]
        _lindblad_rhs(t + half, stage, omega, delta, v1, v2, v3, v4, mw1, mw2,
                      delta_f, gamma_r, gamma_s, wh, h, k3)
        for j in range(3):
            for k in range(3):
                stage[j, k] = rho[j, k] + dt * k3[j, k]
        _lindblad_rhs(t + dt, stage, omega, delta, v1, v2, v3, v4, mw1, mw2,
                      delta_f, gamma_r, gamma_s, w1, h, k4)
        for j in range(3):
            for k in range(3):
                rho[j, k] += sixth * (k1[j, k] + 2.0 * k2[j, k] + 2.0 * k3[j, k] + k4[j, k])

        if (step + 1) % record_every == 0:
            if not np.all(np.isfinite(rho)):
                return snapshots, step + 1
            snapshots[(step + 1) // record_every] = rho

    return snapshots, -1


def master_rhs(t: float, rho: np.ndarray, p: ThreeLevelParams, w: float = 0.0) -> np.ndarray:
    """Right-hand side of the mean-field master equation, d rho / dt."""
    rho = np.ascontiguousarray(rho, dtype=np.complex128)
    out = np.empty((3, 3), dtype=np.complex128)
    scratch = np.empty((3, 3), dtype=np.complex128)
    _lindblad_rhs(float(t), rho, float(p.Omega), float(p.Delta), p.V1, p.V2, p.V3, p.V4,
                  float(p.Omega_MW1), float(p.Omega_MW2), float(p.delta_f),
                  float(p.gamma_r), float(p.gamma_s), float(w), scratch, out)
    return out


def positivity_report(snapshots: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(snapshots)[..., 0]


def integrate_three_level(p: ThreeLevelParams, noise: Optional[NoiseSignal] = None,
                          rho0: Optional[np.ndarray] = None, dt_out: Optional[float] = None,
                          seed: int = 0, index: int = 0) -> Trajectory:
    """Fixed-step RK4 over [0, t_total], recording n_R = rho_rr + rho_ss.

    The recorded spacing is dt_out rounded to a whole number of steps.
    Raises NonFiniteStateError if the state stops being finite (dt too large).
    """
    noise = noise if noise is not None else zero_noise(p.t_total)
    if not noise.covers(0.0, p.t_total):
        raise NoiseSpanError(f"noise spans [{noise.start}, {noise.end}], need [0, {p.t_total}]")
    rho0 = ground_state() if rho0 is None else check_density_matrix(rho0)
    if dt_out is None:
        dt_out = p.period / 200.0 if p.period else 1.0
    if dt_out < p.dt:
        raise ValueError("dt_out must be at least the integrator step")

    n_steps = int(round(p.t_total / p.dt))
    record_every = max(1, int(round(dt_out / p.dt)))
    snapshots, failed_at = _integrate_kernel(
        np.ascontiguousarray(rho0), n_steps, float(p.dt), record_every,
        float(p.Omega), float(p.Delta), p.V1, p.V2, p.V3, p.V4,
        float(p.Omega_MW1), float(p.Omega_MW2), float(p.delta_f),
        float(p.gamma_r), float(p.gamma_s),
        noise.start, noise.spacing, noise.values,
    )
    if failed_at >= 0:
        raise NonFiniteStateError(
            f"non-finite density matrix at step {failed_at} (t={failed_at * p.dt:.6g}); reduce dt",
            step=failed_at, time=failed_at * p.dt,
        )

    times = np.arange(snapshots.shape[0]) * record_every * p.dt
    n_r = np.real(snapshots[:, R, R] + snapshots[:, S, S])
    traces = np.real(np.trace(snapshots, axis1=1, axis2=2))
    hermiticity = np.abs(snapshots - np.conj(np.transpose(snapshots, (0, 2, 1))))
    lowest = positivity_report(snapshots)

    diagnostics = {
        "max_trace_drift": float(np.max(np.abs(traces - 1.0))),
        "max_hermiticity_deviation": float(np.max(hermiticity)),
        "min_eigenvalue": float(np.min(lowest)),
    }
    logger.debug(f"Three-level trajectory {index}: {diagnostics}")
    if diagnostics["min_eigenvalue"] < -POSITIVITY_TOLERANCE:
        logger.warning(
            f"Trajectory {index}: density matrix eigenvalue {diagnostics['min_eigenvalue']:.3e} "
            f"below -{POSITIVITY_TOLERANCE:g}"
        )

    return Trajectory(times=times, values=n_r, seed=seed, index=index, column="n_R",
                      noise=noise.evaluate(np.minimum(times, noise.end)),
                      diagnostics=diagnostics)


def simulate_three_level(p: ThreeLevelParams, seed: int, index: int = 0,
                         noise_mode: NoiseMode = NoiseMode.PER_UNIT_TIME,
                         noise_spacing: float = 10.0, dt_out: Optional[float] = None,
                         noise: Optional[NoiseSignal] = None,
                         rho0: Optional[np.ndarray] = None) -> Trajectory:
    """One ensemble member: draw its noise from stream (seed, index) and integrate."""
    if noise is None:
        noise = generate_white_noise(p.t_total, p.noise_sigma, seed, index, mode=noise_mode,
                                     spacing=noise_spacing, period=p.period)
    return integrate_three_level(p, noise, rho0=rho0, dt_out=dt_out, seed=seed, index=index)
