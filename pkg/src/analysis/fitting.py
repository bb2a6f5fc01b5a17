"""Closed-form interval distributions and their least-squares fits.

Models (parameters in order):

    exponential     c, lam               c exp(-lam t)
    damped_sine     c, lam, omega, phi   c exp(-lam t) [sin(omega t + phi) + 1]
    gaussian_peak   c, a, t1             c exp(-a (t - t1)^2)
    two_state       C, gamma1, gamma2, t0
                    C g1 g2 / (g1 - g2) [exp(-g2 x) - exp(-g1 x)] H(x), x = t - 2 t0

Fits minimise the (optionally Poisson-weighted) squared residual over bin
centres with Nelder-Mead. Positive parameters are optimised in log space.
"""

import math
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from ..core.exceptions import InsufficientDataError, NonConvergenceError
from ..core.models import FitModelKind, Weighting
from ..core.series import IntervalHistogram
from ..dynamics.noise import seeded_stream
from .units import gamma_rate_to_per_ms, gamma_time_to_ms

logger = logging.getLogger(__name__)

PARAM_NAMES: Dict[FitModelKind, Tuple[str, ...]] = {
    FitModelKind.EXPONENTIAL: ("c", "lam"),
    FitModelKind.DAMPED_SINE: ("c", "lam", "omega", "phi"),
    FitModelKind.GAUSSIAN_PEAK: ("c", "a", "t1"),
    FitModelKind.TWO_STATE: ("C", "gamma1", "gamma2", "t0"),
}

RATE_PARAMS = ("lam", "omega", "gamma1", "gamma2")
TIME_PARAMS = ("t1", "t0")

DEGENERATE_RATES = 1e-9
CONVERGENCE_TOLERANCE = 1e-10
MAX_RESTARTS = 5


@dataclass(frozen=True)
class FitModel:
    kind: FitModelKind
    theta: Tuple[float, ...]

    def __post_init__(self):
        if len(self.theta) != len(PARAM_NAMES[self.kind]):
            raise ValueError(f"{self.kind.value} takes parameters {PARAM_NAMES[self.kind]}")

    @property
    def params(self) -> Dict[str, float]:
        return dict(zip(PARAM_NAMES[self.kind], self.theta))

    def __call__(self, delta_t):
        return model_eval(self, delta_t)


@dataclass
class FitResult:
    kind: FitModelKind
    theta: Tuple[float, ...]
    residual_ss: float
    objective: float
    converged: bool
    iterations: int
    weighting: Weighting = Weighting.UNIFORM
    starts: int = 1
    history: List[float] = field(default_factory=list, repr=False)

    @property
    def model(self) -> FitModel:
        return FitModel(self.kind, self.theta)

    @property
    def params(self) -> Dict[str, float]:
        return self.model.params

    def to_text(self, gamma_hz: Optional[float] = None) -> str:
        """key=value report; with gamma_hz, rates and times are repeated in per-ms and ms."""
        lines = [f"model={self.kind.value}"]
        lines += [f"{name}={value:.10g}" for name, value in self.params.items()]
        if gamma_hz is not None:
            for name, value in self.params.items():
                if name in RATE_PARAMS:
                    lines.append(f"{name}_per_ms={gamma_rate_to_per_ms(value, gamma_hz):.10g}")
                elif name in TIME_PARAMS:
                    lines.append(f"{name}_ms={gamma_time_to_ms(value, gamma_hz):.10g}")
        lines += [
            f"residual_ss={self.residual_ss:.10g}",
            f"converged={str(self.converged).lower()}",
            f"iterations={self.iterations}",
            f"weighting={self.weighting.value}",
        ]
        return "\n".join(lines) + "\n"


def two_state_component(i: int, t, gamma_i: float, t0: float):
    """Dwell-time density of phase i: gamma_i exp(-gamma_i (t - t0)) for t >= t0."""
    if i not in (1, 2):
        raise ValueError("phase index must be 1 or 2")
    if gamma_i <= 0:
        raise ValueError("gamma_i must be positive")
    t = np.asarray(t, dtype=float)
    x = t - t0
    out = np.where(x >= 0, gamma_i * np.exp(-gamma_i * np.maximum(x, 0.0)), 0.0)
    return float(out) if out.ndim == 0 else out


def _two_state(t, C, g1, g2, t0):
    x = t - 2.0 * t0
    xp = np.maximum(x, 0.0)
    if abs(g1 - g2) < DEGENERATE_RATES * max(g1, g2):
        g = 0.5 * (g1 + g2)
        values = C * g * g * xp * np.exp(-g * xp)
    else:
        # exp(-g2 x) - exp(-g1 x) written through expm1
        values = -C * g1 * g2 / (g1 - g2) * np.exp(-g2 * xp) * np.expm1(-(g1 - g2) * xp)
    return np.where(x > 0, values, 0.0)


def model_eval(m: FitModel, delta_t):
    t = np.asarray(delta_t, dtype=float)
    th = m.theta
    if m.kind == FitModelKind.EXPONENTIAL:
        out = th[0] * np.exp(-th[1] * t)
    elif m.kind == FitModelKind.DAMPED_SINE:
        out = th[0] * np.exp(-th[1] * t) * (np.sin(th[2] * t + th[3]) + 1.0)
    elif m.kind == FitModelKind.GAUSSIAN_PEAK:
        out = th[0] * np.exp(-th[1] * (t - th[2]) ** 2)
    else:
        out = _two_state(t, *th)
    return float(out) if np.ndim(out) == 0 else out


# Unconstrained coordinates u <-> model parameters theta

def _to_theta(kind: FitModelKind, u: np.ndarray) -> Tuple[float, ...]:
    if kind == FitModelKind.EXPONENTIAL:
        return (math.exp(u[0]), math.exp(u[1]))
    if kind == FitModelKind.DAMPED_SINE:
        return (math.exp(u[0]), math.exp(u[1]), math.exp(u[2]), float(u[3]))
    if kind == FitModelKind.GAUSSIAN_PEAK:
        return (math.exp(u[0]), math.exp(u[1]), float(u[2]))
    return (math.exp(u[0]), math.exp(u[1]), math.exp(u[2]), abs(float(u[3])))


def _to_u(kind: FitModelKind, theta: Sequence[float]) -> np.ndarray:
    if kind == FitModelKind.EXPONENTIAL:
        return np.log(theta)
    if kind == FitModelKind.DAMPED_SINE:
        return np.array([math.log(theta[0]), math.log(theta[1]), math.log(theta[2]), theta[3]])
    if kind == FitModelKind.GAUSSIAN_PEAK:
        return np.array([math.log(theta[0]), math.log(theta[1]), theta[2]])
    return np.array([math.log(theta[0]), math.log(theta[1]), math.log(theta[2]), theta[3]])


def _canonical(kind: FitModelKind, theta: Tuple[float, ...]) -> Tuple[float, ...]:
    if kind == FitModelKind.TWO_STATE and theta[2] > theta[1]:
        return (theta[0], theta[2], theta[1], theta[3])
    if kind == FitModelKind.DAMPED_SINE:
        return theta[:3] + (theta[3] % (2.0 * math.pi),)
    return theta


def _local_maxima(y: np.ndarray) -> np.ndarray:
    if y.size < 3:
        return np.array([int(np.argmax(y))])
    interior = np.flatnonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:]) & (y[1:-1] > 0)) + 1
    return interior if interior.size else np.array([int(np.argmax(y))])


def initial_guess(kind: FitModelKind, x: np.ndarray, y: np.ndarray) -> Tuple[float, ...]:
    """Heuristic start: scale from the largest count, rates from the mean
    interval, positions and frequencies from the peak layout."""
    w = np.clip(y, 0.0, None)
    total = float(w.sum()) or 1.0
    width = float(np.median(np.diff(x))) if x.size > 1 else 1.0
    mean = float(np.sum(w * x) / total) or width
    ymax = float(w.max()) or 1.0
    peak = float(x[int(np.argmax(w))])

    if kind == FitModelKind.EXPONENTIAL:
        return (ymax * math.exp(min(50.0, x[0] / mean)), 1.0 / mean)
    if kind == FitModelKind.DAMPED_SINE:
        peaks = _local_maxima(w)
        spacing = float(np.median(np.diff(x[peaks]))) if peaks.size > 1 else max(peak, mean)
        return (0.5 * ymax, 1.0 / mean, 2.0 * math.pi / spacing, 0.5 * math.pi)
    if kind == FitModelKind.GAUSSIAN_PEAK:
        spread = math.sqrt(float(np.sum(w * (x - peak) ** 2) / total)) or width
        return (ymax, 0.5 / spread ** 2, peak)

    first = float(x[np.flatnonzero(w > 0)[0]]) if np.any(w > 0) else x[0]
    t0 = max(0.0, first - width) / 2.0
    rest = max(mean - 2.0 * t0, width)
    return (total * width, 3.0 / rest, 1.5 / rest, t0)


def _jitter(kind: FitModelKind, u: np.ndarray, rng: np.random.Generator, span: float) -> np.ndarray:
    out = u + rng.normal(0.0, 0.5, size=u.size)
    if kind == FitModelKind.DAMPED_SINE:
        out[3] = rng.uniform(0.0, 2.0 * math.pi)
    elif kind == FitModelKind.GAUSSIAN_PEAK:
        out[2] = u[2] + rng.normal(0.0, 0.1 * span)
    elif kind == FitModelKind.TWO_STATE:
        out[3] = abs(u[3] + rng.normal(0.0, 0.05 * span))
    return out


def _improvement_stalled(history: List[float], dim: int) -> bool:
    window = 2 * dim
    if len(history) <= window:
        return False
    old, new = history[-window - 1], history[-1]
    return old - new <= CONVERGENCE_TOLERANCE * max(abs(old), np.finfo(float).tiny)


def fit_curve(kind: FitModelKind, x: np.ndarray, y: np.ndarray, starts: int = 8, seed: int = 0,
              weighting: Weighting = Weighting.UNIFORM,
              initial: Optional[Sequence[float]] = None, strict: bool = False) -> FitResult:
    """Multi-start Nelder-Mead fit of `kind` to the points (x, y).

    Start 0 is the heuristic (or `initial`); start i > 0 jitters it with
    stream (seed, i). Each start is restarted from its own optimum until
    it stops improving, and the best start wins.
    """
    kind = FitModelKind(kind)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dim = len(PARAM_NAMES[kind])
    if np.count_nonzero(y) < dim + 1:
        raise InsufficientDataError(
            f"{kind.value} needs at least {dim + 1} non-zero bins, got {np.count_nonzero(y)}"
        )

    weights = np.ones_like(y) if weighting == Weighting.UNIFORM else 1.0 / np.maximum(y, 1.0)
    scale = float(np.sum(weights * y ** 2)) or 1.0
    span = float(x[-1] - x[0]) if x.size > 1 else 1.0

    def objective(u):
        try:
            theta = _to_theta(kind, u)
        except OverflowError:
            return math.inf
        with np.errstate(over="ignore", invalid="ignore"):
            r = y - model_eval(FitModel(kind, theta), x)
        value = float(np.sum(weights * r * r))
        return value if math.isfinite(value) else math.inf

    u0 = _to_u(kind, initial if initial is not None else initial_guess(kind, x, y))
    best = None
    for i in range(max(1, starts)):
        u = u0 if i == 0 else _jitter(kind, u0, seeded_stream(seed, i), span)
        history: List[float] = []
        iterations = 0
        converged = False
        for _ in range(MAX_RESTARTS):
            before = objective(u)
            res = minimize(
                objective, u, method="Nelder-Mead",
                callback=lambda xk: history.append(objective(xk)),
                options={"xatol": 1e-12, "fatol": 1e-14 * scale, "maxiter": 4000 * dim,
                         "maxfev": 8000 * dim, "adaptive": True},
            )
            iterations += int(res.nit)
            if res.fun <= before:
                u = res.x
            converged = bool(res.success) or _improvement_stalled(history, dim)
            if before - res.fun <= CONVERGENCE_TOLERANCE * max(abs(before), np.finfo(float).tiny):
                break
        value = objective(u)
        logger.debug(f"Fit {kind.value} start {i}: objective {value:.6g}, converged {converged}")
        if best is None or value < best[0]:
            best = (value, u, converged, iterations, history)

    value, u, converged, iterations, history = best
    theta = _canonical(kind, _to_theta(kind, u))
    residual = float(np.sum((y - model_eval(FitModel(kind, theta), x)) ** 2))
    result = FitResult(kind=kind, theta=theta, residual_ss=residual, objective=value,
                       converged=converged, iterations=iterations, weighting=weighting,
                       starts=max(1, starts), history=history)
    if not converged:
        logger.warning(f"Fit {kind.value} did not converge after {iterations} iterations")
        if strict:
            raise NonConvergenceError(f"{kind.value} fit did not converge (residual {residual:.6g})")
    return result


def fit(kind: FitModelKind, h: IntervalHistogram, starts: int = 8, seed: int = 0,
        weighting: Weighting = Weighting.UNIFORM, strict: bool = False) -> FitResult:
    """Fit a model to histogram counts at the bin centres."""
    result = fit_curve(kind, h.centers, h.counts.astype(float), starts=starts, seed=seed,
                       weighting=weighting, strict=strict)
    logger.info(f"Fitted {result.kind.value}: {result.params} (residual {result.residual_ss:.6g})")
    return result
