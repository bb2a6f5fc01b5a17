"""Boundary conversions between laboratory units and units of gamma.

Everything inside the package is expressed in gamma (rates, detunings)
and 1/gamma (times); these helpers are only used where laboratory
numbers enter (config unit keys) or leave (summary and fit reports).
"""

import math


def hz_to_gamma(f_hz: float, gamma_hz: float) -> float:
    return f_hz / gamma_hz


def angular_per_ms_to_hz(omega_per_ms: float) -> float:
    """Angular frequency in rad/ms to an ordinary frequency in Hz."""
    return omega_per_ms * 1e3 / (2.0 * math.pi)


def gamma_time_to_ms(t: float, gamma_hz: float) -> float:
    return t / gamma_hz * 1e3


def gamma_rate_to_per_ms(rate: float, gamma_hz: float) -> float:
    return rate * gamma_hz * 1e-3
