import os
import sys

import numpy as np
import pytest

# Add project root to Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.core.models import ThreeLevelParams, TwoLevelParams  # noqa: E402
from src.core.series import TimeSeries  # noqa: E402


@pytest.fixture
def bistable_params() -> TwoLevelParams:
    return TwoLevelParams(Delta=18.5, Omega=2.0, V=100.0, gamma_D=10.0)


@pytest.fixture
def quiet_three_level() -> ThreeLevelParams:
    """No drive and no noise: pure decay of whatever was prepared."""
    return ThreeLevelParams(Omega=0.0, Omega_MW1=0.0, Omega_MW2=0.0, noise_sigma=0.0,
                            t_total=5.0, delta_f=0.01)


def telegraph(switch_times, t_end, dt=0.01, noise=0.0, seed=0, low=0.0, high=1.0):
    """Two-level signal starting low and toggling at switch_times."""
    t = np.arange(0.0, t_end, dt)
    flips = np.searchsorted(np.asarray(switch_times), t, side="right")
    values = np.where(flips % 2 == 1, high, low).astype(float)
    if noise:
        values += np.random.default_rng(seed).uniform(-noise, noise, size=t.size)
    return TimeSeries(t, values)


@pytest.fixture
def make_telegraph():
    return telegraph
