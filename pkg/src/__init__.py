__version__ = "0.1.0"

from .core import (
    ModelKind, NoiseMode, Stability, FitModelKind, Weighting, JumpDirection, SweepMode,
    ThreeLevelParams, TwoLevelParams, OUParams, JumpConfig, RunConfig, RunManifest,
    AnalysisSummary, TimeSeries, Trajectory, JumpEvents, IntervalHistogram,
    RydbergJumpsError, get_settings,
)

__all__ = [
    "ModelKind", "NoiseMode", "Stability", "FitModelKind", "Weighting", "JumpDirection", "SweepMode",
    "ThreeLevelParams", "TwoLevelParams", "OUParams", "JumpConfig", "RunConfig", "RunManifest",
    "AnalysisSummary", "TimeSeries", "Trajectory", "JumpEvents", "IntervalHistogram",
    "RydbergJumpsError", "get_settings",
]
