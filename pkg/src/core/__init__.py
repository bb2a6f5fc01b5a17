from .models import (
    ModelKind, NoiseMode, Stability, FitModelKind, Weighting, JumpDirection, SweepMode,
    ThreeLevelParams, TwoLevelParams, OUParams, JumpConfig, AnalysisParams, EnsembleParams,
    NoiseParams, SweepSpec, PhaseGrid, FitParams, UnitParams, RunConfig, RunManifest,
    AnalysisSummary,
)
from .series import TimeSeries, Trajectory, JumpEvents, IntervalHistogram
from .exceptions import RydbergJumpsError
from .settings import RuntimeSettings, get_settings

__all__ = [
    "ModelKind", "NoiseMode", "Stability", "FitModelKind", "Weighting", "JumpDirection", "SweepMode",
    "ThreeLevelParams", "TwoLevelParams", "OUParams", "JumpConfig", "AnalysisParams", "EnsembleParams",
    "NoiseParams", "SweepSpec", "PhaseGrid", "FitParams", "UnitParams", "RunConfig", "RunManifest",
    "AnalysisSummary", "TimeSeries", "Trajectory", "JumpEvents", "IntervalHistogram",
    "RydbergJumpsError", "RuntimeSettings", "get_settings",
]
