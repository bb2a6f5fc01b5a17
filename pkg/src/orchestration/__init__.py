from .ensemble import EnsembleRunner, run_ensemble
from .sweep import SweepPoint, SweepPointResult, SweepState, run_sweep, run_optimum_sweep

__all__ = [
    "EnsembleRunner", "run_ensemble",
    "SweepPoint", "SweepPointResult", "SweepState", "run_sweep", "run_optimum_sweep",
]
