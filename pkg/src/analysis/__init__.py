from .jumps import (
    low_pass, resample_linear, detect_jumps, upward_intervals, downward_intervals,
    build_histogram, contrast, optimum_detuning_scan,
)
from .fitting import FitModel, FitResult, model_eval, two_state_component, fit, fit_curve
from .pipeline import analyze_ensemble

__all__ = [
    "low_pass", "resample_linear", "detect_jumps", "upward_intervals", "downward_intervals",
    "build_histogram", "contrast", "optimum_detuning_scan",
    "FitModel", "FitResult", "model_eval", "two_state_component", "fit", "fit_curve",
    "analyze_ensemble",
]
