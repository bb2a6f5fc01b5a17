from typing import Optional


class RydbergJumpsError(Exception):
    exit_code = 1


# Model errors

class ModelError(RydbergJumpsError):
    exit_code = 3


class NonFiniteStateError(ModelError):

    def __init__(self, message: str, step: Optional[int] = None, time: Optional[float] = None):
        super().__init__(message)
        self.step = step
        self.time = time


class StateBoundsError(ModelError):
    """The density left [0, 1]; the first offending sample time is kept."""

    def __init__(self, message: str, time: Optional[float] = None):
        super().__init__(message)
        self.time = time


class DegenerateInteractionError(ModelError):
    pass


class NoiseSpanError(ModelError):
    pass


class TrajectoryError(ModelError):

    def __init__(self, index: int, cause: Exception):
        super().__init__(f"Trajectory {index} failed: {cause}")
        self.index = index
        self.cause = cause


# Analysis errors

class AnalysisError(RydbergJumpsError):
    exit_code = 4


class EmptySeriesError(AnalysisError):
    pass


class NoSecondPeakError(AnalysisError):
    pass


class HistogramRangeError(AnalysisError):
    pass


class AllZeroCountsError(AnalysisError):
    pass


class NoJumpsDetectedError(AnalysisError):
    pass


# Fit errors

class FitError(RydbergJumpsError):
    exit_code = 5


class InsufficientDataError(FitError):
    pass


class NonConvergenceError(FitError):
    pass


# Configuration errors

class ConfigError(RydbergJumpsError):
    exit_code = 2


class ParseError(ConfigError):

    def __init__(self, message: str, line: Optional[int] = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")
        self.line = line


class UnknownKeyError(ConfigError):
    pass


class OutOfRangeError(ConfigError):
    pass
