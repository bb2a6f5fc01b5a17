import math
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class ModelKind(str, Enum):
    THREE_LEVEL = "three_level"
    TWO_LEVEL = "two_level"


class NoiseMode(str, Enum):
    PER_UNIT_TIME = "per_unit_time"
    LITERAL_TOTAL = "literal_total"


class Stability(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


class FitModelKind(str, Enum):
    EXPONENTIAL = "exponential"
    DAMPED_SINE = "damped_sine"
    GAUSSIAN_PEAK = "gaussian_peak"
    TWO_STATE = "two_state"


class Weighting(str, Enum):
    UNIFORM = "uniform"
    POISSON = "poisson"


class JumpDirection(str, Enum):
    UP = "up"
    DOWN = "down"


class SweepMode(str, Enum):
    CONTRAST = "contrast"
    OPTIMUM = "optimum"


class ThreeLevelParams(BaseModel):
    """Mean-field three-level atom with a dual-tone microwave drive.

    Rates, detunings and couplings are in units of gamma, times in 1/gamma.
    Defaults are the strongest-drive parameter set of the subharmonic study.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    gamma_r: float = Field(1.0, gt=0, description="Decay rate of |r>")
    gamma_s: float = Field(1.0, gt=0, description="Decay rate of |s>")
    Omega: float = Field(1.0, description="Probe Rabi frequency")
    Delta: float = Field(-4.15, description="Bare detuning")
    V1: float = -10.0
    V2: float = -5.0
    V3: float = -30.0
    V4: float = -15.0
    Omega_MW1: float = Field(3.0, description="Resonant microwave tone")
    Omega_MW2: float = Field(0.949, description="Detuned microwave tone")
    delta_f: float = Field(0.01, ge=0, description="Tone frequency difference")
    noise_sigma: float = Field(0.2, ge=0, description="White detuning noise std")
    dt: float = Field(1e-3, gt=0, description="Integrator step")
    t_total: float = Field(1e4, gt=0, description="Trajectory duration")

    @property
    def period(self) -> Optional[float]:
        return 1.0 / self.delta_f if self.delta_f > 0 else None

    @property
    def beta_db(self) -> Optional[float]:
        if self.Omega_MW1 > 0 and self.Omega_MW2 > 0:
            return 20.0 * math.log10(self.Omega_MW2 / self.Omega_MW1)
        return None


class TwoLevelParams(BaseModel):
    """Mean-field two-level model with modulated detuning and OU noise.

    Defaults sit at the bistable point used for the telegraph and
    subharmonic histograms (Delta = 18.5, V = 100, gamma_D = 10, Omega = 2).
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    Delta: float = Field(18.5, description="Bare detuning")
    A: float = Field(0.0, description="Modulation amplitude")
    delta_f: float = Field(0.01, ge=0, description="Modulation frequency")
    Omega: float = Field(2.0, description="Rabi frequency")
    V: float = Field(100.0, description="All-to-all interaction strength")
    gamma: float = Field(1.0, gt=0, description="Decay rate")
    gamma_D: float = Field(10.0, ge=0, description="Dephasing rate")
    kappa: float = Field(0.1, ge=0, description="OU relaxation rate")
    D: float = Field(1.0, ge=0, description="OU noise strength")
    dt: float = Field(1e-3, gt=0, description="Integrator step")
    t_total: float = Field(1e4, gt=0, description="Trajectory duration")

    @property
    def Gamma(self) -> float:
        return 0.5 * (self.gamma + self.gamma_D)

    @property
    def period(self) -> Optional[float]:
        return 1.0 / self.delta_f if self.delta_f > 0 else None

    def ou_params(self) -> "OUParams":
        return OUParams(kappa=self.kappa, D=self.D, gamma=self.gamma)


class OUParams(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kappa: float = Field(0.1, ge=0)
    D: float = Field(1.0, ge=0)
    gamma: float = Field(1.0, gt=0)

    @property
    def stationary_variance(self) -> float:
        if self.kappa == 0:
            return math.inf
        return self.gamma ** 2 * self.D / (2.0 * self.kappa)


class JumpConfig(BaseModel):
    """Hysteresis detector settings: threshold mu with band (mu - alpha, mu + alpha)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    mu: float
    alpha: float = Field(..., gt=0)
    filter_tau: float = Field(0.0, ge=0)
    direction: JumpDirection = JumpDirection.UP


# Run configuration sections. Keys are flat in the config document; each
# section owns a disjoint set of key names.

class AnalysisParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mu: Optional[float] = None
    alpha: Optional[float] = Field(None, gt=0)
    filter_tau: Optional[float] = Field(None, ge=0)
    bin_width: Optional[float] = Field(None, gt=0)
    T: Optional[float] = Field(None, gt=0)
    transient: Optional[float] = Field(None, ge=0)
    dt_out: Optional[float] = Field(None, gt=0)
    direction: JumpDirection = JumpDirection.UP


class EnsembleParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_traj: int = Field(32, ge=1)
    base_seed: int = Field(0, ge=0)


class NoiseParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    noise_mode: NoiseMode = NoiseMode.PER_UNIT_TIME
    noise_spacing: float = Field(10.0, gt=0, description="Sample spacing in 1/gamma for per_unit_time")
    noise_file: Optional[str] = None


class SweepSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    sweep_param: Optional[str] = None
    sweep_values: List[float] = Field(default_factory=list)
    sweep_paired_param: Optional[str] = None
    sweep_paired_values: List[float] = Field(default_factory=list)
    sweep_mode: SweepMode = SweepMode.CONTRAST

    @model_validator(mode="after")
    def check_pairing(self):
        if self.sweep_paired_param and len(self.sweep_paired_values) != len(self.sweep_values):
            raise ValueError("sweep_paired_values must have the same length as sweep_values")
        return self


class PhaseGrid(BaseModel):
    model_config = ConfigDict(extra="forbid")

    delta_min: float = 14.0
    delta_max: float = 25.0
    delta_steps: int = Field(45, ge=1)
    omega_min: float = 0.05
    omega_max: float = 4.0
    omega_steps: int = Field(40, ge=1)
    potential_deltas: List[float] = Field(default_factory=lambda: [16.0, 18.5, 23.0])

    def delta_values(self) -> List[float]:
        return _linspace(self.delta_min, self.delta_max, self.delta_steps)

    def omega_values(self) -> List[float]:
        return _linspace(self.omega_min, self.omega_max, self.omega_steps)


class FitParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    fit_model: FitModelKind = FitModelKind.TWO_STATE
    fit_starts: int = Field(8, ge=1)
    fit_seed: int = Field(0, ge=0)
    fit_weighting: Weighting = Weighting.UNIFORM


class UnitParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    gamma_hz: Optional[float] = Field(None, gt=0, description="gamma in Hz, for unit conversion")
    delta_f_hz: Optional[float] = Field(None, gt=0)
    omega_mod_per_ms: Optional[float] = Field(None, gt=0, description="modulation angular frequency in rad/ms")
    beta_db: Optional[float] = None

    @field_validator("delta_f_hz", "omega_mod_per_ms")
    @classmethod
    def needs_scale(cls, v, info):
        if v is not None and info.data.get("gamma_hz") is None:
            raise ValueError(f"{info.field_name} requires gamma_hz")
        return v


class RunConfig(BaseModel):
    """Fully resolved run: model parameters plus every analysis/ensemble section."""

    model_config = ConfigDict(extra="forbid")

    model: ModelKind
    three_level: Optional[ThreeLevelParams] = None
    two_level: Optional[TwoLevelParams] = None
    analysis: AnalysisParams = Field(default_factory=AnalysisParams)
    ensemble: EnsembleParams = Field(default_factory=EnsembleParams)
    noise: NoiseParams = Field(default_factory=NoiseParams)
    sweep: SweepSpec = Field(default_factory=SweepSpec)
    phase: PhaseGrid = Field(default_factory=PhaseGrid)
    fit: FitParams = Field(default_factory=FitParams)
    units: UnitParams = Field(default_factory=UnitParams)

    @property
    def params(self):
        return self.three_level if self.model == ModelKind.THREE_LEVEL else self.two_level

    @property
    def period(self) -> Optional[float]:
        if self.analysis.T is not None:
            return self.analysis.T
        return self.params.period

    def transient(self) -> float:
        if self.analysis.transient is not None:
            return self.analysis.transient
        if self.model == ModelKind.THREE_LEVEL:
            return 5.0 * self.period if self.period else 0.0
        kappa = self.two_level.kappa
        return 20.0 / kappa if kappa > 0 else 0.0

    def dt_out(self) -> float:
        if self.analysis.dt_out is not None:
            return max(self.analysis.dt_out, self.params.dt)
        if self.period is not None:
            return max(self.period / 200.0, self.params.dt)
        return max(1.0, self.params.dt)

    def bin_width(self) -> float:
        if self.analysis.bin_width is not None:
            return self.analysis.bin_width
        if self.period is None:
            raise ValueError("bin_width must be given when there is no modulation period")
        return self.period / 20.0

    def with_param(self, name: str, value: float) -> "RunConfig":
        """Copy with one model parameter replaced (beta_db maps onto Omega_MW2)."""
        params = self.params
        if name == "beta_db":
            if self.model != ModelKind.THREE_LEVEL:
                raise ValueError("beta_db only applies to the three-level model")
            name, value = "Omega_MW2", params.Omega_MW1 * 10.0 ** (value / 20.0)
        if name not in type(params).model_fields:
            raise ValueError(f"Unknown model parameter '{name}'")
        updated = type(params).model_validate({**params.model_dump(), name: value})
        field = "three_level" if self.model == ModelKind.THREE_LEVEL else "two_level"
        return self.model_copy(update={field: updated})


LAB_UNIT_FIELDS = ("T_ms", "bin_width_ms")


class AnalysisSummary(BaseModel):
    """Flat record written next to every histogram."""

    model_config = ConfigDict(extra="forbid")

    n_trajectories: int
    up_events: int = 0
    down_events: int = 0
    up_intervals: int = 0
    down_intervals: int = 0
    direction: JumpDirection = JumpDirection.UP
    mu: float
    alpha: float
    filter_tau: float
    transient: float
    bin_width: float
    T: Optional[float] = None
    contrast: Optional[float] = None
    h1: Optional[int] = None
    h2: Optional[int] = None
    h_min: Optional[int] = None
    window_count: Optional[int] = None
    status: str = Field("ok", description="ok, no_jumps, no_second_peak or short_histogram")
    T_ms: Optional[float] = Field(None, description="only reported when gamma_hz is known")
    bin_width_ms: Optional[float] = None

    def to_text(self) -> str:
        lines = []
        for key, value in self.model_dump(mode="json").items():
            if value is None and key in LAB_UNIT_FIELDS:
                continue
            if value is None:
                value = "none"
            elif isinstance(value, float):
                value = f"{value:.10g}"
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"


class RunManifest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: str
    config_text: str
    base_seed: int
    version: str
    outputs: List[str] = Field(default_factory=list)
    inputs: List[str] = Field(default_factory=list, description="absolute paths of the files read by the command")


def _linspace(lo: float, hi: float, steps: int) -> List[float]:
    if steps == 1:
        return [lo]
    return [lo + (hi - lo) * i / (steps - 1) for i in range(steps)]
