from .noise import NoiseSignal, generate_white_noise, ou_step, ou_euler_step, ou_path, seeded_stream
from .three_level import (
    dual_tone_rabi, effective_detunings, hamiltonian, master_rhs,
    integrate_three_level, simulate_three_level,
)
from .two_level import (
    TwoLevelState, FixedPoint, FixedPointSet, PhaseDiagram,
    modulated_detuning, full_rhs, adiabatic_rhs, potential, fixed_points, phase_diagram,
    integrate_stochastic_two_level, integrate_full_two_level,
)

__all__ = [
    "NoiseSignal", "generate_white_noise", "ou_step", "ou_euler_step", "ou_path", "seeded_stream",
    "dual_tone_rabi", "effective_detunings", "hamiltonian", "master_rhs",
    "integrate_three_level", "simulate_three_level",
    "TwoLevelState", "FixedPoint", "FixedPointSet", "PhaseDiagram",
    "modulated_detuning", "full_rhs", "adiabatic_rhs", "potential", "fixed_points", "phase_diagram",
    "integrate_stochastic_two_level", "integrate_full_two_level",
]
