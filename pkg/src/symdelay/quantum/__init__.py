"""One-dimensional quantum scattering on a periodic FFT grid."""
from .delays import (QuantumSettings, conjugation_identity_check, proposition_asympt_check,
                     quantum_time_delays, reversal_invariance_check, sojourn_time, tau_free,
                     translation_covariance_check)
from .grid import Grid, WaveState, gaussian_state, prepare_state
from .propagation import SplitStep, free_evolve, full_evolve, scattering_operator, wave_operator
from .stationary import apply_stationary_s, smatrix, stationary_ew_delay

__all__ = [
    "Grid", "WaveState", "gaussian_state", "prepare_state",
    "SplitStep", "free_evolve", "full_evolve", "scattering_operator", "wave_operator",
    "apply_stationary_s", "smatrix", "stationary_ew_delay",
    "QuantumSettings", "quantum_time_delays", "tau_free", "sojourn_time",
    "proposition_asympt_check", "conjugation_identity_check", "reversal_invariance_check",
    "translation_covariance_check",
]
