"""Squeezed-cavity single-atom detection.

Rates and frequencies are in units of the cavity decay rate kappa. Errors
raise SqcavError with args (kind, message).
"""

from ._core import (
    SqcavError,
    enhanced_couplings,
    gaussian_moments,
    noise_params,
    pump_amplitude,
    run_config,
    squeezed_frequency,
    squeezed_vacuum_amplitudes,
    squeezing_param,
    steady_state,
    validate_config,
)

__all__ = [
    "SqcavError",
    "enhanced_couplings",
    "gaussian_moments",
    "noise_params",
    "pump_amplitude",
    "run_config",
    "squeezed_frequency",
    "squeezed_vacuum_amplitudes",
    "squeezing_param",
    "steady_state",
    "validate_config",
]
