"""Finite-key entropy bounds and key rates for the six-state protocol.

Decimal parameters accept str or float; floats are read through their
shortest repr, so 0.05 means the decimal 0.05. Results are doubles.
"""

from ._core import (
    DomainError,
    InfeasibleError,
    MonotonicityError,
    ThresholdNotFound,
    aep_entropy,
    block_spectrum,
    channel_weights,
    full_state_s2,
    lower_bound,
    maximize_rate,
    modified_s2,
    rate,
    smooth_s0,
    smooth_s2_optimal,
    spectrum_e,
    threshold,
    upper_bound,
)

__all__ = [
    "DomainError",
    "InfeasibleError",
    "MonotonicityError",
    "ThresholdNotFound",
    "aep_entropy",
    "block_spectrum",
    "channel_weights",
    "full_state_s2",
    "lower_bound",
    "maximize_rate",
    "modified_s2",
    "rate",
    "smooth_s0",
    "smooth_s2_optimal",
    "spectrum_e",
    "threshold",
    "upper_bound",
]
