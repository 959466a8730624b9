"""Two coupled kicked rotors: classical diffusion, quantum localization and
weak-localization scaling analysis."""

from rotorlab.model import (
    QuasiLinearCoefficients,
    SystemParams,
    kick_force,
    kick_potential,
    quasi_linear_coefficients,
)

__version__ = "0.1.0"

__all__ = [
    "QuasiLinearCoefficients",
    "SystemParams",
    "kick_force",
    "kick_potential",
    "quasi_linear_coefficients",
]
