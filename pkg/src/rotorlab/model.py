"""Model parameters, kick potential and the quasi-linear diffusion estimate.

The kick potential is

    V(θ1, θ2) = λ1 cos θ1 + λ2 cos θ2 + λ3 cos θ1 cos θ2 + λ4 cos(θ1 - θ2)

and the free part is T = (α1 p1² + α2 p2²) / 2. Everything is dimensionless.
All functions accept scalars or numpy arrays for the angles.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from rotorlab.errors import ConfigurationError


@dataclass(frozen=True)
class SystemParams:
    """Kick strengths ``lambda1``/``lambda2``, couplings ``lambda3``/``lambda4``
    and kinetic coefficients ``alpha1``/``alpha2``."""

    lambda1: float = 0.0
    lambda2: float = 0.0
    lambda3: float = 0.0
    lambda4: float = 0.0
    alpha1: float = 1.0
    alpha2: float = 1.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigurationError(f"{name} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise ConfigurationError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        for name in ("lambda1", "lambda2", "lambda3", "lambda4"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0")
        if self.alpha1 <= 0 or self.alpha2 <= 0:
            raise ConfigurationError("alpha1 and alpha2 must be > 0")

    @property
    def is_free(self) -> bool:
        return self.lambda1 == self.lambda2 == self.lambda3 == self.lambda4 == 0.0

    def swapped(self) -> "SystemParams":
        """Parameters with the roles of the two rotors exchanged."""
        return SystemParams(
            self.lambda2, self.lambda1, self.lambda3, self.lambda4, self.alpha2, self.alpha1
        )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class QuasiLinearCoefficients:
    d1_0: float
    d2_0: float

    @property
    def total(self) -> float:
        return self.d1_0 + self.d2_0


def kick_potential(params: SystemParams, theta1, theta2):
    p = params
    return (
        p.lambda1 * np.cos(theta1)
        + p.lambda2 * np.cos(theta2)
        + p.lambda3 * np.cos(theta1) * np.cos(theta2)
        + p.lambda4 * np.cos(np.subtract(theta1, theta2))
    )


def kick_force(params: SystemParams, theta1, theta2):
    """Momentum impulses ``(-dV/dθ1, -dV/dθ2)`` delivered by one kick."""
    p = params
    s1, c1 = np.sin(theta1), np.cos(theta1)
    s2, c2 = np.sin(theta2), np.cos(theta2)
    s12 = np.sin(np.subtract(theta1, theta2))
    f1 = p.lambda1 * s1 + p.lambda3 * s1 * c2 + p.lambda4 * s12
    f2 = p.lambda2 * s2 + p.lambda3 * c1 * s2 - p.lambda4 * s12
    return f1, f2


def quasi_linear_coefficients(params: SystemParams) -> QuasiLinearCoefficients:
    """Mean squared one-kick impulse per rotor for uniformly random angles."""
    p = params
    shared = (p.lambda3 + p.lambda4) ** 2 / 4.0 + p.lambda4**2 / 4.0
    return QuasiLinearCoefficients(
        d1_0=shared + p.lambda1**2 / 2.0,
        d2_0=shared + p.lambda2**2 / 2.0,
    )
