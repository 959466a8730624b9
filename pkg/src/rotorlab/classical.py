"""Classical ensemble evolution under the two-rotor kick map.

One kick updates the momenta with the impulses at the old angles, then
rotates the angles with the new momenta:

    p_i' = p_i + F_i(θ1, θ2)
    θ_i' = θ_i + α_i p_i'   (mod 2π)

With α1 = α2 = 1 this is the usual two-rotor standard map.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from rotorlab.errors import ConfigurationError, UsageError
from rotorlab.model import SystemParams, kick_force

TWO_PI = 2.0 * np.pi
DEFAULT_CHUNK = 65536


@dataclass(frozen=True)
class ClassicalEnsemble:
    theta1: np.ndarray
    theta2: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    kick_count: int = 0

    def __len__(self):
        return self.p1.shape[0]


@dataclass(frozen=True)
class MomentStats:
    t: int
    mean_p1: float
    mean_p2: float
    var_p1: float
    var_p2: float


def sample_initial_ensemble(
    n: int,
    seed: int,
    m0: float = 0.0,
    dm: float = 1.25786,
    theta0: float = 0.0,
    dtheta: float | None = None,
) -> ClassicalEnsemble:
    """Gaussian ensemble matching the quantum wave packet.

    Momenta ~ N(m0, dm²), angles ~ N(theta0, dtheta²) reduced mod 2π, with
    ``dtheta`` defaulting to the minimum-uncertainty value 1/(2 dm). Draws
    come from numpy's PCG64 generator seeded with ``seed``.
    """
    if int(n) != n or n < 1:
        raise ConfigurationError(f"ensemble size must be a positive integer, got {n!r}")
    if not dm > 0:
        raise ConfigurationError(f"dm must be > 0, got {dm!r}")
    if dtheta is None:
        dtheta = 1.0 / (2.0 * dm)
    if not dtheta > 0:
        raise ConfigurationError(f"dtheta must be > 0, got {dtheta!r}")
    n = int(n)
    rng = np.random.Generator(np.random.PCG64(seed))
    p = rng.normal(m0, dm, size=(2, n))
    theta = np.mod(rng.normal(theta0, dtheta, size=(2, n)), TWO_PI)
    return ClassicalEnsemble(theta[0], theta[1], p[0], p[1], 0)


def classical_step(ensemble: ClassicalEnsemble, params: SystemParams) -> ClassicalEnsemble:
    f1, f2 = kick_force(params, ensemble.theta1, ensemble.theta2)
    p1 = ensemble.p1 + f1
    p2 = ensemble.p2 + f2
    theta1 = np.mod(ensemble.theta1 + params.alpha1 * p1, TWO_PI)
    theta2 = np.mod(ensemble.theta2 + params.alpha2 * p2, TWO_PI)
    return ClassicalEnsemble(theta1, theta2, p1, p2, ensemble.kick_count + 1)


def free_flight(ensemble: ClassicalEnsemble, params: SystemParams) -> ClassicalEnsemble:
    """Rotate the angles by one kick-free period; momenta and kick count unchanged.

    The Floquet operator propagates freely before each kick while the map
    kicks first. Applying one free flight to a freshly sampled ensemble puts
    both descriptions on the same sequence of kicks and flights, so their
    momentum statistics at kick t are directly comparable.
    """
    theta1 = np.mod(ensemble.theta1 + params.alpha1 * ensemble.p1, TWO_PI)
    theta2 = np.mod(ensemble.theta2 + params.alpha2 * ensemble.p2, TWO_PI)
    return ClassicalEnsemble(theta1, theta2, ensemble.p1.copy(), ensemble.p2.copy(), ensemble.kick_count)


def classical_step_inverse(ensemble: ClassicalEnsemble, params: SystemParams) -> ClassicalEnsemble:
    """Exact inverse of :func:`classical_step`."""
    theta1 = np.mod(ensemble.theta1 - params.alpha1 * ensemble.p1, TWO_PI)
    theta2 = np.mod(ensemble.theta2 - params.alpha2 * ensemble.p2, TWO_PI)
    f1, f2 = kick_force(params, theta1, theta2)
    return ClassicalEnsemble(
        theta1, theta2, ensemble.p1 - f1, ensemble.p2 - f2, ensemble.kick_count - 1
    )


def _chunked_sum(x: np.ndarray, chunk: int) -> float:
    # fixed chunk order keeps the reduction bit-stable
    return float(sum(np.sum(x[i : i + chunk]) for i in range(0, x.shape[0], chunk)))


def ensemble_moments(ensemble: ClassicalEnsemble, chunk: int = DEFAULT_CHUNK) -> MomentStats:
    """Means and population variances of the two momenta."""
    n = len(ensemble)
    if n == 0:
        raise UsageError("cannot take moments of an empty ensemble")
    out = []
    for p in (ensemble.p1, ensemble.p2):
        mean = _chunked_sum(p, chunk) / n
        var = _chunked_sum((p - mean) ** 2, chunk) / n
        out.append((mean, var))
    return MomentStats(ensemble.kick_count, out[0][0], out[1][0], out[0][1], out[1][1])


def evolve_classical(
    ensemble: ClassicalEnsemble,
    params: SystemParams,
    n_kicks: int,
    sample_every: int = 1,
) -> tuple[ClassicalEnsemble, list[MomentStats]]:
    """Run ``n_kicks`` kicks, recording moments at t=0 and every ``sample_every``."""
    if n_kicks < 0 or sample_every < 1:
        raise UsageError("n_kicks must be >= 0 and sample_every >= 1")
    series = [ensemble_moments(ensemble)]
    for _ in range(n_kicks):
        ensemble = classical_step(ensemble, params)
        if ensemble.kick_count % sample_every == 0:
            series.append(ensemble_moments(ensemble))
    return ensemble, series


def fit_diffusion(
    series: Sequence[MomentStats], t_min: float, t_max: float, min_samples: int = 10
) -> tuple[float, float]:
    """Least-squares slopes of var(p1) and var(p2) against t over [t_min, t_max]."""
    window = [s for s in series if t_min <= s.t <= t_max]
    if len(window) < min_samples:
        raise UsageError(
            f"need at least {min_samples} samples in [{t_min}, {t_max}], got {len(window)}"
        )
    t = np.array([s.t for s in window], dtype=float)
    slopes = []
    for attr in ("var_p1", "var_p2"):
        v = np.array([getattr(s, attr) for s in window])
        slopes.append(float(np.polyfit(t, v, 1)[0]))
    return slopes[0], slopes[1]


def linear_fit_residual(series: Sequence[MomentStats], t_min: float, t_max: float) -> tuple[float, float]:
    """RMS residual of the linear var(t) fit relative to the variance growth, per rotor."""
    window = [s for s in series if t_min <= s.t <= t_max]
    t = np.array([s.t for s in window], dtype=float)
    out = []
    for attr in ("var_p1", "var_p2"):
        v = np.array([getattr(s, attr) for s in window])
        coef = np.polyfit(t, v, 1)
        resid = np.sqrt(np.mean((np.polyval(coef, t) - v) ** 2))
        out.append(float(resid / (v[-1] - v[0])))
    return out[0], out[1]


def swap_rotors(ensemble: ClassicalEnsemble) -> ClassicalEnsemble:
    return replace(ensemble, theta1=ensemble.theta2, theta2=ensemble.theta1, p1=ensemble.p2, p2=ensemble.p1)
