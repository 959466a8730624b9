"""Weak-localization scaling analysis of width series.

The local diffusion rate is assumed to depend on the current width only,

    D_n = c l - a log(S_n / l),
    S_{n+1}² = S_n² + ΔT D_n,

seeded with S_0² = l², where l is the rms one-kick momentum displacement
from the (0, 0) momentum eigenstate. The width at which D vanishes is the
saturation length Λ = l exp(b l) with b = c / a.

Also holds the three-way regime classifier (Localized / Intermediate /
QuasiDiffusive) used for the regime tables.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import minimize

from rotorlab.errors import FitDegenerateError, GridTooSmallError, UsageError
from rotorlab.model import SystemParams
from rotorlab.quantum import GridSpec, WidthSeries, basis_state, floquet_step

C_BOX = (0.0, 20.0)
A_BOX = (0.0, 20.0)
GRID_POINTS = 100
DEFAULT_DELTA_T = 300


# --------------------------------------------------------------------------
# mean free path
# --------------------------------------------------------------------------


def one_kick_spread(params: SystemParams, grid: GridSpec) -> tuple[float, float]:
    """rms one-kick displacement from (0, 0) and the probability beyond |r| >= n/4."""
    state = floquet_step(basis_state(grid, 0, 0), params, leakage_threshold=None)
    prob = state.probabilities
    m = grid.momenta.astype(float)
    r2 = m[:, None] ** 2 + m[None, :] ** 2
    outside = (np.abs(m)[:, None] >= grid.n / 4) | (np.abs(m)[None, :] >= grid.n / 4)
    return math.sqrt(float(np.sum(r2 * prob))), float(prob[outside].sum())


def mean_free_path(params: SystemParams, grid: GridSpec | int = 256, tol: float = 1e-6) -> float:
    """Root-mean-square one-kick momentum spread from the (0, 0) eigenstate.

    Computed on ``grid`` and on a grid twice as large; raises
    :class:`GridTooSmallError` when the two disagree by more than ``tol`` or
    the spread reaches beyond a quarter of the grid.
    """
    if not isinstance(grid, GridSpec):
        grid = GridSpec(grid)
    l_small, outside = one_kick_spread(params, grid)
    if outside > 1e-10:
        raise GridTooSmallError(
            f"one-kick spread has probability {outside:.3g} beyond n/4 on an n={grid.n} grid"
        )
    l_big, _ = one_kick_spread(params, GridSpec(2 * grid.n))
    if abs(l_big - l_small) > tol:
        raise GridTooSmallError(f"mean free path not grid-converged at n={grid.n}")
    return l_small


def saturation_length(l: float, b: float) -> float:
    if not l > 0:
        raise UsageError(f"l must be > 0, got {l!r}")
    return l * math.exp(b * l)


# --------------------------------------------------------------------------
# scaling fit
# --------------------------------------------------------------------------


class WidthMeasure(str, Enum):
    """Which squared width is compared with the recurrence.

    ``total`` is S1² + S2², the squared radius on the two-rotor lattice, which
    has the same meaning as l² (both rotors summed). ``rotor1`` and ``mean``
    use a single-rotor width.
    """

    TOTAL = "total"
    MEAN = "mean"
    ROTOR1 = "rotor1"


def squared_width(series: WidthSeries, measure: WidthMeasure | str = WidthMeasure.TOTAL) -> np.ndarray:
    measure = WidthMeasure(measure)
    if measure is WidthMeasure.TOTAL:
        return series.s1**2 + series.s2**2
    if measure is WidthMeasure.MEAN:
        return 0.5 * (series.s1**2 + series.s2**2)
    return series.s1**2


def block_samples(series: WidthSeries, delta_t: int, measure=WidthMeasure.TOTAL) -> tuple[np.ndarray, np.ndarray]:
    """Squared widths at t = 0, ΔT, 2ΔT, ... taken from the nearest recorded sample."""
    if delta_t < 1:
        raise UsageError("delta_t must be >= 1")
    if len(series) == 0:
        raise UsageError("empty width series")
    s2 = squared_width(series, measure)
    n_blocks = int(series.t[-1] // delta_t)
    targets = np.arange(n_blocks + 1) * delta_t
    idx = np.abs(series.t[None, :] - targets[:, None]).argmin(axis=1)
    return targets, s2[idx]


def recurrence(c, a, l: float, delta_t: float, n_blocks: int) -> np.ndarray:
    """Model squared widths S̃_0² .. S̃_N²; ``c`` and ``a`` may be arrays.

    Returns an array with a leading axis of length ``n_blocks + 1``.
    """
    c = np.asarray(c, dtype=float)
    a = np.asarray(a, dtype=float)
    shape = np.broadcast(c, a).shape
    out = np.empty((n_blocks + 1,) + shape)
    s2 = np.full(shape, l * l)
    out[0] = s2
    floor = 1e-12 * l * l
    cl = c * l
    for k in range(1, n_blocks + 1):
        # a negative S² means the model left its domain; keep it finite
        s2 = s2 + delta_t * (cl - 0.5 * a * np.log(np.maximum(s2, floor) / (l * l)))
        out[k] = s2
    return out


def _sse(c, a, l, delta_t, data):
    model = recurrence(c, a, l, delta_t, data.size - 1)
    diff = model[1:] - data[1:].reshape((-1,) + (1,) * (model.ndim - 1))
    return np.sum(diff**2, axis=0)


@dataclass(frozen=True)
class ScalingFit:
    l: float
    c: float
    a: float
    b: float
    lambda_big: float
    residual: float
    delta_t: int
    measure: str = WidthMeasure.TOTAL.value

    @property
    def fixed_point(self) -> float:
        """Width at which the modelled diffusion rate vanishes."""
        return self.l * math.exp(self.c * self.l / self.a)

    def to_dict(self) -> dict:
        return asdict(self)


def fit_scaling(
    series: WidthSeries,
    l: float,
    delta_t: int = DEFAULT_DELTA_T,
    measure: WidthMeasure | str = WidthMeasure.TOTAL,
    c_box: tuple[float, float] = C_BOX,
    a_box: tuple[float, float] = A_BOX,
    grid_points: int = GRID_POINTS,
    rtol: float = 1e-6,
    min_blocks: int = 10,
) -> ScalingFit:
    """Least-squares (c, a) for the width recurrence.

    A ``grid_points`` x ``grid_points`` scan over the box picks the start for
    a bounded Nelder-Mead refinement. The seeded term (block 0) is excluded
    from the residual since the model fixes it to l².
    """
    if not l > 0:
        raise UsageError(f"l must be > 0, got {l!r}")
    measure = WidthMeasure(measure)
    t, data = block_samples(series, delta_t, measure)
    if data.size - 1 < min_blocks:
        raise UsageError(
            f"series spans {data.size - 1} blocks of {delta_t} kicks; need >= {min_blocks}"
        )

    c_grid = np.linspace(c_box[0], c_box[1], grid_points)
    a_lo = a_box[0] if a_box[0] > 0 else (a_box[1] - a_box[0]) / grid_points
    a_grid = np.linspace(a_lo, a_box[1], grid_points)
    sse = _sse(c_grid[:, None], a_grid[None, :], l, delta_t, data)
    sse = np.where(np.isfinite(sse), sse, np.inf)
    i, j = np.unravel_index(np.argmin(sse), sse.shape)
    c0, a0 = c_grid[i], a_grid[j]

    # refine in units of the starting point so the tolerance is relative
    cs = max(abs(c0), 1e-3 * (c_box[1] - c_box[0]))
    as_ = max(abs(a0), 1e-3 * (a_box[1] - a_box[0]))
    scale_f = float(np.sum(data[1:] ** 2))

    def objective(x):
        val = float(_sse(x[0] * cs, x[1] * as_, l, delta_t, data))
        return val if math.isfinite(val) else 1e300

    res = minimize(
        objective,
        x0=np.array([c0 / cs, a0 / as_]),
        method="Nelder-Mead",
        bounds=[(c_box[0] / cs, c_box[1] / cs), (a_box[0] / as_, a_box[1] / as_)],
        options={
            "xatol": rtol * 1e-2,
            "fatol": 1e-16 * scale_f,
            "maxiter": 20000,
            "maxfev": 40000,
            "initial_simplex": np.array(
                [[c0 / cs, a0 / as_], [c0 / cs * 1.05 + 0.01, a0 / as_], [c0 / cs, a0 / as_ * 1.05 + 0.01]]
            ),
        },
    )
    c, a = float(res.x[0] * cs), float(res.x[1] * as_)
    _check_interior(c, a, c_box, a_box)
    b = c / a
    return ScalingFit(
        l=float(l),
        c=c,
        a=a,
        b=b,
        lambda_big=saturation_length(l, b),
        residual=float(res.fun),
        delta_t=int(delta_t),
        measure=measure.value,
    )


def _check_interior(c, a, c_box, a_box, rel=1e-6):
    if c <= 0 or a <= 0:
        raise FitDegenerateError(f"non-positive fit parameters c={c:.6g}, a={a:.6g}")
    for name, v, (lo, hi) in (("c", c, c_box), ("a", a, a_box)):
        span = hi - lo
        if v - lo <= rel * span or hi - v <= rel * span:
            raise FitDegenerateError(f"{name}={v:.6g} on the search box boundary [{lo}, {hi}]")


# --------------------------------------------------------------------------
# regime classifier
# --------------------------------------------------------------------------


class Regime(str, Enum):
    LOCALIZED = "Localized"
    INTERMEDIATE = "Intermediate"
    QUASI_DIFFUSIVE = "QuasiDiffusive"

    @property
    def code(self) -> str:
        return {"Localized": "L", "Intermediate": "I", "QuasiDiffusive": "D"}[self.value]


@dataclass(frozen=True)
class ClassifierThresholds:
    slope_ratio: float = 0.05
    oscillation: float = 0.1
    smoothing_blocks: int = 5
    min_kicks: int = 2000
    block: int = 100
    monotone_tol: float = 0.02
    qd_slope_ratio: float = 0.12


@dataclass(frozen=True)
class RegimeLabel:
    label: Regime
    slope_ratio: float
    oscillation_index: float
    monotonicity_index: float
    early_slope_over_classical: float | None = None
    extras: dict = field(default_factory=dict)

    @property
    def diagnostics(self) -> dict:
        return {
            "late_to_early_slope_ratio": self.slope_ratio,
            "oscillation_index": self.oscillation_index,
            "monotonicity_index": self.monotonicity_index,
            "early_slope_over_classical": self.early_slope_over_classical,
        }


def _block_means(t: np.ndarray, y: np.ndarray, block: int) -> tuple[np.ndarray, np.ndarray]:
    edges = np.arange(t[0], t[-1] + 1, block)
    k = np.searchsorted(edges, t, side="right") - 1
    keep = k < len(edges) - 1
    counts = np.bincount(k[keep], minlength=len(edges) - 1)
    sums = np.bincount(k[keep], weights=y[keep], minlength=len(edges) - 1)
    ok = counts > 0
    return (edges[:-1] + block / 2)[ok], sums[ok] / counts[ok]


def classify_regime(
    series: WidthSeries,
    classical_d: float | None = None,
    thresholds: ClassifierThresholds = ClassifierThresholds(),
) -> RegimeLabel:
    """Label a width series Localized, Intermediate or QuasiDiffusive.

    S² (both rotors) is averaged over blocks of ``thresholds.block`` kicks.
    The early slope is the growth over the first block, the late slope a
    least-squares slope over the second half of the run; ρ is their ratio.
    S is then smoothed over ``smoothing_blocks`` blocks. Over the second half
    the oscillation index is the rms deviation of smoothed S from its linear
    trend relative to its mean, and the monotonicity index is the largest
    drop of smoothed S below its running maximum relative to the same mean.

    Localized needs ρ below ``slope_ratio``; QuasiDiffusive needs ρ of at
    least ``qd_slope_ratio``, so slowly creeping widths between the two
    bounds are Intermediate.

    ``classical_d`` only normalizes the early slope in the diagnostics.
    """
    th = thresholds
    t = np.asarray(series.t)
    if len(t) < 2 or t[-1] - t[0] < th.min_kicks:
        raise UsageError(f"classification needs a series covering >= {th.min_kicks} kicks")
    s2 = squared_width(series)
    tb, b = _block_means(t, s2, th.block)
    if len(b) < 2 * th.smoothing_blocks + 2:
        raise UsageError("too few blocks for classification; reduce block or extend the run")

    first = t <= t[0] + th.block
    early = (s2[first][-1] - s2[0]) / (t[first][-1] - t[0])
    half = len(b) // 2
    late = np.polyfit(tb[half:], b[half:], 1)[0]
    rho = late / early if early > 0 else math.inf

    smooth = np.convolve(np.sqrt(b), np.ones(th.smoothing_blocks) / th.smoothing_blocks, mode="valid")
    tail = smooth[len(smooth) // 2:]
    x = np.arange(len(tail))
    trend = np.polyval(np.polyfit(x, tail, 1), x)
    scale = tail.mean()
    oscillation = float(np.sqrt(np.mean((tail - trend) ** 2)) / scale)
    monotonicity = float(np.max(np.maximum.accumulate(tail) - tail) / scale)

    if rho < th.slope_ratio and oscillation < th.oscillation:
        label = Regime.LOCALIZED
    elif monotonicity <= th.monotone_tol and th.qd_slope_ratio <= rho <= 1 and oscillation < th.oscillation:
        label = Regime.QUASI_DIFFUSIVE
    else:
        label = Regime.INTERMEDIATE
    early_norm = early / classical_d if classical_d else None
    return RegimeLabel(label, float(rho), oscillation, monotonicity, early_norm,
                       {"early_slope": float(early), "late_slope": float(late)})
