"""Split-step Floquet propagation of the two-rotor wavefunction.

The wavefunction lives on an n x n integer momentum lattice. Amplitudes are
stored in FFT index order: array index k holds momentum m = k for k <= n/2
and m = k - n otherwise, so the representable range is [-n/2 + 1, n/2].
The momentum <-> angle transforms are unitary (``norm="ortho"``).

One period applies the free phase exp(-i(α1 m1² + α2 m2²)/2) in momentum
space, then the kick phase exp(-i V(θ1, θ2)) in angle space. Observables
are taken right after the kick.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

import numpy as np
import scipy.fft as sfft

from rotorlab.errors import ConfigurationError, FitError, LeakageError, UsageError
from rotorlab.model import SystemParams, kick_potential

DEFAULT_LEAKAGE_THRESHOLD = 1e-8
DEFAULT_GROW_THRESHOLD = 1e-10
GROW_BAND = 0.375
GROW_CHECK_EVERY = 1
EDGE_WIDTH = 2
TABLE_I_DM = 1.25786


class CommensurabilityWarning(UserWarning):
    """α/2π is (numerically) rational: expect Bloch-like extended states."""


@dataclass(frozen=True)
class GridSpec:
    n: int = 2048

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise ConfigurationError(f"grid size must be an integer, got {n!r}")
        if n < 8 or n & (n - 1):
            raise ConfigurationError(f"grid size must be a power of two >= 8, got {n}")
        object.__setattr__(self, "n", int(n))

    @property
    def momenta(self) -> np.ndarray:
        """Momentum of each array index (FFT order)."""
        k = np.arange(self.n)
        return np.where(k <= self.n // 2, k, k - self.n)

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n) / self.n

    @property
    def m_min(self) -> int:
        return -self.n // 2 + 1

    @property
    def m_max(self) -> int:
        return self.n // 2

    def index_of(self, m: int) -> int:
        if int(m) != m or not self.m_min <= m <= self.m_max:
            raise UsageError(f"momentum {m!r} is not on the grid [{self.m_min}, {self.m_max}]")
        return int(m) % self.n

    @property
    def centered_order(self) -> np.ndarray:
        """Index permutation that sorts the FFT-ordered axis by momentum."""
        return np.argsort(self.momenta, kind="stable")

    @property
    def edge_indices(self) -> np.ndarray:
        # outermost EDGE_WIDTH momenta on each side: m_min.., ..m_max
        lo = np.arange(self.m_min, self.m_min + EDGE_WIDTH)
        hi = np.arange(self.m_max - EDGE_WIDTH + 1, self.m_max + 1)
        return np.concatenate([hi, lo]) % self.n


@dataclass
class QuantumState:
    amplitudes: np.ndarray
    grid: GridSpec
    kick_count: int = 0

    def copy(self) -> "QuantumState":
        return QuantumState(self.amplitudes.copy(), self.grid, self.kick_count)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def norm(self) -> float:
        return float(np.sum(self.probabilities))

    def centered_probabilities(self) -> np.ndarray:
        """|Ψ(m1, m2)|² with both axes sorted by momentum."""
        order = self.grid.centered_order
        return self.probabilities[np.ix_(order, order)]


@dataclass
class WidthSeries:
    t: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    params: SystemParams | None = None
    grid: GridSpec | None = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.int64)
        self.s1 = np.asarray(self.s1, dtype=float)
        self.s2 = np.asarray(self.s2, dtype=float)
        if not (self.t.shape == self.s1.shape == self.s2.shape):
            raise UsageError("t, s1 and s2 must have the same length")
        if self.t.size > 1 and np.any(np.diff(self.t) <= 0):
            raise UsageError("width series times must be strictly increasing")
        if np.any(self.s1 < 0) or np.any(self.s2 < 0):
            raise UsageError("widths must be non-negative")

    def __len__(self):
        return int(self.t.size)

    def s2_total(self) -> np.ndarray:
        """S1² + S2², the squared radius of the two-rotor distribution."""
        return self.s1**2 + self.s2**2

    def until(self, t_max: int) -> "WidthSeries":
        keep = self.t <= t_max
        return WidthSeries(self.t[keep], self.s1[keep], self.s2[keep], self.params, self.grid)


def _abs2_sum(a: np.ndarray) -> float:
    return float(np.vdot(a, a).real)


def edge_leakage(state: QuantumState) -> float:
    """Probability on the outermost momentum rows/columns (union, no double count)."""
    a = state.amplitudes
    edge = state.grid.edge_indices
    rows = a[edge, :]
    cols = a[:, edge]
    return _abs2_sum(rows) + _abs2_sum(cols) - _abs2_sum(rows[:, edge])


def kick_reach(params: SystemParams) -> int:
    """Momentum cushion that one kick cannot cross with appreciable amplitude.

    The one-kick amplitudes decay like Bessel functions beyond the largest
    impulse, which is bounded by λ_i + λ3 + λ4.
    """
    f_max = max(params.lambda1, params.lambda2) + params.lambda3 + params.lambda4
    return int(math.ceil(2.0 * f_max)) + 16


def outer_band_probability(state: QuantumState, fraction: float = 0.25) -> float:
    """Probability with |m1| > k or |m2| > k, where k = fraction * n.

    Computed directly from the outer strips (no 1 - inner cancellation).
    """
    n = state.grid.n
    k = int(fraction * n)
    if not 0 < k < n // 2:
        raise UsageError("fraction must put the band strictly inside the grid")
    a = state.amplitudes
    # FFT order: |m| <= k occupies [0, k] and [n - k, n)
    hi = slice(k + 1, n - k)
    total = _abs2_sum(a[hi, :])
    inner_rows = np.r_[0 : k + 1, n - k : n]
    total += _abs2_sum(a[inner_rows][:, hi])
    return total / _abs2_sum(a)


def commensurability_check(alpha: float, max_denominator: int = 4096, tol: float = 1e-9) -> Fraction | None:
    """Return the rational approximant to α/2π if it is within ``tol``, else None."""
    x = alpha / (2.0 * math.pi)
    frac = Fraction(x).limit_denominator(max_denominator)
    if abs(x - float(frac)) < tol:
        return frac
    return None


def warn_if_commensurate(params: SystemParams) -> None:
    for name in ("alpha1", "alpha2"):
        frac = commensurability_check(getattr(params, name))
        if frac is not None:
            warnings.warn(
                f"{name}/2π ≈ {frac}: periodic lattice, localization is not expected",
                CommensurabilityWarning,
                stacklevel=3,
            )


def build_initial_state(
    grid: GridSpec,
    m0: float = 0.0,
    dm: float = TABLE_I_DM,
    theta0: float = 0.0,
    leakage_threshold: float = DEFAULT_LEAKAGE_THRESHOLD,
) -> QuantumState:
    """Product of two Gaussian packets a_m = exp(-[(m - m0)/(2 dm)]²) e^{-i m θ0}."""
    if not dm > 0:
        raise ConfigurationError(f"dm must be > 0, got {dm!r}")
    if not abs(m0) < grid.n / 4:
        raise ConfigurationError(f"|m0| must be < n/4 = {grid.n / 4}, got {m0!r}")
    m = grid.momenta.astype(float)
    a = np.exp(-(((m - m0) / (2.0 * dm)) ** 2)) * np.exp(-1j * m * theta0)
    a /= np.sqrt(np.sum(np.abs(a) ** 2))
    state = QuantumState(np.outer(a, a), grid, 0)
    leak = edge_leakage(state)
    if leak >= leakage_threshold:
        raise ConfigurationError(f"initial state touches the grid edge (leakage {leak:.3g})")
    return state


def basis_state(grid: GridSpec, m1: int = 0, m2: int = 0) -> QuantumState:
    amps = np.zeros((grid.n, grid.n), dtype=complex)
    amps[grid.index_of(m1), grid.index_of(m2)] = 1.0
    return QuantumState(amps, grid, 0)


class FloquetPropagator:
    """Precomputed phases for one (params, grid) pair; steps arrays in place."""

    def __init__(self, params: SystemParams, grid: GridSpec, workers: int | None = None):
        self.params = params
        self.grid = grid
        self.workers = workers
        m = grid.momenta.astype(float)
        # exact integer m, so no aliasing of the m² phases
        self.free_phase = np.outer(
            np.exp(-0.5j * params.alpha1 * m**2), np.exp(-0.5j * params.alpha2 * m**2)
        )
        th = grid.angles
        self.kick_phase = np.exp(-1j * kick_potential(params, th[:, None], th[None, :]))

    def step_inplace(self, amps: np.ndarray) -> np.ndarray:
        amps *= self.free_phase
        psi = sfft.ifft2(amps, norm="ortho", overwrite_x=True, workers=self.workers)
        psi *= self.kick_phase
        return sfft.fft2(psi, norm="ortho", overwrite_x=True, workers=self.workers)


def floquet_step(
    state: QuantumState,
    params: SystemParams,
    leakage_threshold: float | None = DEFAULT_LEAKAGE_THRESHOLD,
) -> QuantumState:
    """One kick period; returns a new state and leaves ``state`` untouched."""
    prop = FloquetPropagator(params, state.grid)
    out = QuantumState(prop.step_inplace(state.amplitudes.copy()), state.grid, state.kick_count + 1)
    if leakage_threshold is not None:
        leak = edge_leakage(out)
        if leak >= leakage_threshold:
            raise LeakageError(
                f"edge leakage {leak:.3g} at kick {out.kick_count}", out.kick_count, leak
            )
    return out


def to_angle_representation(amplitudes: np.ndarray) -> np.ndarray:
    return sfft.ifft2(amplitudes, norm="ortho")


def to_momentum_representation(psi: np.ndarray) -> np.ndarray:
    return sfft.fft2(psi, norm="ortho")


def width(state: QuantumState) -> tuple[float, float]:
    """Standard deviations of the two marginal momentum distributions."""
    prob = state.probabilities
    m = state.grid.momenta.astype(float)
    out = []
    for marginal in (prob.sum(axis=1), prob.sum(axis=0)):
        total = marginal.sum()
        mean = np.dot(marginal, m) / total
        var = np.dot(marginal, (m - mean) ** 2) / total
        out.append(math.sqrt(max(var, 0.0)))
    return out[0], out[1]


def momentum_section(state: QuantumState, fixed_m2: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """|Ψ(m1, fixed_m2)|² against m1 (ascending), not renormalized."""
    j = state.grid.index_of(fixed_m2)
    order = state.grid.centered_order
    return state.grid.momenta[order], np.abs(state.amplitudes[order, j]) ** 2


@dataclass(frozen=True)
class TailFit:
    decay_rate: float
    rates: tuple[float, float]
    curvature_index: float
    n_points: int
    curved: bool


def _tail_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    lin = np.polyfit(x, y, 1)
    rss_lin = float(np.sum((np.polyval(lin, x) - y) ** 2))
    quad = np.polyfit(x, y, 2)
    rss_quad = float(np.sum((np.polyval(quad, x) - y) ** 2))
    return float(lin[0]), rss_lin, rss_quad


def fit_exponential_tail(
    m1: np.ndarray,
    probability: np.ndarray,
    fit_window: tuple[float, float],
    floor: float = 1e-14,
    min_points: int = 10,
    curvature_limit: float = 0.5,
) -> TailFit:
    """Fit log P = const - rate |m| separately on each tail inside ``fit_window``.

    ``fit_window`` bounds |m1|. The reported rate is the mean of the two tail
    rates. ``curvature_index`` is the fraction of the linear residual removed
    by adding a quadratic term; a pure exponential gives ~0, a Gaussian ~1.
    """
    m1 = np.asarray(m1, dtype=float)
    probability = np.asarray(probability, dtype=float)
    lo, hi = fit_window
    rates, rss_lin, rss_quad, count = [], 0.0, 0.0, 0
    for sign in (1.0, -1.0):
        sel = (sign * m1 >= lo) & (sign * m1 <= hi) & (probability > floor)
        if sel.sum() < min_points:
            raise FitError(
                f"only {int(sel.sum())} points above floor {floor:g} in tail window {fit_window}"
            )
        slope, rl, rq = _tail_slope(np.abs(m1[sel]), np.log(probability[sel]))
        rates.append(-slope)
        rss_lin += rl
        rss_quad += rq
        count += int(sel.sum())
    scale = max(rss_lin, 1e-300)
    curvature = (rss_lin - rss_quad) / scale if rss_lin > 1e-20 * count else 0.0
    return TailFit(
        decay_rate=float(np.mean(rates)),
        rates=(rates[0], rates[1]),
        curvature_index=float(curvature),
        n_points=count,
        curved=bool(curvature > curvature_limit),
    )


@dataclass
class EvolutionResult:
    state: QuantumState
    series: WidthSeries
    snapshots: dict[int, QuantumState] = field(default_factory=dict)


def embed(state: QuantumState, grid: GridSpec) -> QuantumState:
    """Zero-pad ``state`` onto a larger momentum grid; amplitudes keep their momenta."""
    if grid.n < state.grid.n:
        raise UsageError(f"cannot embed an n={state.grid.n} state into n={grid.n}")
    idx = state.grid.momenta % grid.n
    amps = np.zeros((grid.n, grid.n), dtype=complex)
    amps[np.ix_(idx, idx)] = state.amplitudes
    return QuantumState(amps, grid, state.kick_count)


def evolve(
    state: QuantumState,
    params: SystemParams,
    n_kicks: int,
    sample_every: int = 10,
    snapshot_times: Iterable[int] = (),
    leakage_threshold: float = DEFAULT_LEAKAGE_THRESHOLD,
    include_initial: bool = True,
    prior: WidthSeries | None = None,
    on_sample: Callable[[QuantumState, WidthSeries], None] | None = None,
    max_grid: GridSpec | None = None,
    grow_threshold: float = DEFAULT_GROW_THRESHOLD,
    workers: int | None = None,
) -> EvolutionResult:
    """Advance ``state`` to kick ``n_kicks`` and record widths.

    Widths are recorded at t = 0 (if ``include_initial``) and at every
    multiple of ``sample_every``. Evolution starts from ``state.kick_count``,
    so a resumed state continues where it stopped; ``prior`` carries the
    samples already taken. ``on_sample`` is called after each sample, e.g.
    to write checkpoints. The input state is not modified.

    With ``max_grid`` set, the grid doubles (zero padding) whenever the
    probability beyond |m| = 3n/8 reaches ``grow_threshold``, up to
    ``max_grid.n``. A kick spreads momentum by several sites, so growth is
    triggered well inside the edge rather than on the edge rows.
    """
    if n_kicks < 1 or sample_every < 1:
        raise UsageError("n_kicks and sample_every must be >= 1")
    if max_grid is not None and max_grid.n < state.grid.n:
        raise UsageError("max_grid is smaller than the state's grid")
    warn_if_commensurate(params)
    top = max_grid.n if max_grid is not None else state.grid.n
    if state.grid.n < top:
        cushion = kick_reach(params)
        while state.grid.n < top and state.grid.n // 8 < cushion:
            state = embed(state, GridSpec(2 * state.grid.n))
    grid = state.grid
    prop = FloquetPropagator(params, grid, workers=workers)
    snap_set = set(int(t) for t in snapshot_times)
    ts, s1s, s2s = [], [], []
    if prior is not None:
        ts, s1s, s2s = list(prior.t), list(prior.s1), list(prior.s2)
    snapshots: dict[int, QuantumState] = {}
    amps = state.amplitudes.copy()
    t = state.kick_count
    if t == 0 and include_initial and not ts:
        w = width(state)
        ts.append(0), s1s.append(w[0]), s2s.append(w[1])
    if t in snap_set:
        snapshots[t] = state.copy()
    while t < n_kicks:
        amps = prop.step_inplace(amps)
        t += 1
        current = QuantumState(amps, grid, t)
        if grid.n < top and t % GROW_CHECK_EVERY == 0:
            while grid.n < top and outer_band_probability(current, GROW_BAND) >= grow_threshold:
                current = embed(current, GridSpec(2 * grid.n))
                grid, amps = current.grid, current.amplitudes
                prop = FloquetPropagator(params, grid, workers=workers)
        leak = edge_leakage(current)
        if leak >= leakage_threshold:
            err = LeakageError(f"edge leakage {leak:.3g} at kick {t} (n={grid.n})", t, leak)
            err.series = WidthSeries(ts, s1s, s2s, params, grid)
            raise err
        if t in snap_set:
            snapshots[t] = current.copy()
        if t % sample_every == 0:
            w = width(current)
            ts.append(t), s1s.append(w[0]), s2s.append(w[1])
            if on_sample is not None:
                on_sample(current, WidthSeries(ts, s1s, s2s, params, grid))
    series = WidthSeries(ts, s1s, s2s, params, grid)
    return EvolutionResult(QuantumState(amps, grid, t), series, snapshots)
