"""Run configuration: parsing, defaults and validation.

Config documents are YAML (JSON is accepted, being a YAML subset). Example::

    mode: quantum
    params: {lambda1: 0.5, lambda2: 0.5, lambda3: 3.0, lambda4: 3.0}
    grid_n: 2048
    n_kicks: 30000
    sweep:
      lambda3_values: [0.0, 0.5, 1.0]
      lambda4_values: [0.0, 0.5, 1.0]
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from rotorlab.errors import ConfigurationError
from rotorlab.model import SystemParams
from rotorlab.quantum import DEFAULT_LEAKAGE_THRESHOLD, TABLE_I_DM, GridSpec
from rotorlab.scaling import ClassifierThresholds, WidthMeasure

MODES = ("classical", "quantum", "both")
OUTPUT_ENV = "ROTORLAB_OUTPUT"


@dataclass(frozen=True)
class InitialState:
    m0: float = 0.0
    dm: float = TABLE_I_DM
    theta0: float = 0.0


@dataclass(frozen=True)
class Sweep:
    lambda3_values: tuple[float, ...]
    lambda4_values: tuple[float, ...]

    def points(self, base: SystemParams) -> list[SystemParams]:
        return [
            dataclasses.replace(base, lambda3=l3, lambda4=l4)
            for l3 in self.lambda3_values
            for l4 in self.lambda4_values
        ]


@dataclass(frozen=True)
class RunConfig:
    params: SystemParams = field(default_factory=SystemParams)
    initial: InitialState = field(default_factory=InitialState)
    grid_n: int = 2048
    n_kicks: int = 30000
    sample_every: int = 10
    ensemble_n: int = 1_000_000
    seed: int = 0
    delta_t: int = 300
    snapshot_times: tuple[int, ...] = (1000, 5000, 30000)
    mode: str = "quantum"
    sweep: Sweep | None = None
    output_dir: str | None = None
    classifier: ClassifierThresholds = field(default_factory=ClassifierThresholds)
    leakage_threshold: float = DEFAULT_LEAKAGE_THRESHOLD
    checkpoint_every: int = 1000
    max_parallel: int = 1
    width_measure: str = WidthMeasure.TOTAL.value
    diffusion_window: tuple[int, int] | None = None
    classical_sample_every: int = 1
    align_classical_start: bool = True

    def resolved_output_dir(self) -> Path:
        out = self.output_dir or os.environ.get(OUTPUT_ENV)
        if not out:
            raise ConfigurationError(
                f"no output directory: pass --output, set output_dir, or set {OUTPUT_ENV}"
            )
        return Path(out)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["snapshot_times"] = list(self.snapshot_times)
        if self.sweep is not None:
            d["sweep"] = {k: list(v) for k, v in d["sweep"].items()}
        if self.diffusion_window is not None:
            d["diffusion_window"] = list(self.diffusion_window)
        return d


_SCALARS: dict[str, type] = {
    "grid_n": int,
    "n_kicks": int,
    "sample_every": int,
    "ensemble_n": int,
    "seed": int,
    "delta_t": int,
    "mode": str,
    "output_dir": str,
    "leakage_threshold": float,
    "checkpoint_every": int,
    "max_parallel": int,
    "width_measure": str,
    "classical_sample_every": int,
    "align_classical_start": bool,
}


def _coerce(path: str, value: Any, kind: type):
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigurationError(f"{path}: expected true/false, got {value!r}")
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"{path}: expected an integer, got {value!r}")
        return value
    if not isinstance(value, kind):
        raise ConfigurationError(f"{path}: expected {kind.__name__}, got {value!r}")
    return value


def _section(path: str, raw: Any, cls, kinds: dict[str, type]):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: expected a mapping, got {raw!r}")
    unknown = set(raw) - set(kinds)
    if unknown:
        raise ConfigurationError(f"{path}: unknown keys {sorted(unknown)}")
    kwargs = {k: _coerce(f"{path}.{k}", v, kinds[k]) for k, v in raw.items()}
    try:
        return cls(**kwargs)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None


def _float_list(path: str, raw: Any) -> tuple[float, ...]:
    if not isinstance(raw, list) or not raw:
        raise ConfigurationError(f"{path}: expected a nonempty list of numbers")
    return tuple(_coerce(f"{path}[{i}]", v, float) for i, v in enumerate(raw))


def config_from_dict(doc: dict | None) -> RunConfig:
    doc = {} if doc is None else doc
    if not isinstance(doc, dict):
        raise ConfigurationError("config document must be a mapping")
    known = set(_SCALARS) | {"params", "initial", "sweep", "snapshot_times", "classifier", "diffusion_window"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigurationError(f"unknown keys {sorted(unknown)}")

    kwargs: dict[str, Any] = {}
    for key, kind in _SCALARS.items():
        if key in doc and doc[key] is not None:
            kwargs[key] = _coerce(key, doc[key], kind)

    kwargs["params"] = _section("params", doc.get("params"), SystemParams, dict.fromkeys(
        ("lambda1", "lambda2", "lambda3", "lambda4", "alpha1", "alpha2"), float))
    kwargs["initial"] = _section("initial", doc.get("initial"), InitialState, dict.fromkeys(
        ("m0", "dm", "theta0"), float))
    kwargs["classifier"] = _section("classifier", doc.get("classifier"), ClassifierThresholds, {
        f.name: f.type if isinstance(f.type, type) else {"float": float, "int": int}[f.type]
        for f in dataclasses.fields(ClassifierThresholds)})

    if "snapshot_times" in doc:
        raw = doc["snapshot_times"]
        if not isinstance(raw, list):
            raise ConfigurationError("snapshot_times: expected a list of integers")
        kwargs["snapshot_times"] = tuple(
            _coerce(f"snapshot_times[{i}]", v, int) for i, v in enumerate(raw)
        )
    if doc.get("diffusion_window") is not None:
        raw = doc["diffusion_window"]
        if not isinstance(raw, list) or len(raw) != 2:
            raise ConfigurationError("diffusion_window: expected [t_min, t_max]")
        kwargs["diffusion_window"] = tuple(_coerce(f"diffusion_window[{i}]", v, int) for i, v in enumerate(raw))
    if doc.get("sweep") is not None:
        raw = doc["sweep"]
        if not isinstance(raw, dict):
            raise ConfigurationError("sweep: expected a mapping")
        unknown = set(raw) - {"lambda3_values", "lambda4_values"}
        if unknown:
            raise ConfigurationError(f"sweep: unknown keys {sorted(unknown)}")
        kwargs["sweep"] = Sweep(
            _float_list("sweep.lambda3_values", raw.get("lambda3_values")),
            _float_list("sweep.lambda4_values", raw.get("lambda4_values")),
        )
    cfg = RunConfig(**kwargs)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if cfg.mode not in MODES:
        raise ConfigurationError(f"mode: must be one of {MODES}, got {cfg.mode!r}")
    try:
        GridSpec(cfg.grid_n)
    except ConfigurationError as exc:
        raise ConfigurationError(f"grid_n: {exc}") from None
    for name in ("n_kicks", "sample_every", "ensemble_n", "delta_t", "checkpoint_every",
                 "max_parallel", "classical_sample_every"):
        if getattr(cfg, name) < 1:
            raise ConfigurationError(f"{name}: must be >= 1")
    if cfg.delta_t % cfg.sample_every:
        raise ConfigurationError(
            f"sample_every: {cfg.sample_every} does not divide delta_t={cfg.delta_t}"
        )
    if not 0 < cfg.leakage_threshold <= 1:
        raise ConfigurationError("leakage_threshold: must be in (0, 1]")
    if cfg.initial.dm <= 0:
        raise ConfigurationError("initial.dm: must be > 0")
    if any(t < 0 for t in cfg.snapshot_times):
        raise ConfigurationError("snapshot_times: must be >= 0")
    try:
        WidthMeasure(cfg.width_measure)
    except ValueError:
        raise ConfigurationError(
            f"width_measure: must be one of {[m.value for m in WidthMeasure]}"
        ) from None
    if cfg.diffusion_window is not None and not 0 <= cfg.diffusion_window[0] < cfg.diffusion_window[1]:
        raise ConfigurationError("diffusion_window: need 0 <= t_min < t_max")
    if cfg.classifier.qd_slope_ratio < cfg.classifier.slope_ratio:
        raise ConfigurationError("classifier.qd_slope_ratio: must be >= classifier.slope_ratio")


def parse_config(text: str) -> RunConfig:
    """Parse a YAML/JSON config document into a validated :class:`RunConfig`."""
    try:
        doc = yaml.safe_load(text) if text.strip() else {}
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"malformed config document: {exc}") from None
    return config_from_dict(doc)


def load_config(path: str | os.PathLike) -> RunConfig:
    return parse_config(Path(path).read_text())
