"""Single-point pipelines, parameter sweeps and the run manifest."""

from __future__ import annotations

import logging
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
import scipy

import rotorlab
from rotorlab import io
from rotorlab.checkpoint import check_compatible, read_checkpoint, write_checkpoint
from rotorlab.classical import evolve_classical, fit_diffusion, free_flight, sample_initial_ensemble
from rotorlab.config import RunConfig
from rotorlab.errors import FitError, LeakageError, RotorLabError, UsageError
from rotorlab.model import SystemParams, quasi_linear_coefficients
from rotorlab.quantum import GridSpec, build_initial_state, evolve, momentum_section
from rotorlab.scaling import classify_regime, fit_scaling, mean_free_path

log = logging.getLogger(__name__)

CHECKPOINT_NAME = "quantum.ckpt"
MIN_START_GRID = 64


def _diffusion_window(cfg: RunConfig) -> tuple[int, int]:
    if cfg.diffusion_window is not None:
        return cfg.diffusion_window
    return cfg.n_kicks // 10, cfg.n_kicks


def run_classical(cfg: RunConfig, params: SystemParams, out_dir: Path) -> dict:
    init = cfg.initial
    ens = sample_initial_ensemble(cfg.ensemble_n, cfg.seed, init.m0, init.dm, init.theta0)
    if cfg.align_classical_start:
        ens = free_flight(ens, params)
    _, series = evolve_classical(ens, params, cfg.n_kicks, cfg.classical_sample_every)
    io.write_classical_widths(out_dir / "classical_widths.csv", series)
    q = quasi_linear_coefficients(params)
    t_min, t_max = _diffusion_window(cfg)
    summary = {"window": [t_min, t_max], "d1_0": q.d1_0, "d2_0": q.d2_0}
    try:
        d1, d2 = fit_diffusion(series, t_min, t_max)
    except UsageError as exc:
        summary.update(d1=None, d2=None, ratio1=None, ratio2=None, error=str(exc))
    else:
        summary.update(
            d1=d1,
            d2=d2,
            ratio1=d1 / q.d1_0 if q.d1_0 > 0 else None,
            ratio2=d2 / q.d2_0 if q.d2_0 > 0 else None,
        )
    io.write_json(out_dir / "classical_diffusion.json", summary)
    return summary


def _checkpoint_meta(cfg: RunConfig) -> dict:
    return {
        "m0": cfg.initial.m0,
        "dm": cfg.initial.dm,
        "theta0": cfg.initial.theta0,
        "max_grid_n": cfg.grid_n,
        "sample_every": cfg.sample_every,
        "leakage_threshold": cfg.leakage_threshold,
    }


def run_quantum(
    cfg: RunConfig,
    params: SystemParams,
    out_dir: Path,
    resume: bool = False,
    classical_d: float | None = None,
) -> dict:
    """Evolve, write widths/sections, then classify and attempt the scaling fit.

    Raises :class:`LeakageError` if the state reaches the edge of the largest
    grid; the widths recorded so far are still written.
    """
    ckpt_path = out_dir / CHECKPOINT_NAME
    meta = _checkpoint_meta(cfg)
    prior = None
    if resume and ckpt_path.exists():
        ckpt = read_checkpoint(ckpt_path)
        check_compatible(ckpt, params, ckpt.state.grid.n, meta)
        state, prior = ckpt.state, ckpt.series
        log.info("resuming %s from kick %d", out_dir, state.kick_count)
    else:
        start = min(cfg.grid_n, MIN_START_GRID)
        state = build_initial_state(
            GridSpec(start), cfg.initial.m0, cfg.initial.dm, cfg.initial.theta0, cfg.leakage_threshold
        )

    snaps = {t for t in cfg.snapshot_times if t <= cfg.n_kicks}
    if state.kick_count == 0 and 0 in snaps:
        io.write_section(out_dir / "section_t0.csv", *momentum_section(state, 0))

    def on_sample(current, series):
        t = current.kick_count
        if t in snaps:
            io.write_section(out_dir / f"section_t{t}.csv", *momentum_section(current, 0))
        if t % cfg.checkpoint_every == 0 and t < cfg.n_kicks:
            write_checkpoint(ckpt_path, current, series, params, meta)

    extra_snaps = {t for t in snaps if t % cfg.sample_every}
    if extra_snaps:
        log.warning("snapshot times %s are not multiples of sample_every; skipped", sorted(extra_snaps))

    try:
        result = evolve(
            state,
            params,
            cfg.n_kicks,
            cfg.sample_every,
            leakage_threshold=cfg.leakage_threshold,
            prior=prior,
            on_sample=on_sample,
            max_grid=GridSpec(cfg.grid_n),
        )
    except LeakageError as exc:
        if exc.series is not None:
            io.write_quantum_widths(out_dir / "quantum_widths.csv", exc.series)
        raise
    series = result.series
    io.write_quantum_widths(out_dir / "quantum_widths.csv", series)
    if ckpt_path.exists():
        ckpt_path.unlink()

    summary = analyze_widths(series, params, cfg, classical_d)
    summary["final_grid_n"] = result.state.grid.n
    io.write_json(out_dir / "scaling_fit.json", summary)
    return summary


def analyze_widths(series, params: SystemParams, cfg: RunConfig, classical_d: float | None = None, l: float | None = None) -> dict:
    """Regime label plus scaling fit, as written to ``scaling_fit.json``."""
    if l is None:
        l = mean_free_path(params)
    out: dict = {"l": l, "delta_t": cfg.delta_t, "width_measure": cfg.width_measure}
    try:
        label = classify_regime(series, classical_d, cfg.classifier)
        out["regime"] = label.label.value
        out["diagnostics"] = label.diagnostics
    except UsageError as exc:
        out["regime"] = None
        out["diagnostics"] = {"error": str(exc)}
    try:
        fit = fit_scaling(series, l, cfg.delta_t, cfg.width_measure)
    except (FitError, UsageError) as exc:
        out.update(c=None, a=None, b=None, lambda_big=None, residual=None, fit_error=str(exc))
    else:
        out.update(c=fit.c, a=fit.a, b=fit.b, lambda_big=fit.lambda_big, residual=fit.residual)
    return out


def run_point(cfg: RunConfig, params: SystemParams, out_dir: Path, resume: bool = False) -> dict:
    """Run one parameter point per ``cfg.mode``; failures are reported, not raised."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    record: dict = {"params": params.to_dict(), "output": str(out_dir), "status": "ok"}
    t0 = time.perf_counter()
    classical_d = None
    try:
        if cfg.mode in ("classical", "both"):
            c0 = time.perf_counter()
            record["classical"] = run_classical(cfg, params, out_dir)
            record["classical_wall_time"] = time.perf_counter() - c0
            classical_d = record["classical"].get("d1")
        if cfg.mode in ("quantum", "both"):
            q0 = time.perf_counter()
            record["quantum"] = run_quantum(cfg, params, out_dir, resume, classical_d)
            record["quantum_wall_time"] = time.perf_counter() - q0
    except LeakageError as exc:
        record.update(status="leakage", error=str(exc), failed_kick=exc.kick)
    except RotorLabError as exc:
        record.update(status="error", error=f"{type(exc).__name__}: {exc}")
    record["wall_time"] = time.perf_counter() - t0
    return record


def _point_dir(root: Path, params: SystemParams) -> Path:
    return root / f"l3_{params.lambda3:g}_l4_{params.lambda4:g}"


def _run_point_job(args):
    cfg, params, out_dir, resume = args
    return run_point(cfg, params, out_dir, resume)


def run_sweep(cfg: RunConfig, out_dir: Path, resume: bool = False) -> dict:
    """Run every (λ3, λ4) point, then write the regime and scaling tables."""
    if cfg.sweep is None:
        raise UsageError("config has no sweep section")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    points = cfg.sweep.points(cfg.params)
    jobs = [(cfg, p, _point_dir(out_dir, p), resume) for p in points]
    t0 = time.perf_counter()
    if cfg.max_parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.max_parallel) as pool:
            records = list(pool.map(_run_point_job, jobs))
    else:
        records = [_run_point_job(j) for j in jobs]

    rows, cols = cfg.sweep.lambda3_values, cfg.sweep.lambda4_values
    regime, l_cells, b_cells, lam_cells = {}, {}, {}, {}
    for p, rec in zip(points, records):
        key = (p.lambda3, p.lambda4)
        if cfg.mode in ("quantum", "both"):
            l_cells[key] = mean_free_path(p)
        q = rec.get("quantum")
        if not q:
            continue
        if q.get("regime"):
            regime[key] = {"Localized": "L", "Intermediate": "I", "QuasiDiffusive": "D"}[q["regime"]]
        if q.get("regime") == "QuasiDiffusive" and q.get("b") is not None:
            b_cells[key] = q["b"]
            lam_cells[key] = q["lambda_big"]
    if cfg.mode in ("quantum", "both"):
        io.write_table(out_dir / "regime_table.csv", rows, cols, regime)
        io.write_table(out_dir / "l_table.csv", rows, cols, l_cells)
        io.write_table(out_dir / "b_table.csv", rows, cols, b_cells)
        io.write_table(out_dir / "lambda_table.csv", rows, cols, lam_cells)
    if cfg.mode in ("classical", "both"):
        ratio = {
            (p.lambda3, p.lambda4): rec["classical"]["ratio1"]
            for p, rec in zip(points, records)
            if rec.get("classical") and rec["classical"].get("ratio1") is not None
        }
        io.write_table(out_dir / "classical_ratio_table.csv", rows, cols, ratio)
    manifest = build_manifest(cfg, records, time.perf_counter() - t0)
    io.write_json(out_dir / "manifest.json", manifest)
    return manifest


def run_single(cfg: RunConfig, out_dir: Path, resume: bool = False) -> dict:
    t0 = time.perf_counter()
    record = run_point(cfg, cfg.params, Path(out_dir), resume)
    manifest = build_manifest(cfg, [record], time.perf_counter() - t0)
    io.write_json(Path(out_dir) / "manifest.json", manifest)
    return manifest


def build_manifest(cfg: RunConfig, records: list[dict], wall_time: float) -> dict:
    return {
        "config": cfg.to_dict(),
        "versions": {
            "rotorlab": rotorlab.__version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "seeds": {"classical_ensemble": cfg.seed, "rng": "numpy PCG64"},
        "wall_time": wall_time,
        "points": records,
        "failures": sum(r["status"] != "ok" for r in records),
    }
