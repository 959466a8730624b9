"""Command-line entry point: ``rotorlab <subcommand> [options]``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from rotorlab import io
from rotorlab.config import RunConfig, load_config
from rotorlab.errors import ConfigurationError, RotorLabError
from rotorlab.model import quasi_linear_coefficients
from rotorlab.runner import analyze_widths, run_single, run_sweep
from rotorlab.scaling import classify_regime, fit_scaling, mean_free_path

log = logging.getLogger("rotorlab")


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = {}
    if getattr(args, "output", None):
        overrides["output_dir"] = str(args.output)
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "max_parallel", None) is not None:
        if args.max_parallel < 1:
            raise ConfigurationError("--max-parallel must be >= 1")
        overrides["max_parallel"] = args.max_parallel
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def _emit(data, out_dir: Path | None, name: str) -> None:
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        io.write_json(out_dir / name, data)
    print(json.dumps(io._jsonable(data), indent=2, sort_keys=True))


def cmd_run(args, mode: str) -> int:
    cfg = dataclasses.replace(_load(args), mode=mode)
    out = cfg.resolved_output_dir()
    manifest = run_single(cfg, out, resume=args.resume)
    for rec in manifest["points"]:
        log.info("%s: %s", rec["output"], rec["status"])
    return 1 if manifest["failures"] else 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    if cfg.sweep is None:
        raise ConfigurationError("sweep: section required for the sweep subcommand")
    manifest = run_sweep(cfg, cfg.resolved_output_dir(), resume=args.resume)
    log.info("sweep finished: %d points, %d failures", len(manifest["points"]), manifest["failures"])
    return 1 if manifest["failures"] else 0


def cmd_mean_free_path(args) -> int:
    cfg = _load(args)
    out = Path(cfg.output_dir) if cfg.output_dir else None
    if cfg.sweep is not None:
        cells = {(p.lambda3, p.lambda4): mean_free_path(p, args.grid) for p in cfg.sweep.points(cfg.params)}
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
            io.write_table(out / "l_table.csv", cfg.sweep.lambda3_values, cfg.sweep.lambda4_values, cells)
        for (l3, l4), l in cells.items():
            print(f"lambda3={l3:g} lambda4={l4:g} l={l:.6f}")
        return 0
    q = quasi_linear_coefficients(cfg.params)
    l = mean_free_path(cfg.params, args.grid)
    _emit({"params": cfg.params.to_dict(), "l": l, "d1_0": q.d1_0, "d2_0": q.d2_0}, out, "mean_free_path.json")
    return 0


def cmd_scaling_fit(args) -> int:
    cfg = _load(args)
    series = io.read_quantum_widths(args.widths)
    l = args.l if args.l is not None else mean_free_path(cfg.params)
    delta_t = args.delta_t or cfg.delta_t
    summary = analyze_widths(series, cfg.params, dataclasses.replace(cfg, delta_t=delta_t), l=l)
    out = Path(cfg.output_dir) if cfg.output_dir else None
    _emit(summary, out, "scaling_fit.json")
    return 0 if summary.get("b") is not None else 1


def cmd_classify(args) -> int:
    cfg = _load(args)
    series = io.read_quantum_widths(args.widths)
    label = classify_regime(series, args.classical_d, cfg.classifier)
    out = Path(cfg.output_dir) if cfg.output_dir else None
    _emit({"regime": label.label.value, "code": label.label.code, "diagnostics": label.diagnostics}, out, "regime.json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML or JSON run config")
    common.add_argument("--output", type=Path, help="output directory (fallback: $ROTORLAB_OUTPUT)")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="rotorlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in (("quantum-run", "evolve the wavefunction"), ("classical-run", "evolve the classical ensemble")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--resume", action="store_true", help="continue from a compatible checkpoint")
        p.set_defaults(func=lambda a, m=name.split("-")[0]: cmd_run(a, m))

    p = sub.add_parser("sweep", parents=[common], help="run a lambda3 x lambda4 sweep and write tables")
    p.add_argument("--resume", action="store_true")
    p.add_argument("--max-parallel", type=int, dest="max_parallel")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mean-free-path", parents=[common], help="one-kick spread l")
    p.add_argument("--grid", type=int, default=256)
    p.set_defaults(func=cmd_mean_free_path)

    p = sub.add_parser("scaling-fit", parents=[common], help="fit an existing quantum_widths.csv")
    p.add_argument("widths", type=Path)
    p.add_argument("--l", type=float, help="mean free path (default: computed from the config params)")
    p.add_argument("--delta-t", type=int, dest="delta_t")
    p.set_defaults(func=cmd_scaling_fit)

    p = sub.add_parser("classify", parents=[common], help="label an existing quantum_widths.csv")
    p.add_argument("widths", type=Path)
    p.add_argument("--classical-d", type=float, dest="classical_d")
    p.set_defaults(func=cmd_classify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except RotorLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
