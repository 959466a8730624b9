import dataclasses
import json

import numpy as np
import pytest

from rotorlab import cli, io
from rotorlab.checkpoint import write_checkpoint
from rotorlab.config import RunConfig, Sweep
from rotorlab.model import SystemParams
from rotorlab.quantum import GridSpec, build_initial_state, evolve
from rotorlab.runner import CHECKPOINT_NAME, _checkpoint_meta, run_point, run_single, run_sweep

LOCALIZED = SystemParams(0.5, 0.5, 0.0, 1.0)


def small_cfg(**kw):
    base = dict(params=LOCALIZED, grid_n=512, n_kicks=2000, sample_every=10, delta_t=100,
                snapshot_times=(0, 1000, 2000), ensemble_n=2000, checkpoint_every=500)
    base.update(kw)
    return RunConfig(**base)


@pytest.fixture(scope="module")
def quantum_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("q")
    manifest = run_single(small_cfg(), out)
    return out, manifest


def test_quantum_run_artifacts(quantum_run):
    out, manifest = quantum_run
    assert manifest["failures"] == 0
    names = {p.name for p in out.iterdir()}
    assert {"quantum_widths.csv", "scaling_fit.json", "manifest.json", "section_t0.csv",
            "section_t1000.csv", "section_t2000.csv"} <= names
    assert CHECKPOINT_NAME not in names
    fit = json.loads((out / "scaling_fit.json").read_text())
    assert fit["regime"] == "Localized"
    assert set(fit) >= {"l", "c", "a", "b", "lambda_big", "residual", "delta_t", "regime", "diagnostics"}
    assert fit["l"] == pytest.approx(np.sqrt(1.25), rel=1e-8)
    series = io.read_quantum_widths(out / "quantum_widths.csv")
    assert series.t[-1] == 2000 and len(series) == 201


def test_manifest_contents(quantum_run):
    out, _ = quantum_run
    m = json.loads((out / "manifest.json").read_text())
    assert m["config"]["params"]["lambda4"] == 1.0
    assert {"numpy", "scipy", "python", "rotorlab"} <= set(m["versions"])
    assert m["seeds"]["classical_ensemble"] == 0
    assert m["wall_time"] > 0 and m["points"][0]["status"] == "ok"


def test_rerun_is_bit_identical(quantum_run, tmp_path):
    out, _ = quantum_run
    run_single(small_cfg(), tmp_path)
    for name in ("quantum_widths.csv", "section_t2000.csv"):
        assert (tmp_path / name).read_bytes() == (out / name).read_bytes()


def test_resume_matches_uninterrupted(quantum_run, tmp_path):
    out, _ = quantum_run
    cfg = small_cfg()
    # state as a run killed right after its kick-1000 checkpoint would leave it
    res = evolve(build_initial_state(GridSpec(64)), cfg.params, 1000, cfg.sample_every,
                 max_grid=GridSpec(cfg.grid_n))
    write_checkpoint(tmp_path / CHECKPOINT_NAME, res.state, res.series, cfg.params, _checkpoint_meta(cfg))
    run_single(cfg, tmp_path, resume=True)
    assert (tmp_path / "quantum_widths.csv").read_bytes() == (out / "quantum_widths.csv").read_bytes()
    assert not (tmp_path / CHECKPOINT_NAME).exists()


def test_resume_refuses_mismatched_checkpoint(tmp_path):
    cfg = small_cfg()
    res = evolve(build_initial_state(GridSpec(64)), cfg.params, 100, cfg.sample_every)
    other = dataclasses.replace(cfg.params, lambda4=2.0)
    write_checkpoint(tmp_path / CHECKPOINT_NAME, res.state, res.series, other, _checkpoint_meta(cfg))
    rec = run_point(cfg, cfg.params, tmp_path, resume=True)
    assert rec["status"] == "error" and "CheckpointMismatchError" in rec["error"]


def test_leakage_is_recorded_not_raised(tmp_path):
    cfg = small_cfg(params=SystemParams(0.5, 0.5, 3.0, 3.0), grid_n=64, n_kicks=300)
    rec = run_point(cfg, cfg.params, tmp_path)
    assert rec["status"] == "leakage" and rec["failed_kick"] >= 1
    assert (tmp_path / "quantum_widths.csv").exists()


def test_classical_run(tmp_path):
    cfg = small_cfg(mode="classical", params=SystemParams(0.5, 0.5, 3.0, 3.0), n_kicks=200)
    rec = run_point(cfg, cfg.params, tmp_path)
    summary = json.loads((tmp_path / "classical_diffusion.json").read_text())
    assert rec["status"] == "ok" and summary["window"] == [20, 200]
    assert 0.5 < summary["ratio1"] < 1.6
    assert len(io.read_classical_widths(tmp_path / "classical_widths.csv")) == 201


def test_sweep_tables_and_parallel_determinism(tmp_path):
    sweep = Sweep((0.0, 0.5), (0.5, 1.0))
    cfg = small_cfg(params=SystemParams(0.25, 0.25), sweep=sweep, mode="both")
    serial = run_sweep(cfg, tmp_path / "serial")
    parallel = run_sweep(dataclasses.replace(cfg, max_parallel=2), tmp_path / "parallel")
    assert serial["failures"] == parallel["failures"] == 0
    rows, cols, regimes = io.read_table(tmp_path / "serial" / "regime_table.csv")
    assert rows == [0.0, 0.5] and cols == [0.5, 1.0]
    assert set(regimes.values()) == {"L"}
    _, _, lcells = io.read_table(tmp_path / "serial" / "l_table.csv")
    assert len(lcells) == 4
    for name in ("regime_table.csv", "l_table.csv", "l3_0.5_l4_1/quantum_widths.csv",
                 "l3_0.5_l4_1/classical_widths.csv"):
        assert (tmp_path / "serial" / name).read_bytes() == (tmp_path / "parallel" / name).read_bytes()


def test_cli_mean_free_path(capsys):
    assert cli.main(["mean-free-path", "--config", "/dev/null"]) == 0
    assert json.loads(capsys.readouterr().out)["l"] == 0.0


def test_cli_mean_free_path_table(tmp_path, capsys):
    cfgfile = tmp_path / "c.yaml"
    cfgfile.write_text("params: {lambda1: 0.5, lambda2: 0.5}\nsweep: {lambda3_values: [3.0], lambda4_values: [1.0, 3.0]}\n")
    assert cli.main(["mean-free-path", "--config", str(cfgfile), "--output", str(tmp_path)]) == 0
    _, _, cells = io.read_table(tmp_path / "l_table.csv")
    assert float(cells[(3.0, 3.0)]) == pytest.approx(4.77, abs=0.01)
    assert float(cells[(3.0, 1.0)]) == pytest.approx(2.96, abs=0.01)


def test_cli_classify_and_fit_existing_csv(quantum_run, tmp_path, capsys):
    out, _ = quantum_run
    assert cli.main(["classify", str(out / "quantum_widths.csv")]) == 0
    assert json.loads(capsys.readouterr().out)["code"] == "L"
    cfgfile = tmp_path / "c.yaml"
    cfgfile.write_text("params: {lambda1: 0.5, lambda2: 0.5, lambda4: 1.0}\n")
    code = cli.main(["scaling-fit", str(out / "quantum_widths.csv"), "--config", str(cfgfile),
                     "--delta-t", "100", "--output", str(tmp_path)])
    summary = json.loads(capsys.readouterr().out)
    assert code == 0 and summary["delta_t"] == 100 and summary["regime"] == "Localized"
    assert summary["l"] == pytest.approx(np.sqrt(1.25), rel=1e-8)
    assert summary["b"] == summary["c"] / summary["a"]
    assert json.loads((tmp_path / "scaling_fit.json").read_text())["b"] == summary["b"]


def test_cli_run_uses_env_output(monkeypatch, tmp_path):
    cfgfile = tmp_path / "c.yaml"
    cfgfile.write_text("params: {lambda1: 0.5}\ngrid_n: 64\nn_kicks: 20\nsample_every: 10\ndelta_t: 10\nensemble_n: 100\n")
    monkeypatch.setenv("ROTORLAB_OUTPUT", str(tmp_path / "env"))
    assert cli.main(["classical-run", "--config", str(cfgfile), "--seed", "5"]) == 0
    m = json.loads((tmp_path / "env" / "manifest.json").read_text())
    assert m["seeds"]["classical_ensemble"] == 5


def test_cli_exit_codes(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("ROTORLAB_OUTPUT", raising=False)
    bad = tmp_path / "bad.yaml"
    bad.write_text("sample_every: 7\n")
    assert cli.main(["quantum-run", "--config", str(bad), "--output", str(tmp_path)]) == 2
    assert "sample_every" in capsys.readouterr().err
    assert cli.main(["quantum-run"]) == 2
    assert cli.main(["sweep", "--output", str(tmp_path)]) == 2
    with pytest.raises(SystemExit):
        cli.main(["nope"])
