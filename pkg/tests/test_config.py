import json

import pytest

from rotorlab.config import RunConfig, load_config, parse_config
from rotorlab.errors import ConfigurationError
from rotorlab.model import SystemParams

PAPER_SWEEP = """
params: {lambda1: 0.5, lambda2: 0.5}
sweep:
  lambda3_values: [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
  lambda4_values: [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
"""


def test_empty_document_gives_defaults():
    cfg = parse_config("")
    assert cfg == RunConfig()
    assert cfg.params.is_free
    assert (cfg.params.alpha1, cfg.params.alpha2) == (1.0, 1.0)
    assert (cfg.grid_n, cfg.n_kicks, cfg.sample_every, cfg.delta_t, cfg.ensemble_n) == (2048, 30000, 10, 300, 10**6)


def test_paper_sweep_has_49_points():
    cfg = parse_config(PAPER_SWEEP)
    pts = cfg.sweep.points(cfg.params)
    assert len(pts) == 49
    assert pts[-1] == SystemParams(0.5, 0.5, 3.0, 3.0)
    assert all(p.lambda1 == 0.5 for p in pts)


def test_sample_every_must_divide_delta_t():
    with pytest.raises(ConfigurationError, match="sample_every"):
        parse_config("sample_every: 7\ndelta_t: 300")


@pytest.mark.parametrize(
    "doc,path",
    [
        ("bogus: 1", "bogus"),
        ("params: {lambda5: 1.0}", "params"),
        ("params: {lambda1: -1.0}", "params"),
        ("params: {lambda1: yes}", "params.lambda1"),
        ("grid_n: 1000", "grid_n"),
        ("grid_n: 512.0", "grid_n"),
        ("mode: sideways", "mode"),
        ("sweep: {lambda3_values: [], lambda4_values: [1.0]}", "sweep.lambda3_values"),
        ("sweep: {lambda3_values: [1.0], lambda4_values: [a]}", "sweep.lambda4_values[0]"),
        ("classifier: {slope_ratio: x}", "classifier.slope_ratio"),
        ("classifier: {slope_ratio: 0.2, qd_slope_ratio: 0.1}", "classifier.qd_slope_ratio"),
        ("width_measure: median", "width_measure"),
        ("leakage_threshold: 0", "leakage_threshold"),
        ("[1, 2]", "mapping"),
        ("a: [", "malformed"),
    ],
)
def test_bad_documents_name_the_field(doc, path):
    with pytest.raises(ConfigurationError, match=path.replace("[", r"\[").replace("]", r"\]")):
        parse_config(doc)


def test_json_is_accepted(tmp_path):
    f = tmp_path / "run.json"
    f.write_text(json.dumps({"params": {"lambda3": 3.0, "lambda4": 3.0}, "n_kicks": 100, "mode": "both"}))
    cfg = load_config(f)
    assert cfg.params.lambda3 == 3.0 and cfg.n_kicks == 100 and cfg.mode == "both"


def test_to_dict_roundtrips():
    cfg = parse_config(PAPER_SWEEP + "snapshot_times: [0, 100]\ndiffusion_window: [10, 90]\n")
    from rotorlab.config import config_from_dict

    d = cfg.to_dict()
    d.pop("output_dir")
    assert config_from_dict(json.loads(json.dumps(d))) == cfg


def test_output_dir_env_fallback(monkeypatch, tmp_path):
    monkeypatch.delenv("ROTORLAB_OUTPUT", raising=False)
    with pytest.raises(ConfigurationError):
        RunConfig().resolved_output_dir()
    monkeypatch.setenv("ROTORLAB_OUTPUT", str(tmp_path))
    assert RunConfig().resolved_output_dir() == tmp_path
    assert RunConfig(output_dir="x").resolved_output_dir().name == "x"
