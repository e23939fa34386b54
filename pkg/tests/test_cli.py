import json

import numpy as np
import pytest

from phikit import cli
from phikit.config import DEFAULT_TOLERANCES, EXPERIMENTS, RunConfig, load_config, parse_grid_overrides
from phikit.errors import ConfigError
from phikit.experiments import Report, emit_plot_data


def test_config_roundtrip(tmp_path):
    cfg = RunConfig()
    p = tmp_path / "c.json"
    p.write_text(cfg.to_json())
    back = load_config(p)
    assert back.to_dict() == cfg.to_dict()
    assert back.experiments == list(EXPERIMENTS)


@pytest.mark.parametrize("data,field", [
    ({"bogus": 1}, "bogus"),
    ({"grid": {"N": 256, "M": 3}}, "M"),
    ({"grid": {"N": 100}}, "grid.N"),
    ({"tolerances": {"nope": 1.0}}, "nope"),
    ({"tolerances": {"partition": -1.0}}, "tolerances.partition"),
    ({"experiments": ["lp-check", "magic"]}, "magic"),
    ({"lattice": {"nu_min": 0}}, "lattice"),
    ({"seed": -3}, "seed"),
    ({"edges": [0.5, 1.0]}, "edges"),
    ({"kernel_grid_N": 128}, "kernel_grid_N"),
])
def test_config_errors_name_the_field(data, field):
    with pytest.raises(ConfigError, match=field):
        RunConfig.from_dict(data)


def test_partial_tolerances_merge_with_defaults():
    cfg = RunConfig.from_dict({"tolerances": {"refinement": 0.1}})
    assert cfg.tolerances["refinement"] == 0.1
    assert cfg.tolerances["partition"] == DEFAULT_TOLERANCES["partition"]


def test_grid_override_parsing():
    assert parse_grid_overrides("N=128, L=32") == {"N": 128, "L": 32.0}
    with pytest.raises(ConfigError):
        parse_grid_overrides("Q=3")
    with pytest.raises(ConfigError):
        parse_grid_overrides("N=abc")


def test_report_checks_and_csv():
    rep = Report("x", "anchor")
    assert emit_plot_data(rep) == "series,x,y\n"
    rep.check("a", np.float64(0.5), 1.0)
    rep.check("b", 3, (1, 2), "in")
    rep.check("c", None, 1.0)
    rep.add_series("s", [0, 1], [np.float64(0.25), 2])
    assert [c.passes for c in rep.checks] == [True, False, False]
    assert not rep.passes and len(rep.failures()) == 2
    assert emit_plot_data(rep) == "series,x,y\ns,0.0,0.25\ns,1.0,2.0\n"
    json.dumps(rep.to_dict())


def test_bad_config_file_exits_2(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"grid": {"N": 256, "wrong": 1}}))
    assert cli.main(["verify-all", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "wrong" in capsys.readouterr().err
    p.write_text("{not json")
    assert cli.main(["lp-check", "--config", str(p)]) == 2
    assert cli.main(["lp-check", "--jobs", "0", "--out", str(tmp_path / "o")]) == 2


def test_empty_experiment_list(tmp_path):
    cfg = RunConfig.from_dict({"experiments": [], "out": str(tmp_path)})
    assert cli.run(cfg) == 0
    assert json.loads((tmp_path / "index.json").read_text()) == {"experiments": [], "verdict": "pass"}


def test_out_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env"))
    assert cli.main(["lp-check"]) == 0
    v = json.loads((tmp_path / "env" / "lp-check" / "verdict.json").read_text())
    assert v["verdict"] == "pass"
    assert (tmp_path / "env" / "lp-check" / "data.csv").read_text().startswith("series,x,y\n")
    cfg = json.loads((tmp_path / "env" / "config.json").read_text())
    assert "out" not in cfg


def test_unsupported_grid_is_a_configuration_error(tmp_path):
    # L * 2^nu is never an integer for L = 10 pi: no scale tiles the box
    rc = cli.main(["lp-check", "--grid-overrides", f"L={10 * np.pi},N=64", "--out", str(tmp_path)])
    assert rc == 2
    assert json.loads((tmp_path / "lp-check" / "verdict.json").read_text())["verdict"] == "error"


def test_show_config(capsys):
    assert cli.main(["show-config", "--seed", "7", "--grid-overrides", "N=512"]) == 0
    shown = json.loads(capsys.readouterr().out)
    assert shown["seed"] == 7 and shown["grid"]["N"] == 512
