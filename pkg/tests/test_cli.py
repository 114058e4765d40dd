import json

from qomekit.cli import main


def test_evolve(tmp_path, capsys):
    assert main(["evolve", "--out", str(tmp_path), "--lamb-shift", "off"]) == 0
    assert json.loads((tmp_path / "config.json").read_text())["bath"]["lamb_shift"] is False
    assert "D_QO-RE" in capsys.readouterr().out


def test_sweep_grid_and_bath(tmp_path):
    assert main(["sweep", "--grid", "2x3", "--bath", "jc", "--seed", "7", "--threshold", "0.02", "--out", str(tmp_path)]) == 0
    cfg = json.loads((tmp_path / "config.json").read_text())
    assert (cfg["n_alpha"], cfg["n_T"], cfg["baths"], cfg["threshold"]) == (2, 3, ["jc"], 0.02)
    assert len((tmp_path / "records.csv").read_text().splitlines()) == 7


def test_scaling(tmp_path):
    assert main(["scaling", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "scaling.json").read_text())["passed"]


def test_verify_without_scaling(capsys):
    assert main(["verify", "--skip-scaling"]) == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 5


def test_bad_config_reports_error(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    assert main(["evolve", "--config", str(p), "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err
