import csv
import json
import subprocess
import sys

import pytest

from crosslink_nav.cli import main


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_linkbudget(short_cfg_file, tmp_path, capsys):
    assert main(["linkbudget", "--config", str(short_cfg_file), "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "2.98" in out and "102.44" in out
    assert len(_rows(tmp_path / "linkbudget.csv")) > 3


def test_propagate(short_cfg_file, tmp_path):
    assert main(["propagate", "--config", str(short_cfg_file), "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "truth.csv")
    assert rows[0][0] == "epoch_s" and len(rows[0]) == 13 and len(rows) == 146
    info = json.loads((tmp_path / "summary.json").read_text())
    assert info["jacobi_relative_drift"]["lumio"] < 1e-9


def test_propagate_fixed_step_nbody_json(short_cfg_file, tmp_path):
    args = ["propagate", "--config", str(short_cfg_file), "--out", str(tmp_path), "--format", "json",
            "--dynamics", "nbody", "--fixed-step", "60"]
    assert main(args) == 0
    info = json.loads((tmp_path / "summary.json").read_text())
    assert info["frame"] == "eci" and info["step_s"] == 60.0
    assert len(json.loads((tmp_path / "truth.json").read_text())["rows"]) == 145


def test_simulate(short_cfg_file, tmp_path):
    assert main(["simulate", "--config", str(short_cfg_file), "--out", str(tmp_path), "--seed", "3",
                 "--bias-mode", "consider"]) == 0
    for name in ("truth.csv", "estimates.csv", "measurements.csv", "effectiveness.csv"):
        assert len(_rows(tmp_path / name)) > 100
    for name in ("observability.json", "summary.json"):
        json.loads((tmp_path / name).read_text())


def test_montecarlo(short_cfg_file, tmp_path):
    assert main(["montecarlo", "--config", str(short_cfg_file), "--out", str(tmp_path), "--runs", "2"]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["runs"] == 2 and summary["included_runs"] + summary["excluded_runs"] == 2
    assert len(summary["per_run"]) == 2


def test_montecarlo_rejects_zero_runs(short_cfg_file, tmp_path):
    assert main(["montecarlo", "--config", str(short_cfg_file), "--out", str(tmp_path), "--runs", "0"]) == 2


def test_observability(short_cfg_file, tmp_path, capsys):
    assert main(["observability", "--config", str(short_cfg_file), "--out", str(tmp_path),
                 "--measurement", "range-rate"]) == 0
    assert "condition number" in capsys.readouterr().out
    obs = json.loads((tmp_path / "observability.json").read_text())
    assert len(obs["state_ranking"]) == 12


def test_bad_config_reports_line(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "link": {\n    "cadence_s": -5\n  }\n}\n')
    assert main(["simulate", "--config", str(p), "--out", str(tmp_path)]) == 2
    assert "bad.json:3" in capsys.readouterr().err


def test_unknown_key_and_missing_file(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"filter": {"turbo": true}}')
    assert main(["linkbudget", "--config", str(p)]) == 2
    assert main(["linkbudget", "--config", str(tmp_path / "missing.json")]) == 2


def test_unwritable_output(short_cfg_file, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["linkbudget", "--config", str(short_cfg_file), "--out", str(blocker / "sub")]) == 1


def test_usage_errors():
    with pytest.raises(SystemExit):
        main(["simulate"])
    with pytest.raises(SystemExit):
        main(["teleport", "--config", "x.json"])


def test_module_entry_point(short_cfg_file, tmp_path):
    r = subprocess.run([sys.executable, "-m", "crosslink_nav", "linkbudget", "--config", str(short_cfg_file),
                        "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0 and "pn" in r.stdout.lower()
