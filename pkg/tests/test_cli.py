import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from dislogeo import __version__
from dislogeo.cli import ResultRecord, run, sweep
from dislogeo.config import parse_config
from dislogeo.errors import ConfigError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

CASES = [
    ("anholonomy", "helical.ini"),
    ("density", "helical.ini"),
    ("burgers", "helical.ini"),
    ("frank", "helical.ini"),
    ("anholonomy", "holonomic.ini"),
    ("density", "custom_frame.ini"),
    ("burgers", "custom_frame.ini"),
    ("curvature", "hyperbolic_metric.ini"),
    ("curvature", "helical.ini"),
    ("surfaces", "equidistant_surfaces.ini"),
    ("thermal", "thermal.ini"),
]


@pytest.mark.parametrize("command, config", CASES)
def test_commands_pass_on_example_configs(command, config, tmp_path, capsys):
    code = run([command, "--config", str(CONFIGS / config), "--out", str(tmp_path), "--grid", "3"])
    assert code == 0, capsys.readouterr().err
    rec = ResultRecord.from_json((tmp_path / f"{command}.json").read_text())
    assert rec.command == command and rec.version == __version__
    assert rec.passed and rec.residuals


def test_json_round_trip(tmp_path):
    run(["burgers", "--config", str(CONFIGS / "helical.ini"), "--out", str(tmp_path)])
    text = (tmp_path / "burgers.json").read_text().strip()
    assert ResultRecord.from_json(text).to_json() == text
    data = json.loads(text)
    assert set(data) == {"command", "input_digest", "version", "results", "residuals", "tolerances", "flags"}


def test_csv_sweep(tmp_path):
    run(["density", "--config", str(CONFIGS / "helical.ini"), "--out", str(tmp_path), "--grid", "2", "--csv"])
    with open(tmp_path / "density.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:3] == ["X1", "X2", "X3"]
    assert len(rows) == 1 + 8
    assert all(len(r) == len(rows[0]) for r in rows)


def test_output_is_independent_of_thread_count(tmp_path, monkeypatch):
    outputs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("DISLOGEO_THREADS", threads)
        out = tmp_path / threads
        run(["density", "--config", str(CONFIGS / "custom_frame.ini"), "--out", str(out), "--grid", "4"])
        outputs.append((out / "density.json").read_bytes())
    assert outputs[0] == outputs[1]


def test_sweep_preserves_order():
    import numpy as np

    X = np.arange(30.0).reshape(10, 3)
    out = sweep(lambda P: P.sum(axis=1), X, chunk=3)
    assert out.tolist() == X.sum(axis=1).tolist()


def test_stdout_when_no_out_dir(capsys):
    assert run(["anholonomy", "--frame", "helical", "--grid", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["command"] == "anholonomy"


def test_residual_failure_exit_code(tmp_path):
    assert run(["burgers", "--config", str(CONFIGS / "helical.ini"), "--out", str(tmp_path), "--tol", "0"]) == 1


def test_numeric_error_exit_code(tmp_path, capsys):
    assert run(["burgers", "--config", str(CONFIGS / "broken_loop.ini"), "--out", str(tmp_path)]) == 3
    assert "OpenLoop" in capsys.readouterr().err


@pytest.mark.parametrize(
    "text",
    [
        "[frame]\ncatalog = nothing\n",
        "[frame]\ne11 = X1 +\n",
        "[frame]\ncatalog = helical\ngamma = q\n",
        "[bogus]\nx = 1\n",
        "[frame]\ncatalog = helical\n[grid]\nn = 0\n",
    ],
)
def test_config_errors_exit_two(text, tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text(text)
    assert run(["density", "--config", str(path)]) == 2


def test_missing_config_and_frame():
    assert run(["density"]) == 2
    assert run(["density", "--config", "/nonexistent/run.ini"]) == 2


def test_missing_sections_are_config_errors():
    cfg = parse_config("[params]\nk = 1\n")
    with pytest.raises(ConfigError):
        cfg.require_frame()


def test_digest_tracks_input():
    a = parse_config("[frame]\ncatalog = helical\ngamma = 0.5\n")
    b = parse_config("[frame]\ncatalog = helical\ngamma = 0.6\n")
    assert a.digest != b.digest and len(a.digest) == 16


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "dislogeo.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "anholonomy" in out.stdout
