import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from excess_noise.cli import main
from excess_noise.config import parse_config, set_path, validate_config
from excess_noise.errors import ConfigError
from excess_noise.runner import CSV_COLUMNS, fit_power_law, run_solve, run_sweep, sweep_rows

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _base(**over):
    data = {
        "basis": {"kind": "box", "n_modes": 4, "box_length": 10.0, "grid_points": 257},
        "gain": {"indicator": "uniform", "strength": 1.0},
    }
    data.update(over)
    return data


def test_minimal_document_parses():
    cfg = parse_config((CONFIGS / "minimal.json").read_text())
    assert cfg.basis.n_modes == 4 and cfg.loss is None and cfg.threshold is False


@pytest.mark.parametrize(
    "patch, path",
    [
        ({"gain": {"indicator": "uniform", "strength": -1.0}}, "gain.strength"),
        ({"gain": {"indicator": {"interval": [2.0, 99.0]}, "strength": 1.0}}, "gain.indicator"),
        ({"gain": {"indicator": {"interval": [3.0, 2.0]}, "strength": 1.0}}, "gain.indicator"),
        ({"gain": {"indicator": "everywhere", "strength": 1.0}}, "gain.indicator"),
        ({"gain": {"indicator": {"samples": [1.0, 2.0]}, "strength": 1.0}}, "gain.indicator"),
        ({"loss": {"indicator": "uniform", "strength": float("nan")}}, "loss.strength"),
        ({"threshold": True}, "threshold"),
        ({"colour": "blue"}, "colour"),
    ],
)
def test_config_errors_name_the_field(patch, path):
    with pytest.raises(ConfigError) as info:
        validate_config(_base(**patch))
    assert info.value.path == path


def test_missing_and_malformed():
    data = _base()
    del data["basis"]["grid_points"]
    with pytest.raises(ConfigError) as info:
        validate_config(data)
    assert info.value.path == "basis.grid_points"
    with pytest.raises(ConfigError):
        parse_config("{not json")
    with pytest.raises(ConfigError):
        parse_config("[1, 2]")


def test_samples_indicator_matches_interval():
    cfg = validate_config(_base(gain={"indicator": {"interval": [2.5, 5.0]}, "strength": 1.0}))
    x = np.linspace(0, 10.0, 257)
    ind = ((x >= 2.5) & (x <= 5.0)).astype(float)
    ind[np.isclose(x, 2.5) | np.isclose(x, 5.0)] = 0.5
    cfg2 = validate_config(_base(gain={"indicator": {"samples": ind.tolist()}, "strength": 1.0}))
    a, b = run_solve(cfg)["report"], run_solve(cfg2)["report"]
    assert a["K"] == pytest.approx(b["K"], rel=1e-12)


def test_config_hash_is_canonical():
    a = validate_config(_base())
    b = validate_config(json.loads(json.dumps(_base(), sort_keys=True)))
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != set_path(a, "gain.strength", 2.0).config_hash()


def test_set_path_rejects_bad_targets():
    cfg = validate_config(_base())
    with pytest.raises(ConfigError):
        set_path(cfg, "basis.kind", 1.0)
    with pytest.raises(ConfigError):
        set_path(cfg, "gain.nothing", 1.0)
    with pytest.raises(ConfigError):
        set_path(cfg, "gain.strength", -1.0)


def test_sweep_empty_values_gives_header_only():
    text = run_sweep(validate_config(_base()), "gain.strength", [])
    assert text == ",".join(CSV_COLUMNS) + "\n"


def test_sweep_csv_round_trips_floats():
    text = run_sweep(validate_config(_base()), "gain.strength", [0.5, 1.5])
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [float(r["value"]) for r in rows] == [0.5, 1.5]
    assert float(rows[1]["lambda"]) == pytest.approx(3 * float(rows[0]["lambda"]), rel=1e-12)
    assert "\r" not in text


def test_bandwidth_exponent():
    cfg = parse_config((CONFIGS / "bandwidth.json").read_text())
    offsets = [300.0, 1000.0, 3000.0, 10000.0]
    rows = sweep_rows(cfg, "basis.frequency_offset", offsets)
    slope = fit_power_law([r["Omega"] for r in rows], [r["ratio_excess"] for r in rows])
    assert slope == pytest.approx(-2.0, abs=0.1)


def test_cli_exit_codes(tmp_path, capsys):
    good = tmp_path / "good.json"
    good.write_text(json.dumps(_base()))
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(_base(gain={"indicator": "uniform", "strength": -1})))
    coarse = tmp_path / "coarse.json"
    coarse.write_text(json.dumps(_base(basis={"kind": "box", "n_modes": 40, "box_length": 1.0, "grid_points": 64})))
    assert main(["solve", "--config", str(good)]) == 0
    assert json.loads(capsys.readouterr().out)["report"]["K"] >= 1.0
    assert main(["solve", "--config", str(bad)]) == 2
    assert "gain.strength" in capsys.readouterr().err
    assert main(["solve", "--config", str(coarse)]) == 2
    assert main(["solve", "--config", str(tmp_path / "absent.json")]) == 2
    assert main(["sweep", "--config", str(good), "--param", "basis.kind", "--values", "1"]) == 2
    assert main(["sweep", "--config", str(good), "--param", "gain.strength", "--values", "a,b"]) == 2


def test_cli_validate_and_csv(tmp_path, capsys):
    good = tmp_path / "good.json"
    good.write_text(json.dumps(_base(gain={"indicator": {"interval": [1.0, 6.0]}, "strength": 0.5})))
    out = tmp_path / "v.json"
    assert main(["validate", "--config", str(good), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["dynamics"]["status"] == "pass"
    assert main(["solve", "--config", str(good), "--format", "csv"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 1 and rows[0]["value"] == ""
    lossy = tmp_path / "lossy.json"
    lossy.write_text(json.dumps(_base(loss={"indicator": "uniform", "strength": 1.0})))
    assert main(["validate", "--config", str(lossy)]) == 2


def test_cli_solve_is_deterministic(tmp_path):
    cfg = CONFIGS / "minimal.json"
    cmd = [sys.executable, "-m", "excess_noise.cli", "solve", "--config", str(cfg)]
    first = subprocess.run(cmd, capture_output=True, check=True).stdout
    second = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert first == second and b"config_hash" in first
