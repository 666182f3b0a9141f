import csv
import json
import math
import subprocess
import sys

import pytest

from orbitbeam import cli
from orbitbeam.errors import NumericFailure
from orbitbeam.validation import CheckResult

SMALL = """\
[run]
trials = 300
seed = 21
precoders = fixed, zf

[users]
lambda = 1e-11
r1_m = 250000

[beams]
m_values = 16
"""


@pytest.fixture
def small(tmp_path):
    p = tmp_path / "small.ini"
    p.write_text(SMALL)
    return p


def _table(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    return list(csv.DictReader(lines))


def test_export_grid_writes_one_table_per_m(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["export-grid", "--out", str(out)]) == 0
    for m in (16, 32, 64, 128, 256):
        text = (out / f"grid_M{m}.csv").read_text()
        assert text.startswith("# orbitbeam ")
        assert "# config: {" in text


def test_simulate_reproduces_from_its_own_header(tmp_path, small):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["simulate", "--config", str(small), "--out", str(a)]) == 0
    assert cli.main(["simulate", "--config", str(a / "simulate.csv"), "--out", str(b)]) == 0
    assert (a / "simulate.csv").read_bytes() == (b / "simulate.csv").read_bytes()
    rows = _table(a / "simulate.csv")
    assert {r["precoder"] for r in rows} == {"fixed", "zf"}
    assert all(int(r["trials"]) == 300 for r in rows if r["precoder"] == "fixed")


def test_seed_flag_overrides_config(tmp_path, small):
    a, b = tmp_path / "a", tmp_path / "b"
    cli.main(["simulate", "--config", str(small), "--out", str(a)])
    cli.main(["simulate", "--config", str(small), "--out", str(b), "--seed", "22"])
    assert "# seed: 22" in (b / "simulate.csv").read_text()
    assert _table(a / "simulate.csv") != _table(b / "simulate.csv")


def test_log_base_two_reports_bits(tmp_path, small):
    e, two = tmp_path / "e", tmp_path / "2"
    cli.main(["simulate", "--config", str(small), "--out", str(e)])
    cli.main(["simulate", "--config", str(small), "--out", str(two), "--log-base", "2"])
    assert "# units: bits" in (two / "simulate.csv").read_text()
    for re_, r2 in zip(_table(e / "simulate.csv"), _table(two / "simulate.csv")):
        assert float(r2["rate"]) == pytest.approx(float(re_["rate"]) / math.log(2))


def test_json_output_and_trace(tmp_path, small):
    out = tmp_path / "j"
    assert cli.main(["simulate", "--config", str(small), "--out", str(out), "--format",
                     "json", "--trace"]) == 0
    doc = json.loads((out / "simulate.json").read_text())
    assert doc["seed"] == 21 and len(doc["config_hash"]) == 16
    assert doc["columns"][:3] == ["M", "lambda", "precoder"]
    trace = _table(out / "trace_M16_lam0.csv")
    assert trace and set(trace[0]) >= {"trial", "beam", "sinr", "rate"}
    # the JSON document itself is a valid --config
    assert cli.main(["export-grid", "--config", str(out / "simulate.json"),
                     "--out", str(tmp_path / "g")]) == 0


def test_config_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[run]\nseed = 1\nsede = 2\n")
    assert cli.main(["analytic", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "line 3" in capsys.readouterr().err
    assert cli.main(["simulate", "--seed", "-1", "--out", str(tmp_path)]) == 2


def test_numeric_failure_exits_3_with_partial_output(tmp_path, monkeypatch, capsys):
    calls = []

    def flaky(*args, **kwargs):
        calls.append(1)
        if len(calls) > 1:
            raise NumericFailure("quadrature refinement changed the rate", partial=(1.0, 2.0))
        return 1.0

    monkeypatch.setattr(cli, "ergodic_rate_single", flaky)
    monkeypatch.setattr(cli, "ideal_rate_single", lambda *a, **k: 2.0)
    assert cli.main(["analytic", "--out", str(tmp_path)]) == 3
    assert "numeric failure" in capsys.readouterr().err
    assert not (tmp_path / "analytic.csv").exists()
    rows = _table(tmp_path / "analytic.csv.partial")
    assert len(rows) == 1 and float(rows[0]["rate"]) == 1.0


def test_failed_validation_exits_1(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(cli, "quick_suite", lambda *a, **k: [
        CheckResult("good", True, 0.0, "ok"), CheckResult("bad", False, 1.0, "off")])
    assert cli.main(["validate", "--out", str(tmp_path)]) == 1
    out = capsys.readouterr().out
    assert "PASS  good" in out and "FAIL  bad" in out
    assert len(_table(tmp_path / "validate.csv")) == 2


def test_analytic_multibeam_table(tmp_path):
    cfg = tmp_path / "mb.ini"
    cfg.write_text("[run]\nscenario = grid-bound\n[beams]\nm_values = 32\n[users]\nlambda = 1e-10\n")
    assert cli.main(["analytic", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    (row,) = _table(tmp_path / "analytic.csv")
    assert row["mode"] == "multibeam" and row["k_beams"] == "9"
    assert float(row["rate"]) < float(row["ideal_rate"])


def test_console_script_entry_point():
    r = subprocess.run([sys.executable, "-m", "orbitbeam.cli", "--version"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("orbitbeam ")
    r = subprocess.run([sys.executable, "-m", "orbitbeam.cli", "frobnicate"],
                       capture_output=True, text=True)
    assert r.returncode == 2
