import csv
import json
import subprocess
import sys

import pytest

from errfloat.cli import main
from errfloat.experiments import StatsSummary, samples_from_csv


def test_run_smoke(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", "--per-depth", "1", "--seed", "4", "-o", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["manifest.json", "samples.csv", "summary.json"]
    samples = samples_from_csv((out / "samples.csv").read_text())
    assert len(samples) == 90
    summary = StatsSummary.from_json((out / "summary.json").read_text())
    assert summary.n_samples == 90 and summary.te_bits == 21
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 4 and manifest["per_depth"] == 1
    assert manifest["config"]["t_bits"] == 31 and manifest["mode"] == "exact"
    assert "900" not in capsys.readouterr().out


def test_run_flags_reach_config(tmp_path):
    out = tmp_path / "run"
    code = main(["run", "--t-bits", "24", "--te-bits", "12", "--rthd", "1e-4", "--eez", "1e-5",
                 "--qeps", "1e-9", "--kmin", "-0.5", "--kmax", "2.5", "--cmin", "0", "--cmax", "1.5",
                 "--per-depth", "1", "--depths", "1,2", "--mode", "k", "-o", str(out)])
    assert code == 0
    cfg = json.loads((out / "manifest.json").read_text())["config"]
    assert cfg == {"t_bits": 24, "te_bits": 12, "rthd": 1e-4, "eez": 1e-5, "qeps": 1e-9, "k_min": -0.5,
                   "k_max": 2.5, "c_min": 0.0, "c_max": 1.5, "track_re_m": True}
    summary = StatsSummary.from_json((out / "summary.json").read_text())
    assert summary.n_problems == 6
    assert summary.n_samples == 10 * (6 - summary.n_failed)


def test_config_file_with_flag_override(tmp_path):
    conf = tmp_path / "ee.conf"
    conf.write_text("te_bits = 16\nrthd = 1e-2\n")
    out = tmp_path / "run"
    assert main(["run", "--config", str(conf), "--rthd", "1e-3", "--per-depth", "1", "-o", str(out)]) == 0
    cfg = json.loads((out / "manifest.json").read_text())["config"]
    assert cfg["te_bits"] == 16 and cfg["rthd"] == 1e-3


def test_sweep_one_by_one(tmp_path):
    out = tmp_path / "sweep"
    assert main(["sweep", "--te", "21", "--rthd", "1e-3", "--per-depth", "1", "-o", str(out)]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["grid.csv", "manifest.json", "summary_te21_rthd0.001.json"]
    rows = list(csv.DictReader((out / "grid.csv").open()))
    assert len(rows) == 1 and rows[0]["te_bits"] == "21"
    cell = StatsSummary.from_json((out / "summary_te21_rthd0.001.json").read_text())
    assert cell.rthd == 1e-3 and float(rows[0]["alpha"]) == cell.alpha


def test_sweep_grid(tmp_path):
    out = tmp_path / "sweep"
    assert main(["sweep", "--te", "21,16", "--rthd", "1e-4,1e-3", "--per-depth", "1", "-o", str(out)]) == 0
    rows = list(csv.DictReader((out / "grid.csv").open()))
    assert [(r["te_bits"], r["rthd"]) for r in rows] == [("21", "0.0001"), ("21", "0.001"),
                                                        ("16", "0.0001"), ("16", "0.001")]


@pytest.mark.parametrize("argv", [
    ["run", "--te-bits", "40", "--t-bits", "31", "-o", "x"],
    ["run", "--per-depth", "0", "-o", "x"],
    ["run", "--depths", "4", "-o", "x"],
    ["run", "--rthd", "2", "-o", "x"],
    ["run", "--mode", "z", "-o", "x"],
    ["run", "--per-depth", "1"],
    ["sweep", "--te", "", "-o", "x"],
    ["sweep", "--rthd", ",", "-o", "x"],
    ["sweep", "--te", "40", "-o", "x"],
    ["frobnicate"],
    [],
])
def test_usage_errors_exit_2(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2
    assert not (tmp_path / "x").exists()


def test_unwritable_output_exits_1(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "--per-depth", "1", "-o", str(blocker / "sub")]) == 1


def test_demo(capsys):
    assert main(["demo"]) == 0
    text = capsys.readouterr().out
    blocks = text.split("\n\n")
    assert "decision: equal" in blocks[1] and "values identical: False" in blocks[1]
    assert "decision: not equal" in blocks[2]
    assert "parallel (0 in interval of D)" in blocks[3]
    assert "parallel (0 in interval of D)" in blocks[4]
    assert "intersecting" in blocks[5]
    assert main(["demo", "--mode", "c"]) == 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "errfloat", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("errfloat ")
