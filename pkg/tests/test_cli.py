from __future__ import annotations

import json
import subprocess
import sys

import pytest

from dirtsch.cli import main
from dirtsch.scenarios import SCENARIOS

SHORT = ["--duration", "2", "--nodes", "8"]


def test_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "r"
    assert main(["run", "--out", str(out), "--events", *SHORT]) == 0
    for name in ("report.json", "report.tsv", "schedule.csv", "topology.txt", "tree.txt",
                 "events.csv"):
        assert (out / name).is_file(), name
    rep = json.loads((out / "report.json").read_text())
    assert rep["mode"] == "directional" and rep["generated"] > 0
    assert (out / "schedule.csv").read_text().startswith(
        "period_start,slot,channel,tx,rx,tx_beam,rx_beam\n")
    assert "throughput at sink" in capsys.readouterr().out


def test_seed_repeat_is_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert main(["run", "--seed", "3", "--out", str(tmp_path / name), *SHORT]) == 0
    for f in ("report.json", "report.tsv", "schedule.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_config_file_and_missing_config(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("mode = omni\nduration = 1\nnodes = 6\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert json.loads((tmp_path / "o" / "report.json").read_text())["mode"] == "omni"
    assert main(["run", "--config", str(tmp_path / "missing.cfg")]) == 1
    assert "cannot read config" in capsys.readouterr().err


def test_bad_config_value_exits_one(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("nodes = lots\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert "c.cfg:1: field 'nodes'" in capsys.readouterr().err


def test_compare_ratios_recompute(tmp_path):
    out = tmp_path / "cmp"
    assert main(["compare", "--out", str(out), *SHORT]) == 0
    table = json.loads((out / "compare.json").read_text())
    d = json.loads((out / "directional" / "report.json").read_text())
    o = json.loads((out / "omni" / "report.json").read_text())
    for key, row in table.items():
        assert row["directional"] == d[key] and row["omni"] == o[key]
        if o[key]:
            assert row["ratio"] == pytest.approx(d[key] / o[key])
    tsv = (out / "compare.tsv").read_text().splitlines()
    assert tsv[0] == "metric\tdirectional\tomni\tdirectional/omni"
    assert len(tsv) == len(table) + 1


def test_compare_zero_traffic_prints_na(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("traffic_rate = 0\n")
    assert main(["compare", "--config", str(cfg), "--out", str(tmp_path / "z"), *SHORT]) == 0
    text = capsys.readouterr().out
    assert "n/a" in text
    table = json.loads((tmp_path / "z" / "compare.json").read_text())
    assert table["delay_mean"]["ratio"] is None


@pytest.mark.parametrize("name", list(SCENARIOS))
def test_scenarios_exit_zero(name, capsys):
    assert main(["scenario", name]) == 0
    assert "PASS" in capsys.readouterr().out


def test_unknown_scenario(capsys):
    assert main(["scenario", "nope"]) == 1
    err = capsys.readouterr().err
    assert all(name in err for name in SCENARIOS)


def test_list_scenarios(capsys):
    assert main(["list-scenarios"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert [ln.split()[0] for ln in out] == list(SCENARIOS)


@pytest.mark.parametrize("argv", [[], ["fly"], ["run", "--mode", "sideways"],
                                  ["run", "--seed", "x"]])
def test_usage_errors_exit_one(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 1


def test_console_module_entry(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "dirtsch.cli", "list-scenarios"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "walkthrough" in proc.stdout
