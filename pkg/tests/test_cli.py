import json
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from conftest import TRADE_HEADER, make_fixture_data, write_csv
from tradecast.cli import main

GBDT_FAST = ["--learning-rate", "0.1", "--max-rounds", "200", "--early-stopping-rounds", "50",
             "--min-data-in-leaf", "5"]


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def all_commands(data_dir, out):
    trade, econ = data_dir / "trade.csv", data_dir / "econ.csv"
    data = ["--trade", trade, "--econ", econ, "--out", out, "--seed", 7]
    return [
        ["join", *data],
        ["correlate", *data],
        ["top-exporters", *data, "--commodity", "Beef", "--n", 5],
        ["project", *data, "--exporter", "CHN", "--commodity", "Beef"],
        ["cluster", *data, "--k", 3],
        ["arima", *data, "--exporter", "CHN", "--commodity", "Beef", "--train-end", 2010,
         "--horizon", 5],
        ["gbdt", "train", *data, *GBDT_FAST],
        ["gbdt", "predict", *data],
        ["gbdt", "importance", "--out", out, "--kind", "gain"],
        ["gbdt", "evaluate", *data],
    ]


@pytest.fixture
def data_dir(tmp_path):
    make_fixture_data(tmp_path)
    return tmp_path


def test_join_reports_counts(data_dir, capsys):
    code, out, _ = run(capsys, "join", "--trade", data_dir / "trade.csv",
                       "--econ", data_dir / "econ.csv", "--out", data_dir / "o")
    assert code == 0
    assert "→" in out
    n_trade = len((data_dir / "trade.csv").read_text().splitlines()) - 1
    n_panel = len((data_dir / "o" / "panel.csv").read_text().splitlines()) - 1
    assert out.startswith(f"join: {n_trade} → {n_panel} rows")
    assert n_panel == n_trade - 1


def test_disjoint_join_warns(tmp_path, capsys):
    trade = write_csv(tmp_path / "t.csv", TRADE_HEADER, [["AUS", "JPN", "Beef", 2000, 5]])
    econ = write_csv(tmp_path / "e.csv", ["origin_iso3", "dest_iso3", "year", "gdp"],
                     [["USA", "CHN", 2000, 1]])
    code, _, err = run(capsys, "join", "--trade", trade, "--econ", econ, "--out", tmp_path)
    assert code == 0 and "0 rows" in err


def test_missing_file_error(tmp_path, capsys):
    code, _, err = run(capsys, "join", "--trade", tmp_path / "nope.csv", "--econ",
                       tmp_path / "nope2.csv", "--out", tmp_path)
    assert code == 1 and err.startswith("error: MissingFile:")


def test_every_subcommand_writes_outputs(data_dir, capsys):
    out = data_dir / "out"
    for argv in all_commands(data_dir, out):
        code, _, err = run(capsys, *argv)
        assert code == 0, (argv, err)
    names = {p.name for p in out.iterdir()}
    assert {"panel.csv", "correlation.csv", "correlation.svg", "top_exporters.csv",
            "top_exporters.svg", "projection.csv", "projection.svg", "clusters.csv", "arima.csv",
            "model.txt", "predictions.csv", "importance.csv", "metrics_Beef.json",
            "metrics_Corn.json"} <= names
    for svg in out.glob("*.svg"):
        assert ET.parse(svg).getroot().tag.endswith("svg")
    top = (out / "top_exporters.csv").read_text().splitlines()
    assert top[0] == "rank,country,total_value_usd" and len(top) == 6
    assert [r.split(",")[1] for r in top[1:3]] == ["CHN", "USA"]
    metrics = json.loads((out / "metrics_Beef.json").read_text())
    assert set(metrics) == {"commodity", "r2", "rounds_used", "best_round"}
    assert metrics["r2"] > 0.5


def test_cluster_separates_giants(data_dir, capsys):
    code, out, _ = run(capsys, "cluster", "--trade", data_dir / "trade.csv",
                       "--econ", data_dir / "econ.csv", "--out", data_dir / "o")
    assert code == 0
    assert out.splitlines()[0] == "Cluster 1: CHN, USA"


def test_arima_console_marks_absent_actuals(data_dir, capsys):
    code, out, _ = run(capsys, "arima", "--trade", data_dir / "trade.csv", "--econ",
                       data_dir / "econ.csv", "--out", data_dir, "--exporter", "USA",
                       "--commodity", "Beef", "--order", "0,1,0", "--train-end", 2011,
                       "--horizon", 4)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("ARIMA(0,1,0)+drift")
    body = [ln.split() for ln in lines[2:]]
    assert [b[0] for b in body] == ["2012", "2013", "2014", "2015"]
    assert body[1][1] != "X" and body[2][1] == "X" and body[3][1] == "X"
    csv = (data_dir / "arima.csv").read_text().splitlines()
    assert csv[3].split(",")[1] == ""


def test_config_file_precedence(data_dir, capsys):
    cfg = data_dir / "run.cfg"
    cfg.write_text(f"# settings\ntrade = {data_dir / 'trade.csv'}\necon = {data_dir / 'econ.csv'}\n"
                   "commodity = Beef\nn = 2\n", encoding="utf-8")
    code, out, _ = run(capsys, "top-exporters", "--config", cfg, "--out", data_dir / "a")
    assert code == 0 and len(out.splitlines()) == 2
    code, out, _ = run(capsys, "top-exporters", "--config", cfg, "--n", 3,
                       "--out", data_dir / "b")
    assert code == 0 and len(out.splitlines()) == 3


def test_config_unknown_key(data_dir, capsys):
    cfg = data_dir / "bad.cfg"
    cfg.write_text("bogus = 1\n", encoding="utf-8")
    code, _, err = run(capsys, "correlate", "--config", cfg)
    assert code == 1 and err.startswith("error: ConfigError:")


def test_unknown_commodity(data_dir, capsys):
    code, _, err = run(capsys, "top-exporters", "--trade", data_dir / "trade.csv",
                       "--econ", data_dir / "econ.csv", "--commodity", "Gold")
    assert code == 1 and "ConfigError" in err


def test_constant_holdout_target_reports_error(tmp_path, capsys):
    rows, econ = [], []
    for y in range(2000, 2010):
        rows.append(["AUS", "JPN", "Beef", y, 100 if y >= 2008 else 50 + y % 3])
        econ.append(["AUS", "JPN", y, y % 4])
    trade = write_csv(tmp_path / "t.csv", TRADE_HEADER, rows)
    econ = write_csv(tmp_path / "e.csv", ["origin_iso3", "dest_iso3", "year", "x"], econ)
    base = ["--trade", trade, "--econ", econ, "--out", tmp_path]
    assert run(capsys, "gbdt", "train", *base, "--min-data-in-leaf", 1,
               "--early-stopping-rounds", 5, "--max-rounds", 20)[0] == 0
    code, _, err = run(capsys, "gbdt", "evaluate", *base)
    assert code == 1 and err.startswith("error: ZeroVariance:")


def test_determinism_with_seed(data_dir, capsys):
    for run_dir in ("r1", "r2"):
        for argv in all_commands(data_dir, data_dir / run_dir):
            assert run(capsys, *argv)[0] == 0
    files = sorted(p.name for p in (data_dir / "r1").iterdir())
    assert files == sorted(p.name for p in (data_dir / "r2").iterdir())
    for name in files:
        assert (data_dir / "r1" / name).read_bytes() == (data_dir / "r2" / name).read_bytes(), name


def test_module_entry_point(data_dir):
    proc = subprocess.run([sys.executable, "-m", "tradecast", "join", "--trade",
                           str(data_dir / "trade.csv"), "--econ", str(data_dir / "econ.csv"),
                           "--out", str(data_dir / "m")], capture_output=True, text=True)
    assert proc.returncode == 0 and Path(data_dir / "m" / "panel.csv").exists()
