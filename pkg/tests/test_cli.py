import csv
import io
import json
import subprocess
import sys

import pytest

from mpcfl.cli import main, parse_cli
from mpcfl.errors import ConfigError, UsageError
from mpcfl.orchestrator import ExperimentConfig


def test_parse_flags():
    cfg = parse_cli(["--parties", "16", "--committee", "3", "--topology", "two-phase", "--scheme", "shamir"])
    assert (cfg.n, cfg.m, cfg.topology, cfg.scheme) == (16, 3, "two-phase", "shamir")
    assert parse_cli(["run", "--epochs", "2"]).e == 2


def test_parse_defaults():
    assert parse_cli([]) == ExperimentConfig()


def test_parse_rejects_committee_larger_than_n():
    with pytest.raises(ConfigError):
        parse_cli(["--parties", "3", "--committee", "5"])


def test_parse_rejects_unknown_flag():
    with pytest.raises(UsageError):
        parse_cli(["--bogus"])
    with pytest.raises(UsageError):
        parse_cli(["--scheme", "xor"])


def test_main_exit_codes(capsys):
    assert main(["--bogus"]) == 2
    assert main(["--parties", "3", "--committee", "5"]) == 1
    assert "exceeds" in capsys.readouterr().err


def test_main_run_to_stdout(capsys):
    assert main(["--parties", "3", "--committee", "2", "--epochs", "1", "--rows", "20", "--mode", "local"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["config"]["n"] == 3 and rep["match"]["msg_num"]


def test_main_costs(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["costs", "--n-min", "4", "--n-max", "16", "--n-step", "12", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [(r["n"], r["topology"], r["msg_num"]) for r in rows] == [
        ("4", "p2p", "360"),
        ("4", "two-phase", "294"),
        ("16", "p2p", "7200"),
        ("16", "two-phase", "1470"),
    ]


def test_main_sweep_simulate_only(capsys):
    assert main(["sweep", "--n-values", "4,8", "--epochs", "1", "--simulate-only"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 4 and all(r["error"] == "" for r in rows)


def test_main_gen_data_then_run(tmp_path, capsys):
    d = tmp_path / "data"
    assert main(["gen-data", "--parties", "3", "--rows", "20", "--out", str(d)]) == 0
    assert sorted(p.name for p in d.iterdir()) == ["heldout.csv", "party_1.csv", "party_2.csv", "party_3.csv"]
    out = tmp_path / "r.json"
    log = tmp_path / "log.tsv"
    args = ["run", "--parties", "3", "--committee", "2", "--epochs", "1", "--data", str(d), "--out", str(out), "--log", str(log)]
    assert main(args) == 0
    assert json.loads(out.read_text())["heldout"] is not None
    assert log.read_text().splitlines()[0].count("\t") == 4


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "mpcfl", "costs", "--n-min", "4", "--n-max", "4"], capture_output=True, text=True)
    assert r.returncode == 0
    assert r.stdout.splitlines()[1] == "4,p2p,360,87120"
