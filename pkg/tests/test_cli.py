import csv
import io
import json
import subprocess
import sys

import pytest

from sepmix import cli


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate_defaults(capsys):
    code, out, _ = run_cli(capsys, "validate", "--seed", "1")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert len(rows) >= 5 and all(r["status"] == "PASS" for r in rows)


def test_validate_failure_exit_code(capsys, monkeypatch):
    broken = (("always_fails", lambda rng: (False, "forced")),) + cli.CHECKS
    monkeypatch.setattr(cli, "CHECKS", broken)
    code, _, err = run_cli(capsys, "validate", "--seed", "1")
    assert code == 1 and "always_fails" in err


def test_scaling_record_count(capsys):
    code, out, _ = run_cli(
        capsys, "scaling", "--law", "uniform(0.6,0.9)", "--grid", "8,12,16,24", "--replicas", "20", "--seed", "2"
    )
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert len(rows) == 4 * 5 + 1
    assert rows[-1]["estimator"] == "loglog_slope"


def test_malformed_law_writes_nothing(capsys, tmp_path):
    target = tmp_path / "out.csv"
    code, out, err = run_cli(capsys, "simulate", "--law", "uniform(0.6", "--out", str(target))
    assert code == 2 and out == ""
    assert not target.exists() and not target.with_suffix(".json").exists()
    assert "malformed" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["exact", "--eps", "1.5"],
        ["simulate", "--law", "twopoint(1,0.25,0.5)"],
        ["scaling", "--grid", "32,16,64,128"],
        ["boundary", "--c", "0.7"],
        ["exact", "--n", "4", "--rho", "0.1"],
    ],
)
def test_usage_errors(capsys, argv):
    assert run_cli(capsys, *argv)[0] == 2


def test_byte_identical_output(tmp_path):
    paths = []
    for i in range(2):
        p = tmp_path / f"run{i}.csv"
        assert cli.main(["simulate", "--n", "16", "--replicas", "20", "--seed", "4", "--out", str(p)]) == 0
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    a, b = (json.loads(p.with_suffix(".json").read_text()) for p in paths)
    assert a == b and a["seed"] == 4


def test_config_merging(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 3, "law": "constant(0.5)", "seed": 9}))
    code, out, _ = run_cli(capsys, "boundary", "--config", str(cfg), "--replicas", "200", "--n", "2")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    # the flag wins over the config file
    assert {r["M"] for r in rows} == {"2"}


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"nn": 3}))
    assert run_cli(capsys, "exact", "--config", str(cfg))[0] == 2


@pytest.mark.parametrize("command", ["exact", "censor", "boundary"])
def test_commands_produce_csv(capsys, command):
    code, out, _ = run_cli(capsys, command, "--seed", "1", "--n", "5" if command != "boundary" else "4")
    assert code == 0
    assert len(out.splitlines()) >= 2


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "sepmix", "exact", "--n", "4", "--law", "constant(0.7)"],
        capture_output=True, text=True, check=False,
    )
    lines = proc.stdout.splitlines()
    assert proc.returncode == 0
    assert lines[0] == "quantity,value" and lines[1].startswith("mixing_time,")
