from __future__ import annotations

import csv
import json

import pytest

from kslab.cli import (EXIT_BLOWUP, EXIT_INVARIANT, EXIT_OK, EXIT_USAGE, UsageError, main,
                       parse_dims, parse_floats)

SMALL_SOLVE = ["--dim", "3", "--nr", "128", "--t-end", "0.05", "--dt", "1e-2"]


def test_parse_helpers():
    assert parse_dims("3..6") == [3, 4, 5, 6]
    assert parse_dims("3,5") == [3, 5]
    assert parse_floats("0.1:0.3:0.1") == pytest.approx([0.1, 0.2, 0.3])
    assert parse_floats("1,2.5") == [1.0, 2.5]
    with pytest.raises(UsageError):
        parse_dims("x")


def test_version(capsys):
    assert main(["--version"]) == EXIT_OK
    assert "kslab" in capsys.readouterr().out


def test_constant_stdout(capsys):
    assert main(["constant"]) == EXIT_OK
    captured = capsys.readouterr()
    rows = list(csv.reader(captured.out.splitlines()))
    assert rows[0] == ["d", "lower", "C", "upper_1", "upper_2"]
    assert len(rows) == 9
    assert float(rows[1][2]) == pytest.approx(1.3113590848375969, rel=1e-12)
    assert "PASS chain-d3" in captured.err


def test_constant_json_and_manifest(tmp_path):
    out, man = tmp_path / "c.json", tmp_path / "m.json"
    assert main(["constant", "--dim", "3,20", "--format", "json", "--out", str(out),
                 "--manifest", str(man)]) == EXIT_OK
    data = json.loads(out.read_text())
    assert [row["d"] for row in data] == [3, 20]
    manifest = json.loads(man.read_text())
    assert manifest["command"] == "constant" and manifest["passed"] is True
    assert manifest["config"]["tol"] == 1e-10


def test_usage_errors(tmp_path):
    assert main(["constant", "--dim", "2"]) == EXIT_USAGE
    assert main(["solve", "--nr", "64"]) == EXIT_USAGE
    assert main(["profile", "--dim", "3", "--epsilon", "1.5", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["verify", "--check", "no-such-check"]) == EXIT_USAGE
    assert main(["nonsense"]) == EXIT_USAGE
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"bogus": 1}))
    assert main(["solve", "--config", str(bad)] + SMALL_SOLVE) == EXIT_USAGE
    assert main(["solve", "--config", str(tmp_path / "missing.json")] + SMALL_SOLVE) == EXIT_USAGE


def test_solve_outputs_and_manifest_roundtrip(tmp_path):
    first = tmp_path / "a"
    assert main(["solve", *SMALL_SOLVE, "--out", str(first)]) == EXIT_OK
    manifest = json.loads((first / "manifest.json").read_text())
    assert set(manifest["invariants"]) == {"bound", "monotonicity"}
    assert manifest["config"]["nr"] == 128
    second = tmp_path / "b"
    assert main(["solve", "--config", str(first / "manifest.json"), "--out", str(second)]) == EXIT_OK
    assert (first / "snapshots.csv").read_bytes() == (second / "snapshots.csv").read_bytes()


def test_config_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dim": "4", "nr": 96, "t-end": 0.02}))
    out = tmp_path / "o"
    assert main(["solve", "--config", str(cfg), "--nr", "64", "--out", str(out)]) == EXIT_OK
    conf = json.loads((out / "manifest.json").read_text())["config"]
    assert conf["nr"] == 64 and conf["t_end"] == 0.02 and str(conf["dim"]) == "4"


def test_solve_json_format(tmp_path):
    assert main(["solve", *SMALL_SOLVE, "--format", "json", "--out", str(tmp_path)]) == EXIT_OK
    data = json.loads((tmp_path / "snapshots.json").read_text())
    assert data["snapshots"][-1]["t"] == 0.05


def test_solve_blowup_exit(tmp_path):
    code = main(["solve", "--dim", "3", "--epsilon", "1.9", "--K", "4", "--nr", "128",
                 "--t-end", "0.5", "--cap", "1", "--out", str(tmp_path)])
    assert code == EXIT_BLOWUP
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["blow_up"]["classification"] == "nonexistent"


def test_barrier_command(tmp_path, capsys):
    assert main(["barrier", "--dim", "3", "--times", "0.5,1", "--nr", "64", "--out", str(tmp_path)]) == EXIT_OK
    err = capsys.readouterr().err
    for name in ("g-constancy-upper", "g-bound-lower", "ordering"):
        assert f"PASS {name}" in err
    with open(tmp_path / "barrier.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["which", "lambda", "t", "r", "m", "m_normalized"]
    assert len(rows) == 1 + 2 * 2 * 65
    assert main(["barrier", "--dim", "3", "--times", "0,1", "--out", str(tmp_path)]) == EXIT_USAGE


def test_verify_quick_subset(tmp_path, capsys):
    out = tmp_path / "v.json"
    assert main(["verify", "--check", "threshold-bounds", "--check", "g-constancy",
                 "--out", str(out)]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("PASS g-constancy") and lines[1].startswith("PASS threshold-bounds")
    assert json.loads(out.read_text())["passed"] is True


def test_verify_invariant_failure_exit():
    assert main(["verify", "--check", "profile-limits"]) == EXIT_INVARIANT


def test_profile_shoot(tmp_path):
    assert main(["profile", "--dim", "3", "--out", str(tmp_path)]) == EXIT_OK
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["a_star"] == pytest.approx(0.8468887759372592, rel=1e-8)
    assert (tmp_path / "profile_shoot.csv").exists()


def test_sweep_threshold(tmp_path):
    assert main(["sweep", "--kind", "threshold", "--dim", "3..5", "--out", str(tmp_path)]) == EXIT_OK
    with open(tmp_path / "sweep_threshold.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 4


def test_sweep_solve(tmp_path):
    assert main(["sweep", "--kind", "solve", "--dim", "3", "--epsilon", "0.3,0.6", "--K", "1,2",
                 "--nr", "64", "--t-end", "0.05", "--dt", "1e-2", "--out", str(tmp_path)]) == EXIT_OK
    with open(tmp_path / "sweep_solve.csv", newline="") as fh:
        assert len(list(csv.reader(fh))) == 5
