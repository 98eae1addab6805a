import hashlib
import subprocess
import sys

import pytest

from devlab import cli
from devlab.engine import InvariantViolation
from devlab.io import read_csv


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = cli.main([*args, "--out", str(out)])
    return code, out


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_simulate_outputs(tmp_path):
    code, out = run(tmp_path, "simulate", "--policy", "ternary", "--T", "50", "--trials", "4", "--svg",
                    "--full-records")
    assert code == 0
    rid, header, rows = read_csv(out / "regret_curve.csv")
    assert header == ["t", "mean_cum_regret", "p25", "p75"] and len(rows) == 50
    assert read_csv(out / "final_summary.csv")[1] == ["mean", "two_sigma"]
    assert read_csv(out / "rounds_trial0.csv")[0] == rid
    assert (out / "regret_curve.svg").exists()
    manifest = (out / "manifest.json").read_text()
    assert rid in manifest


def test_simulate_is_byte_identical(tmp_path):
    args = ["simulate", "--policy", "straightforward", "--T", "10", "--trials", "1", "--seed", "7"]
    _, a = run(tmp_path, *args, name="a")
    _, b = run(tmp_path, *args, name="b")
    for f in ("regret_curve.csv", "final_summary.csv"):
        assert digest(a / f) == digest(b / f)


def test_workers_and_backend_do_not_change_output(tmp_path):
    args = ["simulate", "--policy", "myopic", "--T", "200", "--trials", "9"]
    _, a = run(tmp_path, *args, "--workers", "1", name="a")
    _, b = run(tmp_path, *args, "--workers", "3", "--backend", "python", name="b")
    assert digest(a / "regret_curve.csv") == digest(b / "regret_curve.csv")


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("policy=ternary\nT=30\ntrials=2\nc-eps=0.5\n")
    opts = cli.resolve_options("simulate", {"T": 40}, str(cfg))
    assert (opts["policy"], opts["T"], opts["trials"], opts["c_eps"]) == ("ternary", 40, 2, 0.5)
    code, out = run(tmp_path, "simulate", "--config", str(cfg), "--T", "40")
    assert code == 0
    assert len(read_csv(out / "regret_curve.csv")[2]) == 40


@pytest.mark.parametrize("args", [
    ["simulate"],
    ["simulate", "--policy", "greedy"],
    ["simulate", "--policy", "straightforward", "--c-eps", "0.3"],
    ["simulate", "--policy", "ternary", "--T", "0"],
    ["simulate", "--policy", "ternary", "--workers", "0"],
    ["shrink-experiment", "--widths", "1.6"],
    ["myopic-profile", "--x", "0"],
])
def test_usage_errors(tmp_path, args, capsys):
    code, _ = run(tmp_path, *args)
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("colour=blue\n")
    assert run(tmp_path, "simulate", "--policy", "ternary", "--config", str(cfg))[0] == 2


def test_invariant_violation_exit_code(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise InvariantViolation(1, 3, 17)

    monkeypatch.setattr(cli, "run_batch", boom)
    assert run(tmp_path, "simulate", "--policy", "ternary", "--T", "20", "--trials", "1")[0] == 3


def test_shrink_and_regret(tmp_path):
    code, out = run(tmp_path, "shrink-experiment", "--widths", "0.3,0.75", "--samples", "200")
    assert code == 0
    _, header, rows = read_csv(out / "shrink.csv")
    assert header == ["policy", "width", "shrink_pct", "shrink_pct_se"]
    assert {r[0] for r in rows} == {"straightforward", "myopic", "eve_exploration", "ternary"}
    code, out = run(tmp_path, "per-round-regret", "--policy", "ternary", "--widths", "0.3", "--samples", "100")
    assert code == 0
    assert read_csv(out / "per_round_regret.csv")[1] == ["policy", "width", "regret", "regret_se"]


def test_myopic_profile_structure(tmp_path):
    code, out = run(tmp_path, "myopic-profile", "--points", "51")
    assert code == 0
    _, header, rows = read_csv(out / "myopic_profile.csv")
    assert header == ["l", "rho", "value", "case"] and len(rows) == 6 * 51
    optima = {float(r[0]): r for r in read_csv(out / "myopic_optima.csv")[2]}
    for lo in (-0.8, -0.4):
        assert float(optima[lo][1]) == 0.0
    for lo in (0.2, 0.4):
        assert float(optima[lo][1]) == pytest.approx(float(optima[lo][4]), abs=1e-12)


def test_diagnostics_command(tmp_path):
    code, out = run(tmp_path, "diagnostics", "--T", "300", "--trials", "3", "--every", "100")
    assert code == 0
    _, header, rows = read_csv(out / "diagnostics.csv")
    assert header[:3] == ["policy", "t", "count_obey"] and len(rows) == 6
    summary = read_csv(out / "diagnostics_summary.csv")[2]
    assert all(float(r[-1]) <= 1e-9 for r in summary)
    assert "acc_gap_ternary_minus_straightforward" in (out / "manifest.json").read_text()


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "devlab.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "0.1.0" in proc.stdout
