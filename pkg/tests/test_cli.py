import csv
import io
import json
import subprocess
import sys

import pytest

from anyonforge.cli import main, parse_word_file


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_model_check(capsys):
    code, out, _ = run(capsys, "model", "check", "fib")
    assert code == 0 and "PASS" in out.upper()
    code, _, _ = run(capsys, "model", "check", "su2k", "--k", "4")
    assert code == 0


def test_model_errors(capsys):
    code, _, err = run(capsys, "model", "check", "su2k", "--k", "17")
    assert code == 2 and err
    assert run(capsys, "model", "check", "nonsense")[0] == 2
    assert run(capsys, "model", "check", "su2k")[0] == 2


def test_model_table_monodromy(capsys):
    code, out, _ = run(capsys, "model", "table", "ising")
    assert code == 0
    lines = [ln for ln in out.splitlines() if ln.startswith("M") and "σ" in ln and "ψ" in ln]
    assert any("-1" in ln for ln in lines)


def test_forced_teleport_report(capsys, tmp_path):
    log = tmp_path / "t.jsonl"
    code, out, _ = run(
        capsys, "sim", "forced-teleport", "--model", "ising", "--method", "interferometric",
        "--trials", "2000", "--seed", "7", "--log", str(log),
    )
    report = json.loads(out)
    assert code == 0 and report["pass"]
    assert abs(report["z_score"]) <= 3
    lines = log.read_text().splitlines()
    assert json.loads(lines[0])["schema"] == "anyonforge-log/1"
    assert len(lines) == 2001


def test_forced_teleport_is_deterministic(capsys, tmp_path):
    outs = []
    for name in ("a", "b"):
        log = tmp_path / f"{name}.jsonl"
        code, out, _ = run(capsys, "sim", "forced-teleport", "--model", "fib", "--trials", "1", "--seed", "3", "--log", str(log))
        outs.append((out, log.read_bytes()))
    assert outs[0] == outs[1]


def test_forced_teleport_jobs_do_not_change_results(capsys, tmp_path):
    logs = []
    for jobs in ("1", "3"):
        log = tmp_path / f"j{jobs}.jsonl"
        run(capsys, "sim", "forced-teleport", "--model", "su2k", "--k", "3", "--method", "interferometric",
            "--trials", "60", "--seed", "11", "--jobs", jobs, "--log", str(log))
        logs.append(log.read_bytes())
    assert logs[0] == logs[1]


def test_seed_required(capsys):
    assert run(capsys, "sim", "forced-teleport", "--model", "ising")[0] == 2
    assert run(capsys, "sim", "forced-teleport", "--seed", "-1")[0] == 2
    assert run(capsys, "sim", "forced-teleport", "--seed", "1", "--trials", "0")[0] == 2


def test_braid_verify(capsys, tmp_path):
    log = tmp_path / "b.jsonl"
    code, out, _ = run(capsys, "sim", "braid-verify", "--model", "fib", "--trials", "20", "--seed", "1", "--log", str(log))
    report = json.loads(out)
    assert code == 0 and report["max_trace_distance"] < 1e-9 and report["pass"]
    first = log.read_bytes()
    run(capsys, "sim", "braid-verify", "--model", "fib", "--trials", "20", "--seed", "1", "--log", str(log))
    assert log.read_bytes() == first


def test_braid_verify_failure_exit_code(capsys):
    code, out, _ = run(capsys, "sim", "braid-verify", "--model", "ising", "--trials", "2", "--seed", "1", "--tol", "-1")
    assert code == 1 and not json.loads(out)["pass"]


def test_parse_word_file():
    assert parse_word_file("# header\nccw 1\n\ncw 3  # back\n") == [(1, "ccw"), (3, "cw")]
    with pytest.raises(Exception, match="line 2"):
        parse_word_file("ccw 1\nsideways 2\n")
    with pytest.raises(Exception, match="line 1"):
        parse_word_file("ccw x\n")


def test_compile_run_empty_word(capsys, tmp_path):
    word = tmp_path / "w.txt"
    word.write_text("")
    sched, log = tmp_path / "s.json", tmp_path / "r.jsonl"
    code, out, _ = run(capsys, "compile-run", str(word), "--model", "fib", "--qubits", "2", "--seed", "0",
                       "--schedule", str(sched), "--log", str(log))
    assert code == 0 and "readout 00" in out
    ops = [ins["op"] for ins in json.loads(sched.read_text())["instructions"]]
    assert ops == ["READOUT", "READOUT"]


def test_compile_run_oracle_and_determinism(capsys, tmp_path):
    word = tmp_path / "w.txt"
    word.write_text("ccw 1\ncw 4\nccw 5\n")
    results = []
    for tag in ("x", "y"):
        sched, log = tmp_path / f"{tag}.json", tmp_path / f"{tag}.jsonl"
        code, out, _ = run(capsys, "compile-run", str(word), "--model", "su2k", "--k", "3", "--method", "interferometric",
                           "--seed", "5", "--schedule", str(sched), "--log", str(log), "--oracle")
        assert code == 0
        assert any(ln.startswith("PASS oracle") for ln in out.splitlines())
        results.append((sched.read_bytes(), log.read_bytes()))
    assert results[0] == results[1]


def test_compile_run_errors(capsys, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("ccw 1\nccw\n")
    code, _, err = run(capsys, "compile-run", str(bad), "--seed", "0")
    assert code == 2 and "line 2" in err
    wide = tmp_path / "wide.txt"
    wide.write_text("ccw 4\nccw 8\n")
    code, _, _ = run(capsys, "compile-run", str(wide), "--model", "fib", "--method", "interferometric", "--seed", "0",
                     "--schedule", str(tmp_path / "s.json"), "--log", str(tmp_path / "l.jsonl"))
    assert code == 3


def test_fqh_tau_m(capsys):
    code, out, _ = run(capsys, "fqh", "tau-m", "--alpha", "1e-4", "--e-star", "e/4", "--i-t", "1e-9", "--delta-m", "2")
    row = next(csv.DictReader(io.StringIO(out)))
    assert code == 0 and row["units"] == "s"
    assert float(row["value"]) == pytest.approx(0.6e-9, rel=0.02)


def test_fqh_delta_m(capsys):
    code, out, _ = run(capsys, "fqh", "delta-m", "--model", "su2k", "--k", "3", "--format", "json")
    assert code == 0 and json.loads(out)[0]["value"] == pytest.approx(1.382, abs=1e-3)


def test_fqh_gamma(capsys):
    code, out, _ = run(capsys, "fqh", "gamma", "--r0", "170", "--gap", "0.544", "--temp", "0.010", "--nu", "2.5")
    value = float(next(csv.DictReader(io.StringIO(out)))["value"])
    assert code == 0 and 1e-4 <= value <= 1e-2


def test_fqh_missing_parameter_named(capsys):
    code, _, err = run(capsys, "fqh", "gamma", "--r0", "170", "--gap", "0.544", "--temp", "0.010")
    assert code == 2 and "--nu" in err


def test_fqh_report_and_probe_count(capsys):
    code, out, _ = run(capsys, "fqh", "report", "--format", "json")
    assert code == 0 and len(json.loads(out)) == 5
    code, out, _ = run(capsys, "fqh", "probe-count", "--alpha", "1e-4", "--t", "0.1", "--delta-m", "2")
    assert code == 0 and float(next(csv.DictReader(io.StringIO(out)))["value"]) == pytest.approx(1513.67, rel=1e-4)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "anyonforge", "fqh", "tau-r", "--v-e", "1e3", "--l-int", "1e-6"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert float(next(csv.DictReader(io.StringIO(proc.stdout)))["value"]) == pytest.approx(1e-9)
