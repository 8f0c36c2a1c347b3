import json
import os
import subprocess
import sys

from phasecert.aiger_io import parse, write
from phasecert.cli import EXIT, main
from phasecert.engine import replay
from phasecert.fuzz import FuzzParams, corpus, fuzz_one, minimize, run_fuzz
from phasecert.pipeline import RunConfig

from conftest import FIXTURES

TWO_PHASE = os.path.join(FIXTURES, "two_phase.aag")


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_mc_two_phase_emits_checked_witness(capsys, tmp_path):
    out_w = str(tmp_path / "w.aag")
    code, out = run(capsys, "mc", TWO_PHASE, "--witness", out_w, "--json")
    d = json.loads(out)
    assert code == EXIT["ok"]
    assert (d["status"], d["n"], d["d"], d["frames"]) == ("SAFE", 2, 0, 0)
    assert d["certified"] and d["b_bits"] == 3 and d["e_bits"] == 1
    code, out = run(capsys, "check", TWO_PHASE, out_w)
    assert code == EXIT["ok"] and out.strip().endswith("PASS")


def test_check_rejects_corrupt_witness(capsys):
    code, out = run(capsys, "check", TWO_PHASE, os.path.join(FIXTURES, "negative", "corrupt_D.aag"), "--json")
    assert code == EXIT["fail"]
    rep = json.loads(out)
    assert rep["overall"] == "fail" and rep["checks"]["D"]["status"] == "fail"


def test_check_dumps_cnf(capsys, tmp_path):
    code, _ = run(capsys, "check", TWO_PHASE, TWO_PHASE, "--dump-cnf", str(tmp_path))
    assert code == EXIT["ok"]
    assert sorted(os.listdir(tmp_path)) == [f"check_{k}.cnf" for k in "ABCDEF"]


def test_mc_unsafe_trace(capsys, tmp_path):
    p = tmp_path / "bad.aag"
    p.write_text("aag 0 0 0 1 0\n1\n")
    code, out = run(capsys, "mc", str(p))
    assert code == EXIT["unsafe"]
    assert out.splitlines()[0] == "UNSAFE" and "b0" in out


def test_mc_trace_replays(capsys, tmp_path):
    p = tmp_path / "clk.aag"
    p.write_text("aag 1 0 1 1 0\n2 3\n2\n")
    code, out = run(capsys, "mc", str(p), "--json")
    d = json.loads(out)
    c = parse(p.read_text())
    trace = [([x == "1" for x in f["inputs"]], [x == "1" for x in f["latches"]]) for f in d["trace"]]
    assert code == EXIT["unsafe"] and replay(c, trace)


def test_exit_codes_for_errors(capsys, tmp_path):
    p = tmp_path / "broken.aag"
    p.write_text("aag 1 0 0 1 0\n4\n")
    assert main(["mc", str(p)]) == EXIT["parse"]
    cyc = tmp_path / "cyc.aag"
    cyc.write_text("aag 2 0 2 1 0\n2 2 4\n4 4 2\n0\n")
    assert main(["mc", str(cyc)]) == EXIT["parse"]
    assert main(["mc", str(tmp_path / "missing.aag")]) == EXIT["parse"]
    assert main(["mc", TWO_PHASE, "--max-phase", "12"]) == EXIT["usage"]
    assert main(["frobnicate"]) == EXIT["usage"]


def test_budget_exhaustion_exit(capsys):
    # BMC cannot prove safety, so a safe model ends undecided
    code = main(["mc", TWO_PHASE, "--engine", "bmc", "--max-bound", "2"])
    assert code == EXIT["unknown"]


def test_info(capsys, tmp_path):
    code, out = run(capsys, "info", TWO_PHASE, "--json")
    d = json.loads(out)
    assert (d["latches"], d["inputs"]) == (2, 0)
    assert {(x["delta"], x["omega"]) for x in d["lassos"]} == {(1, 1), (2, 1)}
    best = [r for r in d["candidates"] if r["d"] == 0 and r["n"] == 2]
    assert best and best[0]["score"] == 0
    p = tmp_path / "empty.aag"
    p.write_text("aag 0 0 0 1 0\n0\n")
    code, out = run(capsys, "info", str(p), "--json")
    d = json.loads(out)
    assert (d["inputs"], d["latches"], d["ands"], d["coi"]) == (0, 0, 0, 0)
    p = tmp_path / "cyc.aag"
    p.write_text("aag 2 0 2 1 0\n2 2 4\n4 4 2\n0\n")
    code, out = run(capsys, "info", str(p), "--json")
    d = json.loads(out)
    assert code == EXIT["ok"] and d["stratified"] is False and len(d["cycle"]) == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "phasecert", "mc", TWO_PHASE], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("SAFE")


def test_fuzz_is_deterministic():
    a = [write(c) for c in corpus(9, 30)]
    b = [write(c) for c in corpus(9, 30)]
    assert a == b
    s1 = run_fuzz(40, 9).to_dict()
    s2 = run_fuzz(40, 9).to_dict()
    for k in ("safe", "unsafe", "certified", "non_identity", "discrepancies"):
        assert s1[k] == s2[k]


def test_fuzz_zero_latches_decided_at_depth_zero():
    s = run_fuzz(50, 4, FuzzParams(max_latches=0, p_template=0.0))
    assert not s.problems
    for r in s.records:
        assert r.status in ("SAFE", "UNSAFE")


def test_fuzz_cli_and_workers(capsys, tmp_path):
    code, out = run(capsys, "fuzz", "--count", "30", "--seed", "2", "--workers", "2", "--out", str(tmp_path), "--json")
    d = json.loads(out)
    assert code == EXIT["ok"] and d["count"] == 30 and not d["discrepancies"]
    serial = run_fuzz(30, 2).to_dict()
    assert (d["safe"], d["unsafe"]) == (serial["safe"], serial["unsafe"])


def test_minimize_shrinks_while_failure_persists():
    c = next(c for c in corpus(5, 200) if c.num_latches >= 4 and len(c.ands) >= 4)
    small = minimize(c, lambda d: d.num_latches >= 1)
    assert small.num_latches == 1
    assert small.num_inputs + len(small.ands) <= c.num_inputs + len(c.ands)


def test_fuzz_one_flags_wrong_verdicts(monkeypatch):
    import phasecert.fuzz as fz
    c = parse(open(TWO_PHASE).read())
    assert not fuzz_one(c, RunConfig()).problem
    monkeypatch.setattr(fz, "_oracle_safe", lambda c: False)
    assert "oracle" in fuzz_one(c, RunConfig()).problem
