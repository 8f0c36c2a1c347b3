import ast
import json
import os

import pytest
from hypothesis import given, settings

from phasecert import certcheck
from phasecert.aiger_io import Witness, parse, parse_witness
from phasecert.certcheck import CHECKS, FAIL, PASS, UNKNOWN, CheckError, CheckReport, CheckResult, check, \
    match_common, reset_independence_probe, stratification_error
from phasecert.engine import SAFE, ic3, terminal_witness
from phasecert.netlist import Builder
from phasecert.pipeline import RunConfig, model_check

from conftest import FIXTURES, circuits, fixture_text


@pytest.mark.parametrize("which", CHECKS)
def test_negative_fixture_fails_exactly_its_check(two_phase, which):
    w = parse_witness(fixture_text(os.path.join("negative", f"corrupt_{which}.aag")))
    rep = check(two_phase, w)
    assert rep.stratified == PASS
    assert rep.failed() == [which]
    assert rep.checks[which].model is not None


def test_golden_pair_passes(two_phase):
    rep = check(two_phase, Witness(two_phase))
    assert rep.ok and rep.failed() == []


def test_match_common_examples(two_phase):
    corr = match_common(two_phase, two_phase)
    assert corr.counts == {"inputs": 0, "latches": 2}
    w = parse_witness(fixture_text(os.path.join("negative", "corrupt_A.aag"))).circuit
    assert [nm for _, _, nm in match_common(two_phase, w).latches] == ["t", "c"]
    other = two_phase.replace(latch_names=("u", "v"))
    assert match_common(two_phase, other).counts == {"inputs": 0, "latches": 0}


def test_match_common_rejects_duplicates_and_kind_mismatch(two_phase):
    with pytest.raises(CheckError):
        match_common(two_phase, two_phase.replace(latch_names=("t", "t")))
    b = Builder()
    b.input("t")
    with pytest.raises(CheckError):
        match_common(two_phase, b.build(0))


def test_unnamed_variables_match_by_position():
    c = parse("aag 1 0 1 1 0\n2 3\n2\n")
    assert match_common(c, c).counts == {"inputs": 0, "latches": 1}


def test_flipped_reset_gives_d_model(two_phase):
    w = parse_witness(fixture_text(os.path.join("negative", "corrupt_D.aag")))
    rep = check(two_phase, w)
    assert rep.checks["D"].status == FAIL and rep.checks["D"].model


def test_dropping_property_conjunct_fails_f():
    # model: latch x stuck at 0, property "not x"; witness claims Q = true
    b = Builder()
    x = b.latch("x")
    b.set_next(x, 1)
    b.set_reset(x, 0)
    model = b.build(x)
    rep = check(model, Witness(model.replace(bad=0)))
    assert rep.failed() == ["F"]


def test_non_stratified_pair_runs_no_checks(two_phase):
    cyc = parse("aag 2 0 2 1 0\n2 2 4\n4 4 2\n0\n")
    assert stratification_error(cyc)
    rep = check(cyc, Witness(cyc))
    assert rep.stratified == FAIL and not rep.checks and not rep.ok and rep.error


def test_unknown_is_failure():
    rep = CheckReport(PASS, {k: CheckResult(PASS) for k in CHECKS})
    assert rep.ok
    rep.checks["B"] = CheckResult(UNKNOWN)
    assert not rep.ok and rep.failed() == ["B"]


def test_report_json_and_cnf_dump(two_phase, tmp_path):
    rep = check(two_phase, Witness(two_phase), dump_dir=str(tmp_path))
    d = json.loads(rep.to_json())
    assert d["overall"] == PASS and set(d["checks"]) == set(CHECKS)
    for k in CHECKS:
        text = (tmp_path / f"check_{k}.cnf").read_text()
        assert text.startswith("p cnf")


def test_reset_independence_probe(two_phase):
    assert reset_independence_probe(two_phase, Witness(two_phase))
    res = model_check(two_phase)
    assert reset_independence_probe(two_phase, res.witness)
    # a common reset reading a witness-only latch violates the probe
    b = Builder()
    t, c, z = b.latch("t"), b.latch("c"), b.latch("z")
    b.set_reset(z, z)
    b.set_next(z, z)
    b.set_reset(t, z)
    b.set_next(t, c)
    b.set_reset(c, 0)
    b.set_next(c, c ^ 1)
    assert not reset_independence_probe(two_phase, Witness(b.build(b.AND(t, c))))


@settings(max_examples=80, deadline=None)
@given(circuits(max_latches=6, max_inputs=3))
def test_ic3_witnesses_pass_and_probe(c):
    v = ic3(c)
    if v.status == SAFE:
        w = terminal_witness(c, v)
        assert check(c, w).ok
        assert reset_independence_probe(c, w)


def test_checker_imports_no_producer_code():
    path = certcheck.__file__
    tree = ast.parse(open(path).read())
    mods = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.ImportFrom) and node.level == 1:
            mods.add(node.module)
    assert mods <= {"aiger_io", "netlist", "satkit"}
    text = open(path).read()
    # only the plain data type is taken from netlist
    assert "from .netlist import Circuit\n" in text
