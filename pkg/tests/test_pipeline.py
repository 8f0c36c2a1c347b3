import pytest
from hypothesis import given, settings

from phasecert.engine import SAFE, UNSAFE, replay
from phasecert.netlist import Builder
from phasecert.oracle import explicit_check
from phasecert.pipeline import ENGINES, RunConfig, model_check

from conftest import circuits, clock_circuit


def test_two_phase_end_to_end(two_phase):
    res = model_check(two_phase)
    assert res.status == SAFE
    assert (res.candidate.n, res.candidate.d) == (2, 0)
    assert res.verdict.frames == 0
    assert len(res.fold_info.b_bits) == 3 and len(res.fold_info.e_bits) == 1
    assert res.report.ok and not res.gate_rejections


def test_constant_bad_is_unsafe_in_one_state():
    c = Builder().build(1)
    res = model_check(c)
    assert res.status == UNSAFE and len(res.trace) == 1 and replay(c, res.trace)


def test_identity_candidate_gives_plain_witness():
    # two latches loading the same input: ternary simulation sees only X
    b = Builder()
    i = b.input("i")
    x = b.latch("x")
    y = b.latch("y")
    for z in (x, y):
        b.set_next(z, i)
        b.set_reset(z, i)
    c = b.build(b.XOR(x, y))
    res = model_check(c)
    assert res.status == SAFE and res.candidate.is_identity and res.report.ok


def test_forwarding_reports_missing_certificate():
    # s and y settle to 1 after two steps; only forwarding removes them
    b = Builder()
    i = b.input("i")
    s, x, y = b.latch("s"), b.latch("x"), b.latch("y")
    b.set_next(s, 1)
    b.set_reset(s, 0)
    b.set_next(y, s)
    b.set_reset(y, 0)
    b.set_next(x, i)
    b.set_reset(x, i)
    c = b.build(b.AND_ALL([x, s ^ 1, y]))
    res = model_check(c)
    assert res.status == SAFE and res.candidate.d > 0
    assert res.witness is None and "out of scope" in res.note
    no_fwd = model_check(c, RunConfig(allow_forwarding=False))
    assert no_fwd.candidate.d == 0 and no_fwd.report.ok


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(max_n=9)
    with pytest.raises(ValueError):
        RunConfig(engine="magic")


@pytest.mark.parametrize("engine", ENGINES)
def test_engines_on_clock(engine):
    res = model_check(clock_circuit(bad_when_high=True), RunConfig(engine=engine))
    assert res.status == UNSAFE


@settings(max_examples=120, deadline=None)
@given(circuits(max_latches=8, max_inputs=4, max_gates=16))
def test_model_check_matches_oracle(c):
    res = model_check(c)
    assert res.status == (SAFE if explicit_check(c).safe else UNSAFE)
    assert not res.gate_rejections
    if res.status == UNSAFE:
        assert replay(c, res.trace)
    elif res.candidate.d == 0:
        assert res.report.ok


@settings(max_examples=40, deadline=None)
@given(circuits(max_latches=6, max_inputs=3))
def test_portfolio_and_kind_agree(c):
    want = explicit_check(c).safe
    for engine in ("portfolio", "kind"):
        res = model_check(c, RunConfig(engine=engine))
        if res.status in (SAFE, UNSAFE):
            assert (res.status == SAFE) == want
