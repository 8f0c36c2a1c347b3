import itertools

from hypothesis import given, settings

from phasecert.certcheck import check
from phasecert.engine import SAFE, UNSAFE, Budget, Verdict, bmc, ic3, kinduction, replay, terminal_witness
from phasecert.netlist import Builder, lit_value, simulate
from phasecert.oracle import explicit_check
from phasecert.satkit import UNKNOWN
from phasecert.tersim import find_lassos
from phasecert.periodic import extract_signals
from phasecert.transform import run_pipeline

from conftest import circuits


def counter(bits=3, bad_at=5):
    b = Builder()
    q = [b.latch(f"q{k}") for k in range(bits)]
    carry = 1
    for x in q:
        b.set_next(x, b.XOR(x, carry))
        b.set_reset(x, 0)
        carry = b.AND(carry, x)
    bad = b.AND_ALL(x if (bad_at >> k) & 1 else x ^ 1 for k, x in enumerate(q))
    return b.build(bad)


def alternating():
    b = Builder()
    a = b.latch("a")
    c = b.latch("b")
    b.set_next(a, a ^ 1)
    b.set_reset(a, 0)
    b.set_next(c, a)
    b.set_reset(c, 1)
    return b.build(b.AND(a, c))


def test_bmc_constant_properties():
    v = bmc(Builder().build(1), 3)
    assert v.status == UNSAFE and v.k == 0
    assert bmc(Builder().build(0), 5).status == UNKNOWN


def test_bmc_counter():
    c = counter()
    assert explicit_check(c).depth == 5
    v = bmc(c, 10)
    assert v.status == UNSAFE and v.k == 5
    counts = [sum(int(x) << k for k, x in enumerate(lat)) for _, lat in v.trace]
    assert counts == [0, 1, 2, 3, 4, 5]


def test_kinduction_examples(two_phase):
    rotated = [l for l in find_lassos(two_phase) if l.delta == 2][0]
    st = run_pipeline(two_phase, 0, 2, extract_signals(two_phase, rotated, 0, 2))
    v = kinduction(st.factored, 4)
    assert v.status == SAFE and v.k == 1 and v.invariant == []
    v = kinduction(counter(), 8)
    assert v.status == UNSAFE and replay(counter(), v.trace)
    c = alternating()
    assert explicit_check(c).safe
    v = kinduction(c, 4)
    assert v.status == SAFE and v.k == 1


def test_ic3_examples():
    v = ic3(Builder().build(0))
    assert v.status == SAFE and v.invariant == []
    b = Builder()
    x = b.latch("x")
    b.set_next(x, 1)
    b.set_reset(x, 0)
    c = b.build(x)
    v = ic3(c)
    assert v.status == UNSAFE and len(v.trace) == 2 and replay(c, v.trace)


def test_ic3_budget():
    v = ic3(counter(6, 63), Budget(seconds=0.0))
    assert v.status in (UNKNOWN, UNSAFE)


@settings(max_examples=150, deadline=None)
@given(circuits(max_latches=8, max_inputs=4, max_gates=16))
def test_engines_agree_with_oracle(c):
    want = explicit_check(c)
    v = ic3(c)
    assert v.status == (SAFE if want.safe else UNSAFE)
    if v.status == UNSAFE:
        assert replay(c, v.trace)
        assert len(v.trace) >= want.depth + 1
        b = bmc(c, want.depth)
        assert b.status == UNSAFE and b.k == want.depth
    else:
        w = terminal_witness(c, v)
        assert check(c, w).ok
    k = kinduction(c, 3)
    if k.status != UNKNOWN:
        assert k.status == v.status


def test_terminal_witness_with_true_invariant(two_phase):
    w = terminal_witness(two_phase, Verdict(SAFE, invariant=[]))
    assert w.circuit.latch_names == two_phase.latch_names
    for s in itertools.product([False, True], repeat=2):
        got = simulate(w.circuit, [], s)
        want = simulate(two_phase, [], s)
        assert lit_value(got, w.circuit.bad) == lit_value(want, two_phase.bad)
