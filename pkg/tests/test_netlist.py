import itertools

import pytest
from hypothesis import given, settings

from phasecert.aiger_io import parse
from phasecert.netlist import (Builder, NotStratified, StructuralError, check_stratified, coi, eval_circuit,
                               neg, reset_state, simulate, substitute, support, unroll)
from phasecert.satkit import solve
from phasecert.aiger_io import tseitin

from conftest import circuits, clock_circuit


def test_negation_involution():
    assert neg(0) == 1 and neg(1) == 0
    for x in range(20):
        assert neg(neg(x)) == x


def test_stratified_orders():
    b = Builder()
    a = b.latch("a")
    b.set_next(a, a)
    b.set_reset(a, 0)
    assert check_stratified(b.build(0)) == [a >> 1]

    b = Builder()
    a, c = b.latch("a"), b.latch("b")
    b.set_next(a, a)
    b.set_next(c, c)
    b.set_reset(a, c)
    b.set_reset(c, 0)
    assert check_stratified(b.build(0)) == [c >> 1, a >> 1]


def test_reset_cycle_is_reported():
    text = "aag 2 0 2 1 0\n2 2 4\n4 4 2\n0\n"
    with pytest.raises(NotStratified) as e:
        check_stratified(parse(text))
    assert set(e.value.cycle) == {1, 2}


def test_self_reset_is_not_a_cycle():
    c = parse("aag 1 0 1 1 0\n2 3 2\n2\n")
    assert c.latches[0].uninitialized
    assert check_stratified(c) == [1]


def test_eval_clock_and_two_phase(two_phase):
    c = clock_circuit()
    assert eval_circuit(c, {1: False}).next == [True]
    t, cv = two_phase.latch_var("t"), two_phase.latch_var("c")
    ev = eval_circuit(two_phase, {t: False, cv: True})
    assert ev.next == [True, False] and ev.bad is False
    assert eval_circuit(two_phase, {t: False, cv: True}) == ev


def test_substitute_examples(two_phase):
    cvar = two_phase.latch_var("c")
    d = substitute(two_phase, {2 * cvar: 1})
    assert d.bad == 2 * two_phase.latch_var("t")
    # c -> not t makes bad = t and not t, folded to false
    tlit = 2 * two_phase.latch_var("t")
    assert substitute(two_phase, {2 * cvar: tlit ^ 1}).bad == 0
    # identity map: same behaviour, and canonical after one pass
    same = substitute(two_phase, {})
    assert substitute(same, {}) == same
    for s in itertools.product([0, 1], repeat=2):
        assert eval_circuit(same, {1: s[0], 2: s[1]}) == eval_circuit(two_phase, {1: s[0], 2: s[1]})


def test_coi_examples():
    b = Builder()
    assert coi(b.build(0)) == set()
    b = Builder()
    a, c = b.latch("a"), b.latch("b")
    for x in (a, c):
        b.set_next(x, x)
        b.set_reset(x, 0)
    assert coi(b.build(a)) == {a >> 1}
    b = Builder()
    i = b.input("i")
    a = b.latch("a")
    b.set_next(a, i)
    b.set_reset(a, 0)
    assert coi(b.build(a)) == {i >> 1, a >> 1}


@settings(max_examples=60, deadline=None)
@given(circuits())
def test_coi_matches_naive_closure(c):
    deps = {}
    for la in c.latches:
        roots = [la.next] if la.uninitialized else [la.next, la.reset]
        deps[la.lit >> 1] = support(c, roots)
    closure = set(support(c, [c.bad]))
    while True:
        more = set().union(*(deps.get(v, set()) for v in closure)) - closure
        if not more:
            break
        closure |= more
    assert coi(c) == closure


def test_unroll_counts_and_clock():
    c = clock_circuit()
    u0 = unroll(c, 0)
    assert len(u0.latches) == 1 and u0.transition == 1
    u = unroll(c, 2)
    assert sum(len(x) for x in u.latches) == 3 * c.num_latches
    f, m = tseitin(u.circuit, [u.reset, u.transition])
    for k, want in enumerate([False, True, False]):
        lit = m(u.latches[k][0])
        assert solve(f, [lit if want else -lit]).sat
        assert not solve(f, [-lit if want else lit]).sat


@settings(max_examples=60, deadline=None)
@given(circuits())
def test_reset_state_satisfies_reset(c):
    for bits in itertools.islice(itertools.product([0, 1], repeat=c.num_inputs), 4):
        s = reset_state(c, bits)
        val = simulate(c, bits, s)
        for la, x in zip(c.latches, s):
            if not la.uninitialized:
                assert (val[la.reset >> 1] ^ (la.reset & 1)) == x


def test_builder_folds_constants():
    b = Builder()
    x = b.input("x")
    assert b.AND(x, 1) == x
    assert b.AND(x, 0) == 0
    assert b.AND(x, x ^ 1) == 0
    assert b.AND(x, x) == x


def test_undefined_reference_rejected():
    with pytest.raises(Exception):
        parse("aag 1 0 0 1 0\n4\n")
