import itertools
import random

from hypothesis import given, settings, strategies as st

from phasecert.netlist import Builder, lit_value, reset_state, simulate
from phasecert.tersim import X, CubeLasso, find_lassos, ternary_reset, ternary_step, verify_lasso

from conftest import circuits, clock_circuit


def in_cube(c, cube, state):
    return all(state[c.index[lit >> 1][1]] == (not lit & 1) for lit in cube)


def brute_lasso_ok(c, lasso):
    """Concrete-state check of the three lasso conditions."""
    ins = list(itertools.product([False, True], repeat=c.num_inputs))
    states = list(itertools.product([False, True], repeat=c.num_latches))
    uninit = [la.lit >> 1 for la in c.latches if la.uninitialized]
    for bits in ins:
        for free in itertools.product([False, True], repeat=len(uninit)):
            s = reset_state(c, bits, dict(zip(uninit, free)))
            if not in_cube(c, lasso.cubes[0], s):
                return False
    n = len(lasso.cubes)
    for i in range(n):
        target = lasso.cubes[i + 1] if i + 1 < n else lasso.cubes[lasso.delta]
        for s in states:
            if not in_cube(c, lasso.cubes[i], s):
                continue
            for bits in ins:
                val = simulate(c, bits, s)
                t = [lit_value(val, la.next) for la in c.latches]
                if not in_cube(c, target, t):
                    return False
    return True


def test_reset_examples():
    b = Builder()
    i = b.input("i")
    c0, a, bb = b.latch("c"), b.latch("a"), b.latch("b")
    for x in (c0, a, bb):
        b.set_next(x, x)
    b.set_reset(c0, 0)
    b.set_reset(a, i)
    b.set_reset(bb, b.AND(a, 0))
    assert ternary_reset(b.build(0)) == (0, X, 0)


def test_step_examples(two_phase):
    clk = clock_circuit()
    assert ternary_step(clk, (0,)) == (1,)
    b = Builder()
    i = b.input("i")
    t = b.latch("t")
    b.set_next(t, b.AND(i, t))
    b.set_reset(t, 1)
    assert ternary_step(b.build(0), (1,)) == (X,)
    s = ternary_reset(two_phase)
    seq = [s]
    for _ in range(3):
        seq.append(ternary_step(two_phase, seq[-1]))
    assert seq == [(0, 0), (0, 1), (1, 0), (0, 1)]


def test_clock_lasso():
    c = clock_circuit()
    ls = find_lassos(c)
    assert ls[0].delta == 0 and ls[0].omega == 1
    assert ls[0].cubes == (frozenset({3}), frozenset({2}))


def test_two_phase_lassos(two_phase):
    ls = find_lassos(two_phase)
    t, c = 2 * two_phase.latch_var("t"), 2 * two_phase.latch_var("c")
    first = ls[0]
    assert (first.delta, first.omega) == (1, 1)
    assert first.cubes == (frozenset({t ^ 1, c ^ 1}), frozenset({t ^ 1, c}), frozenset({t, c ^ 1}))
    assert [(l.delta, l.omega) for l in ls] == [(1, 1), (2, 1)]


def test_immediately_unknown_latch():
    b = Builder()
    i = b.input("i")
    a = b.latch("a")
    b.set_next(a, i)
    b.set_reset(a, i)
    ls = find_lassos(b.build(a))
    assert ls[0].cubes == (frozenset(),) and ls[0].delta == 0 and ls[0].omega == 0


def test_verify_lasso_examples():
    c = clock_circuit()
    bad = CubeLasso((frozenset({2}), frozenset({3})), 0, 1)
    assert verify_lasso(c, bad).startswith("condition 1")
    empty = CubeLasso((frozenset(), frozenset()), 0, 1)
    assert verify_lasso(c, empty) is None


@settings(max_examples=60, deadline=None)
@given(circuits(max_latches=5, max_inputs=2, max_gates=10))
def test_found_lassos_are_valid(c):
    for l in find_lassos(c, max_lassos=4):
        assert verify_lasso(c, l) is None
        assert brute_lasso_ok(c, l)


@settings(max_examples=80, deadline=None)
@given(circuits(max_latches=4, max_inputs=2, max_gates=8), st.integers(0, 2**32 - 1))
def test_verify_lasso_agrees_with_brute_force(c, seed):
    rng = random.Random(seed)
    lits = [la.lit ^ rng.randint(0, 1) for la in c.latches]
    delta, omega = rng.randint(0, 2), rng.randint(0, 2)
    cubes = tuple(frozenset(x for x in lits if rng.random() < 0.4) for _ in range(delta + omega + 1))
    l = CubeLasso(cubes, delta, omega)
    assert (verify_lasso(c, l) is None) == brute_lasso_ok(c, l)
