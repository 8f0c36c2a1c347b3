import glob
import itertools
import os
import random

import pytest
from hypothesis import given, settings, strategies as st

from phasecert.aiger_io import (CnfFormula, ParseError, Witness, parse, parse_dimacs, parse_witness, tseitin,
                                write, write_dimacs, write_witness)
from phasecert.netlist import Builder, simulate
from phasecert.satkit import solve

from conftest import FIXTURES, circuits, fixture_text

CORPUS = sorted(glob.glob(os.path.join(FIXTURES, "corpus", "*.aag")))


def test_parse_constant_output():
    c = parse("aag 0 0 0 1 0\n0\n")
    assert c.bad == 0 and c.num_latches == 0


def test_latch_literal_decoding():
    c = parse("aag 2 1 1 1 0\n4\n2 3 5\n2\n")
    la = c.latches[0]
    assert la.lit >> 1 == 1 and la.next == 3 and la.reset == 5


def test_write_empty():
    assert write(Builder().build(0)) == "aag 0 0 0 1 0\n0\n"


def test_two_phase_round_trip(two_phase):
    text = fixture_text("two_phase.aag")
    assert write(two_phase) == text
    assert parse(write(two_phase)) == two_phase


def test_symbols_preserved():
    text = fixture_text(os.path.join("corpus", "clock_named.aag"))
    assert "l0 clk" in write(parse(text))


@pytest.mark.parametrize("path", CORPUS, ids=os.path.basename)
def test_canonical_corpus_round_trip(path):
    text = open(path).read()
    assert write(parse(text)) == text


@settings(max_examples=80, deadline=None)
@given(circuits(max_latches=8, max_inputs=4))
def test_write_parse_is_canonical(c):
    text = write(c)
    assert write(parse(text)) == text


@pytest.mark.parametrize("text", [
    "aig 0 0 0 1 0\n0\n",  # binary header
    "aag 1 0 0 1 0\n",  # missing output line
    "aag 1 1 0 1 0\n3\n2\n",  # negated input
    "aag 2 2 0 1 0\n2\n2\n4\n",  # duplicate definition
    "aag 1 0 0 1 1\n2\n2 2 2\n",  # cyclic gate
    "aag 1 0 0 2 0\n0\n0\n",  # too many outputs
])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse(text)


def test_dimacs_examples():
    assert write_dimacs(CnfFormula()) == "p cnf 0 0\n"
    f = CnfFormula(2, [[1, -2]])
    assert write_dimacs(f) == "p cnf 2 1\n1 -2 0\n"
    g = parse_dimacs(write_dimacs(f))
    assert g.num_vars == 2 and g.clauses == [[1, -2]]


def test_tseitin_constants():
    comb = Builder().build(0)
    f, _ = tseitin(comb, [1])
    assert solve(f).sat
    f, _ = tseitin(comb, [0])
    assert solve(f).unsat


def test_tseitin_contradiction():
    b = Builder()
    x = b.input("x")
    y = b.input("y")
    g = b.AND(x, y)
    h = b.AND(g, x ^ 1)  # not folded: x and y and not x
    c = b.build(h)
    f, _ = tseitin(c, [c.bad])
    assert solve(f).unsat


def random_comb(rng, max_inputs=6, max_gates=10):
    b = Builder()
    pool = [b.input() for _ in range(rng.randint(1, max_inputs))]
    for _ in range(rng.randint(0, max_gates)):
        g = b.AND(rng.choice(pool) ^ rng.randint(0, 1), rng.choice(pool) ^ rng.randint(0, 1))
        if g > 1:
            pool.append(g)
    return b.build(rng.choice(pool) ^ rng.randint(0, 1))


def truth_table_sat(c):
    return any(simulate(c, bits, [])[c.bad >> 1] ^ (c.bad & 1)
               for bits in itertools.product([False, True], repeat=c.num_inputs))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_tseitin_equisatisfiable(seed):
    c = random_comb(random.Random(seed))
    f, m = tseitin(c, [c.bad])
    r = solve(f)
    assert r.sat == truth_table_sat(c)
    if r.sat:
        # the model restricted to the inputs is a real solution
        bits = [r.model[m(lit)] if lit in m else False for lit in c.inputs]
        val = simulate(c, bits, [])
        assert val[c.bad >> 1] ^ (c.bad & 1)


def test_witness_round_trip(two_phase):
    w = Witness(two_phase, None)
    assert parse_witness(write_witness(w)).circuit == two_phase
    b = Builder()
    x = b.latch("x")
    b.set_next(x, x)
    b.set_reset(x, 0)
    inv = b.AND(x ^ 1, x ^ 1)
    c = b.build(x, keep=[inv])
    w2 = parse_witness(write_witness(Witness(c, c.bad)))
    assert w2.inv_bad == c.bad
