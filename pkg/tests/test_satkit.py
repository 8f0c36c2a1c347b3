import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from phasecert.aiger_io import CnfFormula
from phasecert.satkit import SAT, UNKNOWN, UNSAT, Session, Solver, solve, solve_incremental


def brute(nv, clauses, assumptions=()):
    for bits in itertools.product([False, True], repeat=nv):
        if any(bits[abs(a) - 1] != (a > 0) for a in assumptions):
            continue
        if all(any(bits[abs(x) - 1] == (x > 0) for x in cl) for cl in clauses):
            return True
    return False


def satisfies(model, clauses):
    return all(any(model[abs(x)] == (x > 0) for x in cl) for cl in clauses)


def random_cnf(rng, nv, nc, width=3):
    return [[rng.choice([-1, 1]) * rng.randint(1, nv) for _ in range(rng.randint(1, width))] for _ in range(nc)]


def test_empty_formula_is_sat():
    r = solve(CnfFormula(0, []))
    assert r.status == SAT and r.model == {}


def test_contradiction():
    assert solve(CnfFormula(1, [[1], [-1]])).status == UNSAT


def test_random_3cnf_12_vars_matches_enumeration():
    rng = random.Random(12)
    for _ in range(40):
        cls = [[rng.choice([-1, 1]) * v for v in rng.sample(range(1, 13), 3)] for _ in range(rng.randint(30, 70))]
        r = solve(CnfFormula(12, cls))
        assert r.sat == brute(12, cls)
        if r.sat:
            assert satisfies(r.model, cls)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_differential_with_assumptions_and_cores(seed):
    rng = random.Random(seed)
    nv = rng.randint(1, 10)
    cls = random_cnf(rng, nv, rng.randint(0, 5 * nv))
    assume = [rng.choice([-1, 1]) * v for v in rng.sample(range(1, nv + 1), rng.randint(0, min(4, nv)))]
    r = solve(CnfFormula(nv, cls), assume)
    assert r.sat == brute(nv, cls, assume)
    if r.sat:
        assert satisfies(r.model, cls + [[a] for a in assume])
    else:
        # the core is a subset of the assumptions that is itself refuting
        assert set(r.core) <= set(assume)
        assert not brute(nv, cls, r.core)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_incremental_equals_one_shot(seed):
    rng = random.Random(seed)
    nv = rng.randint(2, 12)
    sess = Session(CnfFormula(nv, []))
    acc = []
    for _ in range(6):
        added = random_cnf(rng, nv, rng.randint(0, nv))
        acc += added
        assume = [rng.choice([-1, 1]) * v for v in rng.sample(range(1, nv + 1), rng.randint(0, min(3, nv)))]
        r = solve_incremental(sess, added, assume)
        assert r.sat == brute(nv, acc, assume)
        assert r.sat == solve(CnfFormula(nv, acc), assume).sat


def test_incremental_examples():
    sess = Session(CnfFormula(1, [[1]]))
    assert solve_incremental(sess, []).status == SAT
    assert solve_incremental(sess, [[-1]]).status == UNSAT


def test_conflict_budget_gives_unknown():
    # pigeonhole 7 into 6 needs many conflicts
    p, h = 7, 6
    var = lambda i, j: i * h + j + 1
    cls = [[var(i, j) for j in range(h)] for i in range(p)]
    for j in range(h):
        for a in range(p):
            for b in range(a + 1, p):
                cls.append([-var(a, j), -var(b, j)])
    r = Solver(CnfFormula(p * h, cls)).solve(conflict_budget=10)
    assert r.status == UNKNOWN


def test_new_var_and_fresh_variables():
    s = Solver()
    a, b = s.new_var(), s.new_var()
    s.add_clause([a, b])
    s.add_clause([-a])
    r = s.solve()
    assert r.sat and r.model[b] and not r.model[a]
    assert s.solve([-b]).unsat
