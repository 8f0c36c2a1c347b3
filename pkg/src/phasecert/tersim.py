"""Ternary simulation and cube lassos.

Ternary values are 0, 1 and X (encoded 2).  Inputs are X at every step.
A cube is a frozenset of latch literals (AIGER literals of latch variables).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .aiger_io import tseitin
from .netlist import Builder, Circuit, check_stratified
from .satkit import UNKNOWN, Session

X = 2

_NOT = (1, 0, X)


def _ternary_eval(c: Circuit, val: list) -> None:
    """Fill AND-gate entries of ``val`` (indexed by variable) in place."""
    for g in c.ands:
        a = val[g.rhs0 >> 1]
        if g.rhs0 & 1:
            a = _NOT[a]
        if a == 0:
            val[g.lhs >> 1] = 0
            continue
        b = val[g.rhs1 >> 1]
        if g.rhs1 & 1:
            b = _NOT[b]
        if b == 0:
            val[g.lhs >> 1] = 0
        elif a == 1 and b == 1:
            val[g.lhs >> 1] = 1
        else:
            val[g.lhs >> 1] = X


def _lit(val: list, lit: int) -> int:
    v = val[lit >> 1]
    return _NOT[v] if lit & 1 else v


def ternary_reset(c: Circuit) -> tuple:
    """Ternary reset state in latch order; uninitialized latches are X."""
    order = check_stratified(c)
    val = [X] * (c.maxvar + 1)
    val[0] = 0
    pos = {la.lit >> 1: k for k, la in enumerate(c.latches)}
    for v in order:
        la = c.latches[pos[v]]
        if la.reset == la.lit:
            val[v] = X
        else:
            # latches later in the order are still X, which is sound since
            # the reset does not read them
            _ternary_eval(c, val)
            val[v] = _lit(val, la.reset)
    return tuple(val[la.lit >> 1] for la in c.latches)


def ternary_step(c: Circuit, s: tuple) -> tuple:
    val = [X] * (c.maxvar + 1)
    val[0] = 0
    for la, x in zip(c.latches, s):
        val[la.lit >> 1] = x
    _ternary_eval(c, val)
    return tuple(_lit(val, la.next) for la in c.latches)


def state_to_cube(c: Circuit, s: tuple) -> frozenset:
    return frozenset(la.lit if x == 1 else la.lit ^ 1 for la, x in zip(c.latches, s) if x != X)


@dataclass(frozen=True)
class CubeLasso:
    cubes: tuple  # c_0 .. c_{delta+omega}
    delta: int
    omega: int

    def __post_init__(self):
        if len(self.cubes) != self.delta + self.omega + 1 or self.delta < 0 or self.omega < 0:
            raise ValueError("cube count must be delta + omega + 1")

    def loop_cube(self, i: int) -> frozenset:
        """Cube at position i of the infinite unrolled lasso."""
        if i <= self.delta + self.omega:
            return self.cubes[i]
        return self.cubes[self.delta + (i - self.delta) % (self.omega + 1)]


def _subsumes(a: frozenset, b: frozenset) -> bool:
    """Cube ``a`` subsumes ``b`` when every literal of ``a`` is in ``b``."""
    return a <= b


def find_lassos(c: Circuit, max_steps: int = 1000, max_lassos: int = 16) -> list:
    """Ternary-simulate from reset and report cube lassos.

    Each new cube is tested against all earlier cubes with one watched
    literal per earlier cube; an earlier cube that subsumes the new one
    closes a loop whose entry is the earlier cube.  For every such loop all
    rotations with a later entry are reported as well.
    """
    states = [ternary_reset(c)]
    cubes = [state_to_cube(c, states[0])]
    seen_states = {states[0]: 0}
    watch = {}  # latch literal -> list of cube indices watching it
    empty_watchers = []

    def add_watch(i):
        cu = cubes[i]
        if not cu:
            empty_watchers.append(i)
        else:
            watch.setdefault(min(cu), []).append(i)

    add_watch(0)
    lassos = []
    emitted = set()
    for step in range(1, max_steps + 1):
        s = ternary_step(c, states[-1])
        cube = state_to_cube(c, s)
        # candidates: cubes whose watched literal is present in the new cube
        hits = list(empty_watchers)
        for lit in cube:
            for i in watch.get(lit, ()):
                if _subsumes(cubes[i], cube):
                    hits.append(i)
        for entry in sorted(set(hits)):
            k = step  # index of the discarded closing cube
            base = cubes[:k]
            omega = k - entry - 1
            for rot in range(omega + 1):
                delta = entry + rot
                seq = tuple(base[: entry]) + tuple(base[entry:k]) + tuple(base[entry: entry + rot])
                key = (seq, delta)
                if key in emitted:
                    continue
                emitted.add(key)
                lassos.append(CubeLasso(seq, delta, omega))
                if len(lassos) >= max_lassos:
                    return lassos
        if s in seen_states:
            break
        seen_states[s] = step
        states.append(s)
        cubes.append(cube)
        add_watch(step)
    return lassos


# ---------------------------------------------------------------------------
# SAT validation


class _StepEncoding:
    """One transition copy plus the reset predicate, encoded once."""

    def __init__(self, c: Circuit):
        b = Builder()
        leaf = {}
        for lit in c.inputs:
            leaf[lit >> 1] = b.input()
        cur = {}
        for la in c.latches:
            x = b.input()
            leaf[la.lit >> 1] = x
            cur[la.lit >> 1] = x
        roots = [la.next for la in c.latches] + [la.reset for la in c.latches]
        tr = b.import_logic(c, leaf, roots)
        nxt = {la.lit >> 1: tr(la.next) for la in c.latches}
        rst = b.AND_ALL(b.EQ(cur[la.lit >> 1], tr(la.reset)) for la in c.latches if la.reset != la.lit)
        keep = list(cur.values()) + list(nxt.values()) + [rst]
        comb = b.build(0, keep=keep)
        m = b.mapped
        f, cmap = tseitin(comb, [], keep=[m(x) for x in keep])
        self.session = Session(f)
        self.cur = {v: cmap(m(x)) for v, x in cur.items()}
        self.nxt = {v: cmap(m(x)) for v, x in nxt.items()}
        self.reset = cmap(m(rst))

    def cube_assume(self, cube, table):
        out = []
        for lit in cube:
            d = table[lit >> 1]
            out.append(-d if lit & 1 else d)
        return out

    def implies(self, premise: list, cube, table) -> Optional[str]:
        """Check premise => cube (over ``table`` variables). Returns None if valid."""
        if not cube:
            return None
        act = self.session.new_var()
        self.session.add([[-act] + [-x for x in self.cube_assume(cube, table)]])
        r = self.session.solve(premise + [act])
        self.session.add([[-act]])
        if r.status == UNKNOWN:
            return "unknown"
        if r.sat:
            return "counterexample"
        return None


def verify_lasso(c: Circuit, lasso: CubeLasso) -> Optional[str]:
    """Return None when the three lasso conditions hold, else a description."""
    enc = _StepEncoding(c)
    cubes = lasso.cubes
    if enc.implies([enc.reset], cubes[0], enc.cur) is not None:
        return "condition 1: reset does not imply c_0"
    n = len(cubes)
    for i in range(n - 1):
        prem = enc.cube_assume(cubes[i], enc.cur)
        if enc.implies(prem, cubes[i + 1], enc.nxt) is not None:
            return f"condition 2: c_{i} does not step into c_{i + 1}"
    prem = enc.cube_assume(cubes[-1], enc.cur)
    if enc.implies(prem, cubes[lasso.delta], enc.nxt) is not None:
        return f"condition 3: c_{n - 1} does not step into c_{lasso.delta}"
    return None
