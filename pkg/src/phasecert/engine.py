"""Model checking back ends: BMC, k-induction and IC3.

Frame 0 is handled apart from the rest: the reset predicate relates the
frame-0 inputs to the initial latch values, so a latch valuation can be
initial without being bad-free under every input.  IC3 therefore starts
from the set of states reachable in exactly one step (the image of the
reset predicate) after checking frame 0 directly, and the invariant it
returns covers frames from 1 on.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from .aiger_io import Witness, tseitin
from .netlist import Builder, Circuit, check_stratified, lit_value, simulate, unroll
from .satkit import UNKNOWN, Session, solve
from .tersim import X, _NOT

SAFE = "SAFE"
UNSAFE = "UNSAFE"


@dataclass
class Verdict:
    status: str
    trace: Optional[list] = None  # list of (inputs, latches) frames; the last one is bad
    invariant: Optional[list] = None  # clauses over latch literals
    needs_reset: bool = False  # invariant covers frames >= 1 only
    k: Optional[int] = None
    frames: Optional[int] = None
    engine: str = ""
    stats: dict = field(default_factory=dict)


class Budget:
    def __init__(self, seconds: Optional[float] = None, conflicts: Optional[int] = None):
        self.deadline = None if seconds is None else time.monotonic() + seconds
        self.conflicts = conflicts

    def expired(self) -> bool:
        return self.deadline is not None and time.monotonic() > self.deadline


def replay(c: Circuit, trace: list) -> bool:
    """True when ``trace`` starts in a reset state, follows the transitions and ends bad."""
    if not trace:
        return False
    ins, lat = trace[0]
    val = simulate(c, ins, lat)
    for la, x in zip(c.latches, lat):
        if la.reset != la.lit and lit_value(val, la.reset) != bool(x):
            return False
    for t in range(len(trace)):
        ins, lat = trace[t]
        val = simulate(c, ins, lat)
        if t == len(trace) - 1:
            return lit_value(val, c.bad)
        nxt = [lit_value(val, la.next) for la in c.latches]
        if nxt != [bool(x) for x in trace[t + 1][1]]:
            return False
    return False


def complete_trace(c: Circuit, trace: list) -> list:
    """Recompute latch values along a trace from its frame-0 state and inputs."""
    out = []
    lat = [bool(x) for x in trace[0][1]]
    for ins, _ in trace:
        out.append(([bool(x) for x in ins], lat))
        val = simulate(c, ins, lat)
        lat = [lit_value(val, la.next) for la in c.latches]
    return out


# ---------------------------------------------------------------------------
# BMC and k-induction


def _unroll_query(c, k, with_reset, assert_good_prefix, bad_frame):
    u = unroll(c, k)
    roots = [u.transition, u.bads[bad_frame]]
    if with_reset:
        roots.append(u.reset)
    if assert_good_prefix:
        roots.extend(x ^ 1 for x in u.bads[:bad_frame])
    f, cmap = tseitin(u.circuit, roots, keep=[x for row in u.inputs + u.latches for x in row])
    return u, f, cmap


def _trace_from_model(u, cmap, model, frames):
    tr = []
    for t in range(frames):
        ins = [model.get(abs(cmap(x)), False) for x in u.inputs[t]]
        lat = [model.get(abs(cmap(x)), False) for x in u.latches[t]]
        tr.append((ins, lat))
    return tr


def bmc(c: Circuit, max_bound: int, budget: Optional[Budget] = None) -> Verdict:
    budget = budget or Budget()
    check_stratified(c)
    for k in range(max_bound + 1):
        if budget.expired():
            return Verdict(UNKNOWN, k=k, engine="bmc")
        u, f, cmap = _unroll_query(c, k, True, False, k)
        r = solve(f, conflict_budget=budget.conflicts)
        if r.status == UNKNOWN:
            return Verdict(UNKNOWN, k=k, engine="bmc")
        if r.sat:
            trace = _trace_from_model(u, cmap, r.model, k + 1)
            if not replay(c, trace):
                raise AssertionError("bmc trace does not replay")
            return Verdict(UNSAFE, trace=trace, k=k, engine="bmc")
    return Verdict(UNKNOWN, k=max_bound, engine="bmc")


def kinduction(c: Circuit, max_k: int, budget: Optional[Budget] = None) -> Verdict:
    """k-induction without path constraints; SAFE at k=1 carries invariant P."""
    budget = budget or Budget()
    check_stratified(c)
    for k in range(0, max_k + 1):
        if budget.expired():
            return Verdict(UNKNOWN, k=k, engine="kind")
        u, f, cmap = _unroll_query(c, k, True, False, k)
        r = solve(f, conflict_budget=budget.conflicts)
        if r.status == UNKNOWN:
            return Verdict(UNKNOWN, k=k, engine="kind")
        if r.sat:
            trace = _trace_from_model(u, cmap, r.model, k + 1)
            if not replay(c, trace):
                raise AssertionError("k-induction base trace does not replay")
            return Verdict(UNSAFE, trace=trace, k=k, engine="kind")
        if k == 0:
            continue
        u, f, cmap = _unroll_query(c, k, False, True, k)
        r = solve(f, conflict_budget=budget.conflicts)
        if r.status == UNKNOWN:
            return Verdict(UNKNOWN, k=k, engine="kind")
        if r.unsat:
            return Verdict(SAFE, invariant=[] if k == 1 else None, k=k, engine="kind")
    return Verdict(UNKNOWN, k=max_k, engine="kind")


# ---------------------------------------------------------------------------
# IC3


class _Obligation:
    __slots__ = ("cube", "level", "inputs", "parent")

    def __init__(self, cube, level, inputs, parent):
        self.cube = cube
        self.level = level
        self.inputs = inputs
        self.parent = parent


class _Cex(Exception):
    def __init__(self, trace):
        self.trace = trace


class _OutOfBudget(Exception):
    pass


class IC3:
    def __init__(self, c: Circuit, budget: Optional[Budget] = None, generalize_tries: int = 64):
        self.c = c
        self.budget = budget or Budget()
        self.tries = generalize_tries
        check_stratified(c)
        b = Builder()
        leaf = {}
        ins = [b.input() for _ in c.inputs]
        cur = [b.input() for _ in c.latches]
        leaf.update({lit >> 1: x for lit, x in zip(c.inputs, ins)})
        leaf.update({la.lit >> 1: x for la, x in zip(c.latches, cur)})
        roots = [c.bad] + [la.next for la in c.latches] + [la.reset for la in c.latches]
        tr = b.import_logic(c, leaf, roots)
        nxt = [tr(la.next) for la in c.latches]
        bad = tr(c.bad)
        rst_cur = b.AND_ALL(b.EQ(x, tr(la.reset)) for la, x in zip(c.latches, cur) if la.reset != la.lit)
        # previous frame, constrained to a reset state, stepping into ``cur``
        pins = [b.input() for _ in c.inputs]
        pcur = [b.input() for _ in c.latches]
        pleaf = {lit >> 1: x for lit, x in zip(c.inputs, pins)}
        pleaf.update({la.lit >> 1: x for la, x in zip(c.latches, pcur)})
        ptr = b.import_logic(c, pleaf, roots)
        prst = b.AND_ALL(b.EQ(x, ptr(la.reset)) for la, x in zip(c.latches, pcur) if la.reset != la.lit)
        link = b.AND_ALL(b.EQ(x, ptr(la.next)) for la, x in zip(c.latches, cur))
        step_keep = ins + cur + nxt + [bad, rst_cur]
        comb = b.build(0, keep=step_keep + pins + pcur + [prst, link])
        m = b.mapped
        self.f_step, self.map_step = tseitin(comb, [], keep=[m(x) for x in step_keep])
        f0 = type(self.f_step)(self.f_step.num_vars, [list(cl) for cl in self.f_step.clauses])
        self.f_init, self.map_init = tseitin(comb, [m(prst), m(link)], keep=[m(x) for x in pins + pcur],
                                             formula=f0, var_map=self.map_step.export())
        ms, mi = self.map_step, self.map_init
        self.d_in = [ms(m(x)) for x in ins]
        self.d_cur = [ms(m(x)) for x in cur]
        self.d_nxt = [ms(m(x)) for x in nxt]
        self.d_bad = ms(m(bad))
        self.d_rst = ms(m(rst_cur))
        self.d_pin = [mi(m(x)) for x in pins]
        self.d_pcur = [mi(m(x)) for x in pcur]
        self.latch_pos = {la.lit >> 1: k for k, la in enumerate(c.latches)}
        self.init = Session(self.f_init)
        self.solvers = [self.init]
        self.frames = [set()]
        self.queries = 0

    # -- helpers ------------------------------------------------------------
    def _solve(self, sess, assume):
        if self.budget.expired():
            raise _OutOfBudget()
        self.queries += 1
        r = sess.solve(assume, conflict_budget=self.budget.conflicts)
        if r.status == UNKNOWN:
            raise _OutOfBudget()
        return r

    def _cube_cur(self, cube):
        out = []
        for lit in cube:
            d = self.d_cur[self.latch_pos[lit >> 1]]
            out.append(-d if lit & 1 else d)
        return out

    def _cube_nxt(self, cube):
        out = []
        for lit in cube:
            d = self.d_nxt[self.latch_pos[lit >> 1]]
            out.append(-d if lit & 1 else d)
        return out

    def _model_inputs(self, model):
        return [model[x] for x in self.d_in]

    def _model_state(self, model):
        return [model[x] for x in self.d_cur]

    def _new_frame(self):
        self.solvers.append(Session(self.f_step))
        self.frames.append(set())

    def _add_blocked(self, cube, level):
        for j in range(1, level + 1):
            self.frames[j].discard(cube)
        self.frames[level].add(cube)
        clause = [-x for x in self._cube_cur(cube)]
        for j in range(1, level + 1):
            self.solvers[j].add([clause])

    # ternary minimization: keep the fewest latch literals that still force the goal
    def _minimize(self, inputs, state, goal):
        c = self.c
        lits = [la.lit if v else la.lit ^ 1 for la, v in zip(c.latches, state)]
        val = [X] * (c.maxvar + 1)
        val[0] = 0
        for lit, v in zip(c.inputs, inputs):
            val[lit >> 1] = 1 if v else 0
        cur = {la.lit >> 1: (1 if v else 0) for la, v in zip(c.latches, state)}
        # drop literals not in the support first
        kept = list(lits)
        for lit in lits:
            cur[lit >> 1] = X
            if not self._forces(val, cur, goal):
                cur[lit >> 1] = 0 if lit & 1 else 1
            else:
                kept.remove(lit)
        return frozenset(kept)

    def _forces(self, val, cur, goal):
        c = self.c
        for v, x in cur.items():
            val[v] = x
        for g in c.ands:
            a = val[g.rhs0 >> 1]
            if g.rhs0 & 1:
                a = _NOT[a]
            if a == 0:
                val[g.lhs >> 1] = 0
                continue
            bb = val[g.rhs1 >> 1]
            if g.rhs1 & 1:
                bb = _NOT[bb]
            val[g.lhs >> 1] = 0 if bb == 0 else (1 if (a == 1 and bb == 1) else X)
        for lit, want in goal:
            v = val[lit >> 1]
            if lit & 1:
                v = _NOT[v]
            if v != want:
                return False
        return True

    def _goal_for_cube(self, cube):
        goal = []
        for lit in cube:
            la = self.c.latches[self.latch_pos[lit >> 1]]
            goal.append((la.next, 0 if lit & 1 else 1))
        return goal

    # -- counterexamples ----------------------------------------------------
    def _trace_from(self, model, first_inputs, ob):
        """Counterexample through the init session's model.

        The model holds a reset frame and a state of the initial image.
        With ``first_inputs`` that state steps into ``ob``'s cube; without
        them the state lies in ``ob``'s cube itself.
        """
        pins = [model[x] for x in self.d_pin]
        pcur = [model[x] for x in self.d_pcur]
        state = self._model_state(model)
        later = []
        o = ob
        while o is not None:
            later.append(o.inputs)
            o = o.parent
        if first_inputs is None:
            first_inputs, later = later[0], later[1:]
        return self._finish([(pins, pcur), (first_inputs, state)], later)

    def _finish(self, frames, later_inputs):
        trace = list(frames)
        for ins in later_inputs:
            trace.append((ins, None))
        trace = complete_trace(self.c, [(i, s if s is not None else []) for i, s in trace])
        if not replay(self.c, trace):
            raise AssertionError("IC3 counterexample does not replay")
        return trace

    def _check_init_intersection(self, ob):
        r = self._solve(self.init, self._cube_cur(ob.cube))
        if r.sat:
            raise _Cex(self._trace_from(r.model, None, ob))

    # -- main loop ----------------------------------------------------------
    def run(self) -> Verdict:
        try:
            return self._run()
        except _Cex as e:
            return Verdict(UNSAFE, trace=e.trace, engine="ic3", stats={"queries": self.queries})
        except _OutOfBudget:
            return Verdict(UNKNOWN, engine="ic3", stats={"queries": self.queries})

    def _run(self) -> Verdict:
        c = self.c
        if c.bad == 0:
            return Verdict(SAFE, invariant=[], frames=0, engine="ic3", stats={"queries": 0})
        # frame 0
        r = self._solve(Session(self.f_step), [self.d_rst, self.d_bad])
        if r.sat:
            trace = complete_trace(c, [(self._model_inputs(r.model), self._model_state(r.model))])
            if not replay(c, trace):
                raise AssertionError("frame-0 counterexample does not replay")
            raise _Cex(trace)
        # frame 1: image of the reset states
        r = self._solve(self.init, [self.d_bad])
        if r.sat:
            pins = [r.model[x] for x in self.d_pin]
            pcur = [r.model[x] for x in self.d_pcur]
            raise _Cex(self._finish([(pins, pcur), (self._model_inputs(r.model), self._model_state(r.model))], []))
        self._new_frame()
        k = 1
        while True:
            while True:
                r = self._solve(self.solvers[k], [self.d_bad])
                if r.unsat:
                    break
                inputs = self._model_inputs(r.model)
                cube = self._minimize(inputs, self._model_state(r.model), [(c.bad, 1)])
                self._block(_Obligation(cube, k, inputs, None))
            self._new_frame()
            k += 1
            for i in range(1, k):
                for cube in sorted(self.frames[i], key=sorted):
                    r = self._solve(self.solvers[i], self._cube_nxt(cube))
                    if r.unsat:
                        self._add_blocked(cube, i + 1)
                if not self.frames[i]:
                    inv = sorted(set().union(*self.frames[i + 1:]), key=sorted)
                    clauses = [sorted(lit ^ 1 for lit in cube) for cube in inv]
                    return Verdict(SAFE, invariant=clauses, needs_reset=True, frames=i - 1,
                                   engine="ic3", stats={"queries": self.queries, "k": k})

    def _block(self, root):
        self._check_init_intersection(root)
        stack = [root]
        while stack:
            ob = stack[-1]
            if ob.level == 0:
                raise AssertionError("obligation at level 0")
            sess = self.solvers[ob.level - 1]
            act = sess.new_var()
            sess.add([[-act] + [-x for x in self._cube_cur(ob.cube)]])
            assume = self._cube_nxt(ob.cube)
            r = self._solve(sess, [act] + assume)
            if r.sat:
                sess.add([[-act]])
                inputs = self._model_inputs(r.model)
                if ob.level - 1 == 0:
                    raise _Cex(self._trace_from(r.model, inputs, ob))
                pred = self._minimize(inputs, self._model_state(r.model), self._goal_for_cube(ob.cube))
                child = _Obligation(pred, ob.level - 1, inputs, ob)
                self._check_init_intersection(child)
                stack.append(child)
                continue
            core = set(r.core)
            sess.add([[-act]])
            cube = frozenset(lit for lit, d in zip(sorted(ob.cube), self._cube_nxt(sorted(ob.cube))) if d in core)
            if not cube or self._intersects_init(cube):
                cube = ob.cube
            cube = self._generalize(cube, ob.level)
            self._add_blocked(cube, ob.level)
            stack.pop()

    def _intersects_init(self, cube):
        return self._solve(self.init, self._cube_cur(cube)).sat

    def _inductive_relative(self, cube, level):
        sess = self.solvers[level - 1]
        act = sess.new_var()
        sess.add([[-act] + [-x for x in self._cube_cur(cube)]])
        r = self._solve(sess, [act] + self._cube_nxt(cube))
        sess.add([[-act]])
        return r

    def _generalize(self, cube, level):
        tries = 0
        lits = sorted(cube)
        for lit in list(lits):
            if tries >= self.tries or len(lits) <= 1:
                break
            if lit not in lits:
                continue
            cand = frozenset(x for x in lits if x != lit)
            tries += 1
            if self._intersects_init(cand):
                continue
            r = self._inductive_relative(cand, level)
            if r.unsat:
                core = set(r.core)
                shrunk = frozenset(x for x, d in zip(sorted(cand), self._cube_nxt(sorted(cand))) if d in core)
                if shrunk and not self._intersects_init(shrunk):
                    cand = shrunk
                lits = sorted(cand)
        return frozenset(lits)


def ic3(c: Circuit, budget: Optional[Budget] = None) -> Verdict:
    return IC3(c, budget).run()


# ---------------------------------------------------------------------------
# terminal witness


def _invariant_literal(b: Builder, c: Circuit, leaf: dict, clauses: list) -> int:
    cl_lits = []
    for cl in clauses:
        cl_lits.append(b.OR_ALL(leaf[lit >> 1] ^ (lit & 1) for lit in cl))
    return b.AND_ALL(cl_lits)


def reset_implies_invariant(c: Circuit, clauses: list) -> bool:
    """SAT check that every reset state satisfies the clause set."""
    if not clauses:
        return True
    b = Builder()
    leaf = {lit >> 1: b.input() for lit in c.inputs}
    leaf.update({la.lit >> 1: b.input() for la in c.latches})
    tr = b.import_logic(c, leaf, [la.reset for la in c.latches])
    rst = b.AND_ALL(b.EQ(leaf[la.lit >> 1], tr(la.reset)) for la in c.latches if la.reset != la.lit)
    inv = _invariant_literal(b, c, leaf, clauses)
    comb = b.build(0, keep=[rst, inv])
    f, _ = tseitin(comb, [b.mapped(rst), b.mapped(inv) ^ 1])
    return solve(f).unsat


def terminal_witness(c: Circuit, v: Verdict) -> Witness:
    """The circuit itself with its property strengthened by the invariant.

    The property becomes (R or Inv) and P, where the reset disjunct is
    only added when some reset state falls outside Inv.
    """
    if v.status != SAFE or v.invariant is None:
        raise ValueError("terminal witness needs a SAFE verdict with an invariant")
    b = Builder()
    leaf = {}
    for lit, nm in zip(c.inputs, c.input_names):
        leaf[lit >> 1] = b.input(nm)
    for la, nm in zip(c.latches, c.latch_names):
        leaf[la.lit >> 1] = b.latch(nm)
    roots = [c.bad] + [la.next for la in c.latches] + [la.reset for la in c.latches]
    tr = b.import_logic(c, leaf, roots)
    for la in c.latches:
        nl = leaf[la.lit >> 1]
        b.set_next(nl, tr(la.next))
        b.set_reset(nl, nl if la.reset == la.lit else tr(la.reset))
    inv = _invariant_literal(b, c, leaf, v.invariant)
    if v.needs_reset and not reset_implies_invariant(c, v.invariant):
        rst = b.AND_ALL(b.EQ(leaf[la.lit >> 1], tr(la.reset)) for la in c.latches if la.reset != la.lit)
        inv = b.OR(rst, inv)
    q = b.AND(inv, tr(c.bad) ^ 1)
    return Witness(b.build(q ^ 1, bad_name=c.bad_name, comments=c.comments))
