"""CNF satisfiability: a built-in CDCL solver and an external-solver hook.

The built-in solver does two-watched-literal propagation, first-UIP clause
learning, activity-based branching with phase saving and Luby restarts.  It
is incremental: clauses can be added between calls, and each call may pass
assumption literals.  When a call fails under assumptions, ``core`` holds
the subset of assumptions that was involved in the final conflict.

Set ``PHASECERT_SAT_SOLVER`` to the path of a DIMACS solver binary to route
one-shot ``solve`` calls to it.
"""

from __future__ import annotations

import heapq
import os
import subprocess
import tempfile
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .aiger_io import CnfFormula, write_dimacs

SAT = "SAT"
UNSAT = "UNSAT"
UNKNOWN = "UNKNOWN"

SOLVER_ENV = "PHASECERT_SAT_SOLVER"


@dataclass
class SatResult:
    status: str
    model: Optional[dict] = None  # DIMACS var -> bool
    core: list = field(default_factory=list)  # failed assumptions (UNSAT only)

    @property
    def sat(self) -> bool:
        return self.status == SAT

    @property
    def unsat(self) -> bool:
        return self.status == UNSAT

    def value(self, lit: int) -> bool:
        v = self.model[abs(lit)]
        return v if lit > 0 else not v


def _luby(i: int) -> int:
    size, seq = 1, 0
    while size < i + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != i:
        size = (size - 1) >> 1
        seq -= 1
        i = i % size
    return 1 << seq


class Solver:
    """Incremental CDCL solver over DIMACS-numbered variables."""

    def __init__(self, formula: Optional[CnfFormula] = None):
        self.nvars = 0
        self.clauses = []  # clause index -> list of internal literals
        self.original = []  # clauses as given, for model verification
        self.watches = [[], []]  # internal literal -> clause indices
        self.value = [-1, -1]  # internal literal -> 1/0/-1
        self.level = [0]
        self.reason = [None]
        self.activity = [0.0]
        self.polarity = [1]  # saved phase: 1 means assign negative
        self.heap = []
        self.trail = []
        self.trail_lim = []
        self.qhead = 0
        self.var_inc = 1.0
        self.ok = True
        self.core = []
        self.conflicts = 0
        self.seen = [0]
        if formula is not None:
            self.ensure_vars(formula.num_vars)
            for cl in formula.clauses:
                self.add_clause(cl)

    # -- setup --------------------------------------------------------------
    def ensure_vars(self, n: int) -> None:
        k = n - self.nvars
        if k <= 0:
            return
        first = self.nvars + 1
        self.nvars = n
        self.watches.extend([] for _ in range(2 * k))
        self.value.extend([-1] * (2 * k))
        self.level.extend([0] * k)
        self.reason.extend([None] * k)
        self.activity.extend([0.0] * k)
        self.polarity.extend([1] * k)
        self.seen.extend([0] * k)
        # keys are negated activities, so fresh zero-activity variables with
        # larger indices can be appended without breaking the heap order
        self.heap.extend((0.0, v) for v in range(first, n + 1))

    def new_var(self) -> int:
        self.ensure_vars(self.nvars + 1)
        return self.nvars

    @staticmethod
    def _ilit(x: int) -> int:
        return 2 * x if x > 0 else -2 * x + 1

    def add_clause(self, clause: Iterable[int]) -> bool:
        """Add a clause (DIMACS literals).  Returns False once the formula is UNSAT."""
        clause = list(clause)
        self.original.append(clause)
        if not self.ok:
            return False
        if self.trail_lim:
            self._cancel_until(0)
        value = self.value
        lits = []
        for x in clause:
            p = 2 * x if x > 0 else -2 * x + 1
            if p >= len(value):
                self.ensure_vars(p >> 1)
                value = self.value
            vp = value[p]
            if vp == 1:
                return True
            if vp == 0 or p in lits:
                continue
            if (p ^ 1) in lits:
                return True
            lits.append(p)
        if not lits:
            self.ok = False
            return False
        if len(lits) == 1:
            self._enqueue(lits[0], None)
            if self._propagate() is not None:
                self.ok = False
                return False
            return True
        ci = len(self.clauses)
        self.clauses.append(lits)
        self.watches[lits[0]].append(ci)
        self.watches[lits[1]].append(ci)
        return True

    # -- core ---------------------------------------------------------------
    def _enqueue(self, p: int, reason) -> None:
        v = p >> 1
        self.value[p] = 1
        self.value[p ^ 1] = 0
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(p)

    def _propagate(self):
        value = self.value
        watches = self.watches
        clauses = self.clauses
        trail = self.trail
        level = self.level
        reason = self.reason
        lvl = len(self.trail_lim)
        qhead = self.qhead
        while qhead < len(trail):
            p = trail[qhead]
            qhead += 1
            fl = p ^ 1
            ws = watches[fl]
            i = 0
            j = 0
            n = len(ws)
            while i < n:
                ci = ws[i]
                i += 1
                c = clauses[ci]
                if c[0] == fl:
                    c[0] = c[1]
                    c[1] = fl
                first = c[0]
                if value[first] == 1:
                    ws[j] = ci
                    j += 1
                    continue
                found = False
                for k in range(2, len(c)):
                    q = c[k]
                    if value[q] != 0:
                        c[1] = q
                        c[k] = fl
                        watches[q].append(ci)
                        found = True
                        break
                if found:
                    continue
                ws[j] = ci
                j += 1
                if value[first] == 0:
                    while i < n:
                        ws[j] = ws[i]
                        j += 1
                        i += 1
                    del ws[j:]
                    self.qhead = len(trail)
                    return ci
                # unit
                v = first >> 1
                value[first] = 1
                value[first ^ 1] = 0
                level[v] = lvl
                reason[v] = ci
                trail.append(first)
            del ws[j:]
        self.qhead = qhead
        return None

    def _cancel_until(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        start = self.trail_lim[lvl]
        value = self.value
        polarity = self.polarity
        heap = self.heap
        activity = self.activity
        reason = self.reason
        for p in self.trail[start:]:
            v = p >> 1
            value[p] = -1
            value[p ^ 1] = -1
            polarity[v] = p & 1
            reason[v] = None
            heapq.heappush(heap, (-activity[v], v))
        del self.trail[start:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)

    def _bump(self, v: int) -> None:
        a = self.activity[v] + self.var_inc
        self.activity[v] = a
        if a > 1e100:
            self.activity = [x * 1e-100 for x in self.activity]
            self.var_inc *= 1e-100
            self.heap = [(-self.activity[u], u) for u in range(1, self.nvars + 1)
                         if self.value[2 * u] == -1]
            heapq.heapify(self.heap)
        elif self.value[2 * v] == -1:
            heapq.heappush(self.heap, (-a, v))

    def _analyze(self, confl: int):
        seen = self.seen
        level = self.level
        reason = self.reason
        trail = self.trail
        clauses = self.clauses
        cur = len(self.trail_lim)
        learnt = [0]
        pathc = 0
        p = None
        idx = len(trail) - 1
        to_clear = []
        while True:
            c = clauses[confl]
            for q in (c if p is None else c[1:]):
                v = q >> 1
                if not seen[v] and level[v] > 0:
                    seen[v] = 1
                    to_clear.append(v)
                    self._bump(v)
                    if level[v] >= cur:
                        pathc += 1
                    else:
                        learnt.append(q)
            while not seen[trail[idx] >> 1]:
                idx -= 1
            p = trail[idx]
            idx -= 1
            confl = reason[p >> 1]
            seen[p >> 1] = 0
            pathc -= 1
            if pathc == 0:
                break
            # reason clauses keep the implied literal first
            c = clauses[confl]
            if c[0] != p:
                k = c.index(p)
                c[0], c[k] = c[k], c[0]
        learnt[0] = p ^ 1
        # minimize: drop literals whose reason is covered by the clause
        if len(learnt) > 2:
            keep = [learnt[0]]
            for q in learnt[1:]:
                r = reason[q >> 1]
                if r is None:
                    keep.append(q)
                    continue
                rc = clauses[r]
                redundant = True
                for x in rc:
                    u = x >> 1
                    if u != (q >> 1) and not seen[u] and level[u] > 0:
                        redundant = False
                        break
                if not redundant:
                    keep.append(q)
            learnt = keep
        for v in to_clear:
            seen[v] = 0
        if len(learnt) == 1:
            bt = 0
        else:
            mi = 1
            for k in range(2, len(learnt)):
                if level[learnt[k] >> 1] > level[learnt[mi] >> 1]:
                    mi = k
            learnt[1], learnt[mi] = learnt[mi], learnt[1]
            bt = level[learnt[1] >> 1]
        self.var_inc *= 1.0 / 0.95
        return learnt, bt

    def _analyze_final(self, p: int) -> list:
        """Assumptions responsible for literal ``p`` being false."""
        out = [p]
        if not self.trail_lim:
            return out
        seen = self.seen
        seen[p >> 1] = 1
        clauses = self.clauses
        for q in reversed(self.trail[self.trail_lim[0]:]):
            v = q >> 1
            if not seen[v]:
                continue
            r = self.reason[v]
            if r is None:
                if self.level[v] > 0:
                    out.append(q ^ 1)
            else:
                for x in clauses[r]:
                    if self.level[x >> 1] > 0:
                        seen[x >> 1] = 1
            seen[v] = 0
        seen[p >> 1] = 0
        return out

    def _decide(self):
        heap = self.heap
        value = self.value
        while heap:
            _, v = heapq.heappop(heap)
            if value[2 * v] == -1:
                return 2 * v + self.polarity[v]
        return None

    # -- public -------------------------------------------------------------
    def solve(self, assumptions: Sequence[int] = (), conflict_budget: Optional[int] = None) -> SatResult:
        self.core = []
        if not self.ok:
            return SatResult(UNSAT)
        self._cancel_until(0)
        if max((abs(x) for x in assumptions), default=0) > self.nvars:
            self.ensure_vars(max(abs(x) for x in assumptions))
        assume = [2 * x if x > 0 else -2 * x + 1 for x in assumptions]
        if self._propagate() is not None:
            self.ok = False
            return SatResult(UNSAT)
        restart = 0
        budget_left = conflict_budget
        while True:
            limit = 100 * _luby(restart)
            restart += 1
            status = self._search(limit, assume)
            if status is None:
                if budget_left is not None:
                    budget_left -= limit
                    if budget_left <= 0:
                        self._cancel_until(0)
                        return SatResult(UNKNOWN)
                continue
            if status == SAT:
                model = {v: self.value[2 * v] == 1 for v in range(1, self.nvars + 1)}
                self._cancel_until(0)
                self._verify(model)
                return SatResult(SAT, model)
            self._cancel_until(0)
            core = [(-(q >> 1) if q & 1 else (q >> 1)) for q in self.core]
            return SatResult(UNSAT, core=core)

    def _search(self, limit: int, assume: list):
        conflicts = 0
        value = self.value
        while True:
            confl = self._propagate()
            if confl is not None:
                self.conflicts += 1
                conflicts += 1
                if not self.trail_lim:
                    self.ok = False
                    self.core = []
                    return UNSAT
                learnt, bt = self._analyze(confl)
                self._cancel_until(bt)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], None)
                else:
                    ci = len(self.clauses)
                    self.clauses.append(learnt)
                    self.watches[learnt[0]].append(ci)
                    self.watches[learnt[1]].append(ci)
                    self._enqueue(learnt[0], ci)
                continue
            if conflicts >= limit:
                self._cancel_until(0)
                return None
            nxt = None
            while len(self.trail_lim) < len(assume):
                p = assume[len(self.trail_lim)]
                vp = value[p]
                if vp == 1:
                    self.trail_lim.append(len(self.trail))
                elif vp == 0:
                    self.core = self._analyze_final(p ^ 1)
                    self.core = [q ^ 1 for q in self.core]
                    return UNSAT
                else:
                    nxt = p
                    break
            if nxt is None:
                nxt = self._decide()
                if nxt is None:
                    return SAT
            self.trail_lim.append(len(self.trail))
            self._enqueue(nxt, None)

    def _verify(self, model: dict) -> None:
        for cl in self.original:
            if not any(model.get(abs(x), False) == (x > 0) for x in cl):
                raise AssertionError(f"solver model violates clause {cl}")


# ---------------------------------------------------------------------------
# convenience API


class Session:
    """An incremental solving context holding one growing clause set."""

    def __init__(self, formula: Optional[CnfFormula] = None):
        self.solver = Solver(formula)

    def add(self, clauses: Iterable[Iterable[int]]) -> None:
        for cl in clauses:
            self.solver.add_clause(cl)

    def new_var(self) -> int:
        return self.solver.new_var()

    def solve(self, assumptions: Sequence[int] = (), conflict_budget: Optional[int] = None) -> SatResult:
        return self.solver.solve(assumptions, conflict_budget)


def solve(f: CnfFormula, assumptions: Sequence[int] = (), conflict_budget: Optional[int] = None) -> SatResult:
    """One-shot solve; uses the external solver when PHASECERT_SAT_SOLVER is set."""
    ext = os.environ.get(SOLVER_ENV)
    if ext:
        return solve_external(f, assumptions, ext)
    return Solver(f).solve(assumptions, conflict_budget)


def solve_incremental(session: Session, added: Iterable[Iterable[int]], assumptions: Sequence[int] = (),
                      conflict_budget: Optional[int] = None) -> SatResult:
    session.add(added)
    return session.solve(assumptions, conflict_budget)


def solve_external(f: CnfFormula, assumptions: Sequence[int], binary: str) -> SatResult:
    g = CnfFormula(f.num_vars, [list(c) for c in f.clauses] + [[a] for a in assumptions])
    with tempfile.NamedTemporaryFile("w", suffix=".cnf", delete=False) as fh:
        fh.write(write_dimacs(g))
        path = fh.name
    try:
        proc = subprocess.run([binary, path], capture_output=True, text=True)
    finally:
        os.unlink(path)
    status = None
    vals = {}
    for line in proc.stdout.splitlines():
        if line.startswith("s "):
            word = line[2:].strip()
            status = {"SATISFIABLE": SAT, "UNSATISFIABLE": UNSAT}.get(word, UNKNOWN)
        elif line.startswith("v "):
            for tok in line[2:].split():
                x = int(tok)
                if x:
                    vals[abs(x)] = x > 0
    if status == SAT:
        model = {v: vals.get(v, False) for v in range(1, f.num_vars + 1)}
        for cl in g.clauses:
            if not any(model[abs(x)] == (x > 0) for x in cl):
                return SatResult(UNKNOWN)
        return SatResult(SAT, model)
    if status == UNSAT:
        return SatResult(UNSAT, core=list(assumptions))
    return SatResult(UNKNOWN)
