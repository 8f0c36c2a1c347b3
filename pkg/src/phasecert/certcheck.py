"""Independent certificate checker.

Given a model and a witness circuit this checks that both have stratified
resets and discharges six SAT queries:

  A  reset states of the witness satisfy its invariant Q
  B  Q is inductive in the witness
  C  Q implies the witness property P'
  D  common latches have equivalent reset functions
  E  common latches have equivalent next-state functions
  F  P' implies the model property P

Deliberately self-contained: it relies on the parser, the SAT solver and
the plain circuit data type only, and has its own CNF encoder and
stratification check, so that no transformation code is trusted.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

from .aiger_io import CnfFormula, Witness, write_dimacs
from .netlist import Circuit
from .satkit import SAT, UNSAT, solve

PASS = "pass"
FAIL = "fail"
UNKNOWN = "unknown"

CHECKS = ("A", "B", "C", "D", "E", "F")


class CheckError(ValueError):
    pass


# ---------------------------------------------------------------------------
# common variables


@dataclass
class Correspondence:
    inputs: list  # (model var, witness var, name)
    latches: list

    @property
    def counts(self) -> dict:
        return {"inputs": len(self.inputs), "latches": len(self.latches)}


def _table(c: Circuit):
    rows = []
    for k, (lit, nm) in enumerate(zip(c.inputs, c.input_names)):
        rows.append(("i", k, lit >> 1, nm))
    for k, (la, nm) in enumerate(zip(c.latches, c.latch_names)):
        rows.append(("l", k, la.lit >> 1, nm))
    return rows


def match_common(c: Circuit, w: Circuit) -> Correspondence:
    """Match inputs and latches by name; unnamed ones by kind and position."""
    ct, wt = _table(c), _table(w)
    for rows, what in ((ct, "model"), (wt, "witness")):
        names = [r[3] for r in rows if r[3] is not None]
        if len(names) != len(set(names)):
            raise CheckError(f"duplicate variable names in the {what}")
    by_name = {r[3]: r for r in wt if r[3] is not None}
    by_pos = {(r[0], r[1]): r for r in wt if r[3] is None}
    ins, las = [], []
    for kind, k, v, nm in ct:
        if nm is not None:
            hit = by_name.get(nm)
            if hit is None:
                continue
            if hit[0] != kind:
                raise CheckError(f"variable {nm} is an {'input' if kind == 'i' else 'latch'} in the model "
                                 f"but not in the witness")
        else:
            hit = by_pos.get((kind, k))
            if hit is None:
                continue
        (ins if kind == "i" else las).append((v, hit[2], nm))
    return Correspondence(ins, las)


# ---------------------------------------------------------------------------
# stratification


def _reset_order(c: Circuit):
    """(order, error): latch variables such that every reset reads only earlier ones."""
    kinds = {}
    for lit in c.inputs:
        kinds[lit >> 1] = "i"
    for la in c.latches:
        kinds[la.lit >> 1] = "l"
    gates = {g.lhs >> 1: (g.rhs0 >> 1, g.rhs1 >> 1) for g in c.ands}

    def latch_support(lit):
        out, seen, stack = set(), set(), [lit >> 1]
        while stack:
            v = stack.pop()
            if v in seen or v == 0:
                continue
            seen.add(v)
            if v in gates:
                stack.extend(gates[v])
            elif kinds.get(v) == "l":
                out.add(v)
        return out

    deps = {}
    for la in c.latches:
        v = la.lit >> 1
        deps[v] = set() if la.reset == la.lit else latch_support(la.reset)
    color = {}
    order = []
    for start in deps:
        if color.get(start):
            continue
        color[start] = 1
        stack = [(start, iter(deps[start]))]
        while stack:
            v, it = stack[-1]
            u = next(it, None)
            if u is None:
                color[v] = 2
                order.append(v)
                stack.pop()
                continue
            if color.get(u) == 1:
                return None, f"reset cycle through latch variable {u}"
            if not color.get(u):
                color[u] = 1
                stack.append((u, iter(deps[u])))
    return order, None


def stratification_error(c: Circuit) -> Optional[str]:
    """None if resets are acyclic through latches, else a description."""
    return _reset_order(c)[1]


# ---------------------------------------------------------------------------
# CNF encoding


class _Enc:
    def __init__(self):
        self.f = CnfFormula()
        self._false = None

    def new(self) -> int:
        return self.f.new_var()

    def false(self) -> int:
        if self._false is None:
            self._false = self.new()
            self.f.add([-self._false])
        return self._false

    def and2(self, a: int, b: int) -> int:
        x = self.new()
        self.f.add([-x, a])
        self.f.add([-x, b])
        self.f.add([x, -a, -b])
        return x

    def or_all(self, lits: list) -> int:
        if not lits:
            return self.false()
        x = self.new()
        self.f.add([-x] + lits)
        for a in lits:
            self.f.add([x, -a])
        return x

    def xor(self, a: int, b: int) -> int:
        x = self.new()
        self.f.add([-x, a, b])
        self.f.add([-x, -a, -b])
        self.f.add([x, -a, b])
        self.f.add([x, a, -b])
        return x


class _Inst:
    """One copy of a circuit's combinational logic inside an encoding."""

    def __init__(self, enc: _Enc, c: Circuit, shared: Optional[dict] = None):
        self.enc = enc
        self.c = c
        self.gates = {g.lhs >> 1: g for g in c.ands}
        self.vmap = dict(shared or {})
        self.latch_fn = None  # optional: latch var -> literal, used lazily
        self.latch_vars = {la.lit >> 1 for la in c.latches}
        for lit in c.inputs:
            self.vmap.setdefault(lit >> 1, None)
        for la in c.latches:
            self.vmap.setdefault(la.lit >> 1, None)

    def var(self, v: int) -> int:
        x = self.vmap.get(v)
        if x is None:
            if v in self.gates:
                return self._encode(v)
            if v not in self.vmap:
                raise CheckError(f"undefined variable {v}")
            if self.latch_fn is not None and v in self.latch_vars:
                x = self.latch_fn(v)
            else:
                x = self.enc.new()
            self.vmap[v] = x
        return x

    def _encode(self, root: int) -> int:
        stack = [root]
        while stack:
            v = stack[-1]
            if self.vmap.get(v) is not None:
                stack.pop()
                continue
            g = self.gates.get(v)
            if g is None:
                self.var(v)
                stack.pop()
                continue
            pend = [u for u in (g.rhs0 >> 1, g.rhs1 >> 1) if u != 0 and self.vmap.get(u) is None]
            if pend:
                stack.extend(pend)
                continue
            stack.pop()
            self.vmap[v] = self.enc.and2(self.lit(g.rhs0), self.lit(g.rhs1))
        return self.vmap[root]

    def lit(self, lit: int) -> int:
        v = lit >> 1
        x = self.enc.false() if v == 0 else self.var(v)
        return -x if lit & 1 else x


# ---------------------------------------------------------------------------
# checks


@dataclass
class CheckResult:
    status: str
    model: Optional[dict] = None  # name -> value, on SAT

    def to_dict(self):
        d = {"status": self.status}
        if self.model is not None:
            d["model"] = self.model
        return d


@dataclass
class CheckReport:
    stratified: str = FAIL
    checks: dict = field(default_factory=dict)
    common: dict = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.stratified == PASS and all(self.checks.get(k) is not None and self.checks[k].status == PASS
                                               for k in CHECKS)

    def failed(self) -> list:
        out = [] if self.stratified == PASS else ["stratified"]
        return out + [k for k in CHECKS if k not in self.checks or self.checks[k].status != PASS]

    def to_dict(self):
        return {
            "overall": PASS if self.ok else FAIL,
            "stratified": self.stratified,
            "checks": {k: v.to_dict() for k, v in self.checks.items()},
            "common": self.common,
            "error": self.error,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _value(model: dict, x: int) -> bool:
    return bool(model.get(abs(x), False)) ^ (x < 0)


def _named_model(model, inst: _Inst, prefix: str) -> dict:
    out = {}
    c = inst.c
    for k, (lit, nm) in enumerate(zip(c.inputs, c.input_names)):
        x = inst.vmap.get(lit >> 1)
        if x is not None:
            out[f"{prefix}{nm if nm is not None else f'i{k}'}"] = _value(model, x)
    for k, (la, nm) in enumerate(zip(c.latches, c.latch_names)):
        x = inst.vmap.get(la.lit >> 1)
        if x is not None:
            out[f"{prefix}{nm if nm is not None else f'l{k}'}"] = _value(model, x)
    return out


def _run(enc: _Enc, roots: list, insts: list, name: str, dump_dir, budget) -> CheckResult:
    for r in roots:
        enc.f.add([r])
    if dump_dir:
        with open(os.path.join(dump_dir, f"check_{name}.cnf"), "w") as fh:
            fh.write(write_dimacs(enc.f))
    r = solve(enc.f, conflict_budget=budget)
    if r.status == UNSAT:
        return CheckResult(PASS)
    if r.status == SAT:
        model = {}
        for prefix, inst in insts:
            model.update(_named_model(r.model, inst, prefix))
        return CheckResult(FAIL, model)
    return CheckResult(UNKNOWN)


def _check_A(w: Circuit, inv_bad: int, **kw) -> CheckResult:
    enc = _Enc()
    wi = _Inst(enc, w)
    # in a reset state every initialized latch equals its reset function;
    # stratification lets us substitute them in dependency order
    order, _ = _reset_order(w)
    for v in order:
        la = w.latches[w.index[v][1]]
        if la.reset != la.lit:
            wi.vmap[v] = wi.lit(la.reset)
    return _run(enc, [wi.lit(inv_bad)], [("", wi)], "A", **kw)


def _check_B(w: Circuit, inv_bad: int, **kw) -> CheckResult:
    enc = _Enc()
    w0 = _Inst(enc, w)
    nxt = {la.lit >> 1: la.next for la in w.latches}
    # latch variables of frame 1 are the next-state literals of frame 0,
    # encoded only for latches the invariant reads
    w1 = _Inst(enc, w)
    w1.latch_fn = lambda v: w0.lit(nxt[v])
    return _run(enc, [-w0.lit(inv_bad), w1.lit(inv_bad)], [("0:", w0), ("1:", w1)], "B", **kw)


def _check_C(w: Circuit, inv_bad: int, **kw) -> CheckResult:
    enc = _Enc()
    wi = _Inst(enc, w)
    return _run(enc, [-wi.lit(inv_bad), wi.lit(w.bad)], [("", wi)], "C", **kw)


def _pair(enc, c, w, corr):
    ci = _Inst(enc, c)
    shared = {}
    for cv, wv, _ in corr.inputs + corr.latches:
        shared[wv] = ci.var(cv)
    wi = _Inst(enc, w, shared)
    return ci, wi


def _check_DE(c: Circuit, w: Circuit, corr: Correspondence, which: str, **kw) -> CheckResult:
    enc = _Enc()
    ci, wi = _pair(enc, c, w, corr)
    diffs = []
    for cv, wv, _ in corr.latches:
        la_c = c.latches[c.index[cv][1]]
        la_w = w.latches[w.index[wv][1]]
        if which == "D":
            diffs.append(enc.xor(ci.lit(la_c.reset), wi.lit(la_w.reset)))
        else:
            diffs.append(enc.xor(ci.lit(la_c.next), wi.lit(la_w.next)))
    return _run(enc, [enc.or_all(diffs)], [("model:", ci), ("witness:", wi)], which, **kw)


def _check_F(c: Circuit, w: Circuit, corr: Correspondence, **kw) -> CheckResult:
    enc = _Enc()
    ci, wi = _pair(enc, c, w, corr)
    return _run(enc, [-wi.lit(w.bad), ci.lit(c.bad)], [("model:", ci), ("witness:", wi)], "F", **kw)


def check(c: Circuit, wit: Witness, dump_dir: Optional[str] = None,
          conflict_budget: Optional[int] = None) -> CheckReport:
    rep = CheckReport()
    w = wit.circuit
    inv_bad = wit.invariant_bad
    if (inv_bad >> 1) > w.maxvar:
        rep.error = "invariant literal out of range"
        return rep
    errs = [e for e in (stratification_error(c), stratification_error(w)) if e]
    if errs:
        rep.error = "; ".join(errs)
        return rep
    rep.stratified = PASS
    try:
        corr = match_common(c, w)
    except CheckError as e:
        rep.error = str(e)
        return rep
    rep.common = corr.counts
    if dump_dir:
        os.makedirs(dump_dir, exist_ok=True)
    kw = dict(dump_dir=dump_dir, budget=conflict_budget)
    rep.checks["A"] = _check_A(w, inv_bad, **kw)
    rep.checks["B"] = _check_B(w, inv_bad, **kw)
    rep.checks["C"] = _check_C(w, inv_bad, **kw)
    rep.checks["D"] = _check_DE(c, w, corr, "D", **kw)
    rep.checks["E"] = _check_DE(c, w, corr, "E", **kw)
    rep.checks["F"] = _check_F(c, w, corr, **kw)
    return rep


# ---------------------------------------------------------------------------
# diagnostics


def reset_independence_probe(c: Circuit, wit: Witness) -> bool:
    """Check that resets of common latches ignore every non-common witness variable.

    For each non-common input or latch v of the witness, the two cofactors
    of every common latch's reset with respect to v must agree.
    """
    w = wit.circuit
    corr = match_common(c, w)
    common_w = {wv for _, wv, _ in corr.inputs + corr.latches}
    targets = [w.latches[w.index[wv][1]] for _, wv, _ in corr.latches]
    targets = [la for la in targets if la.reset != la.lit]
    if not targets:
        return True
    others = [lit >> 1 for lit in w.inputs] + [la.lit >> 1 for la in w.latches]
    for v in others:
        if v in common_w:
            continue
        enc = _Enc()
        a = _Inst(enc, w)
        shared = {u: a.var(u) for u in others if u != v}
        b = _Inst(enc, w, shared)
        diffs = [enc.xor(a.lit(la.reset), b.lit(la.reset)) for la in targets]
        enc.f.add([a.var(v)])
        enc.f.add([-b.var(v)])
        enc.f.add([enc.or_all(diffs)])
        if solve(enc.f).status != UNSAT:
            return False
    return True
