"""Witness construction for the phase abstraction pipeline.

Certificates are built backwards: the back end certifies the reduced
circuit, the same witness serves for the rewritten and factored circuits,
the composite witness adds the unfolded loop invariant to certify the
unfolded circuit, and folding brings it back to the original circuit.
All matching between circuits is by variable name.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .aiger_io import Witness, tseitin
from .netlist import Builder, Circuit, support
from .periodic import SELF
from .satkit import solve
from .tersim import CubeLasso
from .transform import CopyMap, ensure_names


# ---------------------------------------------------------------------------
# unfolded loop invariant


@dataclass
class LoopInvariant:
    """Disjunction of conjunctions of n cubes, over unfolded latch names.

    Each cube is a tuple of (latch name, polarity) pairs.  An empty list of
    disjuncts with ``trivial`` set stands for true.
    """

    n: int
    d: int
    disjuncts: list
    trivial: bool = False


def build_loop_invariant(c: Circuit, lasso: Optional[CubeLasso], d: int, n: int, cm: CopyMap) -> LoopInvariant:
    if lasso is None:
        return LoopInvariant(n, d, [], trivial=True)
    total = lasso.delta + lasso.omega + 1 - d
    if total % n or d > lasso.delta:
        raise ValueError("d and n do not tile the lasso")
    name_of = {la.lit >> 1: nm for la, nm in zip(c.latches, c.latch_names)}
    out = []
    for i in range(total // n):
        conj = []
        for j in range(n):
            cube = lasso.cubes[i * n + j + d]
            conj.append(tuple(sorted((cm.latch(name_of[lit >> 1], j), not (lit & 1)) for lit in cube)))
        out.append(conj)
    return LoopInvariant(n, d, out)


def phi_literal(b: Builder, inv: LoopInvariant, latch_lit: dict) -> int:
    """Encode the loop invariant; ``latch_lit`` maps unfolded latch names to literals."""
    if inv.trivial:
        return 1
    terms = []
    for conj in inv.disjuncts:
        lits = []
        for cube in conj:
            for name, pos in cube:
                lits.append(latch_lit[name] ^ (0 if pos else 1))
        terms.append(b.AND_ALL(lits))
    return b.OR_ALL(terms)


def _signal_constraints(b, signals, cm, latch_lit):
    out = []
    for name, sig in signals.items():
        for j, entry in enumerate(sig.phases):
            if entry is SELF:
                continue
            x = latch_lit[cm.latch(name, j)]
            if entry in (0, 1):
                out.append(x ^ (entry ^ 1))
            else:
                rep, negated = entry
                out.append(b.EQ(x, latch_lit[cm.latch(rep, j)] ^ int(negated)))
    return out


def verify_loop_invariant(c_unf: Circuit, inv: LoopInvariant, signals: dict, cm: CopyMap) -> Optional[str]:
    """SAT-check that the loop invariant is inductive and implies the signals.

    Returns None on success, otherwise which check failed.
    """
    b = Builder()
    ins = {lit >> 1: b.input() for lit in c_unf.inputs}
    cur = {la.lit >> 1: b.input() for la in c_unf.latches}
    leaf = dict(ins)
    leaf.update(cur)
    roots = [la.next for la in c_unf.latches] + [la.reset for la in c_unf.latches]
    tr = b.import_logic(c_unf, leaf, roots)
    cur_by_name = {nm: cur[la.lit >> 1] for la, nm in zip(c_unf.latches, c_unf.latch_names)}
    nxt_by_name = {nm: tr(la.next) for la, nm in zip(c_unf.latches, c_unf.latch_names)}
    rst = b.AND_ALL(b.EQ(cur[la.lit >> 1], tr(la.reset)) for la in c_unf.latches if la.reset != la.lit)
    phi = phi_literal(b, inv, cur_by_name)
    phi_next = phi_literal(b, inv, nxt_by_name)
    sig = b.AND_ALL(_signal_constraints(b, signals, cm, cur_by_name))
    queries = [
        ("reset does not imply the loop invariant", [rst, phi ^ 1]),
        ("loop invariant is not inductive", [phi, phi_next ^ 1]),
        ("loop invariant does not imply the periodic signals", [phi, sig ^ 1]),
    ]
    keep = [x for _, q in queries for x in q]
    comb = b.build(0, keep=keep)
    for what, q in queries:
        f, _ = tseitin(comb, [b.mapped(x) for x in q])
        r = solve(f)
        if not r.unsat:
            return what
    return None


# ---------------------------------------------------------------------------
# reduce / rewrite


def lift_over_reduce_rewrite(w: Witness) -> Witness:
    """A witness of a reduced or rewritten circuit certifies its source unchanged."""
    return w


# ---------------------------------------------------------------------------
# helpers


def _fresh_names(base: list, taken: set) -> list:
    out = []
    for nm in base:
        while nm in taken:
            nm = "_" + nm
        taken.add(nm)
        out.append(nm)
    return out


def _copy_latch_functions(b, c, leaf, new_latches):
    """Give the new latches the reset/next functions of ``c``'s latches."""
    roots = [la.next for la in c.latches] + [la.reset for la in c.latches]
    tr = b.import_logic(c, leaf, roots)
    for la, x in zip(c.latches, new_latches):
        b.set_next(x, tr(la.next))
        b.set_reset(x, x if la.reset == la.lit else tr(la.reset))
    return tr


# ---------------------------------------------------------------------------
# composite witness


def composite_witness(c_unf: Circuit, w: Witness, inv: LoopInvariant) -> Witness:
    """Witness of the unfolded circuit from a witness of its factor circuit.

    The unfolded circuit's latches keep their unfolded reset and next
    functions, witness-only latches keep theirs, and the invariant is the
    loop invariant conjoined with the factor witness's invariant.
    """
    wc = w.circuit
    b = Builder()
    var = {}
    in_names = set(c_unf.input_names)
    l_names = set(c_unf.latch_names)
    for lit, nm in zip(c_unf.inputs, c_unf.input_names):
        var[("i", nm)] = b.input(nm)
    extra_in = [(lit, nm) for lit, nm in zip(wc.inputs, wc.input_names) if nm not in in_names]
    for lit, nm in extra_in:
        var[("i", nm)] = b.input(nm)
    lats = [b.latch(nm) for nm in c_unf.latch_names]
    for x, nm in zip(lats, c_unf.latch_names):
        var[("l", nm)] = x
    extra_l = [(la, nm) for la, nm in zip(wc.latches, wc.latch_names) if nm not in l_names]
    for la, nm in extra_l:
        var[("l", nm)] = b.latch(nm)
    for nm in wc.input_names:
        if nm in l_names:
            raise ValueError(f"witness input {nm} is a latch of the unfolded circuit")
    for nm in wc.latch_names:
        if nm in in_names:
            raise ValueError(f"witness latch {nm} is an input of the unfolded circuit")
    leaf_c = {lit >> 1: var[("i", nm)] for lit, nm in zip(c_unf.inputs, c_unf.input_names)}
    leaf_c.update({la.lit >> 1: x for la, x in zip(c_unf.latches, lats)})
    _copy_latch_functions(b, c_unf, leaf_c, lats)
    leaf_w = {lit >> 1: var[("i", nm)] for lit, nm in zip(wc.inputs, wc.input_names)}
    leaf_w.update({la.lit >> 1: var[("l", nm)] for la, nm in zip(wc.latches, wc.latch_names)})
    roots = [w.invariant_bad] + [la.next for la, _ in extra_l] + [la.reset for la, _ in extra_l]
    trw = b.import_logic(wc, leaf_w, roots)
    for la, nm in extra_l:
        x = var[("l", nm)]
        b.set_next(x, trw(la.next))
        b.set_reset(x, x if la.reset == la.lit else trw(la.reset))
    phi = phi_literal(b, inv, {nm: x for nm, x in zip(c_unf.latch_names, lats)})
    q = b.AND(phi, trw(w.invariant_bad) ^ 1)
    return Witness(b.build(q ^ 1, bad_name=c_unf.bad_name))


# ---------------------------------------------------------------------------
# folding


@dataclass
class FoldInfo:
    n: int
    m: int
    b_bits: list
    e_bits: list


def fold_witness(c: Circuit, w: Witness, cm: CopyMap) -> tuple:
    """Witness of ``c`` from a witness of its n-fold unfolding.

    The folded circuit keeps a history of the last m = 2n-2 states and
    inputs of ``c``.  Initialization bits b^k record that the history is
    k steps deep; the unary counter e tracks which n consecutive history
    entries form the current unfolded state.  The unfolded witness's
    invariant is required of that window once the history is full.

    Requirements checked here: every witness latch is a latch of the
    unfolded circuit, and the witness invariant does not read the step
    inputs of the unfolded circuit (those are fixed to 0 in the window).
    Returns (witness, FoldInfo).
    """
    n = cm.n
    if n == 1:
        return w, FoldInfo(1, 0, [], [])
    wc = w.circuit
    m = 2 * n - 2
    copy_latch = {}
    for k, nm in enumerate(c.latch_names):
        for j in range(n):
            copy_latch[cm.latch(nm, j)] = (k, j)
    phase_in = {}
    step_in = set()
    for k, nm in enumerate(c.input_names):
        for j in range(n):
            phase_in[cm.phase_input(nm, j)] = (k, j)
        for j in range(1, n):
            step_in.add(cm.step_input(nm, j))
    for nm in wc.latch_names:
        if nm not in copy_latch:
            raise ValueError(f"witness latch {nm} is not a latch copy; folding needs none")
    inv_sup = support(wc, [w.invariant_bad])
    for lit, nm in zip(wc.inputs, wc.input_names):
        if (lit >> 1) in inv_sup and nm in step_in:
            raise ValueError(f"witness invariant reads step input {nm}")

    taken = set(c.input_names) | set(c.latch_names)
    b = Builder()
    I = [[b.input(nm) for nm in c.input_names]]
    L = [[b.latch(nm) for nm in c.latch_names]]
    for t in range(1, m + 1):
        hist_l = _fresh_names([f"fold_l{t}_{nm}" for nm in c.latch_names], taken)
        L.append([b.latch(nm) for nm in hist_l])
    for t in range(1, m + 1):
        hist_i = _fresh_names([f"fold_i{t}_{nm}" for nm in c.input_names], taken)
        I.append([b.latch(nm) for nm in hist_i])
    bits = [b.latch(nm) for nm in _fresh_names([f"fold_b{t}" for t in range(m + 1)], taken)]
    ebits = [b.latch(nm) for nm in _fresh_names([f"fold_e{t}" for t in range(n - 1)], taken)]

    def inst(t):
        leaf = {lit >> 1: x for lit, x in zip(c.inputs, I[t])}
        leaf.update({la.lit >> 1: x for la, x in zip(c.latches, L[t])})
        return leaf

    roots = [c.bad] + [la.next for la in c.latches] + [la.reset for la in c.latches]
    trs = [b.import_logic(c, inst(t), roots) for t in range(m + 1)]

    # transitions and resets
    tr0 = trs[0]
    for la, x in zip(c.latches, L[0]):
        b.set_next(x, tr0(la.next))
        b.set_reset(x, x if la.reset == la.lit else tr0(la.reset))
    for t in range(1, m + 1):
        for x, prev in zip(L[t], L[t - 1]):
            b.set_next(x, prev)
        for x, prev in zip(I[t], I[t - 1]):
            b.set_next(x, prev)
    b.set_next(bits[0], 1)
    b.set_reset(bits[0], 1)
    for t in range(1, m + 1):
        b.set_next(bits[t], bits[t - 1])
        b.set_reset(bits[t], 0)
    top = ebits[n - 2]
    b.set_next(ebits[0], b.AND(bits[n - 1], top ^ 1))
    b.set_reset(ebits[0], 0)
    for k in range(1, n - 1):
        b.set_next(ebits[k], b.AND(ebits[k - 1], top ^ 1))
        b.set_reset(ebits[k], 0)

    def reset_pred(t):
        tr = trs[t]
        return b.AND_ALL(b.EQ(x, tr(la.reset)) for la, x in zip(c.latches, L[t]) if la.reset != la.lit)

    q = []
    q.append(trs[0](c.bad) ^ 1)  # q0
    q.append(bits[0])  # q1
    for t in range(1, m + 1):  # q2
        q.append(b.IMPLIES(bits[t], bits[t - 1]))
    for t in range(1, m + 1):  # q3: the history is a run of c
        step = b.AND_ALL(b.EQ(y, trs[t](la.next)) for la, y in zip(c.latches, L[t - 1]))
        q.append(b.IMPLIES(bits[t], step))
    for t in range(1, m + 1):  # q4: the oldest recorded state is a reset state
        q.append(b.IMPLIES(b.AND(bits[t] ^ 1, bits[t - 1]), reset_pred(t - 1)))
    # q5: the aligned window satisfies the unfolded witness invariant
    window = []
    for i in range(n):
        leaf = {}
        for lit, nm in zip(wc.inputs, wc.input_names):
            if nm in phase_in:
                k, j = phase_in[nm]
                leaf[lit >> 1] = I[i + n - 1 - j][k]
            else:
                leaf[lit >> 1] = 0
        for la, nm in zip(wc.latches, wc.latch_names):
            k, j = copy_latch[nm]
            leaf[la.lit >> 1] = L[i + n - 1 - j][k]
        trw = b.import_logic(wc, leaf, [w.invariant_bad])
        align = b.AND_ALL([ebits[j] ^ 1 for j in range(i, n - 1)] + [ebits[j] for j in range(i)])
        window.append(b.AND(align, trw(w.invariant_bad) ^ 1))
    q.append(b.IMPLIES(bits[m], b.OR_ALL(window)))
    for k in range(1, n - 1):  # q6
        q.append(b.IMPLIES(ebits[k], ebits[k - 1]))
    for k in range(n - 1):  # q7
        q.append(b.IMPLIES(ebits[k], bits[n + k]))
    for k in range(n - 2):  # q8
        q.append(b.IMPLIES(b.AND(bits[m] ^ 1, bits[n + k]), ebits[k]))
    Q = b.AND_ALL(q)
    out = b.build(Q ^ 1, bad_name=c.bad_name)
    return Witness(out), FoldInfo(n, m, [f"fold_b{t}" for t in range(m + 1)], [f"fold_e{t}" for t in range(n - 1)])


# ---------------------------------------------------------------------------
# names


def denormalize(w: Witness, original: Circuit) -> Witness:
    """Drop the default names given to unnamed variables of ``original``."""
    named = ensure_names(original)
    ren = {}
    for nm, dflt in zip(original.input_names, named.input_names):
        if nm is None:
            ren[("i", dflt)] = None
    for nm, dflt in zip(original.latch_names, named.latch_names):
        if nm is None:
            ren[("l", dflt)] = None
    if not ren:
        return w
    c = w.circuit
    ins = tuple(ren.get(("i", nm), nm) for nm in c.input_names)
    las = tuple(ren.get(("l", nm), nm) for nm in c.latch_names)
    return Witness(c.replace(input_names=ins, latch_names=las), w.inv_bad)
