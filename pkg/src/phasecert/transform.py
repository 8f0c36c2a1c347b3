"""Preprocessing stages: forward, unfold, factor, rewrite, reduce.

All stages work on named circuits (see ``ensure_names``) so that variables
can be matched across stages by name.  Copies made by ``unfold`` are named
``<name>@<j>`` for latch copy j and phase input j, and ``<name>@x<j>`` for
the extra step inputs.  Inputs introduced by ``forward`` are named
``fwd_<step>_<name>`` (and ``fwd_init_<name>`` for uninitialized latches).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .netlist import Builder, Circuit, Latch, StructuralError, check_stratified, coi, rebuild
from .periodic import SELF


def default_input_name(k: int) -> str:
    return f"<i{k}>"


def default_latch_name(k: int) -> str:
    return f"<l{k}>"


def ensure_names(c: Circuit) -> Circuit:
    """Give every unnamed input/latch a positional default name."""
    used = {n for n in c.input_names + c.latch_names if n is not None}
    ins = list(c.input_names)
    las = list(c.latch_names)
    for names, mk in ((ins, default_input_name), (las, default_latch_name)):
        for k, n in enumerate(names):
            if n is None:
                cand = mk(k)
                while cand in used:
                    cand = "_" + cand
                names[k] = cand
                used.add(cand)
    all_names = ins + las
    if len(set(all_names)) != len(all_names):
        raise StructuralError("duplicate variable names")
    return c.replace(input_names=tuple(ins), latch_names=tuple(las))


def _instantiate(b: Builder, c: Circuit, inputs: list, latches: list, roots: list):
    leaf = {lit >> 1: x for lit, x in zip(c.inputs, inputs)}
    leaf.update({la.lit >> 1: x for la, x in zip(c.latches, latches)})
    return b.import_logic(c, leaf, roots)


# ---------------------------------------------------------------------------
# forwarding


@dataclass
class ForwardInfo:
    d: int
    step_inputs: list = field(default_factory=list)  # per step: list of input names
    init_inputs: dict = field(default_factory=dict)  # latch name -> input name


def forward(c: Circuit, d: int) -> tuple:
    """Replace resets by the states reachable in exactly d steps.

    The new reset of each latch is its value after d steps, computed from
    fresh inputs; the bad literal additionally reports a bad state hit
    during those d steps, so the result is safe exactly when ``c`` is.
    """
    if d == 0:
        return c, ForwardInfo(0)
    order = check_stratified(c)
    b = Builder()
    ins = [b.input(n) for n in c.input_names]
    lats = [b.latch(n) for n in c.latch_names]
    info = ForwardInfo(d)
    step_in = []
    for k in range(d):
        names = [f"fwd_{k}_{n}" for n in c.input_names]
        step_in.append([b.input(n) for n in names])
        info.step_inputs.append(names)
    pos = {la.lit >> 1: k for k, la in enumerate(c.latches)}
    # rho_0: resets expanded in stratified order
    rho = [None] * c.num_latches
    for v in order:
        k = pos[v]
        la = c.latches[k]
        if la.reset == la.lit:
            name = f"fwd_init_{c.latch_names[k]}"
            rho[k] = b.input(name)
            info.init_inputs[c.latch_names[k]] = name
    for v in order:
        k = pos[v]
        la = c.latches[k]
        if la.reset != la.lit:
            # only latches earlier in the order are read
            cur = [x if x is not None else 0 for x in rho]
            tr = _instantiate(b, c, step_in[0], cur, [la.reset])
            rho[k] = tr(la.reset)
    roots = [c.bad] + [la.next for la in c.latches]
    prefix_bad = []
    for k in range(d):
        tr = _instantiate(b, c, step_in[k], rho, roots)
        prefix_bad.append(tr(c.bad))
        rho = [tr(la.next) for la in c.latches]
    tr = _instantiate(b, c, ins, lats, roots)
    for k, la in enumerate(c.latches):
        b.set_next(lats[k], tr(la.next))
        b.set_reset(lats[k], rho[k])
    bad = b.OR(tr(c.bad), b.OR_ALL(prefix_bad))
    return b.build(bad, bad_name=c.bad_name), info


# ---------------------------------------------------------------------------
# unfolding


def copy_name(name: str, j: int) -> str:
    return f"{name}@{j}"


def step_name(name: str, j: int) -> str:
    return f"{name}@x{j}"


@dataclass
class CopyMap:
    n: int
    latch_names: tuple  # original latch names
    input_names: tuple  # original input names

    def latch(self, name: str, j: int) -> str:
        return copy_name(name, j) if self.n > 1 else name

    def phase_input(self, name: str, j: int) -> str:
        return copy_name(name, j) if self.n > 1 else name

    def step_input(self, name: str, j: int) -> str:
        return step_name(name, j)


def unfold(c: Circuit, n: int) -> tuple:
    """n-fold unrolling: one macro step performs n steps of ``c``.

    Phase input copy j drives the bad check of latch copy j and the step
    from copy j to copy j+1.  The step out of copy n-1 uses phase input
    n-1, and the remaining n-1 steps of a macro step use separate step
    inputs, so that every input sequence of ``c`` has a counterpart.
    """
    cm = CopyMap(n, tuple(c.latch_names), tuple(c.input_names))
    if n == 1:
        return c, cm
    b = Builder()
    a = [[b.input(copy_name(nm, j)) for nm in c.input_names] for j in range(n)]
    x = [None] + [[b.input(step_name(nm, j)) for nm in c.input_names] for j in range(1, n)]
    L = [[b.latch(copy_name(nm, j)) for nm in c.latch_names] for j in range(n)]
    nexts = [la.next for la in c.latches]
    resets = [la.reset for la in c.latches]
    tr0 = _instantiate(b, c, a[0], L[0], resets + [c.bad])
    for k, la in enumerate(c.latches):
        if la.reset != la.lit:
            b.set_reset(L[0][k], tr0(la.reset))
    for j in range(1, n):
        tr = _instantiate(b, c, a[j - 1], L[j - 1], nexts)
        for k, la in enumerate(c.latches):
            b.set_reset(L[j][k], tr(la.next))
    tr = _instantiate(b, c, a[n - 1], L[n - 1], nexts)
    N = [tr(lit) for lit in nexts]
    for k in range(c.num_latches):
        b.set_next(L[0][k], N[k])
    for j in range(1, n):
        tr = _instantiate(b, c, x[j], N, nexts)
        N = [tr(lit) for lit in nexts]
        for k in range(c.num_latches):
            b.set_next(L[j][k], N[k])
    bads = []
    for j in range(n):
        tr = _instantiate(b, c, a[j], L[j], [c.bad])
        bads.append(tr(c.bad))
    return b.build(b.OR_ALL(bads), bad_name=c.bad_name), cm


# ---------------------------------------------------------------------------
# factoring


def signal_literal(entry, j: int, cm: CopyMap, by_name: dict) -> Optional[int]:
    """Literal of the unfolded circuit that a phase entry stands for."""
    if entry is SELF:
        return None
    if entry in (0, 1):
        return entry
    rep, negated = entry
    return by_name[cm.latch(rep, j)] ^ int(negated)


def factor(c: Circuit, signals: dict, cm: CopyMap) -> Circuit:
    """Apply periodic signals to the unfolded circuit.

    A latch copy with a constant entry gets that constant as reset and next;
    one with a representative gets the representative copy's (possibly
    negated) reset and next.  Every occurrence of such a latch copy is then
    replaced by its constant or representative, which leaves it without
    readers for ``reduce`` to drop.
    """
    by_name = {nm: la.lit for nm, la in zip(c.latch_names, c.latches)}
    latches = list(c.latches)
    pos = {nm: k for k, nm in enumerate(c.latch_names)}
    subst = {}
    for name, sig in signals.items():
        if len(sig.phases) != cm.n:
            raise ValueError(f"signal for {name} has {len(sig.phases)} phases, expected {cm.n}")
        for j, entry in enumerate(sig.phases):
            target = signal_literal(entry, j, cm, by_name)
            if target is None:
                continue
            k = pos[cm.latch(name, j)]
            la = latches[k]
            if target in (0, 1):
                latches[k] = Latch(la.lit, target, target)
            else:
                rep = c.latch_by_var(target >> 1)
                sign = target & 1
                if rep.reset == rep.lit:
                    rst = target
                else:
                    rst = rep.reset ^ sign
                latches[k] = Latch(la.lit, rep.next ^ sign, rst)
            subst[la.lit >> 1] = target
    if not subst:
        return c
    return rebuild(c.replace(latches=tuple(latches)), subst)


# ---------------------------------------------------------------------------
# rewrite and reduce


def rewrite(c: Circuit) -> Circuit:
    """Constant propagation; no structural hashing."""
    return rebuild(c)


def reduce(c: Circuit) -> Circuit:
    """Keep only the cone of influence of the bad literal."""
    keep = coi(c)
    b = Builder()
    leaf = {}
    for lit, nm in zip(c.inputs, c.input_names):
        if (lit >> 1) in keep:
            leaf[lit >> 1] = b.input(nm)
    kept = []
    for la, nm in zip(c.latches, c.latch_names):
        if (la.lit >> 1) in keep:
            leaf[la.lit >> 1] = b.latch(nm)
            kept.append(la)
    roots = [c.bad] + [la.next for la in kept] + [la.reset for la in kept]
    tr = b.import_logic(c, leaf, roots)
    for la in kept:
        nl = leaf[la.lit >> 1]
        b.set_next(nl, tr(la.next))
        b.set_reset(nl, nl if la.reset == la.lit else tr(la.reset))
    return b.build(tr(c.bad), bad_name=c.bad_name)


# ---------------------------------------------------------------------------
# pipeline


@dataclass
class Stages:
    original: Circuit
    forwarded: Circuit
    forward_info: ForwardInfo
    unfolded: Circuit
    copymap: CopyMap
    factored: Circuit
    rewritten: Circuit
    reduced: Circuit

    def items(self):
        return [
            ("forward", self.forwarded),
            ("unfold", self.unfolded),
            ("factor", self.factored),
            ("rewrite", self.rewritten),
            ("reduce", self.reduced),
        ]


def run_pipeline(c: Circuit, d: int, n: int, signals: dict) -> Stages:
    """Run all stages on a named circuit."""
    fwd, info = forward(c, d)
    unf, cm = unfold(fwd, n)
    fac = factor(unf, signals, cm)
    rw = rewrite(fac)
    red = reduce(rw)
    return Stages(c, fwd, info, unf, cm, fac, rw, red)
