"""And-inverter graph circuits with function-valued latch resets.

Literals follow the AIGER convention: ``2*v`` is variable ``v``, ``2*v+1``
its negation, ``0`` is false and ``1`` is true.  Each latch has a next-state
literal and a reset literal; a reset equal to the latch's own literal means
the latch is uninitialized.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

FALSE = 0
TRUE = 1


class StructuralError(ValueError):
    """A circuit violates a well-formedness condition."""


def neg(lit: int) -> int:
    return lit ^ 1


def var_of(lit: int) -> int:
    return lit >> 1


def is_neg(lit: int) -> bool:
    return bool(lit & 1)


def lit_if(lit: int, negate: bool) -> int:
    return lit ^ 1 if negate else lit


@dataclass(frozen=True)
class Latch:
    lit: int
    next: int
    reset: int

    @property
    def uninitialized(self) -> bool:
        return self.reset == self.lit


@dataclass(frozen=True)
class AndGate:
    lhs: int
    rhs0: int
    rhs1: int


@dataclass(frozen=True)
class Circuit:
    """Immutable circuit.  ``bad`` encodes the negated safety property."""

    maxvar: int
    inputs: tuple
    latches: tuple
    ands: tuple
    bad: int
    input_names: tuple = ()
    latch_names: tuple = ()
    bad_name: Optional[str] = None
    comments: tuple = ()
    _index: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if not self.input_names:
            object.__setattr__(self, "input_names", (None,) * len(self.inputs))
        if not self.latch_names:
            object.__setattr__(self, "latch_names", (None,) * len(self.latches))
        validate(self)

    # lookup helpers -----------------------------------------------------
    @property
    def index(self) -> dict:
        """Map from variable to (kind, position); kinds are 'i', 'l', 'a'."""
        if self._index is None:
            idx = {}
            for k, lit in enumerate(self.inputs):
                idx[lit >> 1] = ("i", k)
            for k, la in enumerate(self.latches):
                idx[la.lit >> 1] = ("l", k)
            for k, g in enumerate(self.ands):
                idx[g.lhs >> 1] = ("a", k)
            object.__setattr__(self, "_index", idx)
        return self._index

    @property
    def num_inputs(self) -> int:
        return len(self.inputs)

    @property
    def num_latches(self) -> int:
        return len(self.latches)

    @property
    def num_ands(self) -> int:
        return len(self.ands)

    def is_combinational(self) -> bool:
        return not self.latches

    def input_var(self, name: str) -> int:
        return self.inputs[self.input_names.index(name)] >> 1

    def latch_var(self, name: str) -> int:
        return self.latches[self.latch_names.index(name)].lit >> 1

    def name_of(self, var: int) -> Optional[str]:
        kind, k = self.index[var]
        if kind == "i":
            return self.input_names[k]
        if kind == "l":
            return self.latch_names[k]
        return None

    def latch_by_var(self, var: int) -> Latch:
        kind, k = self.index[var]
        if kind != "l":
            raise KeyError(var)
        return self.latches[k]

    def replace(self, **kw) -> "Circuit":
        vals = dict(
            maxvar=self.maxvar,
            inputs=self.inputs,
            latches=self.latches,
            ands=self.ands,
            bad=self.bad,
            input_names=self.input_names,
            latch_names=self.latch_names,
            bad_name=self.bad_name,
            comments=self.comments,
        )
        vals.update(kw)
        return Circuit(**vals)


def validate(c: Circuit) -> None:
    seen = set()

    def define(var, what):
        if var == 0:
            raise StructuralError(f"{what} redefines the constant")
        if var > c.maxvar:
            raise StructuralError(f"{what} variable {var} exceeds maxvar {c.maxvar}")
        if var in seen:
            raise StructuralError(f"variable {var} defined twice ({what})")
        seen.add(var)

    def check_ref(lit, what):
        if lit < 0 or (lit >> 1) > c.maxvar:
            raise StructuralError(f"{what} literal {lit} out of range")

    for lit in c.inputs:
        if lit & 1:
            raise StructuralError(f"input literal {lit} is negated")
        define(lit >> 1, "input")
    for la in c.latches:
        if la.lit & 1:
            raise StructuralError(f"latch literal {la.lit} is negated")
        define(la.lit >> 1, "latch")
    defined_so_far = set(seen)
    for g in c.ands:
        if g.lhs & 1:
            raise StructuralError(f"and-gate lhs {g.lhs} is negated")
        define(g.lhs >> 1, "and-gate")
    for g in c.ands:
        for r in (g.rhs0, g.rhs1):
            check_ref(r, f"and-gate {g.lhs}")
            v = r >> 1
            if v and v not in defined_so_far:
                raise StructuralError(
                    f"and-gate {g.lhs} uses variable {v} before its definition"
                )
        defined_so_far.add(g.lhs >> 1)
    for la in c.latches:
        for r, what in ((la.next, "next"), (la.reset, "reset")):
            check_ref(r, f"latch {la.lit} {what}")
            if (r >> 1) and (r >> 1) not in seen:
                raise StructuralError(
                    f"latch {la.lit} {what} uses undefined variable {r >> 1}"
                )
    check_ref(c.bad, "bad")
    if (c.bad >> 1) and (c.bad >> 1) not in seen:
        raise StructuralError(f"bad uses undefined variable {c.bad >> 1}")
    if len(c.input_names) != len(c.inputs) or len(c.latch_names) != len(c.latches):
        raise StructuralError("symbol table size mismatch")


# ---------------------------------------------------------------------------
# construction


class Builder:
    """Incremental circuit construction with eager constant folding.

    Variables are numbered in creation order.  ``build`` renumbers them
    canonically (inputs, then latches, then gates in topological order) and
    drops gates that nothing references.
    """

    def __init__(self):
        self.maxvar = 0
        self.inputs = []  # (lit, name)
        self.latches = []  # [lit, next, reset, name]
        self.latch_pos = {}
        self.gates = {}  # lhs var -> (rhs0, rhs1)
        self.gate_order = []

    def _fresh(self) -> int:
        self.maxvar += 1
        return 2 * self.maxvar

    def input(self, name: Optional[str] = None) -> int:
        lit = self._fresh()
        self.inputs.append((lit, name))
        return lit

    def latch(self, name: Optional[str] = None) -> int:
        lit = self._fresh()
        self.latch_pos[lit] = len(self.latches)
        self.latches.append([lit, None, lit, name])
        return lit

    def set_next(self, latch_lit: int, nxt: int) -> None:
        self.latches[self.latch_pos[latch_lit]][1] = nxt

    def set_reset(self, latch_lit: int, rst: int) -> None:
        self.latches[self.latch_pos[latch_lit]][2] = rst

    def AND(self, a: int, b: int) -> int:
        if a == 0 or b == 0 or a == (b ^ 1):
            return 0
        if a == 1:
            return b
        if b == 1 or a == b:
            return a
        lit = self._fresh()
        self.gates[lit >> 1] = (a, b)
        self.gate_order.append(lit >> 1)
        return lit

    def OR(self, a: int, b: int) -> int:
        return self.AND(a ^ 1, b ^ 1) ^ 1

    def IMPLIES(self, a: int, b: int) -> int:
        return self.OR(a ^ 1, b)

    def XOR(self, a: int, b: int) -> int:
        if a == 0:
            return b
        if b == 0:
            return a
        if a == 1:
            return b ^ 1
        if b == 1:
            return a ^ 1
        if a == b:
            return 0
        if a == b ^ 1:
            return 1
        return self.OR(self.AND(a, b ^ 1), self.AND(a ^ 1, b))

    def EQ(self, a: int, b: int) -> int:
        return self.XOR(a, b) ^ 1

    def ITE(self, c: int, t: int, e: int) -> int:
        if c == 1:
            return t
        if c == 0:
            return e
        if t == e:
            return t
        return self.OR(self.AND(c, t), self.AND(c ^ 1, e))

    def AND_ALL(self, lits: Iterable[int]) -> int:
        acc = 1
        for x in lits:
            acc = self.AND(acc, x)
            if acc == 0:
                return 0
        return acc

    def OR_ALL(self, lits: Iterable[int]) -> int:
        acc = 0
        for x in lits:
            acc = self.OR(acc, x)
            if acc == 1:
                return 1
        return acc

    def import_logic(self, c: Circuit, leaf: Mapping[int, int], roots: Iterable[int]):
        """Copy the gates of ``c`` needed for ``roots`` into this builder.

        ``leaf`` maps input/latch variables of ``c`` to literals here.
        Returns a function translating literals of ``c``.
        """
        memo = {0: 0}
        memo.update(leaf)
        index = c.index
        ands = c.ands
        for root in roots:
            v = root >> 1
            if v in memo:
                continue
            stack = [v]
            while stack:
                u = stack[-1]
                if u in memo:
                    stack.pop()
                    continue
                kind, k = index[u]
                if kind != "a":
                    raise KeyError(f"no image for variable {u}")
                g = ands[k]
                a, b = g.rhs0 >> 1, g.rhs1 >> 1
                pending = False
                if a not in memo:
                    stack.append(a)
                    pending = True
                if b not in memo:
                    stack.append(b)
                    pending = True
                if pending:
                    continue
                stack.pop()
                memo[u] = self.AND(memo[a] ^ (g.rhs0 & 1), memo[b] ^ (g.rhs1 & 1))

        def tr(lit: int) -> int:
            return memo[lit >> 1] ^ (lit & 1)

        return tr

    def build(self, bad: int, comments: Sequence[str] = (), bad_name=None, keep: Iterable[int] = ()) -> Circuit:
        """Freeze into a Circuit.  Gates reachable from ``keep`` are retained too;
        ``mapped`` translates builder literals afterwards."""
        for la in self.latches:
            if la[1] is None:
                raise StructuralError(f"latch {la[0]} has no next-state function")
        needed = set()
        roots = [bad] + list(keep)
        for la in self.latches:
            roots.append(la[1])
            roots.append(la[2])
        stack = [r >> 1 for r in roots]
        while stack:
            v = stack.pop()
            if v in needed or v not in self.gates:
                continue
            needed.add(v)
            a, b = self.gates[v]
            stack.append(a >> 1)
            stack.append(b >> 1)
        newvar = {0: 0}
        nv = 0
        for lit, _ in self.inputs:
            nv += 1
            newvar[lit >> 1] = nv
        for la in self.latches:
            nv += 1
            newvar[la[0] >> 1] = nv
        order = [v for v in self.gate_order if v in needed]
        for v in order:
            nv += 1
            newvar[v] = nv
        self._newvar = newvar

        m = self.mapped
        ands = []
        for v in order:
            a, b = self.gates[v]
            a, b = m(a), m(b)
            if a < b:
                a, b = b, a
            ands.append(AndGate(2 * newvar[v], a, b))
        return Circuit(
            maxvar=nv,
            inputs=tuple(m(lit) for lit, _ in self.inputs),
            latches=tuple(Latch(m(la[0]), m(la[1]), m(la[2])) for la in self.latches),
            ands=tuple(ands),
            bad=m(bad),
            input_names=tuple(n for _, n in self.inputs),
            latch_names=tuple(la[3] for la in self.latches),
            bad_name=bad_name,
            comments=tuple(comments),
        )

    def mapped(self, lit: int) -> int:
        return 2 * self._newvar[lit >> 1] + (lit & 1)


def rebuild(c: Circuit, subst: Optional[Mapping[int, int]] = None, keep_comments=True) -> Circuit:
    """Copy ``c`` through a Builder, folding constants.

    ``subst`` maps variables of ``c`` to literals of ``c`` that replace every
    occurrence.  Replacement literals are themselves translated, so chains are
    followed; a chain that loops back is a structural error.
    """
    subst = dict(subst or {})
    b = Builder()
    leaf = {}
    for lit, name in zip(c.inputs, c.input_names):
        leaf[lit >> 1] = b.input(name)
    for la, name in zip(c.latches, c.latch_names):
        leaf[la.lit >> 1] = b.latch(name)
    image = {0: 0}
    index = c.index
    ands = c.ands

    def resolve(root_var):
        stack = [root_var]
        active = set()
        while stack:
            u = stack[-1]
            if u in image:
                stack.pop()
                active.discard(u)
                continue
            active.add(u)
            if u in subst:
                t = subst[u] >> 1
                if t not in image:
                    if t in active:
                        raise StructuralError(f"substitution cycle through variable {u}")
                    stack.append(t)
                    continue
                image[u] = image[t] ^ (subst[u] & 1)
                stack.pop()
                active.discard(u)
                continue
            kind, k = index[u]
            if kind != "a":
                image[u] = leaf[u]
                stack.pop()
                active.discard(u)
                continue
            g = ands[k]
            pend = False
            for r in (g.rhs0 >> 1, g.rhs1 >> 1):
                if r not in image:
                    if r in active:
                        raise StructuralError(f"substitution cycle through variable {r}")
                    stack.append(r)
                    pend = True
            if pend:
                continue
            image[u] = b.AND(image[g.rhs0 >> 1] ^ (g.rhs0 & 1), image[g.rhs1 >> 1] ^ (g.rhs1 & 1))
            stack.pop()
            active.discard(u)

    def tr(lit):
        v = lit >> 1
        if v not in image:
            resolve(v)
        return image[v] ^ (lit & 1)

    for la in c.latches:
        nl = leaf[la.lit >> 1]
        b.set_next(nl, tr(la.next))
        rst = la.reset
        if rst == la.lit:
            b.set_reset(nl, nl)
        else:
            r = tr(rst)
            if (r >> 1) == (nl >> 1):
                raise StructuralError(f"reset of latch {la.lit} becomes self-referential")
            b.set_reset(nl, r)
    bad = tr(c.bad)
    return b.build(bad, comments=c.comments if keep_comments else (), bad_name=c.bad_name)


def substitute(c: Circuit, mapping: Mapping[int, int]) -> Circuit:
    """Replace every occurrence of the mapped variables by the given literals.

    ``mapping`` is keyed by literal (a negated key maps the negation).  The
    substituted variables keep their own definitions.
    """
    subst = {}
    for k, v in mapping.items():
        subst[k >> 1] = v ^ (k & 1)
    return rebuild(c, subst)


# ---------------------------------------------------------------------------
# structural analysis


def support(c: Circuit, lits: Iterable[int]) -> set:
    """Input and latch variables in the structural support of ``lits``."""
    index = c.index
    ands = c.ands
    out = set()
    seen = set()
    stack = [lit >> 1 for lit in lits]
    while stack:
        v = stack.pop()
        if v == 0 or v in seen:
            continue
        seen.add(v)
        kind, k = index[v]
        if kind == "a":
            g = ands[k]
            stack.append(g.rhs0 >> 1)
            stack.append(g.rhs1 >> 1)
        else:
            out.add(v)
    return out


def reset_deps(c: Circuit) -> dict:
    """Latch variable -> set of latch variables its reset reads (self-reset excluded)."""
    deps = {}
    for la in c.latches:
        v = la.lit >> 1
        if la.reset == la.lit:
            deps[v] = set()
            continue
        deps[v] = {u for u in support(c, [la.reset]) if c.index[u][0] == "l"}
    return deps


class NotStratified(StructuralError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__(f"reset functions are cyclic through latches {self.cycle}")


def check_stratified(c: Circuit) -> list:
    """Return latch variables in an order where every reset reads only earlier latches.

    Raises NotStratified carrying a cycle when no such order exists.
    """
    deps = reset_deps(c)
    order = []
    state = {}  # 1 = on stack, 2 = done
    for la in c.latches:
        root = la.lit >> 1
        if state.get(root) == 2:
            continue
        stack = [(root, iter(sorted(deps[root])))]
        path = [root]
        state[root] = 1
        while stack:
            v, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                path.pop()
                state[v] = 2
                order.append(v)
                continue
            st = state.get(nxt)
            if st == 2:
                continue
            if st == 1:
                raise NotStratified(path[path.index(nxt):])
            state[nxt] = 1
            path.append(nxt)
            stack.append((nxt, iter(sorted(deps[nxt]))))
    return order


def coi(c: Circuit) -> set:
    """Inputs and latches that the bad literal transitively depends on."""
    result = set()
    frontier = support(c, [c.bad])
    while frontier:
        new = set()
        for v in frontier:
            if v in result:
                continue
            result.add(v)
            if c.index[v][0] == "l":
                la = c.latch_by_var(v)
                roots = [la.next] if la.reset == la.lit else [la.next, la.reset]
                new |= support(c, roots)
        frontier = new - result
    return result


# ---------------------------------------------------------------------------
# evaluation


class MissingVariable(KeyError):
    pass


def simulate(c: Circuit, inputs: Sequence[bool], latches: Sequence[bool]) -> list:
    """Evaluate all variables.  Returns a list indexed by variable."""
    val = [False] * (c.maxvar + 1)
    for lit, x in zip(c.inputs, inputs):
        val[lit >> 1] = bool(x)
    for la, x in zip(c.latches, latches):
        val[la.lit >> 1] = bool(x)
    for g in c.ands:
        a = val[g.rhs0 >> 1] ^ (g.rhs0 & 1)
        val[g.lhs >> 1] = a and (val[g.rhs1 >> 1] ^ (g.rhs1 & 1))
    return val


def lit_value(val: Sequence[bool], lit: int) -> bool:
    return bool(val[lit >> 1]) ^ bool(lit & 1)


@dataclass
class Evaluation:
    values: dict  # var -> bool for every variable
    bad: bool
    next: list  # next-state values in latch order
    reset: list  # reset literal values (self-reset gives the current value)


def eval_circuit(c: Circuit, assignment: Mapping[int, bool]) -> Evaluation:
    """Evaluate ``c`` on a total assignment to its inputs and latches (keyed by variable)."""
    ins, lats = [], []
    for lit in c.inputs:
        if (lit >> 1) not in assignment:
            raise MissingVariable(f"input variable {lit >> 1} unassigned")
        ins.append(assignment[lit >> 1])
    for la in c.latches:
        if (la.lit >> 1) not in assignment:
            raise MissingVariable(f"latch variable {la.lit >> 1} unassigned")
        lats.append(assignment[la.lit >> 1])
    val = simulate(c, ins, lats)
    return Evaluation(
        values={v: val[v] for v in range(1, c.maxvar + 1)},
        bad=lit_value(val, c.bad),
        next=[lit_value(val, la.next) for la in c.latches],
        reset=[lit_value(val, la.reset) for la in c.latches],
    )


def reset_state(c: Circuit, inputs: Sequence[bool], free: Optional[Mapping[int, bool]] = None) -> list:
    """Latch values of the reset state selected by ``inputs``.

    ``free`` gives values for uninitialized latches (default False).
    """
    order = check_stratified(c)
    free = free or {}
    cur = [False] * c.num_latches
    pos = {la.lit >> 1: k for k, la in enumerate(c.latches)}
    for v in order:
        k = pos[v]
        la = c.latches[k]
        if la.reset == la.lit:
            cur[k] = bool(free.get(v, False))
        else:
            val = simulate(c, inputs, cur)
            cur[k] = lit_value(val, la.reset)
    return cur


def satisfies_reset(c: Circuit, inputs: Sequence[bool], latches: Sequence[bool]) -> bool:
    val = simulate(c, inputs, latches)
    return all(lit_value(val, la.reset) == bool(x) for la, x in zip(c.latches, latches))


# ---------------------------------------------------------------------------
# unrolling


@dataclass
class Unrolling:
    circuit: Circuit  # combinational
    inputs: list  # per frame: list of input literals
    latches: list  # per frame: list of latch literals
    reset: int  # R(L_0) over frame-0 inputs and latches
    transition: int  # conjunction of L_{i+1} == F(I_i, L_i)
    bads: list  # per frame bad literal


def unroll(c: Circuit, k: int) -> Unrolling:
    """Combinational copy of frames 0..k with latches as free variables."""
    b = Builder()
    ins, lats, trs = [], [], []
    for i in range(k + 1):
        ins.append([b.input(f"{_key(c, 'i', j)}#{i}") for j in range(c.num_inputs)])
        lats.append([b.input(f"{_key(c, 'l', j)}#{i}") for j in range(c.num_latches)])
    roots = [c.bad] + [la.next for la in c.latches] + [la.reset for la in c.latches]
    bads = []
    reset = 1
    for i in range(k + 1):
        leaf = {lit >> 1: x for lit, x in zip(c.inputs, ins[i])}
        leaf.update({la.lit >> 1: x for la, x in zip(c.latches, lats[i])})
        tr = b.import_logic(c, leaf, roots)
        bads.append(tr(c.bad))
        if i == 0:
            eqs = []
            for la, x in zip(c.latches, lats[0]):
                if la.reset != la.lit:
                    eqs.append(b.EQ(x, tr(la.reset)))
            reset = b.AND_ALL(eqs)
        if i < k:
            for la, x in zip(c.latches, lats[i + 1]):
                trs.append(b.EQ(x, tr(la.next)))
    transition = b.AND_ALL(trs)
    keep = [reset, transition] + bads
    circ = b.build(0, keep=keep)
    m = b.mapped
    return Unrolling(
        circuit=circ,
        inputs=[[m(x) for x in row] for row in ins],
        latches=[[m(x) for x in row] for row in lats],
        reset=m(reset),
        transition=m(transition),
        bads=[m(x) for x in bads],
    )


def _key(c: Circuit, kind: str, k: int) -> str:
    names = c.input_names if kind == "i" else c.latch_names
    return names[k] if names[k] is not None else f"<{kind}{k}>"
