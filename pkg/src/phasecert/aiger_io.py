"""Extended AIGER ASCII reading/writing, Tseitin encoding and DIMACS.

The format is "aag" with the latch reset field allowed to be any literal.
Exactly one output is read and interpreted as the bad-state literal.  A
witness file may carry a second output: the negated inductive invariant,
for witnesses that keep the invariant separate from their property.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .netlist import AndGate, Circuit, Latch, StructuralError


class ParseError(ValueError):
    def __init__(self, line: int, msg: str):
        self.line = line
        super().__init__(f"line {line}: {msg}")


@dataclass
class ParsedFile:
    circuit: Circuit
    extra_outputs: list = field(default_factory=list)


def parse(text: str) -> Circuit:
    pf = parse_file(text, max_outputs=1)
    return pf.circuit


def parse_file(text: str, max_outputs: int = 1) -> ParsedFile:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    pos = 0

    def next_line():
        nonlocal pos
        if pos >= len(lines):
            raise ParseError(pos + 1, "unexpected end of file")
        pos += 1
        return lines[pos - 1]

    def ints(line, n, lineno, what):
        parts = line.split(" ")
        if len(parts) not in (n if isinstance(n, tuple) else (n,)):
            raise ParseError(lineno, f"malformed {what} line {line!r}")
        try:
            vals = [int(p) for p in parts]
        except ValueError:
            raise ParseError(lineno, f"non-integer in {what} line {line!r}") from None
        if any(v < 0 for v in vals):
            raise ParseError(lineno, f"negative literal in {what} line")
        return vals

    header = next_line().split(" ")
    if not header or header[0] != "aag":
        raise ParseError(1, "expected 'aag' header")
    try:
        nums = [int(x) for x in header[1:]]
    except ValueError:
        raise ParseError(1, "non-integer header field") from None
    if len(nums) < 5:
        raise ParseError(1, "header needs M I L O A")
    if len(nums) > 5 and any(nums[5:]):
        raise ParseError(1, "bad/constraint/justice/fairness sections are not supported")
    M, I, L, O, A = nums[:5]
    if not 1 <= O <= max_outputs:
        raise ParseError(1, f"expected {'one' if max_outputs == 1 else 'one or two'} output(s), got {O}")
    if M < I + L + A:
        raise ParseError(1, "M smaller than I + L + A")

    inputs = []
    for _ in range(I):
        lineno = pos + 1
        (lit,) = ints(next_line(), 1, lineno, "input")
        _check_def(lit, M, lineno, "input")
        inputs.append(lit)
    latches = []
    for _ in range(L):
        lineno = pos + 1
        vals = ints(next_line(), (2, 3), lineno, "latch")
        _check_def(vals[0], M, lineno, "latch")
        for v in vals[1:]:
            _check_ref(v, M, lineno)
        reset = vals[2] if len(vals) == 3 else 0
        latches.append(Latch(vals[0], vals[1], reset))
    outputs = []
    for _ in range(O):
        lineno = pos + 1
        (lit,) = ints(next_line(), 1, lineno, "output")
        _check_ref(lit, M, lineno)
        outputs.append(lit)
    ands = []
    for _ in range(A):
        lineno = pos + 1
        lhs, r0, r1 = ints(next_line(), 3, lineno, "and")
        _check_def(lhs, M, lineno, "and-gate")
        _check_ref(r0, M, lineno)
        _check_ref(r1, M, lineno)
        ands.append(AndGate(lhs, r0, r1))

    in_names = [None] * I
    la_names = [None] * L
    out_names = [None] * O
    comments = []
    while pos < len(lines):
        lineno = pos + 1
        line = next_line()
        if line == "c":
            comments = lines[pos:]
            break
        if not line or line[0] not in "ilo" or " " not in line:
            raise ParseError(lineno, f"malformed symbol line {line!r}")
        head, name = line.split(" ", 1)
        try:
            idx = int(head[1:])
        except ValueError:
            raise ParseError(lineno, f"malformed symbol line {line!r}") from None
        table = {"i": in_names, "l": la_names, "o": out_names}[head[0]]
        if not 0 <= idx < len(table):
            raise ParseError(lineno, f"symbol index {idx} out of range")
        if table[idx] is not None:
            raise ParseError(lineno, f"duplicate symbol for {head}")
        table[idx] = name

    ands = _topo_sort(ands, inputs, latches)
    try:
        circ = Circuit(
            maxvar=M,
            inputs=tuple(inputs),
            latches=tuple(latches),
            ands=tuple(ands),
            bad=outputs[0],
            input_names=tuple(in_names),
            latch_names=tuple(la_names),
            bad_name=out_names[0],
            comments=tuple(comments),
        )
    except StructuralError as exc:
        raise ParseError(0, str(exc)) from None
    return ParsedFile(circ, outputs[1:])


def _check_def(lit, M, lineno, what):
    if lit & 1:
        raise ParseError(lineno, f"{what} literal {lit} must be even")
    if lit < 2:
        raise ParseError(lineno, f"{what} literal {lit} redefines a constant")
    if lit >> 1 > M:
        raise ParseError(lineno, f"{what} literal {lit} exceeds M")


def _check_ref(lit, M, lineno):
    if lit >> 1 > M:
        raise ParseError(lineno, f"literal {lit} exceeds M")


def _topo_sort(ands, inputs, latches):
    defined = {0} | {x >> 1 for x in inputs} | {la.lit >> 1 for la in latches}
    ok = True
    seen = set(defined)
    for g in ands:
        if (g.rhs0 >> 1) not in seen or (g.rhs1 >> 1) not in seen:
            ok = False
            break
        seen.add(g.lhs >> 1)
    if ok:
        return ands
    by_var = {g.lhs >> 1: g for g in ands}
    out = []
    done = set(defined)
    onstack = set()
    for g in ands:
        stack = [g.lhs >> 1]
        while stack:
            v = stack[-1]
            if v in done:
                stack.pop()
                continue
            if v not in by_var:
                raise ParseError(0, f"variable {v} used but never defined")
            onstack.add(v)
            h = by_var[v]
            pend = [r >> 1 for r in (h.rhs0, h.rhs1) if (r >> 1) not in done]
            if pend:
                for u in pend:
                    if u in onstack:
                        raise ParseError(0, f"combinational cycle through variable {u}")
                    stack.append(u)
                continue
            stack.pop()
            onstack.discard(v)
            done.add(v)
            out.append(h)
    return out


def write(c: Circuit, extra_outputs: Sequence[int] = ()) -> str:
    """Serialize; latch lines carry a reset field only when it is not 0."""
    outs = [c.bad] + list(extra_outputs)
    parts = [f"aag {c.maxvar} {c.num_inputs} {c.num_latches} {len(outs)} {c.num_ands}"]
    parts.extend(str(x) for x in c.inputs)
    for la in c.latches:
        if la.reset == 0:
            parts.append(f"{la.lit} {la.next}")
        else:
            parts.append(f"{la.lit} {la.next} {la.reset}")
    parts.extend(str(x) for x in outs)
    parts.extend(f"{g.lhs} {g.rhs0} {g.rhs1}" for g in c.ands)
    for k, name in enumerate(c.input_names):
        if name is not None:
            parts.append(f"i{k} {name}")
    for k, name in enumerate(c.latch_names):
        if name is not None:
            parts.append(f"l{k} {name}")
    if c.bad_name is not None:
        parts.append(f"o0 {c.bad_name}")
    if c.comments:
        parts.append("c")
        parts.extend(c.comments)
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# CNF


@dataclass
class CnfFormula:
    num_vars: int = 0
    clauses: list = field(default_factory=list)

    def new_var(self) -> int:
        self.num_vars += 1
        return self.num_vars

    def add(self, clause: Iterable[int]) -> None:
        self.clauses.append(list(clause))


class CnfMap:
    """Maps circuit literals to DIMACS literals for one Tseitin translation."""

    def __init__(self, const_var: Optional[int], var_map: dict):
        self.const_var = const_var
        self.var_map = var_map

    def export(self) -> dict:
        """Variable table suitable for extending the encoding later."""
        out = dict(self.var_map)
        if self.const_var is not None:
            out[0] = self.const_var
        return out

    def __call__(self, lit: int) -> int:
        v = lit >> 1
        if v == 0:
            if self.const_var is None:
                raise KeyError("constant not encoded")
            x = self.const_var  # const_var is false
            return -x if lit & 1 else x
        x = self.var_map[v]
        return -x if lit & 1 else x

    def __contains__(self, lit: int) -> bool:
        return (lit >> 1) in self.var_map or ((lit >> 1) == 0 and self.const_var is not None)


def tseitin(
    comb: Circuit,
    roots: Sequence[int],
    keep: Iterable[int] = (),
    formula: Optional[CnfFormula] = None,
    var_map: Optional[dict] = None,
) -> tuple:
    """Encode the cone of ``roots`` (asserted true) and ``keep`` (not asserted).

    Three clauses per AND gate; one unit clause per root.  A constant-false
    variable is introduced only when a constant occurs.  Returns the formula
    and a CnfMap.  Variables of ``keep`` and all inputs in the cones get CNF
    variables.  Passing ``formula`` and ``var_map`` from an earlier call
    extends that encoding, sharing the variables already encoded.
    """
    if comb.latches:
        raise ValueError("tseitin expects a combinational circuit")
    f = formula if formula is not None else CnfFormula()
    index = comb.index
    ands = comb.ands
    var_map = dict(var_map) if var_map else {}
    const = [var_map.pop(0, None)]

    def const_var():
        if const[0] is None:
            const[0] = f.new_var()
            f.add([-const[0]])
        return const[0]

    def dl(lit):
        v = lit >> 1
        if v == 0:
            x = const_var()
        else:
            x = var_map[v]
        return -x if lit & 1 else x

    def encode(root_var):
        stack = [root_var]
        while stack:
            v = stack[-1]
            if v == 0:
                const_var()
                stack.pop()
                continue
            if v in var_map:
                stack.pop()
                continue
            kind, k = index[v]
            if kind != "a":
                var_map[v] = f.new_var()
                stack.pop()
                continue
            g = ands[k]
            pend = [r >> 1 for r in (g.rhs0, g.rhs1) if (r >> 1) not in var_map and (r >> 1) != 0]
            if pend:
                stack.extend(pend)
                continue
            stack.pop()
            x = f.new_var()
            var_map[v] = x
            a, b = dl(g.rhs0), dl(g.rhs1)
            f.add([-x, a])
            if b != a:
                f.add([-x, b])
            if a == -b:
                continue
            f.add([x, -a] if a == b else [x, -a, -b])

    for lit in list(keep) + list(roots):
        encode(lit >> 1)
    for r in roots:
        f.add([dl(r)])
    out = CnfMap(const[0], var_map)
    return f, out


def write_dimacs(f: CnfFormula) -> str:
    parts = [f"p cnf {f.num_vars} {len(f.clauses)}"]
    for cl in f.clauses:
        parts.append(" ".join(str(x) for x in cl) + " 0" if cl else "0")
    return "\n".join(parts) + "\n"


def parse_dimacs(text: str) -> CnfFormula:
    num_vars = None
    clauses = []
    cur = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"bad problem line {line!r}")
            num_vars = int(parts[2])
            continue
        for tok in line.split():
            x = int(tok)
            if x == 0:
                clauses.append(cur)
                cur = []
            else:
                cur.append(x)
    if cur:
        clauses.append(cur)
    if num_vars is None:
        raise ValueError("missing problem line")
    return CnfFormula(num_vars, clauses)


# ---------------------------------------------------------------------------
# witness files


@dataclass
class Witness:
    """A witness circuit.  Its bad literal is the negated witness property;
    ``inv_bad`` optionally gives a separate negated inductive invariant."""

    circuit: Circuit
    inv_bad: Optional[int] = None

    @property
    def invariant_bad(self) -> int:
        return self.circuit.bad if self.inv_bad is None else self.inv_bad


def parse_witness(text: str) -> Witness:
    pf = parse_file(text, max_outputs=2)
    return Witness(pf.circuit, pf.extra_outputs[0] if pf.extra_outputs else None)


def write_witness(w: Witness) -> str:
    extra = [] if w.inv_bad is None else [w.inv_bad]
    return write(w.circuit, extra)
