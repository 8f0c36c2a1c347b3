"""Periodic signals extracted from cube lassos, and candidate selection.

A phase entry is ``None`` (the latch is left alone), a constant 0 or 1,
or a pair ``(name, negated)`` naming the representative latch the latch
equals (or is antivalent to) in that phase.  Signals are keyed by latch
name so they survive the renumbering done by the transformations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .netlist import Circuit
from .tersim import CubeLasso

SELF = None
MAX_CAP = 8


@dataclass(frozen=True)
class PeriodicSignal:
    d: int
    phases: tuple

    def is_self(self) -> bool:
        return all(p is SELF for p in self.phases)


@dataclass
class Candidate:
    lasso: Optional[CubeLasso]
    d: int
    n: int
    signals: dict  # latch name -> PeriodicSignal
    order: int = 0
    score: Optional[int] = None
    note: str = ""
    stages: object = field(default=None, repr=False)

    @property
    def is_identity(self) -> bool:
        return self.d == 0 and self.n == 1 and all(s.is_self() for s in self.signals.values())


def enumerate_candidates(l: CubeLasso, max_d: int = MAX_CAP, max_n: int = MAX_CAP,
                         allow_forwarding: bool = True) -> list:
    """(d, n) pairs with n dividing the loop cube count and d = delta - k*n."""
    max_d = min(max_d, MAX_CAP)
    max_n = min(max_n, MAX_CAP)
    loop = l.omega + 1
    out = [(0, 1)]
    for n in range(1, max_n + 1):
        if loop % n:
            continue
        for d in range(0, min(l.delta, max_d) + 1):
            if (l.delta - d) % n:
                continue
            if d > 0 and not allow_forwarding:
                continue
            if (d, n) not in out:
                out.append((d, n))
    return out


def phase_cubes(l: CubeLasso, d: int, n: int, phase: int) -> list:
    total = l.delta + l.omega + 1 - d
    if total % n:
        raise ValueError("d and n do not tile the lasso")
    return [l.cubes[d + phase + j * n] for j in range(total // n)]


def extract_signals(c: Circuit, l: CubeLasso, d: int, n: int) -> dict:
    """Per-latch periodic signals for one (d, n), keyed by latch name."""
    latch_vars = [la.lit >> 1 for la in c.latches]
    names = {la.lit >> 1: latch_key(c, k) for k, la in enumerate(c.latches)}
    entries = {v: [SELF] * n for v in latch_vars}
    position = {v: k for k, v in enumerate(latch_vars)}
    for phase in range(n):
        cubes = phase_cubes(l, d, n, phase)
        pool = []
        for v in latch_vars:
            pos, negl = 2 * v, 2 * v + 1
            bits = 0
            ok = True
            for j, cu in enumerate(cubes):
                if pos in cu:
                    bits |= 1 << j
                elif negl not in cu:
                    ok = False
                    break
            if not ok:
                continue
            full = (1 << len(cubes)) - 1
            if bits == full:
                entries[v][phase] = 1
            elif bits == 0:
                entries[v][phase] = 0
            else:
                pool.append((v, bits, full))
        classes = {}
        for v, bits, full in pool:
            key = min(bits, bits ^ full)
            classes.setdefault(key, []).append((v, bits))
        for members in classes.values():
            if len(members) < 2:
                continue
            rep, rep_bits = min(members, key=lambda m: position[m[0]])
            for v, bits in members:
                if v == rep:
                    continue
                if bits == rep_bits:
                    entries[v][phase] = (names[rep], False)
                elif bits == rep_bits ^ ((1 << len(cubes)) - 1):
                    entries[v][phase] = (names[rep], True)
                else:  # hash collision guard
                    raise AssertionError("equivalence class with differing bit-strings")
    return {names[v]: PeriodicSignal(d, tuple(e)) for v, e in entries.items()}


def identity_signals(c: Circuit) -> dict:
    return {latch_key(c, k): PeriodicSignal(0, (SELF,)) for k in range(c.num_latches)}


def latch_key(c: Circuit, k: int) -> str:
    name = c.latch_names[k]
    return name if name is not None else f"<l{k}>"


def select_best(cands: list, prefer_certifiable: bool = False) -> Candidate:
    """Fewest latches; ties go to smaller n, then smaller d, then discovery order.

    With ``prefer_certifiable`` a tie is first broken in favour of d = 0,
    the candidates for which a certificate can be produced.
    """
    usable = [c for c in cands if c.score is not None]
    if not usable:
        raise ValueError("no usable candidate")
    if prefer_certifiable:
        return min(usable, key=lambda c: (c.score, c.d > 0, c.n, c.d, c.order))
    return min(usable, key=lambda c: (c.score, c.n, c.d, c.order))
