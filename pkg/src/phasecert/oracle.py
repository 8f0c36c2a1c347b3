"""Explicit-state reachability, used as ground truth for testing.

States are latch valuations.  Frame 0 is special: the reset predicate ties
the latch values to the frame-0 inputs, and the bad output at frame 0 is
evaluated with those same inputs.  From frame 1 on, every input valuation
is possible at every step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .aiger_io import tseitin
from .netlist import Builder, Circuit
from .satkit import Session

MAX_ENUM_BITS = 20
MAX_STATE_BITS = 16


class TooLarge(ValueError):
    pass


@dataclass
class OracleResult:
    safe: bool
    depth: Optional[int]  # frames in a shortest counterexample minus one
    reachable: int  # number of latch states reachable at frames >= 1
    method: str


def explicit_check(c: Circuit) -> OracleResult:
    ni, nl = c.num_inputs, c.num_latches
    if nl > MAX_STATE_BITS:
        raise TooLarge(f"{nl} latches exceed the explicit-state cap")
    if ni + nl <= MAX_ENUM_BITS:
        return _enumerate(c)
    return _sat_projection(c)


def _comb_tables(c: Circuit):
    """Return (next_index, bad, in_reset) arrays over all (latch, input) combos."""
    ni, nl = c.num_inputs, c.num_latches
    nbits = ni + nl
    n = 1 << nbits
    nw = max(1, (n + 63) // 64)
    vals = np.zeros((c.maxvar + 1, nw), dtype=np.uint64)
    for k, lit in enumerate(c.inputs):
        vals[lit >> 1] = kernels.counting_words(nbits, k)
    for k, la in enumerate(c.latches):
        vals[la.lit >> 1] = kernels.counting_words(nbits, ni + k)
    if c.ands:
        gates = np.array([(g.lhs >> 1, g.rhs0, g.rhs1) for g in c.ands], dtype=np.int64)
        kernels.sim_words(gates, vals)

    def lit_bits(lit):
        w = vals[lit >> 1]
        if lit & 1:
            w = ~w
        return kernels.unpack_bits(w, n)

    bad = lit_bits(c.bad)
    nxt = np.zeros(n, dtype=np.int64)
    in_reset = np.ones(n, dtype=np.bool_)
    x = np.arange(n, dtype=np.int64)
    for k, la in enumerate(c.latches):
        nb = lit_bits(la.next)
        nxt |= nb.astype(np.int64) << k
        if la.reset != la.lit:
            cur = ((x >> (ni + k)) & 1).astype(np.bool_)
            in_reset &= lit_bits(la.reset) == cur
    return nxt, bad, in_reset


def _enumerate(c: Circuit) -> OracleResult:
    ni, nl = c.num_inputs, c.num_latches
    nxt, bad, in_reset = _comb_tables(c)
    if np.any(bad & in_reset):
        return OracleResult(False, 0, 0, "enumerate")
    S, K = 1 << nl, 1 << ni
    init = np.zeros(S, dtype=np.bool_)
    init[nxt[in_reset]] = True
    succ = nxt.reshape(S, K)
    bad_state = bad.reshape(S, K).any(axis=1)
    depth, _ = kernels.bfs(succ, init)
    reached = depth >= 0
    hits = reached & bad_state
    if hits.any():
        return OracleResult(False, int(depth[hits].min()) + 1, int(reached.sum()), "enumerate")
    return OracleResult(True, None, int(reached.sum()), "enumerate")


def _sat_projection(c: Circuit) -> OracleResult:
    """Explicit over latch states; input quantification by SAT enumeration."""
    nl = c.num_latches
    b = Builder()
    leaf = {}
    for lit in c.inputs:
        leaf[lit >> 1] = b.input()
    cur = []
    for la in c.latches:
        x = b.input()
        leaf[la.lit >> 1] = x
        cur.append(x)
    roots = [c.bad] + [la.next for la in c.latches] + [la.reset for la in c.latches]
    tr = b.import_logic(c, leaf, roots)
    nxt = [tr(la.next) for la in c.latches]
    rst = b.AND_ALL(b.EQ(x, tr(la.reset)) for la, x in zip(c.latches, cur) if la.reset != la.lit)
    bad = tr(c.bad)
    keep = [bad, rst] + nxt + cur
    comb = b.build(0, keep=keep)
    m = b.mapped
    f, cmap = tseitin(comb, [], keep=[m(x) for x in keep])
    sess = Session(f)
    d_cur = [cmap(m(x)) for x in cur]
    d_nxt = [cmap(m(x)) for x in nxt]
    d_bad = cmap(m(bad))
    d_rst = cmap(m(rst))

    def state_assume(s):
        return [v if (s >> k) & 1 else -v for k, v in enumerate(d_cur)]

    def images(assume):
        act = sess.new_var()
        out = []
        while True:
            r = sess.solve(assume + [act])
            if not r.sat:
                break
            t = 0
            for k, v in enumerate(d_nxt):
                if r.value(v):
                    t |= 1 << k
            out.append(t)
            sess.add([[-act] + [(-v if (t >> k) & 1 else v) for k, v in enumerate(d_nxt)]])
        sess.add([[-act]])
        return out

    if sess.solve([d_rst, d_bad]).sat:
        return OracleResult(False, 0, 0, "sat-projection")
    init = images([d_rst])
    S = 1 << nl
    depth = {s: 0 for s in init}
    queue = list(init)
    head = 0
    while head < len(queue):
        s = queue[head]
        head += 1
        if sess.solve(state_assume(s) + [d_bad]).sat:
            return OracleResult(False, depth[s] + 1, len(depth), "sat-projection")
        for t in images(state_assume(s)):
            if t not in depth:
                depth[t] = depth[s] + 1
                queue.append(t)
    assert len(depth) <= S
    return OracleResult(True, None, len(depth), "sat-projection")
