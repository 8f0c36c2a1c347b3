"""Array kernels for bit-parallel simulation and explicit-state search.

Each kernel has a numba version and a pure-numpy version with the same
signature.  Numba is used when importable unless ``PHASECERT_NO_NUMBA`` is
set to a non-empty value other than "0".
"""

from __future__ import annotations

import os

import numpy as np

_flag = os.environ.get("PHASECERT_NO_NUMBA", "")
_disabled = _flag not in ("", "0")

try:
    if _disabled:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


BACKEND = "numba" if HAVE_NUMBA else "numpy"

ALL_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)


# -- bit-parallel AND-gate evaluation ---------------------------------------


@njit(cache=True)
def _sim_words_nb(gates, vals):
    ones = np.uint64(0xFFFFFFFFFFFFFFFF)
    nw = vals.shape[1]
    for k in range(gates.shape[0]):
        lhs = gates[k, 0]
        a = gates[k, 1]
        b = gates[k, 2]
        va = a >> 1
        vb = b >> 1
        ma = ones if (a & 1) else np.uint64(0)
        mb = ones if (b & 1) else np.uint64(0)
        for w in range(nw):
            vals[lhs, w] = (vals[va, w] ^ ma) & (vals[vb, w] ^ mb)


def _sim_words_np(gates, vals):
    for lhs, a, b in gates:
        x = vals[a >> 1]
        y = vals[b >> 1]
        if a & 1:
            x = ~x
        if b & 1:
            y = ~y
        np.bitwise_and(x, y, out=vals[lhs])


def sim_words(gates: np.ndarray, vals: np.ndarray) -> None:
    """Evaluate gates in place.

    ``gates`` is an int64 array of rows (lhs_var, rhs0_lit, rhs1_lit) in
    topological order; ``vals`` is a uint64 array with one row of packed
    bits per variable, row 0 being the constant false.
    """
    if HAVE_NUMBA:
        _sim_words_nb(gates, vals)
    else:
        _sim_words_np(gates, vals)


# -- explicit-state breadth-first search ------------------------------------


@njit(cache=True)
def _bfs_nb(succ, init):
    """Breadth-first layers over a successor table (-1 entries are skipped)."""
    n = succ.shape[0]
    depth = np.full(n, -1, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    head = 0
    tail = 0
    for s in range(n):
        if init[s]:
            depth[s] = 0
            queue[tail] = s
            tail += 1
    while head < tail:
        s = queue[head]
        head += 1
        for k in range(succ.shape[1]):
            t = succ[s, k]
            if t >= 0 and depth[t] < 0:
                depth[t] = depth[s] + 1
                parent[t] = s
                queue[tail] = t
                tail += 1
    return depth, parent


def _bfs_np(succ, init):
    n = succ.shape[0]
    depth = np.full(n, -1, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    frontier = np.flatnonzero(init)
    depth[frontier] = 0
    d = 0
    while frontier.size:
        d += 1
        src = np.repeat(frontier, succ.shape[1])
        dst = succ[frontier].ravel()
        ok = dst >= 0
        src, dst = src[ok], dst[ok]
        fresh = depth[dst] < 0
        src, dst = src[fresh], dst[fresh]
        # first occurrence wins, matching queue order
        dst, first = np.unique(dst, return_index=True)
        depth[dst] = d
        parent[dst] = src[first]
        frontier = dst
    return depth, parent


def bfs(succ: np.ndarray, init: np.ndarray):
    """Return (depth, parent) arrays; depth is -1 for unreached states."""
    succ = np.ascontiguousarray(succ, dtype=np.int64)
    init = np.ascontiguousarray(init, dtype=np.bool_)
    if HAVE_NUMBA:
        return _bfs_nb(succ, init)
    return _bfs_np(succ, init)


# -- helpers shared by both paths -------------------------------------------


def counting_words(nbits: int, k: int) -> np.ndarray:
    """Packed words whose bit x equals bit k of x, for x in [0, 2**nbits)."""
    n = 1 << nbits
    x = np.arange(n, dtype=np.uint64)
    bits = ((x >> np.uint64(k)) & np.uint64(1)).astype(np.uint8)
    return pack_bits(bits)


def pack_bits(bits: np.ndarray) -> np.ndarray:
    n = bits.shape[0]
    pad = (-n) % 64
    if pad:
        bits = np.concatenate([bits, np.zeros(pad, dtype=np.uint8)])
    return np.packbits(bits, bitorder="little").view(np.uint64).copy()


def unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    return np.unpackbits(words.view(np.uint8), bitorder="little")[:n].astype(np.bool_)
