"""Compare the numba kernels with their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat N]

Both versions are run on the same inputs, their results compared, and the
best-of-N wall time printed.  The last section times the explicit-state
oracle on a fuzz corpus under each backend, in a subprocess so the
PHASECERT_NO_NUMBA flag takes effect at import.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from phasecert import kernels


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def random_gates(rng, nvars, ngates):
    rows = []
    for k in range(ngates):
        lhs = nvars + k
        a = 2 * int(rng.integers(1, lhs)) + int(rng.integers(0, 2))
        b = 2 * int(rng.integers(1, lhs)) + int(rng.integers(0, 2))
        rows.append((lhs, a, b))
    return np.array(rows, dtype=np.int64)


def bench_sim(rng, repeat):
    nvars, ngates, nwords = 64, 2000, 256
    gates = random_gates(rng, nvars, ngates)
    vals = np.zeros((nvars + ngates, nwords), dtype=np.uint64)
    vals[1:nvars] = rng.integers(0, 2**63, size=(nvars - 1, nwords), dtype=np.uint64)
    a, b = vals.copy(), vals.copy()
    kernels._sim_words_nb(gates, a)  # compile
    kernels._sim_words_np(gates, b)
    assert np.array_equal(a, b)
    t_nb = best_of(lambda: kernels._sim_words_nb(gates, a), repeat)
    t_np = best_of(lambda: kernels._sim_words_np(gates, b), repeat)
    return t_nb, t_np


def bench_bfs(rng, repeat):
    n, k = 1 << 16, 8
    succ = rng.integers(0, n, size=(n, k), dtype=np.int64)
    init = np.zeros(n, dtype=np.bool_)
    init[:4] = True
    d1, _ = kernels._bfs_nb(succ, init)
    d2, _ = kernels._bfs_np(succ, init)
    assert np.array_equal(d1, d2)
    t_nb = best_of(lambda: kernels._bfs_nb(succ, init), repeat)
    t_np = best_of(lambda: kernels._bfs_np(succ, init), repeat)
    return t_nb, t_np


ORACLE_SNIPPET = """
import time
from phasecert import kernels
from phasecert.fuzz import FuzzParams, corpus
from phasecert.oracle import explicit_check
cs = list(corpus(1, 300, FuzzParams(max_latches=12, max_inputs=6)))
explicit_check(cs[0])
t = time.perf_counter()
safe = sum(explicit_check(c).safe for c in cs)
print(kernels.BACKEND, round(time.perf_counter() - t, 3), safe)
"""


def bench_oracle():
    out = {}
    for flag in ("0", "1"):
        env = dict(os.environ, PHASECERT_NO_NUMBA=flag)
        r = subprocess.run([sys.executable, "-c", ORACLE_SNIPPET], env=env, capture_output=True, text=True, check=True)
        backend, secs, safe = r.stdout.split()
        out[backend] = (float(secs), int(safe))
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not kernels.HAVE_NUMBA:
        print("numba unavailable (or disabled); nothing to compare")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':<12}{'numba s':>12}{'numpy s':>12}{'speedup':>10}")
    for name, fn in (("sim_words", bench_sim), ("bfs", bench_bfs)):
        t_nb, t_np = fn(rng, args.repeat)
        print(f"{name:<12}{t_nb:>12.5f}{t_np:>12.5f}{t_np / t_nb:>10.1f}")
    res = bench_oracle()
    print("oracle on 300 fuzz circuits (seconds, safe count):")
    for backend, (secs, safe) in res.items():
        print(f"  {backend:<8}{secs:>8.3f}  safe={safe}")
    assert len({s for _, s in res.values()}) == 1, "backends disagree"


if __name__ == "__main__":
    main()
