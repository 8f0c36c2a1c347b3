"""Random stratified circuits for differential testing.

Besides plain random logic, generated circuits may contain a few
structures phase abstraction is meant to find: a toggling clock, a
one-hot ring counter, a delay chain and a latch that is constant after a
few steps.
"""

from __future__ import annotations

import os
import random
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from . import aiger_io, certcheck
from .engine import SAFE, UNSAFE, replay
from .netlist import Builder, Circuit, StructuralError, substitute
from .oracle import TooLarge, explicit_check
from .pipeline import RunConfig, model_check
from .transform import reduce


@dataclass
class FuzzParams:
    max_inputs: int = 4
    max_latches: int = 8
    max_gates: int = 16
    max_bad_terms: int = 4
    p_template: float = 0.6
    p_uninit: float = 0.15
    p_reset_logic: float = 0.2
    p_unnamed: float = 0.3


def random_circuit(rng: random.Random, params: FuzzParams = FuzzParams()) -> Circuit:
    b = Builder()
    named = rng.random() >= params.p_unnamed
    nm = lambda s: s if named else None
    ni = rng.randint(0, params.max_inputs)
    ins = [b.input(nm(f"i{k}")) for k in range(ni)]
    latches = []  # (lit, reset-kind) in creation order
    pool = list(ins)
    resets = {}
    nexts = {}

    def new_latch(name):
        x = b.latch(nm(name))
        latches.append(x)
        return x

    # templates
    if rng.random() < params.p_template:
        kind = rng.choice(["clock", "ring", "delay", "sticky"])
        if kind == "clock":
            clk = new_latch(f"clk{len(latches)}")
            resets[clk] = rng.choice([0, 1])
            nexts[clk] = clk ^ 1
        elif kind == "ring":
            size = rng.randint(2, 4)
            ring = [new_latch(f"r{len(latches)}") for _ in range(size)]
            for k, x in enumerate(ring):
                resets[x] = 1 if k == 0 else 0
                nexts[x] = ring[k - 1]
        elif kind == "delay":
            size = rng.randint(1, 3)
            src = rng.choice(ins) if ins else 1
            prev = src
            for _ in range(size):
                x = new_latch(f"d{len(latches)}")
                resets[x] = 0
                nexts[x] = prev
                prev = x
        else:
            x = new_latch(f"s{len(latches)}")
            resets[x] = 0
            nexts[x] = 1
        pool.extend(latches)
    nl = rng.randint(0, max(0, params.max_latches - len(latches)))
    free = [new_latch(f"l{len(latches)}") for _ in range(nl)]
    pool.extend(free)
    for _ in range(rng.randint(0, params.max_gates)):
        if not pool:
            break
        a = rng.choice(pool) ^ rng.randint(0, 1)
        c = rng.choice(pool) ^ rng.randint(0, 1)
        g = b.AND(a, c)
        if g > 1:
            pool.append(g)
    choose = lambda: (rng.choice(pool) ^ rng.randint(0, 1)) if pool else rng.randint(0, 1)
    # resets read only inputs and latches created earlier
    for k, x in enumerate(free):
        nexts[x] = choose()
        r = rng.random()
        if r < params.p_uninit:
            resets[x] = x
        elif r < params.p_uninit + params.p_reset_logic:
            base = ins + latches[: latches.index(x)]
            if base:
                a = rng.choice(base) ^ rng.randint(0, 1)
                c = rng.choice(base) ^ rng.randint(0, 1)
                resets[x] = b.AND(a, c) if rng.random() < 0.5 else a
            else:
                resets[x] = rng.randint(0, 1)
        else:
            resets[x] = rng.randint(0, 1)
    for x in latches:
        b.set_next(x, nexts[x])
        b.set_reset(x, resets[x])
    # bad: a small conjunction so that circuits are not trivially unsafe
    terms = [choose() for _ in range(rng.randint(1, params.max_bad_terms))]
    bad = b.AND_ALL(terms)
    return b.build(bad)


def corpus(seed: int, count: int, params: FuzzParams = FuzzParams()):
    rng = random.Random(seed)
    for _ in range(count):
        yield random_circuit(rng, params)


# ---------------------------------------------------------------------------
# differential fuzzing


@dataclass
class FuzzRecord:
    index: int
    status: str = ""
    oracle_safe: Optional[bool] = None
    candidate: Optional[tuple] = None  # (d, n), None for identity
    emitted: bool = False  # a witness was produced
    certified: bool = False
    gate_rejections: int = 0
    preserved: Optional[bool] = None  # oracle(original) == oracle(reduced)
    ratio: Optional[float] = None  # check time / model-check time
    problem: str = ""


@dataclass
class FuzzSummary:
    seed: int
    count: int
    records: list = field(default_factory=list)
    reproducers: list = field(default_factory=list)
    elapsed: float = 0.0

    def _count(self, pred) -> int:
        return sum(1 for r in self.records if pred(r))

    @property
    def problems(self) -> list:
        return [r for r in self.records if r.problem]

    @property
    def ratios(self) -> list:
        return [r.ratio for r in self.records if r.ratio is not None]

    def to_dict(self) -> dict:
        ratios = self.ratios
        return {
            "seed": self.seed,
            "count": self.count,
            "safe": self._count(lambda r: r.status == SAFE),
            "unsafe": self._count(lambda r: r.status == UNSAFE),
            "undecided": self._count(lambda r: r.status not in (SAFE, UNSAFE)),
            "certified": self._count(lambda r: r.certified),
            "non_identity": self._count(lambda r: r.candidate is not None),
            "gate_rejections": sum(r.gate_rejections for r in self.records),
            "preservation_checked": self._count(lambda r: r.preserved is not None),
            "preservation_failures": self._count(lambda r: r.preserved is False),
            "median_overhead": statistics.median(ratios) if ratios else None,
            "discrepancies": [{"index": r.index, "problem": r.problem} for r in self.problems],
            "reproducers": self.reproducers,
            "elapsed": round(self.elapsed, 3),
        }


def _oracle_safe(c: Circuit) -> Optional[bool]:
    try:
        return explicit_check(c).safe
    except TooLarge:
        return None


def fuzz_one(c: Circuit, cfg: RunConfig, index: int = 0, preservation_latches: int = 6) -> FuzzRecord:
    """Run the model checker on one circuit and cross-check everything checkable."""
    rec = FuzzRecord(index)
    problems = []
    try:
        res = model_check(c, cfg)
    except Exception as e:  # any crash is a finding
        rec.problem = f"model checker raised {type(e).__name__}: {e}"
        return rec
    rec.status = res.status
    rec.gate_rejections = len(res.gate_rejections)
    if rec.gate_rejections:
        problems.append("loop-invariant gate rejected a candidate")
    cand = res.candidate
    if not cand.is_identity:
        rec.candidate = (cand.d, cand.n)
    rec.oracle_safe = _oracle_safe(c)
    if rec.oracle_safe is not None and res.status in (SAFE, UNSAFE):
        if rec.oracle_safe != (res.status == SAFE):
            problems.append(f"verdict {res.status} but oracle says {'safe' if rec.oracle_safe else 'unsafe'}")
    if res.status == UNSAFE and not replay(c, res.trace):
        problems.append("counterexample does not replay")
    if res.witness is not None:
        # recheck from the serialized files, as an outside user would
        c2 = aiger_io.parse(aiger_io.write(c))
        w2 = aiger_io.parse_witness(aiger_io.write_witness(res.witness))
        rep = certcheck.check(c2, w2)
        rec.emitted = True
        rec.certified = rep.ok
        if not rep.ok:
            problems.append(f"witness failed checks {rep.failed()}")
        elif rec.oracle_safe is False:
            problems.append("certificate accepted for an unsafe circuit")
        t = res.times
        mc = t["preprocess"] + t["engine"] + t["witness"]
        if "check" in t and mc > 0:
            rec.ratio = t["check"] / mc
    if rec.candidate is not None and c.num_latches <= preservation_latches and rec.oracle_safe is not None:
        red = _oracle_safe(cand.stages.reduced)
        if red is not None:
            rec.preserved = red == rec.oracle_safe
            if not rec.preserved:
                problems.append("preprocessing changed the verdict")
    rec.problem = "; ".join(problems)
    return rec


def minimize(c: Circuit, failing) -> Circuit:
    """Greedily replace variables by constants while ``failing(c)`` holds."""
    changed = True
    while changed:
        changed = False
        for v in [la.lit >> 1 for la in c.latches] + [g.lhs >> 1 for g in c.ands] + [x >> 1 for x in c.inputs]:
            for const in (0, 1):
                try:
                    d = reduce(substitute(c, {2 * v: const}))
                except StructuralError:
                    continue
                if d.num_latches + len(d.ands) + d.num_inputs >= c.num_latches + len(c.ands) + c.num_inputs:
                    continue
                if failing(d):
                    c = d
                    changed = True
                    break
            if changed:
                break
    return c


def _fuzz_task(args):
    index, text, cfg = args
    return fuzz_one(aiger_io.parse(text), cfg, index)


def run_fuzz(count: int, seed: int, params: FuzzParams = FuzzParams(), cfg: Optional[RunConfig] = None,
             workers: int = 1, out_dir: Optional[str] = None, progress=None) -> FuzzSummary:
    """Fuzz ``count`` circuits from ``seed``; the corpus depends only on the seed and params."""
    cfg = cfg or RunConfig()
    t0 = time.perf_counter()
    circuits = list(corpus(seed, count, params))
    summary = FuzzSummary(seed, count)
    tasks = [(k, aiger_io.write(c), cfg) for k, c in enumerate(circuits)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = pool.map(_fuzz_task, tasks, chunksize=16)
            for rec in results:
                summary.records.append(rec)
                if progress:
                    progress(rec)
    else:
        for k, c in enumerate(circuits):
            rec = fuzz_one(c, cfg, k)
            summary.records.append(rec)
            if progress:
                progress(rec)
    for rec in summary.problems:
        if out_dir is None:
            break
        os.makedirs(out_dir, exist_ok=True)
        c = circuits[rec.index]
        small = minimize(c, lambda d: bool(fuzz_one(d, cfg).problem))
        path = os.path.join(out_dir, f"repro_{seed}_{rec.index}.aag")
        with open(path, "w") as fh:
            fh.write(aiger_io.write(small))
        summary.reproducers.append(path)
    summary.elapsed = time.perf_counter() - t0
    return summary
