"""The model checking driver: phase abstraction, back end, certificate.

Steps: ternary simulation finds cube lassos, every (d, n) candidate is
scored by running the transformations, the candidate with fewest latches
is checked by a back end, and on SAFE the witness is built backwards and
checked by the independent checker before it is returned.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field
from typing import Optional

from . import aiger_io, certcheck
from .engine import SAFE, UNSAFE, Budget, Verdict, bmc, complete_trace, ic3, kinduction, replay, terminal_witness
from .netlist import Circuit, StructuralError, check_stratified, lit_value, reset_state, simulate
from .periodic import MAX_CAP, Candidate, enumerate_candidates, extract_signals, identity_signals, select_best
from .satkit import UNKNOWN
from .tersim import find_lassos, verify_lasso
from .transform import ensure_names, run_pipeline
from .witness import build_loop_invariant, composite_witness, denormalize, fold_witness, \
    lift_over_reduce_rewrite, verify_loop_invariant

log = logging.getLogger(__name__)

ENGINES = ("ic3", "kind", "bmc", "portfolio")


class SelfCheckFailed(RuntimeError):
    """The produced witness was rejected by the checker; always a bug."""


@dataclass
class RunConfig:
    max_n: int = MAX_CAP
    max_d: int = MAX_CAP
    allow_forwarding: bool = True
    engine: str = "ic3"
    max_bound: int = 32
    max_k: int = 4
    time_budget: Optional[float] = None
    conflict_budget: Optional[int] = None
    max_steps: int = 1000
    self_check: bool = True
    dump_dir: Optional[str] = None

    def __post_init__(self):
        if not (1 <= self.max_n <= MAX_CAP and 0 <= self.max_d <= MAX_CAP):
            raise ValueError(f"phase and duration caps must lie in [1, {MAX_CAP}] and [0, {MAX_CAP}]")
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine}")


@dataclass
class McResult:
    status: str
    candidate: Optional[Candidate] = None
    candidates: list = field(default_factory=list)
    verdict: Optional[Verdict] = None
    witness: Optional[aiger_io.Witness] = None
    report: Optional[certcheck.CheckReport] = None
    trace: Optional[list] = None  # original-circuit frames (inputs, latches)
    note: str = ""
    times: dict = field(default_factory=dict)
    fold_info: object = None

    @property
    def gate_rejections(self) -> list:
        """Candidates whose loop invariant failed the gate."""
        return [c for c in self.candidates if c.note.startswith("rejected")]


# ---------------------------------------------------------------------------
# candidates


def discover_candidates(c: Circuit, cfg: RunConfig) -> list:
    """Identity candidate first, then one per (lasso, d, n) with distinct signals."""
    cands = [Candidate(None, 0, 1, identity_signals(c), order=0, note="identity")]
    seen = set()
    lassos = find_lassos(c, max_steps=cfg.max_steps)
    for lasso in lassos:
        if verify_lasso(c, lasso) is not None:
            log.warning("discarding a lasso that failed validation")
            continue
        for d, n in enumerate_candidates(lasso, cfg.max_d, cfg.max_n, cfg.allow_forwarding):
            sig = extract_signals(c, lasso, d, n)
            key = (d, n, tuple(sorted(sig.items())))
            if key in seen:
                continue
            seen.add(key)
            cand = Candidate(lasso, d, n, sig, order=len(cands))
            if cand.is_identity:
                continue
            cands.append(cand)
    return cands


def score_candidate(c: Circuit, cand: Candidate) -> Optional[int]:
    try:
        st = run_pipeline(c, cand.d, cand.n, cand.signals)
        check_stratified(st.factored)
    except StructuralError as e:
        cand.note = f"unusable: {e}"
        cand.score = None
        return None
    cand.stages = st
    cand.score = st.reduced.num_latches
    return cand.score


def choose(c: Circuit, cands: list) -> tuple:
    """Best candidate whose loop invariant passes the gate, with that invariant."""
    for cand in cands:
        score_candidate(c, cand)
    while True:
        best = select_best(cands, prefer_certifiable=True)
        st = best.stages
        inv = build_loop_invariant(c, best.lasso, best.d, best.n, st.copymap)
        if best.is_identity:
            return best, inv
        err = verify_loop_invariant(st.unfolded, inv, best.signals, st.copymap)
        if err is None:
            return best, inv
        log.warning("candidate (d=%d, n=%d) rejected: %s", best.d, best.n, err)
        best.note = f"rejected: {err}"
        best.score = None


# ---------------------------------------------------------------------------
# engines


def run_engine(c: Circuit, cfg: RunConfig, budget: Budget) -> Verdict:
    if cfg.engine == "ic3":
        return ic3(c, budget)
    if cfg.engine == "bmc":
        return bmc(c, cfg.max_bound, budget)
    if cfg.engine == "kind":
        return kinduction(c, cfg.max_k, budget)
    v = kinduction(c, min(cfg.max_k, 2), budget)
    if v.status == UNSAFE or (v.status == SAFE and v.invariant is not None):
        return v
    return ic3(c, budget)


# ---------------------------------------------------------------------------
# counterexamples


def map_trace(orig: Circuit, named: Circuit, cand: Candidate, trace: list) -> list:
    """Turn a trace of the reduced circuit into one of the original circuit.

    Inputs missing from the reduced circuit are taken as 0.  The original
    input at micro step j of macro step k is the phase input a^j for the
    reset chain (k = 0) and for the last copy, and otherwise the step input
    x^{j+1} of macro step k-1.  A bad state is checked with the phase input
    of its copy.  With forwarding, the first d steps come from the reset
    inputs of one of the copies.
    """
    st = cand.stages
    red = st.reduced
    cm = st.copymap
    n, d = cand.n, cand.d
    frames = []
    for ins, lats in trace:
        vals = {nm: bool(x) for nm, x in zip(red.input_names, ins)}
        vals.update({nm: bool(x) for nm, x in zip(red.latch_names, lats)})
        frames.append(vals)
    names_i = named.input_names

    def phase(k, nm, j):
        return frames[k].get(cm.phase_input(nm, j), False)

    def trans_input(k, j):
        if n == 1 or j == n - 1 or k == 0:
            return [phase(k, nm, j) for nm in names_i]
        return [frames[k - 1].get(cm.step_input(nm, j + 1), False) for nm in names_i]

    body = []
    for k in range(len(frames)):
        for j in range(n):
            body.append((trans_input(k, j), [phase(k, nm, j) for nm in names_i]))
    for variant in range(n if d > 0 else 1):
        free = {}
        prefix = []
        if d > 0:
            info = st.forward_info
            for s in range(d):
                row = [phase(0, fwd, variant) for fwd in info.step_inputs[s]]
                prefix.append((row, row))
            for la, nm in zip(named.latches, named.latch_names):
                if nm in info.init_inputs:
                    free[la.lit >> 1] = phase(0, info.init_inputs[nm], variant)
        else:
            for la, nm in zip(named.latches, named.latch_names):
                if la.reset == la.lit:
                    free[la.lit >> 1] = frames[0].get(cm.latch(nm, 0), False)
        steps = prefix + body
        lat = reset_state(named, steps[0][0], free)
        out = []
        for t, (ins, bad_ins) in enumerate(steps):
            val = simulate(named, ins, lat)
            if lit_value(val, named.bad):
                out.append((ins, lat))
                break
            if lit_value(simulate(named, bad_ins, lat), named.bad):
                if t == 0 and bad_ins != ins:
                    # the reset state depends on the frame-0 inputs
                    break
                out.append((bad_ins, lat))
                break
            out.append((ins, lat))
            lat = [lit_value(val, la.next) for la in named.latches]
        else:
            continue
        if out and replay(orig, out):
            return out
    raise AssertionError("mapped trace does not reach a bad state")


# ---------------------------------------------------------------------------
# driver


def build_certificate(orig: Circuit, named: Circuit, cand: Candidate, inv, v: Verdict):
    st = cand.stages
    wt = terminal_witness(st.reduced, v)
    wt = lift_over_reduce_rewrite(wt)
    wc = composite_witness(st.unfolded, wt, inv)
    wf, info = fold_witness(named, wc, st.copymap)
    return denormalize(wf, orig), info


def model_check(orig: Circuit, cfg: Optional[RunConfig] = None) -> McResult:
    cfg = cfg or RunConfig()
    times = {}
    t0 = time.perf_counter()
    named = ensure_names(orig)
    check_stratified(named)
    cands = discover_candidates(named, cfg)
    cand, inv = choose(named, cands)
    times["preprocess"] = time.perf_counter() - t0
    st = cand.stages
    if cfg.dump_dir:
        os.makedirs(cfg.dump_dir, exist_ok=True)
        for name, circ in st.items():
            with open(os.path.join(cfg.dump_dir, f"{name}.aag"), "w") as fh:
                fh.write(aiger_io.write(circ))
    budget = Budget(cfg.time_budget, cfg.conflict_budget)
    t1 = time.perf_counter()
    v = run_engine(st.reduced, cfg, budget)
    if v.status == SAFE and v.invariant is None and cand.d == 0:
        # k-induction beyond k = 1 carries no certificate; IC3 provides one
        v2 = ic3(st.reduced, budget)
        if v2.status == SAFE:
            v = v2
    times["engine"] = time.perf_counter() - t1
    res = McResult(v.status, cand, cands, v, times=times)
    if v.status == UNSAFE:
        res.trace = map_trace(orig, named, cand, v.trace)
        return res
    if v.status != SAFE:
        res.note = "resource budget exhausted"
        return res
    if cand.d > 0:
        res.note = "certificate unavailable: forwarding back-warding out of scope"
        return res
    if v.invariant is None:
        res.note = "certificate unavailable: no invariant from the back end"
        return res
    t2 = time.perf_counter()
    w, info = build_certificate(orig, named, cand, inv, v)
    times["witness"] = time.perf_counter() - t2
    res.witness = w
    res.fold_info = info
    if cfg.self_check:
        t3 = time.perf_counter()
        rep = certcheck.check(orig, w)
        times["check"] = time.perf_counter() - t3
        res.report = rep
        if not rep.ok:
            raise SelfCheckFailed(f"witness failed checks {rep.failed()}")
    return res
