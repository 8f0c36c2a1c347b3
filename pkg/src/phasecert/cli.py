"""Command line: ``phasecert mc|check|fuzz|info``.

Exit codes are listed in ``EXIT``; a witness that fails its own self-check
is a bug in the producer and exits with ``EXIT["selfcheck"]``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import aiger_io, certcheck
from .engine import SAFE, UNSAFE
from .fuzz import FuzzParams, run_fuzz
from .netlist import NotStratified, StructuralError, check_stratified, coi
from .periodic import MAX_CAP
from .pipeline import ENGINES, RunConfig, SelfCheckFailed, discover_candidates, model_check, score_candidate
from .transform import ensure_names

EXIT = {
    "ok": 0,  # mc: SAFE, check: pass, fuzz: clean
    "fail": 1,  # check: some check failed, fuzz: discrepancies
    "usage": 2,
    "parse": 3,  # unreadable or non-stratified input
    "unsafe": 10,
    "unknown": 20,  # resource budget exhausted
    "selfcheck": 70,
}


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def _load(path: str):
    return aiger_io.parse(_read(path))


def _bits(vals) -> str:
    return "".join("1" if x else "0" for x in vals)


def format_trace(trace: list) -> str:
    """AIGER-style witness: status, property, initial latches, one input line per frame."""
    lines = ["1", "b0", _bits(trace[0][1])]
    lines += [_bits(ins) for ins, _ in trace]
    lines.append(".")
    return "\n".join(lines) + "\n"


def _config(args) -> RunConfig:
    return RunConfig(
        max_n=args.max_phase,
        max_d=args.max_duration,
        allow_forwarding=not args.no_forward,
        engine=args.engine,
        max_bound=args.max_bound,
        max_k=args.max_k,
        time_budget=args.time_budget,
        conflict_budget=args.conflict_budget,
        dump_dir=args.dump_stages,
    )


def cmd_mc(args) -> int:
    c = _load(args.model)
    try:
        res = model_check(c, _config(args))
    except SelfCheckFailed as e:
        print(f"FATAL: {e}", file=sys.stderr)
        return EXIT["selfcheck"]
    cand = res.candidate
    out = {
        "status": res.status,
        "n": cand.n,
        "d": cand.d,
        "score": cand.score,
        "engine": res.verdict.engine if res.verdict else None,
        "frames": res.verdict.frames if res.verdict else None,
        "note": res.note,
        "certified": res.report is not None and res.report.ok,
        "times": {k: round(v, 6) for k, v in res.times.items()},
    }
    if res.fold_info is not None:
        out["b_bits"] = len(res.fold_info.b_bits)
        out["e_bits"] = len(res.fold_info.e_bits)
    if res.witness is not None and args.witness:
        with open(args.witness, "w") as fh:
            fh.write(aiger_io.write_witness(res.witness))
        out["witness"] = args.witness
    if res.trace is not None:
        out["trace"] = [{"inputs": _bits(i), "latches": _bits(l)} for i, l in res.trace]
    if args.json:
        print(json.dumps(out, indent=2))
    else:
        print(res.status)
        print(f"candidate n={cand.n} d={cand.d} latches={cand.score}")
        if res.note:
            print(res.note)
        if out["certified"]:
            print("certificate: self-check passed" + (f", written to {args.witness}" if args.witness else ""))
        if res.trace is not None:
            sys.stdout.write(format_trace(res.trace))
    if res.status == SAFE:
        return EXIT["ok"]
    if res.status == UNSAFE:
        return EXIT["unsafe"]
    return EXIT["unknown"]


def cmd_check(args) -> int:
    c = _load(args.model)
    w = aiger_io.parse_witness(_read(args.witness))
    rep = certcheck.check(c, w, dump_dir=args.dump_cnf, conflict_budget=args.conflict_budget)
    if args.json:
        print(rep.to_json())
    else:
        if rep.error:
            print(f"error: {rep.error}")
        print(f"stratified: {rep.stratified}")
        for name in certcheck.CHECKS:
            r = rep.checks.get(name)
            print(f"{name}: {r.status if r else 'not run'}")
        print("PASS" if rep.ok else "FAIL")
    return EXIT["ok"] if rep.ok else EXIT["fail"]


def cmd_fuzz(args) -> int:
    params = FuzzParams(max_inputs=args.max_inputs, max_latches=args.max_latches, max_gates=args.max_gates)
    s = run_fuzz(args.count, args.seed, params, _config(args), workers=args.workers, out_dir=args.out)
    d = s.to_dict()
    if args.json:
        print(json.dumps(d, indent=2))
    else:
        for k, v in d.items():
            if k not in ("discrepancies", "reproducers"):
                print(f"{k}: {v}")
        for p in d["discrepancies"]:
            print(f"discrepancy #{p['index']}: {p['problem']}")
        for p in d["reproducers"]:
            print(f"reproducer: {p}")
    return EXIT["fail"] if s.problems else EXIT["ok"]


def cmd_info(args) -> int:
    c = _load(args.model)
    info = {
        "inputs": c.num_inputs,
        "latches": c.num_latches,
        "ands": len(c.ands),
        "coi": len(coi(c)),
    }
    named = ensure_names(c)
    try:
        order = check_stratified(named)
    except NotStratified as e:
        info["stratified"] = False
        info["cycle"] = [named.latch_names[named.index[v][1]] for v in e.cycle]
    else:
        info["stratified"] = True
        info["reset_order"] = [named.latch_names[named.index[v][1]] for v in order]
        cands = discover_candidates(named, _config(args))
        lassos = {}
        rows = []
        for cand in cands:
            score_candidate(named, cand)
            if cand.lasso is not None:
                lassos.setdefault(id(cand.lasso), (cand.lasso.delta, cand.lasso.omega))
            rows.append({"d": cand.d, "n": cand.n, "score": cand.score, "note": cand.note})
        info["lassos"] = [{"delta": a, "omega": b} for a, b in lassos.values()]
        info["candidates"] = rows
    if args.json:
        print(json.dumps(info, indent=2))
    else:
        for k, v in info.items():
            if k == "candidates":
                for r in v:
                    extra = f" ({r['note']})" if r["note"] else ""
                    print(f"candidate d={r['d']} n={r['n']} score={r['score']}{extra}")
            else:
                print(f"{k}: {v}")
    return EXIT["ok"]


def _add_run_flags(p):
    p.add_argument("--max-phase", type=int, default=MAX_CAP, help="largest phase count n")
    p.add_argument("--max-duration", type=int, default=MAX_CAP, help="largest start-up duration d")
    p.add_argument("--no-forward", action="store_true", help="only consider d = 0")
    p.add_argument("--engine", choices=ENGINES, default="ic3")
    p.add_argument("--max-bound", type=int, default=32, help="BMC bound")
    p.add_argument("--max-k", type=int, default=4, help="k-induction depth")
    p.add_argument("--time-budget", type=float, default=None, help="seconds for the back end")
    p.add_argument("--conflict-budget", type=int, default=None)
    p.add_argument("--dump-stages", metavar="DIR", default=None, help="write every pipeline stage as .aag")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="phasecert", description="certifying model checker with phase abstraction")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("mc", help="model check an AIGER file")
    p.add_argument("model")
    p.add_argument("--witness", metavar="OUT", help="write the certificate here")
    p.add_argument("--json", action="store_true")
    _add_run_flags(p)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("check", help="check a witness against a model")
    p.add_argument("model")
    p.add_argument("witness")
    p.add_argument("--dump-cnf", metavar="DIR", default=None)
    p.add_argument("--conflict-budget", type=int, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("fuzz", help="differential fuzzing against explicit-state reachability")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-inputs", type=int, default=4)
    p.add_argument("--max-latches", type=int, default=8)
    p.add_argument("--max-gates", type=int, default=16)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", metavar="DIR", default="fuzz-repro", help="directory for reproducers")
    p.add_argument("--json", action="store_true")
    _add_run_flags(p)
    p.set_defaults(func=cmd_fuzz)

    p = sub.add_parser("info", help="print circuit statistics and phase candidates")
    p.add_argument("model")
    p.add_argument("--json", action="store_true")
    _add_run_flags(p)
    p.set_defaults(func=cmd_info)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT["usage"] if e.code else EXIT["ok"]
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (aiger_io.ParseError, StructuralError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT["parse"]
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT["usage"]
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT["parse"]


if __name__ == "__main__":
    sys.exit(main())
