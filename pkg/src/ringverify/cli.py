"""Command-line front end: ``ring-verify verify|check|simulate|crosscheck|reach``."""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from . import presburger as pb
from .crosscheck import BudgetError, check_async, check_post
from .encoding import safety_query, uniqseq_query, validity_query
from .ringmodel import (Configuration, ProtocolSpec, distance_vars, protocol_valid_bounded,
                        revert)
from .semantics import DEFAULT_MAX_STATES, BudgetExceeded, Mode, post_star, trace
from .solver import (DEFAULT_TIMEOUT, SolverError, Unknown, Unsat, WitnessError,
                     decode_uniqseq, decode_validity, extract_witness, solve)

EXIT_OK, EXIT_REFUTED, EXIT_UNKNOWN, EXIT_USAGE = 0, 1, 2, 3
# a model contradicting the concrete semantics: an encoding or parsing bug
EXIT_INTERNAL = 4
VALIDITY_WARN_BOUND = 8

_PRAGMA = re.compile(r"^\s*#\s*robots\s*:\s*(\d+)\s*$", re.MULTILINE)
_XVAR = re.compile(r"x(\d+)")


class UsageError(Exception):
    pass


@dataclass
class RunReport:
    command: List[str]
    inputs: Dict[str, object]
    verdict: str
    witness: Optional[dict] = None
    timings: Dict[str, float] = field(default_factory=dict)
    details: List[str] = field(default_factory=list)

    def __post_init__(self):
        refuting = self.verdict in ("VIOLATION", "INVALID", "NOT-UNIQSEQ")
        if refuting != (self.witness is not None) and self.verdict != "UNKNOWN":
            raise ValueError(f"verdict {self.verdict} with witness={self.witness!r}")

    def to_json(self) -> dict:
        out = {"command": self.command, "inputs": self.inputs, "verdict": self.verdict,
               "witness": self.witness,
               "timings": {k: round(v, 6) for k, v in self.timings.items()}}
        if self.details:
            out["details"] = self.details
        return out


# ------------------------------------------------------------------ inputs

def _read_source(arg: str) -> str:
    """A file path if it exists, otherwise the argument itself as an expression."""
    if os.path.isfile(arg):
        with open(arg) as fh:
            return fh.read()
    return arg


def infer_k(text: str, body: pb.Formula, robots: Optional[int]) -> int:
    """Robot count: the largest ``x<i>`` index, overridable by pragma or flag."""
    used = [int(m.group(1)) for v in body.fv for m in [_XVAR.fullmatch(v)] if m]
    k = max(used, default=0)
    m = _PRAGMA.search(text)
    declared = robots if robots is not None else (int(m.group(1)) if m else None)
    if declared is not None:
        if declared < k:
            raise UsageError(f"protocol mentions x{k} but declares {declared} robots")
        k = declared
    if k < 2:
        raise UsageError("cannot infer the robot count (need x2 or higher); "
                         "add a '# robots: K' line or pass --robots")
    return k


def load_protocol(arg: str, robots: Optional[int] = None) -> ProtocolSpec:
    text = _read_source(arg)
    body = pb.parse_formula(text)
    k = infer_k(text, body, robots)
    name = os.path.basename(arg) if os.path.isfile(arg) else ""
    return ProtocolSpec(k, body, name)


def collision(k: int) -> pb.Formula:
    """Some two robots share a node."""
    xs = distance_vars(k)
    return pb.disj(*(pb.Cmp(pb.Var(a), "=", pb.Var(b))
                     for i, a in enumerate(xs) for b in xs[i + 1:]))


def load_bad(arg: str, k: int) -> pb.Formula:
    if arg.strip() == "collision":
        return collision(k)
    bad = pb.parse_formula(_read_source(arg))
    extra = set(bad.fv) - set(distance_vars(k))
    if extra:
        raise UsageError(f"bad set mentions {sorted(extra)} but the protocol has {k} robots")
    return bad


def load_ring(arg: str) -> pb.Formula:
    ring = pb.parse_formula(_read_source(arg))
    if set(ring.fv) - {"y"}:
        raise UsageError("the ring property may only mention y")
    return ring


def _mode(text: str) -> Mode:
    return Mode(text)


# ---------------------------------------------------------------- commands

def _solver_kwargs(args):
    return {"cmd": args.solver_cmd, "timeout": args.timeout, "keep": args.keep_smt}


def _run(q, args, timings, label):
    t = time.perf_counter()
    outcome, kept = solve(q, **_solver_kwargs(args))
    timings[label] = time.perf_counter() - t
    if kept:
        print(f"kept SMT query: {kept}", file=sys.stderr)
    return outcome


def cmd_verify(args) -> RunReport:
    phi = load_protocol(args.protocol, args.robots)
    ring = load_ring(args.ring)
    bad = load_bad(args.bad, phi.k)
    mode = _mode(args.mode)
    inputs = {"protocol": args.protocol, "k": phi.k, "ring": pb.to_text(ring),
              "bad": pb.to_text(bad), "mode": mode.value}
    timings: Dict[str, float] = {}
    details = []
    t = time.perf_counter()
    verdict = protocol_valid_bounded(phi, VALIDITY_WARN_BOUND)
    timings["validity-precheck"] = time.perf_counter() - t
    if not verdict.valid:
        details.append(f"warning: protocol violates the asymmetry condition on view "
                       f"{verdict.counterexample}")
    query_mode = mode
    if mode is Mode.ASYNC:
        outcome = _run(uniqseq_query(phi), args, timings, "uniqseq-certificate")
        if not isinstance(outcome, Unsat):
            raise UsageError(
                "asynchronous safety is undecidable in general; it is checked only for "
                "uniquely-sequentializable protocols, and no certificate was obtained "
                f"({type(outcome).__name__.lower()}). Use sync or semisync instead.")
        details.append("uniquely-sequentializable: asynchronous safety reduces to synchronous")
        query_mode = Mode.SYNC
    q = safety_query(phi, ring, bad, query_mode)
    outcome = _run(q, args, timings, "solve")
    if isinstance(outcome, Unknown):
        details.append(f"solver: {outcome.reason}; the bounded oracle "
                       "(simulate --reach) can still refute small rings")
        return RunReport(args.argv, inputs, "UNKNOWN", None, timings, details)
    t = time.perf_counter()
    w = extract_witness(outcome, q)
    timings["revalidate"] = time.perf_counter() - t
    if w is None:
        return RunReport(args.argv, inputs, "SAFE", None, timings, details)
    return RunReport(args.argv, inputs, "VIOLATION", w.to_json(mode), timings, details)


def cmd_check(args) -> RunReport:
    phi = load_protocol(args.protocol, args.robots)
    inputs = {"protocol": args.protocol, "k": phi.k, "property": args.which}
    timings: Dict[str, float] = {}
    if args.which == "validity":
        q = validity_query(phi)
        outcome = _run(q, args, timings, "solve")
        if isinstance(outcome, Unknown):
            return RunReport(args.argv, inputs, "UNKNOWN", None, timings, [outcome.reason])
        v = decode_validity(outcome, q)
        if v is None:
            return RunReport(args.argv, inputs, "VALID", None, timings)
        return RunReport(args.argv, inputs, "INVALID",
                         {"n": sum(v), "view": list(v), "reverse": list(revert(v))}, timings)
    q = uniqseq_query(phi)
    outcome = _run(q, args, timings, "solve")
    if isinstance(outcome, Unknown):
        return RunReport(args.argv, inputs, "UNKNOWN", None, timings, [outcome.reason])
    w = decode_uniqseq(outcome, q)
    if w is None:
        return RunReport(args.argv, inputs, "UNIQSEQ", None, timings)
    return RunReport(args.argv, inputs, "NOT-UNIQSEQ",
                     {"n": w.config.n, "start": list(w.config.positions),
                      "movers": list(w.movers)}, timings)


def _fmt(p) -> str:
    return "(" + ",".join(map(str, p)) + ")"


def cmd_simulate(args) -> int:
    phi = load_protocol(args.protocol, args.robots)
    try:
        positions = tuple(int(x) for x in args.positions.split(","))
    except ValueError:
        raise UsageError(f"malformed positions {args.positions!r}") from None
    if len(positions) != phi.k:
        raise UsageError(f"{len(positions)} positions for a {phi.k}-robot protocol")
    try:
        c = Configuration(args.n, positions)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    mode = _mode(args.mode)
    if args.reach:
        for q in sorted(x.positions for x in post_star(phi, c, mode, args.max_states)):
            print(_fmt(q))
        return EXIT_OK
    last = 0
    for step, p, phases in trace(phi, c, mode, args.steps):
        last = step
        print(f"step={step} mode={mode.value} p={_fmt(p)}" + (f" phases={phases}" if phases else ""))
    if last < args.steps:
        print(f"fixed point after {last} steps")
    return EXIT_OK


def cmd_crosscheck(args) -> RunReport:
    phi = load_protocol(args.protocol, args.robots)
    sizes = range(max(args.n_min, phi.k), args.n_max + 1)
    modes = [Mode.SYNC, Mode.SEMISYNC] if args.mode == "all" else [_mode(args.mode)]
    inputs = {"protocol": args.protocol, "k": phi.k, "n": [args.n_min, args.n_max],
              "mode": args.mode}
    timings: Dict[str, float] = {}
    details = []
    for mode in modes:
        t = time.perf_counter()
        if mode is Mode.ASYNC:
            rep = check_async(phi, sizes, args.max_states)
        else:
            rep = check_post(phi, mode, sizes, args.max_states)
        timings[mode.value] = time.perf_counter() - t
        details.append(rep.summary())
        if not rep.ok:
            d = rep.discrepancy
            return RunReport(args.argv, inputs, "DISCREPANCY", None, timings, details + [
                f"offending n={d.n} p={d.state} formula-only={list(d.formula_only)} "
                f"oracle-only={list(d.oracle_only)}"])
    return RunReport(args.argv, inputs, "AGREEMENT", None, timings, details)


def cmd_reach(args) -> int:
    pb.parse_formula(_read_source(args.goal))
    raise UsageError("reachability of a goal set is undecidable for every scheduling mode, "
                     "so no decision procedure is offered; use `simulate --reach` to explore "
                     "concrete rings")


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ring-verify",
                                 description="Verify robot protocols on parameterized rings.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, solver=True):
        p.add_argument("--protocol", required=True, help="protocol file or expression")
        p.add_argument("--robots", type=int, help="robot count when x<k> is not mentioned")
        p.add_argument("--json", action="store_true", help="machine-readable report")
        if solver:
            p.add_argument("--solver-cmd", default=None,
                           help="command template with {file} (default: $RING_VERIFY_SOLVER "
                                "or 'z3 {file}')")
            p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT)
            p.add_argument("--keep-smt", action="store_true")

    v = sub.add_parser("verify", help="decide safety for every admissible ring")
    common(v)
    v.add_argument("--ring", required=True, help="ring property over y (file or expression)")
    v.add_argument("--bad", required=True,
                   help="bad set over x1..xk (file, expression or 'collision')")
    v.add_argument("--mode", choices=[m.value for m in Mode], default="sync")
    v.add_argument("--max-states", type=int, default=DEFAULT_MAX_STATES)

    c = sub.add_parser("check", help="check protocol validity or unique sequentializability")
    common(c)
    c.add_argument("which", choices=["validity", "uniqseq"])

    s = sub.add_parser("simulate", help="run the explicit-state semantics")
    common(s, solver=False)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--positions", required=True, help="comma-separated start positions")
    s.add_argument("--mode", choices=[m.value for m in Mode], default="sync")
    s.add_argument("--steps", type=int, default=10)
    s.add_argument("--reach", action="store_true", help="list Post* instead of a trace")
    s.add_argument("--max-states", type=int, default=DEFAULT_MAX_STATES)

    x = sub.add_parser("crosscheck", help="compare encodings with the oracle on small rings")
    common(x, solver=False)
    x.add_argument("--n-min", type=int, default=2)
    x.add_argument("--n-max", type=int, default=7)
    x.add_argument("--mode", choices=[m.value for m in Mode] + ["all"], default="all")
    x.add_argument("--max-states", type=int, default=200_000,
                   help="budget on enumerated states")

    r = sub.add_parser("reach", help="goal reachability (rejected: undecidable)")
    r.add_argument("--goal", required=True)
    r.add_argument("--json", action="store_true")
    return ap


_EXIT = {"SAFE": EXIT_OK, "VALID": EXIT_OK, "UNIQSEQ": EXIT_OK, "AGREEMENT": EXIT_OK,
         "VIOLATION": EXIT_REFUTED, "INVALID": EXIT_REFUTED, "NOT-UNIQSEQ": EXIT_REFUTED,
         "DISCREPANCY": EXIT_REFUTED, "UNKNOWN": EXIT_UNKNOWN}


def _print_report(rep: RunReport, as_json: bool):
    if as_json:
        print(json.dumps(rep.to_json(), sort_keys=True))
        return
    print(rep.verdict)
    for line in rep.details:
        print(line)
    if rep.witness is not None:
        print("witness: " + json.dumps(rep.witness, sort_keys=True))


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    args.argv = ["ring-verify"] + argv
    handlers = {"verify": cmd_verify, "check": cmd_check, "crosscheck": cmd_crosscheck}
    try:
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "reach":
            return cmd_reach(args)
        rep = handlers[args.command](args)
    except (UsageError, pb.ParseError, BudgetError, BudgetExceeded, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, WitnessError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN if isinstance(exc, SolverError) else EXIT_INTERNAL
    _print_report(rep, args.json)
    return _EXIT[rep.verdict]


if __name__ == "__main__":
    sys.exit(main())
