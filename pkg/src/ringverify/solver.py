"""SMT-LIB 2 serialization, external solver driver and model decoding."""

from __future__ import annotations

import os
import re
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from . import presburger as pb
from .encoding import Purpose, RING, Role, VerificationQuery, dist, dist_rev, pos, pos_next
from .ringmodel import Configuration, View, distance_vars, is_view, revert
from .semantics import Mode, Witness, _options, _semisync_succ, _sync_succ

__all__ = ["Sat", "Unsat", "Unknown", "SolverOutcome", "SolverError", "WitnessError",
           "Witness", "emit_smt", "run_solver", "solve", "default_command",
           "extract_witness", "decode_validity", "decode_uniqseq", "UniqSeqWitness"]

DEFAULT_COMMAND = "z3 {file}"
ENV_COMMAND = "RING_VERIFY_SOLVER"
DEFAULT_TIMEOUT = 60.0

_ROLE_ORDER = [Role.RING_SIZE, Role.POSITION, Role.PRIMED_POSITION, Role.VIEW_DISTANCE,
               Role.PHASE, Role.STORED_VIEW]


@dataclass(frozen=True)
class Sat:
    model: Dict[str, int]


@dataclass(frozen=True)
class Unsat:
    pass


@dataclass(frozen=True)
class Unknown:
    reason: str


SolverOutcome = Union[Sat, Unsat, Unknown]


class SolverError(RuntimeError):
    """The solver could not be run or its output could not be understood."""


class WitnessError(RuntimeError):
    """A model contradicts the concrete semantics: the encoding or parsing is broken."""


def default_command() -> str:
    return os.environ.get(ENV_COMMAND) or DEFAULT_COMMAND


def declared_order(q: VerificationQuery) -> List[str]:
    rank = {r: i for i, r in enumerate(_ROLE_ORDER)}
    names = list(q.free_var_roles)
    return sorted(names, key=lambda v: (rank[q.free_var_roles[v]], names.index(v)))


def emit_smt(q: VerificationQuery) -> str:
    """Deterministic SMT-LIB 2 document; sat means the checked property fails."""
    names = declared_order(q)
    lines = [f"; {q.purpose.value} query, k={q.k}"
             + (f", mode={q.mode.value}" if q.mode is not None else ""),
             "(set-logic LIA)"]
    lines += [f"(declare-fun {v} () Int)" for v in names]
    lines += [f"(assert (>= {v} 0))" for v in names]
    lines.append(f"(assert {pb.to_smtlib(q.body)})")
    lines.append("(check-sat)")
    lines.append("(get-value (" + " ".join(names) + "))")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------ s-expressions

_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def _parse_sexprs(text: str) -> list:
    stack: List[list] = [[]]
    for tok in _TOKEN.findall(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise SolverError("unbalanced parenthesis in solver output")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise SolverError("unbalanced parenthesis in solver output")
    return stack[0]


def _int_value(expr) -> int:
    if isinstance(expr, str):
        if re.fullmatch(r"\d+", expr):
            return int(expr)
    elif len(expr) == 2 and expr[0] == "-":
        return -_int_value(expr[1])
    raise SolverError(f"cannot read integer literal {expr!r}")


def parse_output(text: str, declared: Optional[List[str]] = None) -> SolverOutcome:
    """Read the status token and, on sat, the get-value bindings."""
    exprs = _parse_sexprs(text)
    if not exprs or not isinstance(exprs[0], str):
        raise SolverError(f"unparseable solver output: {text.strip()[:200]!r}")
    status = exprs[0]
    if status == "unsat":
        return Unsat()
    if status == "unknown":
        return Unknown("solver answered unknown")
    if status != "sat":
        raise SolverError(f"unexpected solver status {status!r}")
    model: Dict[str, int] = {}
    for e in exprs[1:]:
        if isinstance(e, list) and e and all(isinstance(b, list) and len(b) == 2 for b in e):
            for name, value in e:
                if not isinstance(name, str):
                    raise SolverError(f"malformed binding {name!r}")
                model[name] = _int_value(value)
    if declared is not None:
        missing = [v for v in declared if v not in model]
        if missing:
            raise SolverError(f"model lacks bindings for {missing}")
    return Sat(model)


def _declared(doc: str) -> List[str]:
    return re.findall(r"\(declare-fun\s+([^\s()]+)\s+\(\)\s+Int\)", doc)


def run_solver(doc: str, cmd: Optional[str] = None, timeout: float = DEFAULT_TIMEOUT,
               keep: bool = False) -> Tuple[SolverOutcome, Optional[str]]:
    """Run the command template on ``doc`` written to a temp file.

    Returns the outcome and, when ``keep`` is set, the path of the kept file.
    """
    cmd = cmd or default_command()
    if "{file}" not in cmd:
        raise ValueError("solver command template must contain {file}")
    fd, path = tempfile.mkstemp(prefix="ringverify-", suffix=".smt2")
    with os.fdopen(fd, "w") as fh:
        fh.write(doc)
    try:
        argv = [a.replace("{file}", path) for a in shlex.split(cmd)]
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
        except FileNotFoundError as exc:
            raise SolverError(f"solver executable not found: {argv[0]}") from exc
        except subprocess.TimeoutExpired:
            return Unknown("timeout"), (path if keep else None)
        out = proc.stdout
        if not out.strip():
            raise SolverError(f"solver produced no output (exit {proc.returncode}): "
                              f"{proc.stderr.strip()[:200]}")
        try:
            outcome = parse_output(out, _declared(doc))
        except SolverError:
            if proc.returncode != 0:
                raise SolverError(f"solver failed (exit {proc.returncode}): "
                                  f"{(out + proc.stderr).strip()[:300]}") from None
            raise
        return outcome, (path if keep else None)
    finally:
        if not keep:
            os.unlink(path)


def solve(q: VerificationQuery, cmd: Optional[str] = None, timeout: float = DEFAULT_TIMEOUT,
          keep: bool = False) -> Tuple[SolverOutcome, Optional[str]]:
    return run_solver(emit_smt(q), cmd, timeout, keep)


# ----------------------------------------------------------------- decoding

def _positions(model, names, n):
    vals = tuple(model[v] for v in names)
    for v, x in zip(names, vals):
        if not 0 <= x < n:
            raise WitnessError(f"{v}={x} lies outside the ring of size {n}")
    return vals


def _ring_size(model, k) -> int:
    n = model[RING]
    if n < k:
        raise WitnessError(f"ring size {n} is smaller than the {k} robots")
    return n


def extract_witness(outcome: SolverOutcome, q: VerificationQuery) -> Optional[Witness]:
    """Decode and re-validate a safety counterexample; ``None`` unless sat."""
    if q.purpose is not Purpose.SAFETY:
        raise ValueError("witnesses are extracted from safety queries only")
    if not isinstance(outcome, Sat):
        return None
    model, k, phi = outcome.model, q.k, q.protocol
    n = _ring_size(model, k)
    p = _positions(model, [pos(i) for i in range(1, k + 1)], n)
    p2 = _positions(model, [pos_next(i) for i in range(1, k + 1)], n)
    xs = distance_vars(k)
    if not pb.evaluate(q.ring, {RING: n}, 0):
        raise WitnessError(f"ring size {n} violates the ring property")
    if pb.evaluate(q.bad, dict(zip(xs, p)), 0):
        raise WitnessError(f"start {p} is already bad")
    if not pb.evaluate(q.bad, dict(zip(xs, p2)), 0):
        raise WitnessError(f"successor {p2} is not bad")
    succ = _sync_succ(phi, n, p) if q.mode is Mode.SYNC else _semisync_succ(phi, n, p)
    if p2 not in succ:
        raise WitnessError(f"{p} -> {p2} is not a {q.mode.value} step at n={n}")
    return Witness(n, Configuration(n, p), Configuration(n, p2))


def decode_validity(outcome: SolverOutcome, q: VerificationQuery) -> Optional[View]:
    """A view that, together with its distinct reversal, satisfies the protocol."""
    if q.purpose is not Purpose.VALIDITY:
        raise ValueError("not a validity query")
    if not isinstance(outcome, Sat):
        return None
    k, model = q.k, outcome.model
    n = _ring_size(model, k)
    v = tuple(model[dist(j)] for j in range(1, k + 1))
    rv = tuple(model[dist_rev(j)] for j in range(1, k + 1))
    if not is_view(v, n):
        raise WitnessError(f"{v} is not a view of ring size {n}")
    if revert(v) != rv or v == rv:
        raise WitnessError(f"{rv} is not the distinct reversal of {v}")
    if not (q.protocol.holds(v) and q.protocol.holds(rv)):
        raise WitnessError(f"protocol does not hold on both {v} and {rv}")
    return v


@dataclass(frozen=True)
class UniqSeqWitness:
    """A configuration where at least two robots leave their node."""

    config: Configuration
    movers: Tuple[int, ...] = field(default=())


def decode_uniqseq(outcome: SolverOutcome, q: VerificationQuery) -> Optional[UniqSeqWitness]:
    if q.purpose is not Purpose.UNIQSEQ:
        raise ValueError("not a uniq-seq query")
    if not isinstance(outcome, Sat):
        return None
    k, model, phi = q.k, outcome.model, q.protocol
    n = _ring_size(model, k)
    p = _positions(model, [pos(i) for i in range(1, k + 1)], n)
    movers = tuple(i + 1 for i in range(k) if _options(phi, n, p, i) != [p[i]])
    if len(movers) < 2:
        raise WitnessError(f"fewer than two robots move from {p} at n={n}")
    return UniqSeqWitness(Configuration(n, p), movers)
