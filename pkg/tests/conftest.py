import itertools
import shutil
from pathlib import Path

import pytest

from ringverify import presburger as pb
from ringverify.cli import load_protocol

ROOT = Path(__file__).resolve().parent.parent
SUITE_DIR = ROOT / "protocols" / "suite"
FIXTURES = Path(__file__).resolve().parent / "fixtures"

HAVE_Z3 = shutil.which("z3") is not None
needs_solver = pytest.mark.skipif(not HAVE_Z3, reason="z3 binary not on PATH")


def suite_protocols():
    return [load_protocol(str(p)) for p in sorted(SUITE_DIR.glob("*.qfp"))]


def collision(k):
    xs = [f"x{i}" for i in range(1, k + 1)]
    return pb.parse_formula(" or ".join(f"{a} = {b}" for a, b in itertools.combinations(xs, 2)))


# ------------------------------------------------------------ naive oracle

def _term(t, val):
    if isinstance(t, pb.Var):
        return val[t.name]
    if isinstance(t, pb.Const):
        return t.value
    if isinstance(t, pb.Add):
        return _term(t.left, val) + _term(t.right, val)
    if isinstance(t, pb.Sub):
        return _term(t.left, val) - _term(t.right, val)
    if isinstance(t, pb.ScalarMul):
        return t.coefficient * _term(t.operand, val)
    return _term(t.operand, val) % t.modulus


term_value = _term


def naive_eval(f, val, bound):
    """Textbook recursive evaluation; existentials try every value in [0, bound]."""
    if isinstance(f, pb.Cmp):
        a, b = _term(f.left, val), _term(f.right, val)
        return {"=": a == b, "!=": a != b, "<": a < b, "<=": a <= b,
                ">": a > b, ">=": a >= b}[f.op]
    if isinstance(f, pb.And):
        return all(naive_eval(g, val, bound) for g in f.args)
    if isinstance(f, pb.Or):
        return any(naive_eval(g, val, bound) for g in f.args)
    if isinstance(f, pb.Not):
        return not naive_eval(f.operand, val, bound)
    return any(naive_eval(f.body, {**val, f.var: c}, bound) for c in range(bound + 1))


# ------------------------------------------------------ acceptance summary

ACCEPTANCE: dict = {}


def record(number: int, status: str, detail: str):
    ACCEPTANCE[number] = f"criterion {number}: {status} {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
