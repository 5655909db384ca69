import sys

import pytest

from ringverify import presburger as pb
from ringverify.encoding import safety_query, uniqseq_query, validity_query
from ringverify.ringmodel import Configuration, ProtocolSpec
from ringverify.semantics import Mode
from ringverify.solver import (Sat, SolverError, Unknown, Unsat, UniqSeqWitness, Witness,
                               WitnessError, decode_uniqseq, decode_validity, emit_smt,
                               extract_witness, parse_output, run_solver, solve)

from conftest import FIXTURES, collision, needs_solver, suite_protocols

FARTHER = ProtocolSpec.parse("x1 > x2", 2)
ADJACENT = ProtocolSpec.parse("x1 = 1", 2)


def farther_query():
    return safety_query(FARTHER, pb.parse_formula("y > 3"), collision(2), Mode.SYNC)


def adjacent_query(mode=Mode.SEMISYNC):
    return safety_query(ADJACENT, pb.parse_formula("y > 2"), collision(2), mode)


class TestEmit:
    def test_golden_file(self):
        golden = (FIXTURES / "farther_k2_sync.smt2").read_text()
        assert emit_smt(farther_query()) == golden

    def test_deterministic(self):
        assert emit_smt(farther_query()) == emit_smt(farther_query())

    def test_layout(self):
        doc = emit_smt(farther_query())
        lines = doc.splitlines()
        assert lines[1] == "(set-logic LIA)"
        assert sum(1 for ln in lines if ln.startswith("(declare-fun")) == 5
        assert "(assert (>= p2_next 0))" in lines
        assert lines[-2] == "(check-sat)"
        assert lines[-1] == "(get-value (y p1 p2 p1_next p2_next))"


class TestParseOutput:
    def test_negative_literal(self):
        out = parse_output("sat\n((x (- 3)) (y 4))\n", ["x", "y"])
        assert out == Sat({"x": -3, "y": 4})

    def test_status_tokens(self):
        assert parse_output("unsat\n(error \"model is not available\")\n") == Unsat()
        assert isinstance(parse_output("unknown\n"), Unknown)

    def test_missing_binding(self):
        with pytest.raises(SolverError):
            parse_output("sat\n((x 1))\n", ["x", "y"])

    def test_garbage(self):
        with pytest.raises(SolverError):
            parse_output("(((")
        with pytest.raises(SolverError):
            parse_output("segfault\n")


class TestRunSolver:
    def test_missing_executable(self):
        with pytest.raises(SolverError):
            run_solver("(check-sat)\n", "no-such-solver-binary {file}")

    def test_placeholder_required(self):
        with pytest.raises(ValueError):
            run_solver("(check-sat)\n", "z3")

    def test_timeout(self):
        cmd = f"{sys.executable} -c 'import time; time.sleep(5)' {{file}}"
        out, _ = run_solver("(check-sat)\n", cmd, timeout=0.5)
        assert out == Unknown("timeout")

    def test_fake_solver_negative_model(self, tmp_path):
        script = tmp_path / "fake.py"
        script.write_text("print('sat'); print('((a (- 2)))')\n")
        doc = "(declare-fun a () Int)\n(check-sat)\n(get-value (a))\n"
        out, _ = run_solver(doc, f"{sys.executable} {script} {{file}}")
        assert out == Sat({"a": -2})

    def test_keep_file(self):
        import os
        out, path = run_solver("(check-sat)\n", f"{sys.executable} -c 'print(\"unsat\")' {{file}}",
                               keep=True)
        assert out == Unsat() and os.path.exists(path)
        os.unlink(path)

    @needs_solver
    def test_trivial_documents(self):
        assert run_solver("(assert false)\n(check-sat)\n")[0] == Unsat()
        doc = "(declare-fun a () Int)\n(assert (= a 7))\n(check-sat)\n(get-value (a))\n"
        assert run_solver(doc)[0] == Sat({"a": 7})


class TestWitness:
    def test_adjacent_collision_model(self):
        model = {"y": 4, "p1": 0, "p2": 1, "p1_next": 1, "p2_next": 1}
        w = extract_witness(Sat(model), adjacent_query())
        assert w == Witness(4, Configuration(4, (0, 1)), Configuration(4, (1, 1)))

    def test_unsat_gives_none(self):
        assert extract_witness(Unsat(), adjacent_query()) is None

    def test_position_out_of_ring(self):
        model = {"y": 4, "p1": 4, "p2": 1, "p1_next": 1, "p2_next": 1}
        with pytest.raises(WitnessError):
            extract_witness(Sat(model), adjacent_query())

    def test_step_not_in_oracle(self):
        # under SYNC both robots move, so (0,1) -> (1,1) is impossible
        model = {"y": 4, "p1": 0, "p2": 1, "p1_next": 1, "p2_next": 1}
        with pytest.raises(WitnessError):
            extract_witness(Sat(model), adjacent_query(Mode.SYNC))

    def test_start_already_bad(self):
        model = {"y": 4, "p1": 1, "p2": 1, "p1_next": 1, "p2_next": 1}
        with pytest.raises(WitnessError):
            extract_witness(Sat(model), adjacent_query())

    def test_ring_property_rechecked(self):
        model = {"y": 2, "p1": 0, "p2": 1, "p1_next": 1, "p2_next": 1}
        with pytest.raises(WitnessError):
            extract_witness(Sat(model), adjacent_query())

    def test_validity_decoding(self):
        q = validity_query(ProtocolSpec.parse("x1 >= 1", 2))
        model = {"y": 3, "d1": 2, "d2": 1, "d1_rev": 1, "d2_rev": 2}
        assert decode_validity(Sat(model), q) == (2, 1)
        with pytest.raises(WitnessError):
            decode_validity(Sat({**model, "d2_rev": 1}), q)

    def test_uniqseq_decoding(self):
        q = uniqseq_query(FARTHER)
        w = decode_uniqseq(Sat({"y": 5, "p1": 0, "p2": 1}), q)
        assert w == UniqSeqWitness(Configuration(5, (0, 1)), (1, 2))
        with pytest.raises(WitnessError):
            decode_uniqseq(Sat({"y": 4, "p1": 0, "p2": 2}), q)


@needs_solver
class TestEndToEnd:
    def test_never_moving_is_safe(self):
        phi = ProtocolSpec.parse("1 < 1", 3)
        q = safety_query(phi, pb.parse_formula("y > 6"), collision(3), Mode.SYNC)
        assert solve(q)[0] == Unsat()

    def test_adjacent_violation(self):
        out, _ = solve(adjacent_query())
        assert isinstance(out, Sat)
        w = extract_witness(out, adjacent_query())
        assert w.successor.positions[0] == w.successor.positions[1]

    def test_farther_safe_from_four(self):
        assert solve(farther_query())[0] == Unsat()

    def test_every_suite_document_parses(self):
        for phi in suite_protocols():
            queries = [validity_query(phi), uniqseq_query(phi)]
            for mode in (Mode.SYNC, Mode.SEMISYNC):
                queries.append(safety_query(phi, pb.parse_formula("y > 6"),
                                            collision(phi.k), mode))
            for q in queries:
                out, _ = solve(q, timeout=60)
                assert isinstance(out, (Sat, Unsat)), (phi.name, q.purpose, out)
