import json
import subprocess
import sys

import pytest

from ringverify.cli import RunReport, UsageError, infer_k, load_bad, load_protocol, main
from ringverify import presburger as pb

from conftest import SUITE_DIR, needs_solver


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestInputs:
    def test_k_from_variables(self):
        assert load_protocol("x1 = 1 and x3 > 0").k == 3

    def test_pragma_raises_k(self):
        assert load_protocol(str(SUITE_DIR / "false_k3.qfp")).k == 3

    def test_single_variable_needs_robot_count(self):
        with pytest.raises(UsageError):
            load_protocol("x1 = 1")

    def test_robots_flag(self):
        assert load_protocol("1 < 1", robots=4).k == 4

    def test_pragma_below_used_index(self):
        with pytest.raises(UsageError):
            infer_k("# robots: 1\nx2 = 1", pb.parse_formula("x2 = 1"), None)

    def test_collision_keyword(self):
        assert pb.to_text(load_bad("collision", 3)) == "x1 = x2 or x1 = x3 or x2 = x3"

    def test_bad_variable_out_of_range(self):
        with pytest.raises(UsageError):
            load_bad("x3 = 0", 2)

    def test_report_invariant(self):
        with pytest.raises(ValueError):
            RunReport(["x"], {}, "VIOLATION")
        with pytest.raises(ValueError):
            RunReport(["x"], {}, "SAFE", {"n": 3})


class TestSimulate:
    def test_one_sync_step(self, capsys):
        code, out, _ = run(capsys, "simulate", "--protocol", "x1 > x2", "--n", "5",
                           "--positions", "0,1", "--steps", "1")
        assert code == 0
        assert out.splitlines() == ["step=0 mode=sync p=(0,1)", "step=1 mode=sync p=(4,2)"]

    def test_never_moving_fixed_point(self, capsys):
        code, out, _ = run(capsys, "simulate", "--protocol", "1 < 1", "--robots", "3",
                           "--n", "7", "--positions", "0,2,5", "--mode", "semisync")
        assert code == 0
        assert out.splitlines()[-1] == "fixed point after 0 steps"

    def test_reach_sorted(self, capsys):
        code, out, _ = run(capsys, "simulate", "--protocol", "x1 > x2", "--n", "5",
                           "--positions", "0,1", "--reach")
        lines = out.splitlines()
        assert code == 0 and "(0,1)" in lines and "(4,2)" in lines
        keys = [tuple(int(x) for x in ln.strip("()").split(",")) for ln in lines]
        assert keys == sorted(keys)

    def test_async_trace_has_phases(self, capsys):
        code, out, _ = run(capsys, "simulate", "--protocol", "x1 > x2", "--n", "5",
                           "--positions", "0,1", "--mode", "async", "--steps", "2")
        assert code == 0 and "phases=" in out

    def test_bad_positions(self, capsys):
        code, _, err = run(capsys, "simulate", "--protocol", "x1 > x2", "--n", "3",
                           "--positions", "0,3")
        assert code == 3 and "error" in err


@needs_solver
class TestVerify:
    def test_safe(self, capsys):
        code, out, _ = run(capsys, "verify", "--protocol", str(SUITE_DIR / "false_k3.qfp"),
                           "--ring", "y > 6", "--bad", "collision", "--mode", "sync")
        assert code == 0 and out.startswith("SAFE")

    def test_violation_json(self, capsys):
        code, out, _ = run(capsys, "verify", "--protocol", "x1 = 1", "--robots", "2", "--ring", "y > 2",
                           "--bad", "collision", "--mode", "semisync", "--json")
        assert code == 1
        rep = json.loads(out)
        assert rep["verdict"] == "VIOLATION"
        assert set(rep) >= {"command", "inputs", "verdict", "witness", "timings"}
        w = rep["witness"]
        assert w["n"] > 2
        assert w["successor"][0] == w["successor"][1]
        assert rep["inputs"]["k"] == 2

    def test_async_without_certificate(self, capsys):
        code, _, err = run(capsys, "verify", "--protocol", "x1 > x2", "--ring", "y > 3",
                           "--bad", "collision", "--mode", "async")
        assert code == 3 and "undecidable" in err

    def test_async_with_certificate(self, capsys):
        code, out, _ = run(capsys, "verify", "--protocol", "1 < 1", "--robots", "2",
                           "--ring", "y > 3", "--bad", "collision", "--mode", "async")
        assert code == 0 and "uniquely-sequentializable" in out

    def test_validity_warning(self, capsys):
        code, out, _ = run(capsys, "verify", "--protocol", "x1 >= 1", "--robots", "2", "--ring", "y > 3",
                           "--bad", "collision")
        assert "warning" in out

    def test_missing_solver(self, capsys):
        code, _, err = run(capsys, "verify", "--protocol", "x1 = 1", "--robots", "2", "--ring", "y > 2",
                           "--bad", "collision", "--solver-cmd", "no-such-binary {file}")
        assert code == 2 and "not found" in err


@needs_solver
class TestCheck:
    def test_valid(self, capsys):
        assert run(capsys, "check", "validity", "--protocol", "x1 > x2")[0] == 0

    def test_invalid_prints_view(self, capsys):
        code, out, _ = run(capsys, "check", "validity", "--protocol", "x1 >= 1", "--robots", "2")
        assert code == 1 and "view" in out

    def test_uniqseq(self, capsys):
        code, out, _ = run(capsys, "check", "uniqseq", "--protocol", "1 < 1", "--robots", "2")
        assert code == 0 and out.startswith("UNIQSEQ")

    def test_not_uniqseq(self, capsys):
        code, out, _ = run(capsys, "check", "uniqseq", "--protocol", "x1 > x2", "--json")
        assert code == 1 and len(json.loads(out)["witness"]["movers"]) >= 2


class TestCrosscheck:
    def test_agreement(self, capsys):
        code, out, _ = run(capsys, "crosscheck", "--protocol", "x1 > x2", "--n-max", "5")
        assert code == 0 and out.startswith("AGREEMENT")

    def test_budget(self, capsys):
        code, _, err = run(capsys, "crosscheck", "--protocol", "x1 > x2", "--n-max", "40",
                           "--max-states", "100")
        assert code == 3 and "budget" in err


class TestUsage:
    def test_reach_rejected(self, capsys):
        code, _, err = run(capsys, "reach", "--goal", "x1 = x2")
        assert code == 3 and "undecidable" in err

    def test_parse_error(self, capsys):
        code, _, err = run(capsys, "check", "validity", "--protocol", "x1 = = 2")
        assert code == 3

    def test_unknown_subcommand(self, capsys):
        assert run(capsys, "frobnicate")[0] == 3

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "ringverify", "simulate", "--protocol",
                               "x1 > x2", "--n", "5", "--positions", "0,1", "--steps", "1"],
                              capture_output=True, text=True)
        assert proc.returncode == 0 and "(4,2)" in proc.stdout
