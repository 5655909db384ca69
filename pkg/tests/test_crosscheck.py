import pytest

from ringverify import encoding
from ringverify import presburger as pb
from ringverify.crosscheck import (BudgetError, async_states, check_async, check_move,
                                   check_post, check_post_modes, random_valid_protocols)
from ringverify.encoding import RING, _add, _eq, _exists, _protocol_on, view_sym_formula
from ringverify.ringmodel import ProtocolSpec, protocol_valid_bounded
from ringverify.semantics import Mode

FARTHER = ProtocolSpec.parse("x1 > x2", 2)


def _no_wraparound(phi, view, here, there, fresh=None):
    # mutant: clockwise step forgets to wrap from n-1 to 0
    fresh = fresh or encoding.Fresh()
    rev = [fresh() for _ in range(phi.k)]
    cw = _protocol_on(phi, view)
    acw = _protocol_on(phi, rev)
    clockwise = pb.conj(cw, _eq(there, _add(here, 1)))
    anticlockwise = pb.conj(acw, pb.disj(
        pb.conj(encoding._lt(0, here), _eq(there, encoding._sub(here, 1))),
        pb.conj(_eq(here, 0), _eq(there, encoding._sub(RING, 1)))))
    stay = pb.conj(pb.negate(cw), pb.negate(acw), _eq(there, here))
    return _exists(rev, pb.conj(view_sym_formula(phi.k, view, rev),
                                pb.disj(clockwise, anticlockwise, stay)))


class TestAgreement:
    def test_post_modes_k2(self):
        for rep in check_post_modes(FARTHER, range(2, 7)):
            assert rep.ok, rep.summary()
            assert rep.checked == sum(n * n for n in range(2, 7))

    def test_async_k2(self):
        rep = check_async(ProtocolSpec.parse("x1 = 1", 2), range(2, 5))
        assert rep.ok, rep.summary()

    def test_async_state_count(self):
        # 4 position pairs; views of size 2 are (1, 1) and (2, 0)
        assert sum(1 for _ in async_states(2, 2)) == 4 * (1 + 2 + 2 + 4)

    def test_summary_mentions_agreement(self):
        rep = check_move(FARTHER, range(2, 5))
        assert "agreement" in rep.summary()


class TestMutation:
    def test_missing_wraparound_detected(self, monkeypatch):
        monkeypatch.setattr(encoding, "move_from_view_formula", _no_wraparound)
        rep = check_move(FARTHER, range(2, 6))
        assert not rep.ok
        d = rep.discrepancy
        assert d.state[0] == d.n - 1
        assert d.oracle_only == (0,)
        assert "DISCREPANCY" in rep.summary()

    def test_mutant_also_breaks_post(self, monkeypatch):
        monkeypatch.setattr(encoding, "move_from_view_formula", _no_wraparound)
        assert not check_post(FARTHER, Mode.SYNC, range(2, 6)).ok


class TestBudget:
    def test_refuses_large_ranges(self):
        with pytest.raises(BudgetError):
            check_post(FARTHER, Mode.SYNC, range(2, 50), budget=1000)


class TestRandomProtocols:
    def test_deterministic(self):
        a = random_valid_protocols(5, 2, seed=7)
        b = random_valid_protocols(5, 2, seed=7)
        assert [p.body for p in a] == [p.body for p in b]

    def test_samples_are_valid(self):
        for phi in random_valid_protocols(5, 3, seed=1, n_max=6):
            assert phi.k == 3
            assert protocol_valid_bounded(phi, 6).valid
