import pytest

from ringverify import presburger as pb
from ringverify.ringmodel import Configuration, ProtocolSpec, placeholder_view
from ringverify.semantics import (AsyncState, BudgetExceeded, Mode, Phase, Witness, post_async,
                                  post_semisync, post_star, post_sync, reachable_bad_bounded,
                                  reachable_positions, trace)

from conftest import collision, suite_protocols

FARTHER = ProtocolSpec.parse("x1 > x2", 2)
NEVER = ProtocolSpec.parse("1 < 1", 2)
ADJACENT = ProtocolSpec.parse("x1 = 1", 2)


def positions(cs):
    return {c.positions for c in cs}


class TestPostSync:
    def test_examples(self):
        assert positions(post_sync(FARTHER, Configuration(5, (0, 1)))) == {(4, 2)}
        c = Configuration(6, (1, 3))
        assert post_sync(NEVER, c) == {c}
        sym = ProtocolSpec.parse("x1 = x2", 2)
        assert positions(post_sync(sym, Configuration(4, (0, 2)))) == {
            (3, 1), (3, 3), (1, 1), (1, 3)}

    def test_arity(self):
        with pytest.raises(ValueError):
            post_sync(FARTHER, Configuration(5, (0, 1, 2)))


class TestPostSemisync:
    def test_examples(self):
        got = positions(post_semisync(FARTHER, Configuration(5, (0, 1))))
        assert got == {(0, 1), (4, 1), (0, 2), (4, 2)}
        c = Configuration(5, (0, 3))
        assert post_semisync(NEVER, c) == {c}

    def test_contains_sync(self):
        for phi in suite_protocols():
            for n in range(phi.k, 6):
                for p in [(0,) * phi.k, tuple(range(phi.k)), (0,) * (phi.k - 1) + (n - 1,)]:
                    c = Configuration(n, p)
                    assert post_sync(phi, c) <= post_semisync(phi, c)


class TestAsync:
    def test_looks_only_from_initial_state(self):
        phi = ProtocolSpec.parse("1 < 1", 3)
        s = AsyncState.initial(Configuration(6, (0, 1, 3)))
        succ = post_async(phi, s)
        assert len(succ) == 3
        for t in succ:
            assert t.config == s.config
            assert sorted(t.phases) == [Phase.LOOK, Phase.LOOK, Phase.MOVE]

    def test_move_by_stored_view(self):
        s = AsyncState(Configuration(5, (0, 1)), (Phase.MOVE, Phase.LOOK),
                       ((4, 1), placeholder_view(2, 5)))
        (t,) = [t for t in post_async(FARTHER, s) if t.phases[0] is Phase.LOOK]
        assert t.config.positions == (1, 1)
        assert t.phases == (Phase.LOOK, Phase.LOOK)

    def test_stale_view_drives_move(self):
        c = Configuration(5, (0, 1))
        s = AsyncState.initial(c)
        # robot 1 looks and stores <1,4>
        (looked,) = [t for t in post_async(FARTHER, s) if t.phases == (Phase.MOVE, Phase.LOOK)]
        assert looked.stored_views[0] == (1, 4)
        # robot 2 looks, then moves clockwise to 2
        (r2_look,) = [t for t in post_async(FARTHER, looked) if t.phases[1] is Phase.MOVE]
        (r2_move,) = [t for t in post_async(FARTHER, r2_look) if t.phases[1] is Phase.LOOK]
        assert r2_move.config.positions == (0, 2)
        # robot 1's stored view is now stale but still decides: anticlockwise to 4
        (r1_move,) = [t for t in post_async(FARTHER, r2_move) if t.phases[0] is Phase.LOOK]
        assert r1_move.config.positions == (4, 2)

    def test_look_slots_are_canonical(self):
        s = AsyncState(Configuration(5, (0, 1)), (Phase.LOOK, Phase.LOOK), ((2, 3), (1, 4)))
        assert s == AsyncState.initial(Configuration(5, (0, 1)))


class TestPostStar:
    def test_never_moving(self):
        c = Configuration(5, (0, 2))
        for mode in Mode:
            assert post_star(NEVER, c, mode) == {c}

    def test_sync_cycle(self):
        got = positions(post_star(FARTHER, Configuration(4, (0, 1)), Mode.SYNC))
        assert got == {(0, 1), (3, 2)}

    def test_mode_inclusions(self):
        for phi in suite_protocols():
            if phi.k != 2:
                continue
            for n in range(2, 6):
                c = Configuration(n, (0, 1))
                s = post_star(phi, c, Mode.SYNC)
                ss = post_star(phi, c, Mode.SEMISYNC)
                a = post_star(phi, c, Mode.ASYNC)
                assert s <= ss <= a

    def test_budget(self):
        with pytest.raises(BudgetExceeded):
            reachable_positions(FARTHER, 7, (0, 1), Mode.ASYNC, max_states=5)


class TestReachableBad:
    def test_never_moving_is_safe(self):
        k3 = ProtocolSpec.parse("1 < 1", 3)
        ring = pb.parse_formula("y > 6")
        assert reachable_bad_bounded(k3, ring, collision(3), Mode.SYNC, range(7, 10)) is None

    def test_adjacent_step_collides(self):
        ring = pb.parse_formula("0 = 0")
        w = reachable_bad_bounded(ADJACENT, ring, pb.parse_formula("x1 = x2"), Mode.SEMISYNC,
                                  range(2, 6))
        # at n=2 the single-robot step of robot 2 lands on robot 1
        assert w == Witness(2, Configuration(2, (0, 1)), Configuration(2, (0, 0)))

    def test_farther_is_safe_from_four(self):
        ring = pb.parse_formula("0 = 0")
        for mode in Mode:
            assert reachable_bad_bounded(FARTHER, ring, collision(2), mode, range(4, 8)) is None

    def test_farther_collides_on_three_nodes(self):
        # both robots step into the two-node gap and meet in its middle
        ring = pb.parse_formula("0 = 0")
        w = reachable_bad_bounded(FARTHER, ring, collision(2), Mode.SYNC, range(3, 8),
                                  one_step=True)
        assert w == Witness(3, Configuration(3, (0, 1)), Configuration(3, (2, 2)))

    def test_witness_json(self):
        w = Witness(3, Configuration(3, (0, 1)), Configuration(3, (0, 0)))
        assert w.to_json(Mode.SEMISYNC) == {"n": 3, "start": [0, 1], "successor": [0, 0],
                                            "mode": "semisync"}


class TestTrace:
    def test_fixed_point(self):
        steps = list(trace(NEVER, Configuration(5, (0, 1)), Mode.SYNC, 5))
        assert steps == [(0, (0, 1), None)]

    def test_sync_steps(self):
        steps = list(trace(FARTHER, Configuration(5, (0, 1)), Mode.SYNC, 2))
        assert [p for _, p, _ in steps] == [(0, 1), (4, 2), (0, 1)]

    def test_deterministic(self):
        a = list(trace(FARTHER, Configuration(6, (0, 1)), Mode.ASYNC, 8))
        b = list(trace(FARTHER, Configuration(6, (0, 1)), Mode.ASYNC, 8))
        assert a == b
