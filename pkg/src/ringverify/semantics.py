"""Explicit-state transition relations for the three scheduling modes.

These functions are the brute-force oracle: every Presburger encoding in
``encoding`` is validated against them on small rings.
"""

from __future__ import annotations

import enum
import itertools
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

from . import presburger as pb
from .ringmodel import (Configuration, ProtocolSpec, View, distance_vars,
                        move_set, placeholder_view, view_clockwise_positions)

DEFAULT_MAX_STATES = 2_000_000


class Mode(enum.Enum):
    SYNC = "sync"
    SEMISYNC = "semisync"
    ASYNC = "async"


class Phase(enum.IntEnum):
    LOOK = 0
    MOVE = 1


class BudgetExceeded(RuntimeError):
    """The explored state space outgrew the configured cap."""


@dataclass(frozen=True)
class AsyncState:
    config: Configuration
    phases: Tuple[Phase, ...]
    stored_views: Tuple[View, ...]

    def __post_init__(self):
        k = self.config.k
        if len(self.phases) != k or len(self.stored_views) != k:
            raise ValueError("phases and stored views must have one entry per robot")
        object.__setattr__(self, "phases", tuple(Phase(s) for s in self.phases))
        # LOOK-phase slots are never read before being overwritten
        ph = placeholder_view(k, self.config.n)
        object.__setattr__(self, "stored_views", tuple(
            ph if s is Phase.LOOK else tuple(v)
            for s, v in zip(self.phases, self.stored_views)))

    @classmethod
    def initial(cls, c: Configuration) -> "AsyncState":
        ph = placeholder_view(c.k, c.n)
        return cls(c, (Phase.LOOK,) * c.k, (ph,) * c.k)

    def phase_string(self) -> str:
        return "".join("L" if s is Phase.LOOK else "M" for s in self.phases)


@dataclass(frozen=True)
class Witness:
    """A good configuration whose successor (or descendant) is bad."""

    n: int
    start: Configuration
    successor: Configuration

    def to_json(self, mode: Mode) -> dict:
        return {"n": self.n, "start": list(self.start.positions),
                "successor": list(self.successor.positions), "mode": mode.value}


def _check_arity(phi: ProtocolSpec, k: int):
    if phi.k != k:
        raise ValueError(f"{k} robots but the protocol is written for {phi.k}")


def _options(phi: ProtocolSpec, n: int, p, i: int):
    v = view_clockwise_positions(n, p, i)
    return sorted({(p[i] + m) % n for m in move_set(phi, v)})


def _sync_succ(phi, n, p):
    return set(itertools.product(*(_options(phi, n, p, i) for i in range(len(p)))))


def _semisync_succ(phi, n, p):
    # a robot outside the scheduled subset keeps its position
    return set(itertools.product(
        *(sorted(set(_options(phi, n, p, i)) | {p[i]}) for i in range(len(p)))))


def post_sync(phi: ProtocolSpec, c: Configuration) -> set:
    _check_arity(phi, c.k)
    return {Configuration(c.n, q) for q in _sync_succ(phi, c.n, c.positions)}


def post_semisync(phi: ProtocolSpec, c: Configuration) -> set:
    """Union over every scheduled subset, the empty one included."""
    _check_arity(phi, c.k)
    return {Configuration(c.n, q) for q in _semisync_succ(phi, c.n, c.positions)}


def _async_succ(phi, n, p, phases, stored):
    out = []
    k = len(p)
    ph = placeholder_view(k, n)
    for i in range(k):
        if phases[i] == Phase.LOOK:
            v = view_clockwise_positions(n, p, i)
            out.append((p, phases[:i] + (Phase.MOVE,) + phases[i + 1:],
                        stored[:i] + (v,) + stored[i + 1:]))
        else:
            for m in sorted(move_set(phi, stored[i])):
                q = p[:i] + ((p[i] + m) % n,) + p[i + 1:]
                out.append((q, phases[:i] + (Phase.LOOK,) + phases[i + 1:],
                            stored[:i] + (ph,) + stored[i + 1:]))
    return out


def post_async(phi: ProtocolSpec, s: AsyncState) -> set:
    """One robot either looks (storing its view) or moves by its stored view."""
    _check_arity(phi, s.config.k)
    n = s.config.n
    return {AsyncState(Configuration(n, q), ph, st)
            for q, ph, st in _async_succ(phi, n, s.config.positions, s.phases, s.stored_views)}


def _reach(start, succ, max_states):
    seen = {start}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for nxt in succ(cur):
            if nxt not in seen:
                seen.add(nxt)
                if len(seen) > max_states:
                    raise BudgetExceeded(f"more than {max_states} states explored")
                queue.append(nxt)
    return seen


def reachable_positions(phi: ProtocolSpec, n: int, p, mode: Mode,
                        max_states: int = DEFAULT_MAX_STATES) -> set:
    """Post* as a set of position tuples."""
    p = tuple(p)
    if mode is Mode.SYNC:
        return _reach(p, lambda q: _sync_succ(phi, n, q), max_states)
    if mode is Mode.SEMISYNC:
        return _reach(p, lambda q: _semisync_succ(phi, n, q), max_states)
    init = AsyncState.initial(Configuration(n, p))
    start = (p, init.phases, init.stored_views)
    states = _reach(start, lambda s: _async_succ(phi, n, *s), max_states)
    return {s[0] for s in states}


def post_star(phi: ProtocolSpec, c: Configuration, mode: Mode,
              max_states: int = DEFAULT_MAX_STATES) -> set:
    """Configurations reachable from ``c``; ASYNC starts with every robot ready to look."""
    _check_arity(phi, c.k)
    return {Configuration(c.n, q)
            for q in reachable_positions(phi, c.n, c.positions, mode, max_states)}


def _in(f: pb.Formula, p) -> bool:
    return pb.evaluate(f, dict(zip(distance_vars(len(p)), p)), 0)


def reachable_bad_bounded(phi: ProtocolSpec, ring: pb.Formula, bad: pb.Formula, mode: Mode,
                          n_range: Iterable[int], one_step: bool = False,
                          max_states: int = DEFAULT_MAX_STATES) -> Optional[Witness]:
    """Brute-force SAFE search over the ring sizes in ``n_range`` satisfying ``ring``.

    Returns the first witness by ascending ``n`` then lexicographic start
    configuration; the bad configuration reported is the lexicographically
    smallest one reachable.  ``one_step`` restricts reachability to Post.
    """
    k = phi.k
    if set(ring.fv) - {"y"}:
        raise ValueError("the ring property may only mention y")
    if set(bad.fv) - set(distance_vars(k)):
        raise ValueError(f"the bad set may only mention x1..x{k}")
    for n in sorted(n_range):
        if n < k or not pb.evaluate(ring, {"y": n}, 0):
            continue
        bad_memo = {}

        def is_bad(q):
            hit = bad_memo.get(q)
            if hit is None:
                hit = bad_memo[q] = _in(bad, q)
            return hit

        for p in itertools.product(range(n), repeat=k):
            if is_bad(p):
                continue
            if one_step:
                if mode is Mode.SYNC:
                    succ = _sync_succ(phi, n, p)
                elif mode is Mode.SEMISYNC:
                    succ = _semisync_succ(phi, n, p)
                else:
                    succ = reachable_positions_async_one_round(phi, n, p)
            else:
                succ = reachable_positions(phi, n, p, mode, max_states)
            hits = sorted(q for q in succ if is_bad(q))
            if hits:
                return Witness(n, Configuration(n, p), Configuration(n, hits[0]))
    return None


def reachable_positions_async_one_round(phi: ProtocolSpec, n: int, p) -> set:
    """Post_as: positions after a single step from the all-LOOK state.

    A single asynchronous step from that state is always a look, so this is
    just ``{p}``; kept for symmetry with the other modes.
    """
    init = AsyncState.initial(Configuration(n, tuple(p)))
    return {q for q, _, _ in _async_succ(phi, n, tuple(p), init.phases, init.stored_views)}


def trace(phi: ProtocolSpec, c: Configuration, mode: Mode, steps: int):
    """Deterministic run: at each step take the lexicographically smallest successor.

    Yields ``(step, positions, phase string or None)``; stops early at a fixed point.
    """
    n = c.n
    if mode is Mode.ASYNC:
        st = AsyncState.initial(c)
        cur = (c.positions, st.phases, st.stored_views)
        yield 0, cur[0], "".join("LM"[s] for s in cur[1])
        for step in range(1, steps + 1):
            succ = sorted(_async_succ(phi, n, *cur))
            if not succ:
                return
            cur = succ[0]
            yield step, cur[0], "".join("LM"[s] for s in cur[1])
        return
    succ_fn = _sync_succ if mode is Mode.SYNC else _semisync_succ
    cur = c.positions
    yield 0, cur, None
    for step in range(1, steps + 1):
        nxt = sorted(succ_fn(phi, n, cur))
        # prefer an actual move so the trace makes progress
        moved = [q for q in nxt if q != cur]
        if not moved:
            return
        cur = moved[0]
        yield step, cur, None
