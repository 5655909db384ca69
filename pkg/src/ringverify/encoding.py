"""Existential Presburger encodings of views, moves and one-step successors.

Variable naming (all free variables of generated formulae follow it):

* ``y`` the ring size;
* ``p1..pk`` positions and ``p1_next..pk_next`` successor positions;
* ``d1..dk`` a view and ``d1_rev..dk_rev`` its reversal;
* ``s1..sk`` / ``s1_next..`` asynchronous phases (0 = LOOK, 1 = MOVE);
* ``v{i}_{j}`` / ``v{i}_{j}_next`` component ``j`` of robot ``i``'s stored view.

Bound variables are drawn from ``_b<counter>``; a ``Fresh`` counter is
threaded through every builder so one query never reuses a name.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence

from . import presburger as pb
from .presburger import Cmp, Exists, Not, Var, conj, disj, negate, term
from .ringmodel import ProtocolSpec, distance_vars
from .semantics import Mode

RING = "y"

# from this robot count on, offsets are matched to robots by an explicit
# bijection; plain membership matching miscounts towers
EXACT_VIEW_THRESHOLD = 4


def pos(i: int) -> str:
    return f"p{i}"


def pos_next(i: int) -> str:
    return f"p{i}_next"


def dist(j: int) -> str:
    return f"d{j}"


def dist_rev(j: int) -> str:
    return f"d{j}_rev"


def phase(i: int) -> str:
    return f"s{i}"


def phase_next(i: int) -> str:
    return f"s{i}_next"


def stored(i: int, j: int) -> str:
    return f"v{i}_{j}"


def stored_next(i: int, j: int) -> str:
    return f"v{i}_{j}_next"


class Fresh:
    """Generator of reserved bound-variable names."""

    def __init__(self):
        self.counter = 0

    def __call__(self) -> str:
        self.counter += 1
        return f"_b{self.counter}"


def _eq(a, b):
    return Cmp(term(a), "=", term(b))


def _le(a, b):
    return Cmp(term(a), "<=", term(b))


def _lt(a, b):
    return Cmp(term(a), "<", term(b))


def _add(a, b):
    return pb.Add(term(a), term(b))


def _sub(a, b):
    return pb.Sub(term(a), term(b))


def _exists(names: Sequence[str], body):
    for name in reversed(names):
        body = Exists(name, body)
    return body


def _ring_offset(target, origin, offset):
    """``target = (origin + offset) mod y`` for ``0 <= origin < y`` and ``1 <= offset <= y``.

    The sum lies in ``[1, 2y-1]`` so the modulus is one of two linear cases.
    """
    return disj(_eq(target, _add(origin, offset)),
                _eq(target, _sub(_add(origin, offset), RING)))


def _check_k(k: int):
    if k < 2:
        raise ValueError("encodings need at least two robots")


def config_view_formula(i: int, k: int, fresh: Optional[Fresh] = None,
                        view: Optional[Sequence[str]] = None,
                        exact: Optional[bool] = None) -> pb.Formula:
    """Holds iff ``view`` (default ``d1..dk``) is robot ``i``'s clockwise view of ``p1..pk``.

    The sorted clockwise offsets of the other robots are existentially
    quantified.  With ``exact`` (default for k >= 4) the offsets are matched to
    robots by an explicit bijection; otherwise by the cheaper two-way
    membership, which cannot tell apart offset multisets with the same
    support once three or more other robots exist.
    """
    _check_k(k)
    if not 1 <= i <= k:
        raise ValueError(f"robot index {i} out of range 1..{k}")
    fresh = fresh or Fresh()
    view = list(view) if view is not None else [dist(j) for j in range(1, k + 1)]
    if exact is None:
        exact = k >= EXACT_VIEW_THRESHOLD
    offs = [fresh() for _ in range(k - 1)]
    others = [j for j in range(1, k + 1) if j != i]
    parts = [_le(offs[j], offs[j + 1]) for j in range(k - 2)]
    bound = list(offs)
    if exact:
        # match[j][l] in {0,1}: robot others[j] sits at offset offs[l]
        match = [[fresh() for _ in offs] for _ in others]
        bound += [m for row in match for m in row]
        for row in match:
            parts.append(_eq(_sum_terms(row), 1))
        for col in zip(*match):
            parts.append(_eq(_sum_terms(col), 1))
        for j, row in zip(others, match):
            for l, m in enumerate(row):
                parts.append(_le(m, 1))
                parts.append(disj(_eq(m, 0), _ring_offset(pos(j), pos(i), offs[l])))
    else:
        for j in others:
            parts.append(disj(*(_ring_offset(pos(j), pos(i), o) for o in offs)))
        for o in offs:
            parts.append(disj(*(_ring_offset(pos(j), pos(i), o) for j in others)))
    parts.append(_lt(0, offs[0]))
    parts.extend(_le(o, RING) for o in offs)
    parts.append(_eq(view[0], offs[0]))
    for j in range(1, k - 1):
        parts.append(_eq(view[j], _sub(offs[j], offs[j - 1])))
    parts.append(_eq(view[k - 1], _sub(RING, offs[k - 2])))
    return _exists(bound, conj(*parts))


def _sum_terms(names):
    acc = term(names[0])
    for n in names[1:]:
        acc = pb.Add(acc, term(n))
    return acc


def view_sym_formula(k: int, view: Optional[Sequence[str]] = None,
                     rev: Optional[Sequence[str]] = None) -> pb.Formula:
    """Holds iff ``rev`` (default ``d1_rev..``) is the reversal of the view ``view``.

    Disjunct ``j`` fixes ``j`` as the last nonzero distance; requiring
    ``d_j > 0`` keeps the disjuncts mutually exclusive so ``rev`` is always a
    genuine view.
    """
    _check_k(k)
    view = list(view) if view is not None else [dist(j) for j in range(1, k + 1)]
    rev = list(rev) if rev is not None else [dist_rev(j) for j in range(1, k + 1)]
    cases = []
    for j in range(1, k + 1):
        parts = [_lt(0, view[j - 1])]
        for l in range(j + 1, k + 1):
            parts += [_eq(view[l - 1], 0), _eq(rev[l - 1], 0)]
        parts += [_eq(rev[l - 1], view[j - l]) for l in range(1, j + 1)]
        cases.append(conj(*parts))
    return disj(*cases)


def _protocol_on(phi: ProtocolSpec, names: Sequence[str]) -> pb.Formula:
    return pb.substitute(phi.body, dict(zip(distance_vars(phi.k), names)))


def move_from_view_formula(phi: ProtocolSpec, view: Sequence[str], here: str, there: str,
                           fresh: Optional[Fresh] = None) -> pb.Formula:
    """Holds iff a robot at ``here`` whose clockwise view is ``view`` may step to ``there``."""
    fresh = fresh or Fresh()
    k = phi.k
    rev = [fresh() for _ in range(k)]
    cw = _protocol_on(phi, view)
    acw = _protocol_on(phi, rev)
    top = _sub(RING, 1)
    clockwise = conj(cw, disj(conj(_lt(here, top), _eq(there, _add(here, 1))),
                              conj(_eq(here, top), _eq(there, 0))))
    anticlockwise = conj(acw, disj(conj(_lt(0, here), _eq(there, _sub(here, 1))),
                                   conj(_eq(here, 0), _eq(there, top))))
    stay = conj(negate(cw), negate(acw), _eq(there, here))
    return _exists(rev, conj(view_sym_formula(k, view, rev),
                             disj(clockwise, anticlockwise, stay)))


def move_formula(phi: ProtocolSpec, i: int, k: int, fresh: Optional[Fresh] = None,
                 target: Optional[str] = None) -> pb.Formula:
    """Holds iff robot ``i`` may move from ``p_i`` to ``target`` (default ``p{i}_next``)."""
    if phi.k != k:
        raise ValueError(f"protocol for {phi.k} robots used with k={k}")
    fresh = fresh or Fresh()
    target = target or pos_next(i)
    view = [fresh() for _ in range(k)]
    return _exists(view, conj(config_view_formula(i, k, fresh, view),
                              move_from_view_formula(phi, view, pos(i), target, fresh)))


def post_formula(phi: ProtocolSpec, mode: Mode, fresh: Optional[Fresh] = None) -> pb.Formula:
    """One-step successor relation over ``y, p1..pk, p1_next..pk_next``.

    The semi-synchronous formula schedules at least one robot, so unlike the
    explicit relation it contains ``(p, p)`` only when some robot has
    nothing to do.
    """
    k = phi.k
    _check_k(k)
    fresh = fresh or Fresh()
    if mode is Mode.SYNC:
        return conj(*(move_formula(phi, i, k, fresh) for i in range(1, k + 1)))
    if mode is Mode.SEMISYNC:
        # each Move_j sits in a different disjunct per case, so sharing is capture-free
        moves = {i: move_formula(phi, i, k, fresh) for i in range(1, k + 1)}
        cases = []
        for i in range(1, k + 1):
            parts = [moves[i]]
            for j in range(1, k + 1):
                if j != i:
                    parts.append(disj(_eq(pos_next(j), pos(j)), moves[j]))
            cases.append(conj(*parts))
        return disj(*cases)
    raise ValueError("asynchronous successors are built by async_post_formula")


def async_post_formula(phi: ProtocolSpec, fresh: Optional[Fresh] = None) -> pb.Formula:
    """One asynchronous step; the moving robot decides from its stored view.

    Stored views of LOOK-phase robots are pinned to ``<y, 0, ..., 0>``.
    """
    k = phi.k
    _check_k(k)
    fresh = fresh or Fresh()
    cases = []
    for i in range(1, k + 1):
        frame = []
        for j in range(1, k + 1):
            if j == i:
                continue
            frame += [_eq(pos_next(j), pos(j)), _eq(phase_next(j), phase(j))]
            frame += [_eq(stored_next(j, l), stored(j, l)) for l in range(1, k + 1)]
        looked = [fresh() for _ in range(k)]
        look = conj(
            _eq(phase(i), 0), _eq(phase_next(i), 1), _eq(pos_next(i), pos(i)),
            _exists(looked, conj(
                config_view_formula(i, k, fresh, looked),
                *(_eq(stored_next(i, l), looked[l - 1]) for l in range(1, k + 1)))))
        move = conj(
            _eq(phase(i), 1), _eq(phase_next(i), 0),
            _eq(stored_next(i, 1), RING),
            *(_eq(stored_next(i, l), 0) for l in range(2, k + 1)),
            move_from_view_formula(phi, [stored(i, l) for l in range(1, k + 1)],
                                   pos(i), pos_next(i), fresh))
        cases.append(conj(*frame, disj(look, move)))
    return disj(*cases)


# ------------------------------------------------------------------ queries

class Purpose(enum.Enum):
    SAFETY = "safety"
    VALIDITY = "validity"
    UNIQSEQ = "uniqseq"


class Role(enum.Enum):
    RING_SIZE = "ring-size"
    POSITION = "position"
    PRIMED_POSITION = "primed-position"
    VIEW_DISTANCE = "view-distance"
    PHASE = "phase"
    STORED_VIEW = "stored-view"


@dataclass(frozen=True)
class VerificationQuery:
    """A prepared satisfiability question; sat means the property fails."""

    purpose: Purpose
    k: int
    body: pb.Formula
    free_var_roles: Dict[str, Role]
    protocol: Optional[ProtocolSpec] = field(default=None, compare=False)
    ring: Optional[pb.Formula] = field(default=None, compare=False)
    bad: Optional[pb.Formula] = field(default=None, compare=False)
    mode: Optional[Mode] = field(default=None, compare=False)

    def __post_init__(self):
        if set(self.body.fv) != set(self.free_var_roles):
            raise ValueError("query roles must cover exactly the free variables")
        if sum(r is Role.RING_SIZE for r in self.free_var_roles.values()) != 1:
            raise ValueError("a query has exactly one ring-size variable")


def _position_domain(k: int, names) -> list:
    return [c for v in names for c in (_le(0, v), _lt(v, RING))]


def _ordered_roles(k: int, **groups) -> Dict[str, Role]:
    roles = {RING: Role.RING_SIZE}
    for role, names in groups.items():
        for name in names:
            roles[name] = Role[role]
    return roles


def safety_query(phi: ProtocolSpec, ring: pb.Formula, bad: pb.Formula,
                 mode: Mode) -> VerificationQuery:
    """Some good configuration on an admissible ring has a bad one-step successor."""
    k = phi.k
    if mode is Mode.ASYNC:
        raise ValueError("asynchronous safety is only decidable via a uniq-seq certificate; "
                         "query the synchronous relation instead")
    if set(ring.fv) - {RING}:
        raise ValueError("the ring property may only mention y")
    xs = distance_vars(k)
    if set(bad.fv) - set(xs):
        raise ValueError(f"the bad set may only mention x1..x{k}")
    ps = [pos(i) for i in range(1, k + 1)]
    qs = [pos_next(i) for i in range(1, k + 1)]
    body = conj(
        _le(k, RING), *_position_domain(k, ps), *_position_domain(k, qs),
        ring,
        pb.nnf(pb.Not(pb.substitute(bad, dict(zip(xs, ps))))),
        pb.substitute(bad, dict(zip(xs, qs))),
        post_formula(phi, mode),
    )
    roles = _ordered_roles(k, POSITION=ps, PRIMED_POSITION=qs)
    return VerificationQuery(Purpose.SAFETY, k, body, roles, phi, ring, bad, mode)


def _view_domain(k: int, names) -> list:
    return [_lt(0, names[0]), _eq(_sum_terms(names), RING)] + [_le(0, v) for v in names[1:]]


def validity_query(phi: ProtocolSpec) -> VerificationQuery:
    """Some view and its distinct reversal both satisfy the protocol."""
    k = phi.k
    _check_k(k)
    ds = [dist(j) for j in range(1, k + 1)]
    rs = [dist_rev(j) for j in range(1, k + 1)]
    body = conj(
        _le(k, RING), *_view_domain(k, ds),
        view_sym_formula(k, ds, rs),
        disj(*(Cmp(Var(a), "!=", Var(b)) for a, b in zip(ds, rs))),
        _protocol_on(phi, ds), _protocol_on(phi, rs),
    )
    roles = _ordered_roles(k, VIEW_DISTANCE=ds + rs)
    return VerificationQuery(Purpose.VALIDITY, k, body, roles, phi)


def uniqseq_query(phi: ProtocolSpec) -> VerificationQuery:
    """Two distinct robots both leave their node from the same configuration."""
    k = phi.k
    _check_k(k)
    fresh = Fresh()
    ps = [pos(i) for i in range(1, k + 1)]
    qs = [pos_next(i) for i in range(1, k + 1)]
    pairs = []
    for i, j in itertools.combinations(range(1, k + 1), 2):
        pairs.append(conj(
            move_formula(phi, i, k, fresh), move_formula(phi, j, k, fresh),
            Cmp(Var(pos_next(i)), "!=", Var(pos(i))),
            Cmp(Var(pos_next(j)), "!=", Var(pos(j)))))
    # the domain conjuncts keep p_m_next in range even when no pair mentions m
    body = conj(_le(k, RING), *_position_domain(k, ps), *_position_domain(k, qs),
                disj(*pairs))
    roles = _ordered_roles(k, POSITION=ps, PRIMED_POSITION=qs)
    return VerificationQuery(Purpose.UNIQSEQ, k, body, roles, phi)
