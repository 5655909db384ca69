"""Encoding versus oracle: exhaustive agreement checks on small rings.

Each check enumerates every concrete state for the requested ring sizes,
asks the Presburger evaluator for all successors the formula admits and
compares them with the explicit relation from ``semantics``.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

from . import presburger as pb
from .encoding import (Fresh, RING, async_post_formula, config_view_formula, dist, dist_rev,
                       move_formula, phase, phase_next, pos, pos_next, post_formula,
                       stored, stored_next, view_sym_formula)
from .ringmodel import (ProtocolSpec, distance_vars, placeholder_view,
                        protocol_valid_bounded, revert, view_clockwise_positions, views)
from .semantics import Mode, Phase, _async_succ, _options, _semisync_succ, _sync_succ

DEFAULT_CONFIG_BUDGET = 200_000


@dataclass(frozen=True)
class Discrepancy:
    """First state where formula and oracle disagree."""

    n: int
    state: tuple
    formula_only: tuple
    oracle_only: tuple

    def __str__(self) -> str:
        return (f"n={self.n} state={self.state}: formula-only {list(self.formula_only)}, "
                f"oracle-only {list(self.oracle_only)}")


@dataclass
class CrosscheckReport:
    relation: str
    checked: int = 0
    pairs: int = 0
    discrepancy: Optional[Discrepancy] = None
    sizes: List[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.discrepancy is None

    def summary(self) -> str:
        if self.ok:
            return (f"{self.relation}: agreement on {self.checked} states "
                    f"({self.pairs} successor pairs), n in {self.sizes}")
        return f"{self.relation}: DISCREPANCY {self.discrepancy}"


class BudgetError(ValueError):
    """The requested range holds more states than the budget allows."""


def _compare(report, n, state, got, exp) -> bool:
    report.checked += 1
    report.pairs += len(exp)
    if got != exp:
        report.discrepancy = Discrepancy(n, state, tuple(sorted(got - exp)),
                                         tuple(sorted(exp - got)))
        return False
    return True


def _budget(k: int, sizes: Sequence[int], budget: int, per_state: int = 1):
    total = sum(n ** k for n in sizes) * per_state
    if total > budget:
        raise BudgetError(f"{total} states exceed the budget of {budget}")


def expected_semisync_formula_post(phi: ProtocolSpec, n: int, p) -> set:
    """Oracle successors the semi-synchronous formula should produce.

    The formula schedules a nonempty subset, so the idle step ``p -> p`` is
    present only when some robot's move set is ``{0}``.
    """
    out = _semisync_succ(phi, n, p)
    if not any(_options(phi, n, p, i) == [p[i]] for i in range(len(p))):
        out.discard(tuple(p))
    return out


def check_post(phi: ProtocolSpec, mode: Mode, sizes: Iterable[int],
               budget: int = DEFAULT_CONFIG_BUDGET, formula: Optional[pb.Formula] = None,
               enumerators: Optional[dict] = None) -> CrosscheckReport:
    """SyncPost or SemiSyncPost against the oracle for every configuration.

    Successor tuples are compared inside the position domain ``[0, n-1]``,
    which the safety query enforces separately.
    """
    k = phi.k
    sizes = sorted(n for n in set(sizes) if n >= k)
    _budget(k, sizes, budget)
    f = formula if formula is not None else post_formula(phi, mode)
    targets = [pos_next(i) for i in range(1, k + 1)]
    report = CrosscheckReport(f"{mode.value}-post", sizes=sizes)
    for n in sizes:
        me = _enumerator(enumerators, targets, n)
        for p in itertools.product(range(n), repeat=k):
            val = {RING: n, **{pos(i + 1): p[i] for i in range(k)}}
            got = {q for q in me.models(f, val) if max(q) < n}
            if mode is Mode.SYNC:
                exp = _sync_succ(phi, n, p)
            else:
                exp = expected_semisync_formula_post(phi, n, p)
            if not _compare(report, n, p, got, exp):
                return report
    return report


def _enumerator(cache, targets, n):
    if cache is None:
        return pb.ModelEnumerator(targets, n)
    key = (tuple(targets), n)
    if key not in cache:
        cache[key] = pb.ModelEnumerator(targets, n)
    return cache[key]


def check_post_modes(phi: ProtocolSpec, sizes: Iterable[int],
                     budget: int = DEFAULT_CONFIG_BUDGET) -> List[CrosscheckReport]:
    """SYNC and SEMISYNC together; the shared Move subformulae are solved once."""
    cache: dict = {}
    sizes = list(sizes)
    return [check_post(phi, m, sizes, budget, enumerators=cache)
            for m in (Mode.SYNC, Mode.SEMISYNC)]


def async_states(k: int, n: int):
    """Every canonical asynchronous state ``(p, phases, stored views)``."""
    ph = placeholder_view(k, n)
    all_views = list(views(k, n))
    for p in itertools.product(range(n), repeat=k):
        for phases in itertools.product((Phase.LOOK, Phase.MOVE), repeat=k):
            choices = [all_views if s is Phase.MOVE else [ph] for s in phases]
            for st in itertools.product(*choices):
                yield p, phases, st


def _async_targets(k):
    out = [pos_next(i) for i in range(1, k + 1)]
    out += [phase_next(i) for i in range(1, k + 1)]
    out += [stored_next(i, j) for i in range(1, k + 1) for j in range(1, k + 1)]
    return out


def _async_valuation(k, n, p, phases, st):
    val = {RING: n}
    for i in range(k):
        val[pos(i + 1)] = p[i]
        val[phase(i + 1)] = int(phases[i])
        for j in range(k):
            val[stored(i + 1, j + 1)] = st[i][j]
    return val


def _async_decode(k, tup):
    p = tup[:k]
    phases = tuple(Phase(s) for s in tup[k:2 * k])
    flat = tup[2 * k:]
    st = tuple(tuple(flat[i * k:(i + 1) * k]) for i in range(k))
    return p, phases, st


def check_async(phi: ProtocolSpec, sizes: Iterable[int],
                budget: int = DEFAULT_CONFIG_BUDGET) -> CrosscheckReport:
    """AsyncPost against the oracle on every canonical asynchronous state."""
    k = phi.k
    sizes = sorted(n for n in set(sizes) if n >= k)
    total = sum(sum(1 for _ in async_states(k, n)) for n in sizes)
    if total > budget:
        raise BudgetError(f"{total} states exceed the budget of {budget}")
    f = async_post_formula(phi)
    targets = _async_targets(k)
    report = CrosscheckReport("async-post", sizes=sizes)
    for n in sizes:
        me = pb.ModelEnumerator(targets, n)
        for p, phases, st in async_states(k, n):
            got = set()
            for tup in me.models(f, _async_valuation(k, n, p, phases, st)):
                if max(tup[:k]) < n and max(tup[k:2 * k]) <= 1:
                    got.add(_async_decode(k, tup))
            exp = set(_async_succ(phi, n, p, phases, st))
            if not _compare(report, n, (p, tuple(int(s) for s in phases), st), got, exp):
                return report
    return report


def check_config_view(k: int, sizes: Iterable[int], i: int = 1, exact: Optional[bool] = None,
                      budget: int = DEFAULT_CONFIG_BUDGET) -> CrosscheckReport:
    """ConfigView_i admits exactly the clockwise view of robot ``i``."""
    sizes = sorted(n for n in set(sizes) if n >= k)
    _budget(k, sizes, budget)
    f = config_view_formula(i, k, exact=exact)
    targets = [dist(j) for j in range(1, k + 1)]
    report = CrosscheckReport(f"config-view[{i}]", sizes=sizes)
    for n in sizes:
        me = pb.ModelEnumerator(targets, n)
        for p in itertools.product(range(n), repeat=k):
            val = {RING: n, **{pos(m + 1): p[m] for m in range(k)}}
            got = set(me.models(f, val))
            if not _compare(report, n, p, got, {view_clockwise_positions(n, p, i - 1)}):
                return report
    return report


def check_view_sym(k: int, sizes: Iterable[int]) -> CrosscheckReport:
    """ViewSym relates each view to its reversal and nothing else."""
    sizes = sorted(n for n in set(sizes) if n >= k)
    f = view_sym_formula(k)
    targets = [dist_rev(j) for j in range(1, k + 1)]
    report = CrosscheckReport("view-sym", sizes=sizes)
    for n in sizes:
        me = pb.ModelEnumerator(targets, n)
        for v in views(k, n):
            got = set(me.models(f, dict(zip((dist(j) for j in range(1, k + 1)), v))))
            if not _compare(report, n, v, got, {revert(v)}):
                return report
    return report


def check_move(phi: ProtocolSpec, sizes: Iterable[int], i: int = 1,
               budget: int = DEFAULT_CONFIG_BUDGET) -> CrosscheckReport:
    """Move_i admits exactly the oracle's options for robot ``i``."""
    k = phi.k
    sizes = sorted(n for n in set(sizes) if n >= k)
    _budget(k, sizes, budget)
    f = move_formula(phi, i, k, Fresh())
    report = CrosscheckReport(f"move[{i}]", sizes=sizes)
    for n in sizes:
        me = pb.ModelEnumerator([pos_next(i)], n)
        for p in itertools.product(range(n), repeat=k):
            val = {RING: n, **{pos(m + 1): p[m] for m in range(k)}}
            got = {q for (q,) in me.models(f, val) if q < n}
            if not _compare(report, n, p, got, set(_options(phi, n, p, i - 1))):
                return report
    return report


# ------------------------------------------------------- random protocols

def _random_atom(rng: random.Random, k: int, cmax: int) -> pb.Formula:
    xs = [pb.Var(x) for x in distance_vars(k)]
    shape = rng.randrange(4)
    if shape == 0:
        left = rng.choice(xs)
        right = pb.Const(rng.randint(0, cmax))
    elif shape == 1:
        a, b = rng.sample(xs, 2)
        left, right = a, b
    elif shape == 2:
        a, b = rng.sample(xs, 2)
        left, right = pb.Add(a, pb.Const(rng.randint(0, cmax))), b
    else:
        m = rng.randint(2, 3)
        left = pb.ModConst(rng.choice(xs), m)
        right = pb.Const(rng.randrange(m))
    return pb.Cmp(left, rng.choice(pb.COMPARATORS), right)


def _random_qf(rng, k, cmax, depth):
    if depth == 0 or rng.random() < 0.35:
        atom = _random_atom(rng, k, cmax)
        return pb.Not(atom) if rng.random() < 0.15 else atom
    parts = tuple(_random_qf(rng, k, cmax, depth - 1) for _ in range(2))
    return pb.And(parts) if rng.random() < 0.6 else pb.Or(parts)


def random_valid_protocols(count: int, k: int, seed: int, n_max: int = 7,
                           depth: int = 2, max_tries: int = 100_000) -> List[ProtocolSpec]:
    """Rejection-sample protocols that meet the asymmetry condition up to ``n_max``.

    Constants stay at most ``n_max``; formulas that are constantly false on
    every view are skipped so each sample actually moves some robot.
    """
    rng = random.Random(seed)
    out = []
    seen = set()
    for _ in range(max_tries):
        if len(out) == count:
            break
        body = _random_qf(rng, k, n_max, depth)
        if body in seen:
            continue
        seen.add(body)
        phi = ProtocolSpec(k, body, f"random-k{k}-{len(out)}")
        if not protocol_valid_bounded(phi, n_max).valid:
            continue
        if not any(phi.holds(v) for n in range(k, n_max + 1) for v in views(k, n)):
            continue
        out.append(phi)
    if len(out) < count:
        raise RuntimeError(f"only {len(out)} valid protocols found in {max_tries} tries")
    return out

