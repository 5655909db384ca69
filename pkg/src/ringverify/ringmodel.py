"""Concrete ring objects: configurations, views, reversal and move decisions."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterator, Optional, Tuple

from . import presburger as pb

View = Tuple[int, ...]

CLOCKWISE = 1
ANTICLOCKWISE = -1
STAY = 0


def ring_mod(a: int, b: int) -> int:
    """The always-nonnegative remainder of ``a`` by ``b``."""
    if b < 1:
        raise ValueError("ring modulus must be positive")
    return a % b


@dataclass(frozen=True)
class RingInstance:
    k: int
    n: int

    def __post_init__(self):
        if self.k < 1 or self.n < 1:
            raise ValueError("robot count and ring size must be positive")
        if self.n < self.k:
            raise ValueError(f"ring of size {self.n} cannot host {self.k} robots")


@dataclass(frozen=True)
class Configuration:
    """Positions of ``k`` robots on a ring of size ``n``, numbered clockwise."""

    n: int
    positions: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple(self.positions))
        RingInstance(len(self.positions), self.n)
        for p in self.positions:
            if not 0 <= p < self.n:
                raise ValueError(f"position {p} outside ring of size {self.n}")

    @property
    def k(self) -> int:
        return len(self.positions)

    @property
    def ring(self) -> RingInstance:
        return RingInstance(self.k, self.n)

    def __str__(self) -> str:
        return f"n={self.n}; p=" + ",".join(map(str, self.positions))

    @classmethod
    def parse(cls, text: str) -> "Configuration":
        m = re.fullmatch(r"\s*n\s*=\s*(\d+)\s*;\s*p\s*=\s*([\d\s,]+)", text)
        if m is None:
            raise ValueError(f"malformed configuration {text!r}; expected 'n=<int>; p=<int>,...'")
        return cls(int(m.group(1)), tuple(int(x) for x in m.group(2).split(",")))


def is_view(v, n: Optional[int] = None) -> bool:
    if not v or v[0] == 0 or any(d < 0 for d in v):
        return False
    return n is None or sum(v) == n


def placeholder_view(k: int, n: int) -> View:
    return (n,) + (0,) * (k - 1)


def view_clockwise_positions(n: int, positions, i: int) -> View:
    """Clockwise view of robot ``i`` (0-based) given raw positions."""
    here = positions[i]
    # a co-located robot sits at distance n, not 0
    offs = sorted(((q - here) % n) or n for j, q in enumerate(positions) if j != i)
    out = []
    prev = 0
    for d in offs:
        out.append(d - prev)
        prev = d
    out.append(n - prev)
    return tuple(out)


def view_clockwise(c: Configuration, i: int) -> View:
    """``ViewR`` of robot ``i`` (1-based, as in the robot names R1..Rk)."""
    if not 1 <= i <= c.k:
        raise IndexError(f"robot index {i} out of range 1..{c.k}")
    return view_clockwise_positions(c.n, c.positions, i - 1)


def revert(v: View) -> View:
    """The view read in the anticlockwise direction."""
    j = max(idx for idx, d in enumerate(v) if d != 0)
    head = v[: j + 1]
    return tuple(reversed(head)) + v[j + 1:]


def views(k: int, n: int) -> Iterator[View]:
    """All views of ``k`` robots on a ring of size ``n``, in lexicographic order."""
    def rec(remaining, slots):
        if slots == 1:
            yield (remaining,)
            return
        for d in range(remaining + 1):
            for rest in rec(remaining - d, slots - 1):
                yield (d,) + rest

    for first in range(1, n + 1):
        for rest in rec(n - first, k - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class ProtocolSpec:
    """A QFP protocol over the view distances ``x1..xk``."""

    k: int
    body: pb.Formula
    name: str = ""
    _moves: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("protocols need at least two robots")
        if not pb.is_quantifier_free(self.body):
            raise ValueError("a protocol must be quantifier-free")
        allowed = set(distance_vars(self.k))
        extra = set(self.body.fv) - allowed
        if extra:
            raise ValueError(f"protocol mentions {sorted(extra)}; only x1..x{self.k} are allowed")

    @classmethod
    def parse(cls, text: str, k: int, name: str = "") -> "ProtocolSpec":
        return cls(k, pb.parse_formula(text), name)

    def holds(self, v: View) -> bool:
        return pb.evaluate(self.body, dict(zip(distance_vars(self.k), v)), 0)

    def __str__(self) -> str:
        return pb.to_text(self.body)


def distance_vars(k: int):
    return [f"x{j}" for j in range(1, k + 1)]


def move_set(phi: ProtocolSpec, v: View) -> frozenset:
    """Possible displacements of a robot whose clockwise view is ``v``."""
    if len(v) != phi.k:
        raise ValueError(f"view of arity {len(v)} for a {phi.k}-robot protocol")
    hit = phi._moves.get(v)
    if hit is not None:
        return hit
    rv = revert(v)
    sat = phi.holds(v)
    if v != rv:
        if sat:
            out = frozenset({CLOCKWISE})
        elif phi.holds(rv):
            out = frozenset({ANTICLOCKWISE})
        else:
            out = frozenset({STAY})
    else:
        out = frozenset({ANTICLOCKWISE, CLOCKWISE}) if sat else frozenset({STAY})
    phi._moves[v] = out
    return out


@dataclass(frozen=True)
class ValidityVerdict:
    valid: bool
    counterexample: Optional[View] = None


def protocol_valid_bounded(phi: ProtocolSpec, n_max: int) -> ValidityVerdict:
    """Search ring sizes ``k..n_max`` for a view violating the asymmetry condition."""
    for n in range(phi.k, n_max + 1):
        for v in views(phi.k, n):
            rv = revert(v)
            if v != rv and phi.holds(v) and phi.holds(rv):
                return ValidityVerdict(False, v)
    return ValidityVerdict(True)


def configurations(k: int, n: int) -> Iterator[Configuration]:
    for p in itertools.product(range(n), repeat=k):
        yield Configuration(n, p)
