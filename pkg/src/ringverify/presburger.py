"""Extended Presburger terms and formulae.

The AST is shared by every other module: protocols, ring properties, bad
sets and the generated successor encodings are all ``Formula`` values.

Besides parsing and printing, the module provides a *bounded* evaluator:
every existential variable ranges over ``[0, bound]``.  Callers working on a
ring of size ``n`` pass ``bound=n``, which covers every distance and position
variable the encodings introduce.  Evaluation is a small backtracking search
with candidate propagation rather than blind enumeration, so formulas with a
dozen nested existentials stay cheap.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, Mapping, Optional, Sequence, Union

__all__ = [
    "Var", "Const", "Add", "Sub", "ScalarMul", "ModConst",
    "Cmp", "And", "Or", "Not", "Exists", "Term", "Formula",
    "ParseError", "parse_formula", "parse_term", "free_vars", "substitute",
    "evaluate", "models", "to_smtlib", "to_text", "is_quantifier_free",
    "negate", "conj", "disj", "TRUE", "FALSE", "term",
]

INT64_MIN = -(2 ** 63)
INT64_MAX = 2 ** 63 - 1

COMPARATORS = ("=", "<=", ">=", "<", ">", "!=")
_NEGATED_OP = {"=": "!=", "!=": "=", "<": ">=", ">=": "<", ">": "<=", "<=": ">"}


def _set_fv(node, fv):
    object.__setattr__(node, "fv", fv)
    object.__setattr__(node, "_h", hash(tuple(getattr(node, f) for f in node._key)))


def _cached_hash(self):
    return self._h


# ---------------------------------------------------------------- terms

@dataclass(frozen=True, slots=True)
class Var:
    _key = ("name",)
    __hash__ = _cached_hash
    name: str
    fv: frozenset = field(init=False, compare=False, repr=False)
    _h: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _set_fv(self, frozenset((self.name,)))


@dataclass(frozen=True, slots=True)
class Const:
    _key = ("value",)
    __hash__ = _cached_hash
    value: int
    fv: frozenset = field(init=False, compare=False, repr=False)
    _h: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _set_fv(self, frozenset())


@dataclass(frozen=True, slots=True)
class Add:
    _key = ("left", "right")
    __hash__ = _cached_hash
    left: "Term"
    right: "Term"
    fv: frozenset = field(init=False, compare=False, repr=False)
    _h: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _set_fv(self, self.left.fv | self.right.fv)


@dataclass(frozen=True, slots=True)
class Sub:
    _key = ("left", "right")
    __hash__ = _cached_hash
    left: "Term"
    right: "Term"
    fv: frozenset = field(init=False, compare=False, repr=False)
    _h: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _set_fv(self, self.left.fv | self.right.fv)


@dataclass(frozen=True, slots=True)
class ScalarMul:
    _key = ("coefficient", "operand")
    __hash__ = _cached_hash
    coefficient: int
    operand: "Term"
    fv: frozenset = field(init=False, compare=False, repr=False)
    _h: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if self.coefficient < 0:
            raise ValueError("scalar coefficient must be nonnegative")
        _set_fv(self, self.operand.fv)


@dataclass(frozen=True, slots=True)
class ModConst:
    _key = ("operand", "modulus")
    __hash__ = _cached_hash
    operand: "Term"
    modulus: int
    fv: frozenset = field(init=False, compare=False, repr=False)
    _h: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if self.modulus < 1:
            raise ValueError("modulus must be at least 1")
        _set_fv(self, self.operand.fv)


Term = Union[Var, Const, Add, Sub, ScalarMul, ModConst]


# ------------------------------------------------------------- formulae

@dataclass(frozen=True, slots=True)
class Cmp:
    _key = ("left", "op", "right")
    __hash__ = _cached_hash
    left: Term
    op: str
    right: Term
    fv: frozenset = field(init=False, compare=False, repr=False)
    _h: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if self.op not in COMPARATORS:
            raise ValueError(f"unknown comparator {self.op!r}")
        _set_fv(self, self.left.fv | self.right.fv)


@dataclass(frozen=True, slots=True)
class And:
    _key = ("args",)
    __hash__ = _cached_hash
    args: tuple
    fv: frozenset = field(init=False, compare=False, repr=False)
    _h: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _set_fv(self, frozenset().union(*(a.fv for a in self.args)))


@dataclass(frozen=True, slots=True)
class Or:
    _key = ("args",)
    __hash__ = _cached_hash
    args: tuple
    fv: frozenset = field(init=False, compare=False, repr=False)
    _h: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _set_fv(self, frozenset().union(*(a.fv for a in self.args)))


@dataclass(frozen=True, slots=True)
class Not:
    _key = ("operand",)
    __hash__ = _cached_hash
    operand: "Formula"
    fv: frozenset = field(init=False, compare=False, repr=False)
    _h: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _set_fv(self, self.operand.fv)


@dataclass(frozen=True, slots=True)
class Exists:
    _key = ("var", "body")
    __hash__ = _cached_hash
    var: str
    body: "Formula"
    fv: frozenset = field(init=False, compare=False, repr=False)
    _h: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _set_fv(self, self.body.fv - {self.var})


Formula = Union[Cmp, And, Or, Not, Exists]

TRUE = And(())
FALSE = Or(())


def term(x) -> Term:
    """Coerce ints to ``Const`` and strings to ``Var``."""
    if isinstance(x, int):
        return Const(x)
    if isinstance(x, str):
        return Var(x)
    return x


def conj(*parts: Formula) -> Formula:
    flat = []
    for p in parts:
        if isinstance(p, And):
            flat.extend(p.args)
        else:
            flat.append(p)
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def disj(*parts: Formula) -> Formula:
    flat = []
    for p in parts:
        if isinstance(p, Or):
            flat.extend(p.args)
        else:
            flat.append(p)
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def free_vars(f) -> frozenset:
    return f.fv


def is_quantifier_free(f: Formula) -> bool:
    if isinstance(f, Cmp):
        return True
    if isinstance(f, Exists):
        return False
    if isinstance(f, Not):
        return is_quantifier_free(f.operand)
    return all(is_quantifier_free(a) for a in f.args)


def bound_vars(f: Formula) -> set:
    out: set = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Exists):
            out.add(g.var)
            stack.append(g.body)
        elif isinstance(g, Not):
            stack.append(g.operand)
        elif isinstance(g, (And, Or)):
            stack.extend(g.args)
    return out


def negate(f: Formula) -> Formula:
    """Negation pushed down to the comparison literals (QF formulae only)."""
    if isinstance(f, Cmp):
        return Cmp(f.left, _NEGATED_OP[f.op], f.right)
    if isinstance(f, Not):
        return nnf(f.operand)
    if isinstance(f, And):
        return Or(tuple(negate(a) for a in f.args))
    if isinstance(f, Or):
        return And(tuple(negate(a) for a in f.args))
    raise ValueError("cannot negate an existential formula")


def nnf(f: Formula) -> Formula:
    if isinstance(f, Cmp):
        return f
    if isinstance(f, Not):
        return negate(f.operand)
    if isinstance(f, And):
        return And(tuple(nnf(a) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(nnf(a) for a in f.args))
    return Exists(f.var, nnf(f.body))


# --------------------------------------------------------------- parser

class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>\#[^\n]*)"
    r"|(?P<nat>[0-9]+)|(?P<ident>[a-zA-Z][a-zA-Z0-9_]*)"
    r"|(?P<op><=|>=|!=|=|<|>|\+|-|\*|\(|\)|\.)"
)
_KEYWORDS = {"or", "and", "not", "exists", "mod"}


@dataclass
class _Tok:
    kind: str  # nat, ident, kw, op, eof
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            bad = re.match(r"[^\sa-zA-Z0-9()]+", text[pos:])
            sym = bad.group(0) if bad else text[pos]
            raise ParseError(f"unknown operator {sym!r}", line, col)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "nat":
            toks.append(_Tok("nat", m.group(), line, col))
        elif kind == "ident":
            word = m.group()
            toks.append(_Tok("kw" if word in _KEYWORDS else "ident", word, line, col))
        elif kind == "op":
            toks.append(_Tok("op", m.group(), line, col))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def _at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text == text

    def _expect(self, text: str) -> _Tok:
        if not self._at(text):
            self._fail(f"expected {text!r}")
        t = self.tok
        self.i += 1
        return t

    def _fail(self, msg: str):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise ParseError(f"{msg}, found {found}", t.line, t.col)

    def formula(self) -> Formula:
        parts = [self.conj()]
        while self._at("or"):
            self.i += 1
            parts.append(self.conj())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conj(self) -> Formula:
        parts = [self.unary()]
        while self._at("and"):
            self.i += 1
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unary(self) -> Formula:
        if self._at("not"):
            start = self.tok
            self.i += 1
            operand = self.unary()
            if not is_quantifier_free(operand):
                raise ParseError("negation applied over an existential formula",
                                 start.line, start.col)
            return Not(operand)
        if self._at("exists"):
            self.i += 1
            if self.tok.kind != "ident":
                self._fail("expected a variable name after 'exists'")
            name = self.tok.text
            self.i += 1
            self._expect(".")
            return Exists(name, self.unary())
        if self._at("("):
            # "(" opens either a parenthesised formula or a parenthesised term
            save = self.i
            try:
                return self.atom()
            except ParseError:
                self.i = save
            self._expect("(")
            inner = self.formula()
            self._expect(")")
            return inner
        return self.atom()

    def atom(self) -> Formula:
        left = self.term()
        t = self.tok
        if not (t.kind == "op" and t.text in COMPARATORS):
            self._fail("expected a comparison operator")
        self.i += 1
        return Cmp(left, t.text, self.term())

    def term(self) -> Term:
        acc = self.mterm()
        while self._at("+") or self._at("-"):
            op = self.tok.text
            self.i += 1
            rhs = self.mterm()
            acc = Add(acc, rhs) if op == "+" else Sub(acc, rhs)
        return acc

    def mterm(self) -> Term:
        base = self.factor()
        if self._at("mod"):
            self.i += 1
            if self.tok.kind != "nat":
                self._fail("expected a constant modulus after 'mod'")
            m = int(self.tok.text)
            if m < 1:
                self._fail("modulus must be at least 1")
            self.i += 1
            return ModConst(base, m)
        return base

    def factor(self) -> Term:
        t = self.tok
        if t.kind == "nat":
            self.i += 1
            if self._at("*"):
                self.i += 1
                return ScalarMul(int(t.text), self.factor())
            return Const(int(t.text))
        if t.kind == "ident":
            self.i += 1
            return Var(t.text)
        if self._at("("):
            self.i += 1
            inner = self.term()
            self._expect(")")
            return inner
        self._fail("expected a term")

    def done(self):
        if self.tok.kind != "eof":
            self._fail("unexpected trailing input")


def parse_formula(text: str) -> Formula:
    """Parse DSL text; bound variables come back renamed apart."""
    p = _Parser(text)
    f = p.formula()
    p.done()
    return _rename_apart(f)


def parse_term(text: str) -> Term:
    p = _Parser(text)
    t = p.term()
    p.done()
    return t


def _rename_apart(f: Formula) -> Formula:
    used = set(f.fv)

    def fresh(name):
        if name not in used:
            used.add(name)
            return name
        for j in itertools.count(1):
            cand = f"{name}_{j}"
            if cand not in used:
                used.add(cand)
                return cand

    def go(g, env):
        if isinstance(g, Cmp):
            if not env:
                return g
            return Cmp(_rename_term(g.left, env), g.op, _rename_term(g.right, env))
        if isinstance(g, Exists):
            new = fresh(g.var)
            return Exists(new, go(g.body, {**env, g.var: new}))
        if isinstance(g, Not):
            return Not(go(g.operand, env))
        return type(g)(tuple(go(a, env) for a in g.args))

    return go(f, {})


def _rename_term(t: Term, env: Mapping[str, str]) -> Term:
    return _subst_term(t, {k: Var(v) for k, v in env.items()})


# ------------------------------------------------------------- printing

def _term_text(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        return str(t.value)
    if isinstance(t, (Add, Sub)):
        op = "+" if isinstance(t, Add) else "-"
        rhs = _term_text(t.right)
        if isinstance(t.right, (Add, Sub)):
            rhs = f"({rhs})"
        return f"{_term_text(t.left)} {op} {rhs}"
    if isinstance(t, ScalarMul):
        return f"{t.coefficient}*{_factor_text(t.operand)}"
    return f"{_factor_text(t.operand)} mod {t.modulus}"


def _factor_text(t: Term) -> str:
    if isinstance(t, (Add, Sub, ModConst)):
        return f"({_term_text(t)})"
    return _term_text(t)


def to_text(f) -> str:
    """Pretty-print in the DSL syntax accepted by ``parse_formula``."""
    if isinstance(f, (Var, Const, Add, Sub, ScalarMul, ModConst)):
        return _term_text(f)
    if isinstance(f, Cmp):
        return f"{_term_text(f.left)} {f.op} {_term_text(f.right)}"
    if isinstance(f, Or):
        if not f.args:
            return "0 = 1"
        return " or ".join(_paren_if(a, Or) for a in f.args)
    if isinstance(f, And):
        if not f.args:
            return "0 = 0"
        return " and ".join(_paren_if(a, (And, Or)) for a in f.args)
    if isinstance(f, Not):
        return f"not {_paren_if(f.operand, (And, Or))}"
    return f"exists {f.var} . {_paren_if(f.body, (And, Or))}"


def _paren_if(f, kinds) -> str:
    text = to_text(f)
    return f"({text})" if isinstance(f, kinds) and f.args else text


# --------------------------------------------------------- substitution

def _subst_term(t: Term, m: Mapping[str, Term]) -> Term:
    if not (t.fv & m.keys()):
        return t
    if isinstance(t, Var):
        return m[t.name]
    if isinstance(t, Add):
        return Add(_subst_term(t.left, m), _subst_term(t.right, m))
    if isinstance(t, Sub):
        return Sub(_subst_term(t.left, m), _subst_term(t.right, m))
    if isinstance(t, ScalarMul):
        return ScalarMul(t.coefficient, _subst_term(t.operand, m))
    return ModConst(_subst_term(t.operand, m), t.modulus)


def substitute(f: Formula, m: Mapping[str, object]) -> Formula:
    """Simultaneous capture-avoiding substitution of free variables.

    Values of ``m`` may be terms, ints or variable names.
    """
    m = {k: term(v) for k, v in m.items()}
    clash = bound_vars(f) & m.keys()
    if clash:
        raise ValueError(f"cannot substitute bound variable(s) {sorted(clash)}")
    incoming = frozenset().union(*(t.fv for t in m.values())) if m else frozenset()
    return _subst(f, m, incoming, set(f.fv) | set(bound_vars(f)) | set(incoming))


def _subst(f, m, incoming, used):
    if not (f.fv & m.keys()):
        return f
    if isinstance(f, Cmp):
        return Cmp(_subst_term(f.left, m), f.op, _subst_term(f.right, m))
    if isinstance(f, Not):
        return Not(_subst(f.operand, m, incoming, used))
    if isinstance(f, Exists):
        if f.var in incoming:
            new = f.var
            j = 0
            while new in used:
                j += 1
                new = f"{f.var}_{j}"
            used.add(new)
            body = _subst(f.body, {f.var: Var(new)}, frozenset((new,)), used)
            return Exists(new, _subst(body, m, incoming, used))
        return Exists(f.var, _subst(f.body, m, incoming, used))
    return type(f)(tuple(_subst(a, m, incoming, used) for a in f.args))


# ----------------------------------------------------------- evaluation

def _checked(v: int) -> int:
    if v < INT64_MIN or v > INT64_MAX:
        raise OverflowError("term value exceeds 64-bit range")
    return v


def _fold(t: Term, val: Mapping[str, int]):
    """Partially evaluate a term: an int when fully known, else a residual term."""
    if isinstance(t, Const):
        return t.value
    if isinstance(t, Var):
        return val.get(t.name, t)
    if isinstance(t, (Add, Sub)):
        a = _fold(t.left, val)
        b = _fold(t.right, val)
        if type(a) is int and type(b) is int:
            return _checked(a + b if isinstance(t, Add) else a - b)
        return type(t)(_as_term(a), _as_term(b))
    if isinstance(t, ScalarMul):
        a = _fold(t.operand, val)
        if type(a) is int:
            return _checked(t.coefficient * a)
        return ScalarMul(t.coefficient, a)
    a = _fold(t.operand, val)
    if type(a) is int:
        return a % t.modulus
    return ModConst(a, t.modulus)


def _linear(t: Term, x: str):
    """``(c0, c1)`` with ``t == c0 + c1*x``, or None when ``x`` sits under a mod."""
    if isinstance(t, Const):
        return t.value, 0
    if isinstance(t, Var):
        return (0, 1) if t.name == x else None
    if isinstance(t, (Add, Sub)):
        a = _linear(t.left, x)
        b = _linear(t.right, x)
        if a is None or b is None:
            return None
        if isinstance(t, Add):
            return a[0] + b[0], a[1] + b[1]
        return a[0] - b[0], a[1] - b[1]
    if isinstance(t, ScalarMul):
        a = _linear(t.operand, x)
        return None if a is None else (t.coefficient * a[0], t.coefficient * a[1])
    if t.fv:
        return None
    return _fold(t, {}), 0


def _as_term(x) -> Term:
    return Const(x) if type(x) is int else x


def _compare(a: int, op: str, b: int) -> bool:
    if op == "=":
        return a == b
    if op == "<=":
        return a <= b
    if op == "<":
        return a < b
    if op == ">=":
        return a >= b
    if op == ">":
        return a > b
    return a != b


class _Engine:
    """Bounded search state: the bound and a memo for closed existentials."""

    def __init__(self, bound: int):
        if bound < 0:
            raise ValueError("quantifier bound must be nonnegative")
        self.bound = bound
        self.memo: Dict[Formula, bool] = {}
        self.atoms: Dict[tuple, frozenset] = {}

    def reduce(self, f, val):
        """Substitute ``val`` and fold; closed subformulae collapse to bools."""
        return self._reduce(f, val, {})

    def _reduce(self, f, val, cache):
        # shared subtrees are reduced once per call
        hit = cache.get(f)
        if hit is None:
            hit = cache[f] = self._reduce_node(f, val, cache)
        return hit

    def _reduce_node(self, f, val, cache):
        fv = f.fv
        if not fv:
            return self.truth(f)
        if fv.isdisjoint(val):
            return f
        if isinstance(f, Cmp):
            a = _fold(f.left, val)
            b = _fold(f.right, val)
            if type(a) is int and type(b) is int:
                return _compare(a, f.op, b)
            return Cmp(_as_term(a), f.op, _as_term(b))
        if isinstance(f, And):
            parts = []
            for a in f.args:
                r = self._reduce(a, val, cache)
                if r is False:
                    return False
                if r is True:
                    continue
                if isinstance(r, And):
                    parts.extend(r.args)
                else:
                    parts.append(r)
            if not parts:
                return True
            return parts[0] if len(parts) == 1 else And(tuple(parts))
        if isinstance(f, Or):
            parts = []
            for a in f.args:
                r = self._reduce(a, val, cache)
                if r is True:
                    return True
                if r is False:
                    continue
                if isinstance(r, Or):
                    parts.extend(r.args)
                else:
                    parts.append(r)
            if not parts:
                return False
            return parts[0] if len(parts) == 1 else Or(tuple(parts))
        if isinstance(f, Not):
            r = self._reduce(f.operand, val, cache)
            if type(r) is bool:
                return not r
            return Not(r)
        inner = {k: v for k, v in val.items() if k != f.var} if f.var in val else val
        body = self._reduce(f.body, inner, {} if inner is not val else cache)
        if type(body) is bool:
            return body
        if f.var not in body.fv:
            return body
        node = Exists(f.var, body)
        return self.truth(node) if not node.fv else node

    def truth(self, f) -> bool:
        """Truth value of a closed formula."""
        if isinstance(f, Cmp):
            return _compare(_fold(f.left, {}), f.op, _fold(f.right, {}))
        if isinstance(f, And):
            return all(self.truth(a) for a in f.args)
        if isinstance(f, Or):
            return any(self.truth(a) for a in f.args)
        if isinstance(f, Not):
            return not self.truth(f.operand)
        hit = self.memo.get(f)
        if hit is None:
            block, matrix = _prenex_block(f)
            hit = self.search(matrix)
            self.memo[f] = hit
        return hit

    def search(self, g) -> bool:
        if type(g) is bool:
            return g
        if not g.fv:
            return self.truth(g)
        x, cands = self.pick(g, g.fv)
        for c in cands:
            r = self.reduce(g, {x: c})
            if r is True or (r is not False and self.search(r)):
                return True
        return False

    def pick(self, g, allowed):
        """Choose the branching variable with the fewest candidate values."""
        conjuncts = g.args if isinstance(g, And) else (g,)
        for a in conjuncts:
            if isinstance(a, Cmp) and a.op == "=" and len(a.fv) == 1:
                (x,) = a.fv
                if x in allowed:
                    return x, sorted(self.brute(a, x))
        table = self.candidates(g)
        best, best_set = None, None
        for x in sorted(allowed & g.fv):
            s = table.get(x)
            if s is None:
                if best is None:
                    best = x
                continue
            if best_set is None or len(s) < len(best_set):
                best, best_set = x, s
                if len(s) <= 1:
                    break
        if best_set is None:
            return best, range(self.bound + 1)
        return best, sorted(best_set)

    def brute(self, f, x) -> set:
        key = (f, x)
        hit = self.atoms.get(key)
        if hit is None:
            if isinstance(f, Cmp):
                lin = _linear(Sub(f.left, f.right), x)
                if lin is not None and abs(lin[0]) + abs(lin[1]) * self.bound <= INT64_MAX:
                    c0, c1, op = lin[0], lin[1], f.op
                    hit = frozenset(c for c in range(self.bound + 1) if _compare(c0 + c1 * c, op, 0))
            elif isinstance(f, Or):
                hit = frozenset().union(*(self.brute(a, x) for a in f.args))
            elif isinstance(f, And):
                hit = frozenset(range(self.bound + 1))
                for a in f.args:
                    hit &= self.brute(a, x)
            elif isinstance(f, Not):
                hit = frozenset(range(self.bound + 1)) - self.brute(f.operand, x)
            if hit is None:
                hit = frozenset(c for c in range(self.bound + 1) if self.reduce(f, {x: c}) is True)
            self.atoms[key] = hit
        return hit

    def candidates(self, f) -> Dict[str, set]:
        """Per-variable supersets of the values that can satisfy ``f``.

        Missing entries mean "no information"; the result is sound for the
        whole search range.
        """
        if isinstance(f, Exists):
            sub = self.candidates(f.body)
            sub.pop(f.var, None)
            return sub
        fv = f.fv
        if len(fv) == 1 and (isinstance(f, (Cmp, Not)) or is_quantifier_free(f)):
            (x,) = fv
            return {x: self.brute(f, x)}
        if isinstance(f, And):
            out: Dict[str, set] = {}
            for a in f.args:
                for x, s in self.candidates(a).items():
                    cur = out.get(x)
                    out[x] = s if cur is None else cur & s
            return out
        if isinstance(f, Or):
            out = None
            for a in f.args:
                sub = self.candidates(a)
                if out is None:
                    out = dict(sub)
                else:
                    out = {x: out[x] | s for x, s in sub.items() if x in out}
                if not out:
                    return {}
            return out or {}
        return {}


def _prenex_block(f: Formula):
    """Pull the existentials reachable through conjunctions into one block."""
    block = []
    parts = []
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Exists):
            block.append(g.var)
            stack.append(g.body)
        elif isinstance(g, And):
            stack.extend(reversed(g.args))
        else:
            parts.append(g)
    return block, (parts[0] if len(parts) == 1 else And(tuple(parts)))


def evaluate(f: Formula, valuation: Mapping[str, int], quantifier_bound: int) -> bool:
    """Truth of ``f`` under ``valuation``; existentials range over ``[0, quantifier_bound]``."""
    missing = f.fv - valuation.keys()
    if missing:
        raise KeyError(f"unbound free variable(s): {sorted(missing)}")
    for k, v in valuation.items():
        if v < 0:
            raise ValueError(f"valuation of {k} must be a natural number")
    eng = _Engine(quantifier_bound)
    r = eng.reduce(f, valuation)
    return r if type(r) is bool else eng.truth(r)


def models(f: Formula, valuation: Mapping[str, int], targets: Sequence[str],
           quantifier_bound: int) -> Iterator[tuple]:
    """Enumerate values of ``targets`` (each in ``[0, quantifier_bound]``) making ``f`` true.

    Every other free variable must be bound by ``valuation``.  Tuples follow
    the order of ``targets``; each satisfying tuple is produced exactly once,
    in lexicographic order.
    """
    return ModelEnumerator(targets, quantifier_bound).models(f, valuation)


class ModelEnumerator:
    """Repeated ``models`` queries sharing one bound, one target list and one cache.

    Useful when the same formula is enumerated under many valuations:
    residual subformulae that recur are solved once.
    """

    def __init__(self, targets: Sequence[str], quantifier_bound: int):
        self.targets = list(targets)
        if len(set(self.targets)) != len(self.targets):
            raise ValueError("duplicate target variable")
        self.bound = quantifier_bound
        self._eng = _Engine(quantifier_bound)
        self._proj = _Projector(self._eng, frozenset(self.targets))

    def models(self, f: Formula, valuation: Mapping[str, int]) -> Iterator[tuple]:
        targets = self.targets
        missing = f.fv - valuation.keys() - set(targets)
        if missing:
            raise KeyError(f"unbound free variable(s): {sorted(missing)}")
        for k, v in valuation.items():
            if v < 0:
                raise ValueError(f"valuation of {k} must be a natural number")
        val = {k: v for k, v in valuation.items() if k not in targets}
        rows = self._proj.rows(self._eng.reduce(f, val))
        order = sorted(targets)
        full = range(self.bound + 1)
        out = set()
        for row in rows:
            assigned = dict(row)
            free = [t for t in order if t not in assigned]
            for combo in itertools.product(full, repeat=len(free)):
                done = {**assigned, **dict(zip(free, combo))}
                out.add(tuple(done[t] for t in targets))
        return iter(sorted(out))


class _Projector:
    """Satisfying assignments of a formula projected onto target variables.

    Rows are frozensets of ``(var, value)`` pairs; a target missing from a
    row is unconstrained.  Disjunctions are split, conjunctions are split
    into groups that share no unassigned variable, and results are memoized.
    """

    def __init__(self, eng: _Engine, targets: frozenset):
        self.eng = eng
        self.targets = targets
        self.memo: Dict[Formula, frozenset] = {}

    def rows(self, g) -> frozenset:
        if g is True:
            return frozenset((frozenset(),))
        if g is False:
            return frozenset()
        hit = self.memo.get(g)
        if hit is None:
            hit = self.memo[g] = self._rows(g)
        return hit

    def _rows(self, g) -> frozenset:
        if not (g.fv & self.targets):
            return self.rows(self.eng.search(g))
        if isinstance(g, Exists):
            # bound names are distinct from free ones, so the block can be opened
            return self.rows(_prenex_block(g)[1])
        if isinstance(g, Or):
            out = set()
            for a in g.args:
                out |= self.rows(a)
            return frozenset(out)
        if isinstance(g, And):
            groups = _components(g.args)
            if len(groups) > 1:
                acc = [frozenset()]
                for grp in groups:
                    sub = self.rows(grp[0] if len(grp) == 1 else And(tuple(grp)))
                    if not sub:
                        return frozenset()
                    acc = [a | b for a in acc for b in sub]
                return frozenset(acc)
        x, cands = self.eng.pick(g, g.fv)
        out = set()
        for c in cands:
            r = self.eng.reduce(g, {x: c})
            for row in self.rows(r):
                out.add(row | {(x, c)} if x in self.targets else row)
        return frozenset(out)


def _components(parts) -> list:
    """Group conjuncts connected through shared free variables."""
    parent = list(range(len(parts)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    owner: Dict[str, int] = {}
    for idx, a in enumerate(parts):
        for v in a.fv:
            if v in owner:
                parent[find(idx)] = find(owner[v])
            else:
                owner[v] = idx
    groups: Dict[int, list] = {}
    for idx, a in enumerate(parts):
        groups.setdefault(find(idx), []).append(a)
    return list(groups.values())


# --------------------------------------------------------------- SMT-LIB

def _smt_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        return str(t.value) if t.value >= 0 else f"(- {-t.value})"
    if isinstance(t, Add):
        return f"(+ {_smt_term(t.left)} {_smt_term(t.right)})"
    if isinstance(t, Sub):
        return f"(- {_smt_term(t.left)} {_smt_term(t.right)})"
    if isinstance(t, ScalarMul):
        return f"(* {t.coefficient} {_smt_term(t.operand)})"
    return f"(mod {_smt_term(t.operand)} {t.modulus})"


def _smt(f: Formula) -> str:
    if isinstance(f, Cmp):
        a, b = _smt_term(f.left), _smt_term(f.right)
        if f.op == "!=":
            return f"(not (= {a} {b}))"
        return f"({f.op} {a} {b})"
    if isinstance(f, And):
        if not f.args:
            return "true"
        return "(and " + " ".join(_smt(a) for a in f.args) + ")"
    if isinstance(f, Or):
        if not f.args:
            return "false"
        return "(or " + " ".join(_smt(a) for a in f.args) + ")"
    if isinstance(f, Not):
        return f"(not {_smt(f.operand)})"
    return f"(exists (({f.var} Int)) (and (>= {f.var} 0) {_smt(f.body)}))"


def to_smtlib(f: Formula, nonneg_vars: Iterable[str] = ()) -> str:
    """Serialize as an SMT-LIB 2 boolean term over ``Int``.

    Presburger variables are naturals, so each bound variable and each name
    in ``nonneg_vars`` gets a conjoined ``>= 0`` guard.
    """
    body = _smt(f)
    guards = [f"(>= {v} 0)" for v in sorted(nonneg_vars)]
    if not guards:
        return body
    return "(and " + " ".join(guards) + " " + body + ")"
