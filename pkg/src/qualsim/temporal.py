"""Past/future temporal logic over qualitative arrays on bounded intervals.

Formulas are immutable trees.  :func:`evaluate` is the reference semantics
on ground traces and is what the constraint translations are tested against.
A trace is a sequence of stages; each stage maps an ordered object pair
``(a, b)`` to the name of the relation holding between them.

Concrete syntax (see docs/formats.md for the grammar)::

    F (Q[ship,buoy_a] = W & F Q[ship,buoy_b] = N)
    forall s in {B, C, L, S}: Q[P,s] != equal
    Q[nutrient,amoeba] = meet => Q[nutrient,amoeba] = overlap
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence, Union

FUTURE = "future"
PAST = "past"

Trace = Sequence[Mapping[tuple[str, str], str]]


class FormulaError(ValueError):
    pass


class ParseError(FormulaError):
    def __init__(self, message: str, text: str = "", pos: int = 0):
        self.pos = pos
        self.text = text
        super().__init__(f"{message} at position {pos}" + (f": {text[pos:pos + 20]!r}" if text else ""))


class PolarityError(FormulaError):
    pass


# -- AST ----------------------------------------------------------------------------


class Formula:
    __slots__ = ()

    def __and__(self, other: "Formula") -> "Formula":
        return And(self, other)

    def __or__(self, other: "Formula") -> "Formula":
        return Or(self, other)

    def __invert__(self) -> "Formula":
        return Not(self)

    def __str__(self) -> str:
        return show(self)


@dataclass(frozen=True, eq=True, repr=False)
class TrueF(Formula):
    def __repr__(self) -> str:
        return "TRUE"


TRUE = TrueF()
FALSE_F = None  # filled below


@dataclass(frozen=True)
class Atom(Formula):
    a: str
    b: str
    op: str  # "=" or "!="
    rel: str


@dataclass(frozen=True)
class Member(Formula):
    a: str
    b: str
    positive: bool
    rels: tuple[str, ...]


@dataclass(frozen=True)
class ObjEq(Formula):
    """Comparison of object names, only meaningful under quantifiers."""

    a: str
    b: str
    positive: bool


@dataclass(frozen=True)
class Not(Formula):
    f: Formula


@dataclass(frozen=True)
class And(Formula):
    l: Formula
    r: Formula


@dataclass(frozen=True)
class Or(Formula):
    l: Formula
    r: Formula


@dataclass(frozen=True)
class Implies(Formula):
    l: Formula
    r: Formula


@dataclass(frozen=True)
class Equiv(Formula):
    l: Formula
    r: Formula


@dataclass(frozen=True)
class IfThenElse(Formula):
    cond: Formula
    then: Formula
    other: Formula


@dataclass(frozen=True)
class Next(Formula):
    f: Formula


@dataclass(frozen=True)
class WeakNext(Formula):
    f: Formula


@dataclass(frozen=True)
class Always(Formula):
    f: Formula


@dataclass(frozen=True)
class Eventually(Formula):
    f: Formula


@dataclass(frozen=True)
class Until(Formula):
    l: Formula  # must hold before
    r: Formula  # must eventually hold


@dataclass(frozen=True)
class Release(Formula):
    l: Formula
    r: Formula


@dataclass(frozen=True)
class Prev(Formula):
    f: Formula


@dataclass(frozen=True)
class WeakPrev(Formula):
    f: Formula


@dataclass(frozen=True)
class AlwaysPast(Formula):
    f: Formula


@dataclass(frozen=True)
class EventuallyPast(Formula):
    f: Formula


@dataclass(frozen=True)
class Since(Formula):
    l: Formula
    r: Formula


@dataclass(frozen=True)
class Trigger(Formula):
    """Past dual of Since: ``not (not l S not r)``."""

    l: Formula
    r: Formula


@dataclass(frozen=True)
class ForAll(Formula):
    binders: tuple[str, ...]
    objects: tuple[str, ...]
    body: Formula


@dataclass(frozen=True)
class Exists(Formula):
    binders: tuple[str, ...]
    objects: tuple[str, ...]
    body: Formula


FALSE = Not(TRUE)

UNARY_FUTURE = (Next, WeakNext, Always, Eventually)
UNARY_PAST = (Prev, WeakPrev, AlwaysPast, EventuallyPast)
BINARY_FUTURE = (Until, Release)
BINARY_PAST = (Since, Trigger)
UNARY = UNARY_FUTURE + UNARY_PAST + (Not,)
BINARY = (And, Or, Implies, Equiv) + BINARY_FUTURE + BINARY_PAST

MIRROR = {
    Next: Prev, Prev: Next,
    WeakNext: WeakPrev, WeakPrev: WeakNext,
    Always: AlwaysPast, AlwaysPast: Always,
    Eventually: EventuallyPast, EventuallyPast: Eventually,
    Until: Since, Since: Until,
    Release: Trigger, Trigger: Release,
}

# negation dual of each temporal operator
DUAL = {
    Next: WeakNext, WeakNext: Next,
    Always: Eventually, Eventually: Always,
    Until: Release, Release: Until,
    Prev: WeakPrev, WeakPrev: Prev,
    AlwaysPast: EventuallyPast, EventuallyPast: AlwaysPast,
    Since: Trigger, Trigger: Since,
}


@dataclass(frozen=True)
class InterStateRule:
    """A rule linking a simulation's past to its future at every split point.

    ``body`` is a Boolean combination of past formulas, evaluated on
    ``[0..t0]``, and ``X psi`` leaves whose future formula ``psi`` is
    evaluated on ``[t0+1..end]``.  The usual shape ``phi -> X psi`` is built
    by :meth:`of`.
    """

    body: Formula
    label: str = ""

    @classmethod
    def of(cls, past: Formula, future: Formula, label: str = "") -> "InterStateRule":
        return cls(Implies(past, Next(future)), label)

    @property
    def past(self) -> Formula | None:
        if isinstance(self.body, Implies) and isinstance(self.body.r, Next) and not is_future(self.body.l):
            return self.body.l
        return None

    @property
    def future(self) -> Formula | None:
        return self.body.r.f if self.past is not None else None

    def __str__(self) -> str:
        if self.past is not None:
            return f"{show(self.past)} => {show(self.future)}"
        return show(self.body)


@dataclass(frozen=True)
class Interval:
    lo: int
    hi: int

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise FormulaError(f"empty interval [{self.lo}..{self.hi}]")


# -- structural queries --------------------------------------------------------------------


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (Not,) + UNARY_FUTURE + UNARY_PAST):
        return (f.f,)
    if isinstance(f, BINARY):
        return (f.l, f.r)
    if isinstance(f, IfThenElse):
        return (f.cond, f.then, f.other)
    if isinstance(f, (ForAll, Exists)):
        return (f.body,)
    return ()


@lru_cache(maxsize=None)
def _ops(f: Formula) -> frozenset[type]:
    out = {type(f)}
    for c in children(f):
        out |= _ops(c)
    return frozenset(out)


def is_past(f: Formula) -> bool:
    """Contains a past operator."""
    return bool(_ops(f) & set(UNARY_PAST + BINARY_PAST))


def is_future(f: Formula) -> bool:
    """Contains a future operator."""
    return bool(_ops(f) & set(UNARY_FUTURE + BINARY_FUTURE))


def check_direction(f: Formula, direction: str) -> None:
    if direction == FUTURE and is_past(f):
        raise PolarityError(f"past operator in future formula: {show(f)}")
    if direction == PAST and is_future(f):
        raise PolarityError(f"future operator in past formula: {show(f)}")
    if direction not in (FUTURE, PAST):
        raise FormulaError(f"unknown direction {direction!r}")


def depth(f: Formula) -> int:
    cs = children(f)
    return 1 + max((depth(c) for c in cs), default=0)


def atoms(f: Formula) -> list[Formula]:
    if isinstance(f, (Atom, Member, ObjEq)):
        return [f]
    return [a for c in children(f) for a in atoms(c)]


def object_names(f: Formula) -> set[str]:
    """Object names referenced by atoms (binders included)."""
    out: set[str] = set()
    for a in atoms(f):
        out |= {a.a, a.b}
    return out


def relation_names(f: Formula) -> set[str]:
    out: set[str] = set()
    for a in atoms(f):
        if isinstance(a, Atom):
            out.add(a.rel)
        elif isinstance(a, Member):
            out |= set(a.rels)
    return out


def rebuild(f: Formula, kids: Sequence[Formula]) -> Formula:
    if isinstance(f, (Not,) + UNARY_FUTURE + UNARY_PAST):
        return type(f)(kids[0])
    if isinstance(f, BINARY):
        return type(f)(kids[0], kids[1])
    if isinstance(f, IfThenElse):
        return IfThenElse(*kids)
    if isinstance(f, (ForAll, Exists)):
        return type(f)(f.binders, f.objects, kids[0])
    return f


def mirror(f: Formula) -> Formula:
    """Swap every future operator with its past counterpart and vice versa."""
    kids = [mirror(c) for c in children(f)]
    cls = MIRROR.get(type(f))
    if cls is not None:
        return cls(*kids)
    return rebuild(f, kids)


def conj(fs: Sequence[Formula]) -> Formula:
    if not fs:
        return TRUE
    out = fs[0]
    for f in fs[1:]:
        out = And(out, f)
    return out


def disj(fs: Sequence[Formula]) -> Formula:
    if not fs:
        return FALSE
    out = fs[0]
    for f in fs[1:]:
        out = Or(out, f)
    return out


# -- desugaring and normal forms ---------------------------------------------------------------


def substitute(f: Formula, env: Mapping[str, str]) -> Formula:
    if isinstance(f, Atom):
        return Atom(env.get(f.a, f.a), env.get(f.b, f.b), f.op, f.rel)
    if isinstance(f, Member):
        return Member(env.get(f.a, f.a), env.get(f.b, f.b), f.positive, f.rels)
    if isinstance(f, ObjEq):
        return ObjEq(env.get(f.a, f.a), env.get(f.b, f.b), f.positive)
    if isinstance(f, (ForAll, Exists)):
        inner = {k: v for k, v in env.items() if k not in f.binders}
        return type(f)(f.binders, f.objects, substitute(f.body, inner))
    return rebuild(f, [substitute(c, env) for c in children(f)])


def desugar(f: Formula, objects: Sequence[str] | None = None) -> Formula:
    """Expand membership, quantifiers, object comparisons and if-then-else.

    With ``objects`` given, every quantifier range and every atom must only
    mention those objects.
    """
    known = None if objects is None else set(objects)
    return _desugar(f, known)


def _desugar(f: Formula, known: set[str] | None) -> Formula:
    if isinstance(f, Atom):
        _check_names(f, known)
        return f
    if isinstance(f, Member):
        _check_names(f, known)
        if f.positive:
            return disj([Atom(f.a, f.b, "=", r) for r in f.rels])
        return conj([Atom(f.a, f.b, "!=", r) for r in f.rels])
    if isinstance(f, ObjEq):
        _check_names(f, known)
        return TRUE if (f.a == f.b) == f.positive else FALSE
    if isinstance(f, IfThenElse):
        c = _desugar(f.cond, known)
        return And(Implies(c, _desugar(f.then, known)), Implies(Not(c), _desugar(f.other, known)))
    if isinstance(f, (ForAll, Exists)):
        if known is not None:
            bad = [o for o in f.objects if o not in known]
            if bad:
                raise FormulaError(f"quantifier ranges over unknown objects {bad}")
        parts = []
        for combo in _assignments(len(f.binders), f.objects):
            env = dict(zip(f.binders, combo))
            parts.append(_desugar(substitute(f.body, env), known))
        return conj(parts) if isinstance(f, ForAll) else disj(parts)
    return rebuild(f, [_desugar(c, known) for c in children(f)])


def _assignments(n: int, objects: Sequence[str]) -> list[tuple[str, ...]]:
    out: list[tuple[str, ...]] = [()]
    for _ in range(n):
        out = [p + (o,) for p in out for o in objects]
    return out


def _check_names(f: Formula, known: set[str] | None) -> None:
    if known is None:
        return
    for name in (f.a, f.b):
        if name not in known:
            raise FormulaError(f"unbound name {name!r} in {show(f)}")


def nnf(f: Formula, direction: str | None = None) -> Formula:
    """Negation normal form: negation only on atoms (as a flipped operator)
    and on ``true``.  Requires a desugared, direction-pure formula."""
    if direction is not None:
        check_direction(f, direction)
    elif is_past(f) and is_future(f):
        raise PolarityError(f"mixed-direction formula: {show(f)}")
    return _nnf(f, True)


def _nnf(f: Formula, pos: bool) -> Formula:
    if isinstance(f, TrueF):
        return TRUE if pos else FALSE
    if isinstance(f, Atom):
        if pos:
            return f
        return Atom(f.a, f.b, "!=" if f.op == "=" else "=", f.rel)
    if isinstance(f, Not):
        return _nnf(f.f, not pos)
    if isinstance(f, And):
        return (And if pos else Or)(_nnf(f.l, pos), _nnf(f.r, pos))
    if isinstance(f, Or):
        return (Or if pos else And)(_nnf(f.l, pos), _nnf(f.r, pos))
    if isinstance(f, Implies):
        if pos:
            return Or(_nnf(f.l, False), _nnf(f.r, True))
        return And(_nnf(f.l, True), _nnf(f.r, False))
    if isinstance(f, Equiv):
        a, b, na, nb = _nnf(f.l, True), _nnf(f.r, True), _nnf(f.l, False), _nnf(f.r, False)
        if pos:
            return Or(And(a, b), And(na, nb))
        return Or(And(a, nb), And(na, b))
    cls = type(f)
    if cls in DUAL:
        out_cls = cls if pos else DUAL[cls]
        return out_cls(*[_nnf(c, pos) for c in children(f)])
    raise FormulaError(f"nnf needs a desugared formula, got {type(f).__name__}")


def is_nnf(f: Formula) -> bool:
    if isinstance(f, Not):
        return isinstance(f.f, TrueF)
    if isinstance(f, (Implies, Equiv, IfThenElse, Member, ObjEq, ForAll, Exists)):
        return False
    return all(is_nnf(c) for c in children(f))


# -- evaluation ----------------------------------------------------------------------------------


def evaluate(f: Formula, trace: Trace, iv: Interval | tuple[int, int], direction: str = FUTURE) -> bool:
    """Truth of ``f`` on interval ``iv`` of a ground trace."""
    s, t = (iv.lo, iv.hi) if isinstance(iv, Interval) else iv
    if s > t:
        raise FormulaError(f"empty interval [{s}..{t}]")
    if t >= len(trace) or s < 0:
        raise FormulaError(f"interval [{s}..{t}] outside trace of length {len(trace)}")
    return _ev(f, trace, s, t, direction == PAST)


def _atom_holds(f: Formula, stage: Mapping[tuple[str, str], str]) -> bool:
    rel = stage[(f.a, f.b)]
    if isinstance(f, Atom):
        return (rel == f.rel) == (f.op == "=")
    return (rel in f.rels) == f.positive


def _ev(f: Formula, tr: Trace, s: int, t: int, past: bool) -> bool:
    if isinstance(f, TrueF):
        return True
    if isinstance(f, (Atom, Member)):
        return _atom_holds(f, tr[t if past else s])
    if isinstance(f, ObjEq):
        return (f.a == f.b) == f.positive
    if isinstance(f, Not):
        return not _ev(f.f, tr, s, t, past)
    if isinstance(f, And):
        return _ev(f.l, tr, s, t, past) and _ev(f.r, tr, s, t, past)
    if isinstance(f, Or):
        return _ev(f.l, tr, s, t, past) or _ev(f.r, tr, s, t, past)
    if isinstance(f, Implies):
        return not _ev(f.l, tr, s, t, past) or _ev(f.r, tr, s, t, past)
    if isinstance(f, Equiv):
        return _ev(f.l, tr, s, t, past) == _ev(f.r, tr, s, t, past)
    if isinstance(f, IfThenElse):
        if _ev(f.cond, tr, s, t, past):
            return _ev(f.then, tr, s, t, past)
        return _ev(f.other, tr, s, t, past)
    # future operators: move the lower bound forward
    if isinstance(f, Next):
        return s + 1 <= t and _ev(f.f, tr, s + 1, t, False)
    if isinstance(f, WeakNext):
        return s + 1 > t or _ev(f.f, tr, s + 1, t, False)
    if isinstance(f, Always):
        return all(_ev(f.f, tr, r, t, False) for r in range(s, t + 1))
    if isinstance(f, Eventually):
        return any(_ev(f.f, tr, r, t, False) for r in range(s, t + 1))
    if isinstance(f, Until):
        return any(
            _ev(f.r, tr, r, t, False) and all(_ev(f.l, tr, u, t, False) for u in range(s, r))
            for r in range(s, t + 1)
        )
    if isinstance(f, Release):
        return all(
            _ev(f.r, tr, r, t, False) or any(_ev(f.l, tr, u, t, False) for u in range(s, r))
            for r in range(s, t + 1)
        )
    # past operators: move the upper bound backward
    if isinstance(f, Prev):
        return s <= t - 1 and _ev(f.f, tr, s, t - 1, True)
    if isinstance(f, WeakPrev):
        return s > t - 1 or _ev(f.f, tr, s, t - 1, True)
    if isinstance(f, AlwaysPast):
        return all(_ev(f.f, tr, s, r, True) for r in range(s, t + 1))
    if isinstance(f, EventuallyPast):
        return any(_ev(f.f, tr, s, r, True) for r in range(s, t + 1))
    if isinstance(f, Since):
        return any(
            _ev(f.r, tr, s, r, True) and all(_ev(f.l, tr, s, u, True) for u in range(r + 1, t + 1))
            for r in range(s, t + 1)
        )
    if isinstance(f, Trigger):
        return all(
            _ev(f.r, tr, s, r, True) or any(_ev(f.l, tr, s, u, True) for u in range(r + 1, t + 1))
            for r in range(s, t + 1)
        )
    raise FormulaError(f"cannot evaluate {type(f).__name__}; desugar quantifiers first")


# -- inter-state rules -------------------------------------------------------------------------------


def split_rule(body: Formula) -> Formula:
    """Validate a rule body: a Boolean skeleton whose leaves are past formulas
    or ``X psi`` with ``psi`` free of past operators.  Returns the body."""
    if isinstance(body, Next):
        if is_past(body.f):
            raise PolarityError(f"past operator on the future side: {show(body.f)}")
        return body
    if not is_future(body):
        return body
    if isinstance(body, (Not, And, Or, Implies, Equiv, IfThenElse)):
        for c in children(body):
            split_rule(c)
        return body
    if isinstance(body, (ForAll, Exists)):
        split_rule(body.body)
        return body
    raise PolarityError(f"future operator on the past side: {show(body)}")


def rule_leaves(body: Formula) -> tuple[list[Formula], list[Formula]]:
    """Past leaves and future formulas (the ``psi`` of each ``X psi`` leaf)."""
    past: list[Formula] = []
    fut: list[Formula] = []

    def walk(f: Formula) -> None:
        if isinstance(f, Next):
            fut.append(f.f)
        elif not is_future(f):
            past.append(f)
        else:
            for c in children(f):
                walk(c)

    walk(body)
    return past, fut


def evaluate_rule(rule: InterStateRule | Formula, trace: Trace, t0: int, end: int | None = None) -> bool:
    """Truth of a rule at split point ``t0``: past leaves on ``[0..t0]``,
    future leaves on ``[t0+1..end]``."""
    body = rule.body if isinstance(rule, InterStateRule) else rule
    end = len(trace) - 1 if end is None else end
    if not 0 <= t0 < end:
        raise FormulaError(f"split point {t0} leaves an empty future in [0..{end}]")

    def ev(f: Formula) -> bool:
        if isinstance(f, Next):
            return _ev(f.f, trace, t0 + 1, end, False)
        if not is_future(f):
            return _ev(f, trace, 0, t0, True)
        if isinstance(f, Not):
            return not ev(f.f)
        if isinstance(f, And):
            return ev(f.l) and ev(f.r)
        if isinstance(f, Or):
            return ev(f.l) or ev(f.r)
        if isinstance(f, Implies):
            return not ev(f.l) or ev(f.r)
        if isinstance(f, Equiv):
            return ev(f.l) == ev(f.r)
        if isinstance(f, IfThenElse):
            return ev(f.then) if ev(f.cond) else ev(f.other)
        raise PolarityError(f"bad rule node {type(f).__name__}")

    return ev(body)


# -- printing -------------------------------------------------------------------------------------

_PREFIX = {
    Not: "!", Next: "X", WeakNext: "WX", Always: "G", Eventually: "F",
    Prev: "Xp", WeakPrev: "WXp", AlwaysPast: "Gp", EventuallyPast: "Fp",
}
_INFIX = {And: "&", Or: "|", Implies: "->", Equiv: "<->", Until: "U", Release: "R", Since: "S", Trigger: "T"}


def show(f: Formula) -> str:
    if isinstance(f, TrueF):
        return "true"
    if f == FALSE:
        return "false"
    if isinstance(f, Atom):
        return f"Q[{f.a},{f.b}] {f.op} {f.rel}"
    if isinstance(f, Member):
        return f"Q[{f.a},{f.b}] {'in' if f.positive else 'notin'} {{{', '.join(f.rels)}}}"
    if isinstance(f, ObjEq):
        return f"{f.a} {'==' if f.positive else '!='} {f.b}"
    if type(f) in _PREFIX:
        return f"{_PREFIX[type(f)]} {_wrap(f.f)}"
    if type(f) in _INFIX:
        return f"{_wrap(f.l)} {_INFIX[type(f)]} {_wrap(f.r)}"
    if isinstance(f, IfThenElse):
        return f"ite({show(f.cond)}, {show(f.then)}, {show(f.other)})"
    if isinstance(f, (ForAll, Exists)):
        q = "forall" if isinstance(f, ForAll) else "exists"
        return f"({q} {', '.join(f.binders)} in {{{', '.join(f.objects)}}}: {show(f.body)})"
    raise FormulaError(f"cannot print {f!r}")


def _wrap(f: Formula) -> str:
    text = show(f)
    if isinstance(f, (TrueF, Atom, Member, ObjEq, IfThenElse, ForAll, Exists)) or f == FALSE:
        return f"({text})" if isinstance(f, (Atom, Member, ObjEq)) else text
    return f"({text})"


# -- parsing --------------------------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<sym><->|=>|->|!=|==|[=&|!()\[\]{},:])|(?P<id>[A-Za-z_][A-Za-z0-9_']*))"
)
_PREFIX_KW = {
    "X": Next, "WX": WeakNext, "G": Always, "F": Eventually,
    "Xp": Prev, "WXp": WeakPrev, "Gp": AlwaysPast, "Fp": EventuallyPast,
}
_BINARY_KW = {"U": Until, "R": Release, "S": Since, "T": Trigger}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    n = len(text)
    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError("unexpected character", text, pos)
        start = m.start("sym") if m.group("sym") else m.start("id")
        kind = "sym" if m.group("sym") else "id"
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("eof", "", n))
    return out


class _Parser:
    def __init__(self, text: str, sets: Mapping[str, Sequence[str]] | None):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.sets = dict(sets or {})

    def peek(self, k: int = 0) -> tuple[str, str, int]:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> tuple[str, str, int]:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, msg: str) -> ParseError:
        return ParseError(msg, self.text, self.peek()[2])

    def expect(self, value: str) -> None:
        kind, val, _ = self.peek()
        if val != value or kind == "eof":
            raise self.error(f"expected {value!r}")
        self.i += 1

    def ident(self) -> str:
        kind, val, _ = self.peek()
        if kind != "id":
            raise self.error("expected a name")
        self.i += 1
        return val

    def at(self, *values: str) -> bool:
        kind, val, _ = self.peek()
        return kind != "eof" and val in values

    # formula := equiv ; quantifiers are parsed as prefixes whose body extends right
    def formula(self) -> Formula:
        left = self.implication()
        while self.at("<->"):
            self.next()
            left = Equiv(left, self.implication())
        return left

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.at("->"):
            self.next()
            return Implies(left, self.implication())
        return left

    def disjunction(self) -> Formula:
        left = self.conjunction()
        while self.at("|"):
            self.next()
            left = Or(left, self.conjunction())
        return left

    def conjunction(self) -> Formula:
        left = self.binary_temporal()
        while self.at("&"):
            self.next()
            left = And(left, self.binary_temporal())
        return left

    def binary_temporal(self) -> Formula:
        left = self.unary()
        kind, val, _ = self.peek()
        if kind == "id" and val in _BINARY_KW:
            self.next()
            return _BINARY_KW[val](left, self.binary_temporal())
        return left

    def unary(self) -> Formula:
        kind, val, _ = self.peek()
        if kind == "sym" and val == "!":
            self.next()
            return Not(self.unary())
        if kind == "sym" and val == "(":
            self.next()
            f = self.formula()
            self.expect(")")
            return f
        if kind != "id":
            raise self.error("expected a formula")
        if val in ("forall", "exists"):
            return self.quantifier()
        if val in _PREFIX_KW and not self._starts_comparison():
            self.next()
            return _PREFIX_KW[val](self.unary())
        if val == "true":
            self.next()
            return TRUE
        if val == "false":
            self.next()
            return FALSE
        if val == "ite" and self.peek(1)[1] == "(":
            self.next()
            self.expect("(")
            c = self.formula()
            self.expect(",")
            a = self.formula()
            self.expect(",")
            b = self.formula()
            self.expect(")")
            return IfThenElse(c, a, b)
        if val == "Q" and self.peek(1)[1] == "[":
            return self.atom()
        return self.object_comparison()

    def _starts_comparison(self) -> bool:
        return self.peek(1)[1] in ("==", "!=")

    def atom(self) -> Formula:
        self.next()
        self.expect("[")
        a = self.ident()
        self.expect(",")
        b = self.ident()
        self.expect("]")
        kind, val, _ = self.peek()
        if val in ("=", "=="):
            self.next()
            return Atom(a, b, "=", self.ident())
        if val == "!=":
            self.next()
            return Atom(a, b, "!=", self.ident())
        if val in ("in", "notin"):
            self.next()
            return Member(a, b, val == "in", tuple(self.name_set()))
        raise self.error("expected '=', '!=', 'in' or 'notin'")

    def object_comparison(self) -> Formula:
        a = self.ident()
        kind, val, _ = self.peek()
        if val not in ("==", "!="):
            raise self.error("expected '==' or '!=' after object name")
        self.next()
        return ObjEq(a, self.ident(), val == "==")

    def name_set(self) -> list[str]:
        kind, val, _ = self.peek()
        if kind == "id":
            self.next()
            if val not in self.sets:
                raise ParseError(f"unknown set {val!r}", self.text, self.peek()[2])
            return list(self.sets[val])
        self.expect("{")
        names = []
        if not self.at("}"):
            names.append(self.ident())
            while self.at(","):
                self.next()
                names.append(self.ident())
        self.expect("}")
        return names

    def quantifier(self) -> Formula:
        q = self.next()[1]
        binders = [self.ident()]
        while self.at(","):
            self.next()
            binders.append(self.ident())
        kind, val, _ = self.peek()
        if val != "in":
            raise self.error("expected 'in'")
        self.next()
        objects = tuple(self.name_set())
        self.expect(":")
        body = self.formula()
        return (ForAll if q == "forall" else Exists)(tuple(binders), objects, body)


def parse(text: str, sets: Mapping[str, Sequence[str]] | None = None) -> Formula:
    """Parse a formula; ``sets`` names object sets usable after ``in``."""
    p = _Parser(text, sets)
    f = p.formula()
    if p.peek()[0] != "eof":
        raise p.error("unexpected trailing input")
    _check_binders(f, set())
    return f


def _check_binders(f: Formula, bound: set[str]) -> None:
    if isinstance(f, (ForAll, Exists)):
        _check_binders(f.body, bound | set(f.binders))
        return
    for c in children(f):
        _check_binders(c, bound)


def parse_rule(text: str, sets: Mapping[str, Sequence[str]] | None = None, label: str = "") -> InterStateRule:
    """``past => future``, ``invariant phi`` (meaning ``phi => G phi``), or a
    Boolean combination of past formulas and ``X psi`` leaves."""
    stripped = text.strip()
    if stripped.startswith("invariant ") or stripped.startswith("invariant("):
        phi = parse(stripped[len("invariant"):], sets)
        if is_past(phi) or is_future(phi):
            raise PolarityError("invariant formulas must be free of temporal operators")
        return InterStateRule.of(phi, Always(phi), label)
    toks = _tokenize(text)
    arrows = [pos for kind, val, pos in toks if kind == "sym" and val == "=>"]
    if len(arrows) > 1:
        raise ParseError("more than one '=>'", text, arrows[1])
    if arrows:
        cut = arrows[0]
        past = parse(text[:cut], sets)
        future = parse(text[cut + 2:], sets)
        if is_future(past):
            raise PolarityError(f"future operator on the past side: {show(past)}")
        if is_past(future):
            raise PolarityError(f"past operator on the future side: {show(future)}")
        return InterStateRule.of(past, future, label)
    body = parse(text, sets)
    split_rule(body)
    return InterStateRule(body, label)


Node = Union[Formula, InterStateRule]
