"""Compile temporal formulas into constraints on staged relation variables.

Two translations are provided:

* ``unfold``: every temporal operator is expanded over constant time points
  into a Boolean circuit whose leaves are reified membership constraints
  on ``Q[A,B,t]``.  The truth variable is fully reified.
* ``array``: eventualities introduce time variables and atoms at variable
  times become element constraints over the family ``Q[A,B,0..H-1]``.  This
  needs negation normal form and gives a half-reified truth variable
  (``b -> formula``), which is all a positive occurrence requires.

Past formulas are translated as their mirror image over time-reversed
stages, so only the future direction is implemented.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence, Union

from . import csp
from .calculus import Calculus
from .csp import (
    ArrayElement,
    BoolClause,
    Constraint,
    Domain,
    IntCompare,
    ReifiedMember,
    Store,
    VarId,
)
from .temporal import (
    FUTURE,
    PAST,
    Always,
    And,
    Atom,
    Equiv,
    Eventually,
    Formula,
    FormulaError,
    IfThenElse,
    Implies,
    InterStateRule,
    Member,
    Next,
    Not,
    Or,
    Release,
    TrueF,
    Until,
    WeakNext,
    check_direction,
    desugar,
    is_future,
    is_nnf,
    mirror,
    nnf,
)

UNFOLD = "unfold"
ARRAY = "array"


class TranslationError(FormulaError):
    pass


class TimeVar(NamedTuple):
    """A time index held in an integer variable."""

    var: VarId


Time = Union[int, TimeVar]


@dataclass
class StageSpace:
    """The relation variables ``Q[A,B,t]`` of a simulation with ``horizon`` stages."""

    objects: tuple[str, ...]
    calculus: Calculus
    horizon: int
    q: dict[tuple[str, str, int], VarId] = field(default_factory=dict)

    @classmethod
    def create(cls, store: Store, objects: Sequence[str], calculus: Calculus, horizon: int) -> "StageSpace":
        """Unconstrained relation variables for every ordered pair and stage."""
        space = cls(tuple(objects), calculus, 0)
        for _ in range(horizon):
            space.add_stage(store)
        return space

    def add_stage(self, store: Store, domains: dict[tuple[str, str], int] | None = None) -> int:
        t = self.horizon
        for a in self.objects:
            for b in self.objects:
                mask = self.calculus.full
                if a == b:
                    mask = 1 << self.calculus.identity
                elif domains and (a, b) in domains:
                    mask = domains[(a, b)]
                dom = Domain(csp.Sort.RELATION, mask, self.calculus)
                self.q[(a, b, t)] = store.new_var(dom, f"Q[{a},{b},{t}]")
        self.horizon = t + 1
        return t

    def var(self, a: str, b: str, t: int) -> VarId:
        try:
            return self.q[(a, b, t)]
        except KeyError:
            raise TranslationError(f"no stage variable Q[{a},{b},{t}] (horizon {self.horizon})") from None

    def family(self, a: str, b: str) -> list[VarId]:
        return [self.var(a, b, t) for t in range(self.horizon)]

    def relation_vars(self) -> list[VarId]:
        return [self.q[(a, b, t)] for t in range(self.horizon) for a in self.objects for b in self.objects]

    def trace(self, values: Sequence[int]) -> list[dict[tuple[str, str], str]]:
        """Ground stages from a full assignment of the store."""
        names = self.calculus.relation_names
        return [
            {(a, b): names[values[self.q[(a, b, t)]]] for a in self.objects for b in self.objects}
            for t in range(self.horizon)
        ]


@dataclass
class TranslationResult:
    truth: VarId
    posted: list[Constraint]
    fresh: list[VarId]


class Translator:
    """Translates formulas into one store.  ``memo`` shares the translation
    of identical (sub-formula, interval) pairs."""

    def __init__(self, store: Store, space: StageSpace, memo: bool = True):
        self.store = store
        self.space = space
        self.memo = memo
        self._cache: dict[tuple, VarId] = {}

    # -- public entry points ---------------------------------------------------

    def unfold(self, phi: Formula, direction: str, s: int, t: int) -> VarId:
        """Fully reified truth variable of ``phi`` on constant ``[s..t]``."""
        check_direction(phi, direction)
        self._check_interval(s, t)
        if direction == PAST:
            h = self.space.horizon - 1
            return self._unf(mirror(phi), h - t, h - s, True)
        return self._unf(phi, s, t, False)

    def array(self, phi: Formula, direction: str, s: Time, t: Time) -> VarId:
        """Half-reified truth variable (``b -> phi``) of an NNF formula."""
        check_direction(phi, direction)
        if not is_nnf(phi):
            raise TranslationError("array translation needs a formula in negation normal form")
        if isinstance(s, int) and isinstance(t, int):
            self._check_interval(s, t)
        if direction == PAST:
            if not (isinstance(s, int) and isinstance(t, int)):
                raise TranslationError("past array translation needs constant bounds")
            h = self.space.horizon - 1
            return self._arr(mirror(phi), h - t, h - s, True)
        return self._arr(phi, s, t, False)

    def truth(self, phi: Formula, direction: str, s: int, t: int, mode: str) -> VarId:
        """Truth variable in the given mode; array mode normalises first."""
        if mode == UNFOLD:
            return self.unfold(phi, direction, s, t)
        if mode == ARRAY:
            return self.array(nnf(phi, direction), direction, s, t)
        raise TranslationError(f"unknown translation mode {mode!r}")

    def require(self, phi: Formula, direction: str, s: int, t: int, mode: str = UNFOLD) -> VarId:
        """Post ``phi`` on ``[s..t]`` as a hard constraint."""
        b = self.truth(phi, direction, s, t, mode)
        self.store.post(BoolClause([(b, True)]))
        return b

    def _check_interval(self, s: int, t: int) -> None:
        if not 0 <= s <= t < self.space.horizon:
            raise TranslationError(f"interval [{s}..{t}] outside horizon {self.space.horizon}")

    # -- shared helpers ------------------------------------------------------------

    def _q(self, a: str, b: str, pos: int, rev: bool) -> VarId:
        t = self.space.horizon - 1 - pos if rev else pos
        return self.space.var(a, b, t)

    def _family(self, a: str, b: str, rev: bool) -> list[VarId]:
        fam = self.space.family(a, b)
        return fam[::-1] if rev else fam

    def _atom_mask(self, f: Formula) -> int:
        calc = self.space.calculus
        if isinstance(f, Atom):
            m = 1 << calc.index(f.rel)
            return m if f.op == "=" else calc.full & ~m
        if isinstance(f, Member):
            m = calc.mask(f.rels)
            return m if f.positive else calc.full & ~m
        raise TranslationError(f"not an atom: {f!r}")

    def _const(self, value: bool) -> VarId:
        return self.store.const_bool(value)

    def _bool(self) -> VarId:
        return self.store.new_bool()

    def _gate(self, kind: str, inputs: Sequence[VarId], half: bool) -> VarId:
        out = self._bool()
        lits = [(v, True) for v in inputs]
        if kind == "AND":
            csp.bool_and(self.store, lits, (out, True), half=half)
        else:
            csp.bool_or(self.store, lits, (out, True), half=half)
        return out

    # -- unfolding over constant intervals -------------------------------------------

    def _unf(self, f: Formula, s: int, t: int, rev: bool) -> VarId:
        key = ("u", f, s, t, rev)
        if self.memo:
            hit = self._cache.get(key)
            if hit is not None:
                return hit
        b = self._unf_node(f, s, t, rev)
        if self.memo:
            self._cache[key] = b
        return b

    def _unf_node(self, f: Formula, s: int, t: int, rev: bool) -> VarId:
        store = self.store
        if isinstance(f, TrueF):
            return self._const(True)
        if isinstance(f, (Atom, Member)):
            b = self._bool()
            store.post(ReifiedMember(self._q(f.a, f.b, s, rev), self._atom_mask(f), b))
            return b
        if isinstance(f, Not):
            inner = self._unf(f.f, s, t, rev)
            b = self._bool()
            csp.bool_gate(store, "NOT", [inner], b)
            return b
        if isinstance(f, (And, Or)):
            parts = [self._unf(g, s, t, rev) for g in _flatten(f)]
            return self._gate("AND" if isinstance(f, And) else "OR", parts, half=False)
        if isinstance(f, (Implies, Equiv)):
            l, r = self._unf(f.l, s, t, rev), self._unf(f.r, s, t, rev)
            b = self._bool()
            csp.bool_gate(store, "IMPLIES" if isinstance(f, Implies) else "EQUIV", [l, r], b)
            return b
        if isinstance(f, IfThenElse):
            raise TranslationError("desugar if-then-else before translation")
        if isinstance(f, Next):
            return self._unf(f.f, s + 1, t, rev) if s + 1 <= t else self._const(False)
        if isinstance(f, WeakNext):
            return self._unf(f.f, s + 1, t, rev) if s + 1 <= t else self._const(True)
        if isinstance(f, (Always, Eventually)):
            parts = [self._unf(f.f, r, t, rev) for r in range(s, t + 1)]
            if len(parts) == 1:
                return parts[0]
            return self._gate("AND" if isinstance(f, Always) else "OR", parts, half=False)
        if isinstance(f, Until):
            # chi U phi  ==  phi | (chi & X (chi U phi))
            now = self._unf(f.r, s, t, rev)
            if s == t:
                return now
            keep = self._gate("AND", [self._unf(f.l, s, t, rev), self._unf(f, s + 1, t, rev)], half=False)
            return self._gate("OR", [now, keep], half=False)
        if isinstance(f, Release):
            # chi R phi  ==  phi & (chi | WX (chi R phi))
            now = self._unf(f.r, s, t, rev)
            if s == t:
                return now
            stop = self._gate("OR", [self._unf(f.l, s, t, rev), self._unf(f, s + 1, t, rev)], half=False)
            return self._gate("AND", [now, stop], half=False)
        raise TranslationError(f"cannot unfold {type(f).__name__}; desugar first")

    # -- array translation ------------------------------------------------------------------

    def _lo(self, x: Time) -> int:
        return x if isinstance(x, int) else csp._min(self.store.dom[x.var])

    def _hi(self, x: Time) -> int:
        return x if isinstance(x, int) else csp._max(self.store.dom[x.var])

    def _time_var(self, lo: int, hi: int, name: str) -> TimeVar:
        v = self.store.new_var(Domain.ints(lo, hi), f"{name}{len(self.store)}")
        return TimeVar(v)

    def _compare(self, op: str, x: Time, y: Time, k: int = 0, b: VarId | None = None, half: bool = False) -> None:
        """Post ``x op y + k`` between time terms, folding constants."""
        xv = None if isinstance(x, int) else x.var
        yv = None if isinstance(y, int) else y.var
        if isinstance(x, int):
            # c op y + k  <=>  0 op y + (k - c)
            k -= x
        if isinstance(y, int):
            k += y
        if xv is None and yv is None:
            holds = (0 == k) if op == "=" else (0 <= k)
            if b is None:
                if not holds:
                    self.store.post(BoolClause([], 1))
            elif half:
                if not holds:
                    self.store.narrow(b, csp.FALSE_MASK)
            else:
                self.store.narrow(b, csp.TRUE_MASK if holds else csp.FALSE_MASK)
            return
        self.store.post(IntCompare(op, xv, yv, k, b, half))

    def _arr(self, f: Formula, s: Time, t: Time, rev: bool) -> VarId:
        key = ("a", f, s, t, rev)
        if self.memo:
            hit = self._cache.get(key)
            if hit is not None:
                return hit
        b = self._arr_node(f, s, t, rev)
        if self.memo:
            self._cache[key] = b
        return b

    def _arr_node(self, f: Formula, s: Time, t: Time, rev: bool) -> VarId:
        store = self.store
        if isinstance(f, TrueF):
            return self._const(True)
        if isinstance(f, Not):  # only on true in NNF
            return self._const(False)
        if isinstance(f, (Atom, Member)):
            b = self._bool()
            if isinstance(s, int):
                store.post(ReifiedMember(self._q(f.a, f.b, s, rev), self._atom_mask(f), b, half=True))
            else:
                store.post(ArrayElement(self._family(f.a, f.b, rev), s.var, values=self._atom_mask(f), b=b))
            return b
        if isinstance(f, (And, Or)):
            parts = [self._arr(g, s, t, rev) for g in _flatten(f)]
            return self._gate("AND" if isinstance(f, And) else "OR", parts, half=True)
        if isinstance(f, (Next, WeakNext)):
            strong = isinstance(f, Next)
            if isinstance(s, int) and isinstance(t, int):
                if s + 1 > t:
                    return self._const(not strong)
                return self._arr(f.f, s + 1, t, rev)
            if self._lo(s) + 1 > self._hi(t):
                return self._const(not strong)
            has_next = self._bool()
            self._compare("<=", s, t, -1, has_next)  # (s + 1 <= t) == has_next
            r = self._time_var(self._lo(s) + 1, self._hi(t), "n")
            self._compare("=", r, s, 1, has_next, half=True)
            inner = self._arr(f.f, r, t, rev)
            b = self._bool()
            if strong:
                csp.bool_and(store, [(has_next, True), (inner, True)], (b, True), half=True)
            else:
                csp.bool_or(store, [(has_next, False), (inner, True)], (b, True), half=True)
            return b
        if isinstance(f, Eventually):
            r = self._time_var(self._lo(s), self._hi(t), "r")
            b = self._arr(f.f, r, t, rev)
            self._compare("<=", s, r, 0, b, half=True)
            self._compare("<=", r, t, 0, b, half=True)
            return b
        if isinstance(f, Always):
            return self._always_from(f.f, s, t, t, rev)
        if isinstance(f, Until):
            return self._until(f.l, f.r, s, t, rev)
        if isinstance(f, Release):
            # chi R phi  ==  G phi | (phi U (chi & phi))
            alt = Or(Always(f.r), Until(f.r, And(f.l, f.r)))
            return self._arr(alt, s, t, rev)
        raise TranslationError(f"cannot translate {type(f).__name__} in array mode")

    def _always_from(self, f: Formula, a: Time, e: Time, t: Time, rev: bool) -> VarId:
        """``phi`` on ``[u..t]`` for every ``u`` in ``[a..e]`` (true if empty),
        built stepwise as ``phi & (X true -> X rest)``."""
        key = ("ap", f, a, e, t, rev)
        if self.memo and key in self._cache:
            return self._cache[key]
        store = self.store
        if isinstance(a, int) and isinstance(e, int):
            if a > e:
                b = self._const(True)
            elif a == e:
                b = self._arr(f, a, t, rev)
            else:
                b = self._gate("AND", [self._arr(f, a, t, rev), self._always_from(f, a + 1, e, t, rev)], half=True)
        else:
            here = self._arr(f, a, t, rev)
            if self._lo(a) + 1 > self._hi(e):
                b = here
            else:
                more = self._bool()
                self._compare("<=", a, e, -1, more)  # (a + 1 <= e) == more
                r = self._time_var(self._lo(a) + 1, self._hi(e), "g")
                self._compare("=", r, a, 1, more, half=True)
                rest = self._always_from(f, r, e, t, rev)
                step = self._bool()
                csp.bool_or(store, [(more, False), (rest, True)], (step, True), half=True)
                b = self._gate("AND", [here, step], half=True)
        if self.memo:
            self._cache[key] = b
        return b

    def _until(self, chi: Formula, phi: Formula, s: Time, t: Time, rev: bool) -> VarId:
        store = self.store
        lo, hi = self._lo(s), self._hi(t)
        r = self._time_var(lo, hi, "r")
        u = self._time_var(lo, hi, "u")
        reached = self._arr(phi, r, t, rev)
        at_start = self._bool()
        self._compare("=", r, s, 0, at_start)  # (r = s) == at_start
        held = self._bool()
        self._compare("=", u, r, -1, held, half=True)
        before = self._always_from(chi, s, u, t, rev)
        csp.bool_and(store, [(before, True)], (held, True), half=True)
        b = self._bool()
        either = self._gate("OR", [at_start, held], half=True)
        csp.bool_and(store, [(reached, True), (either, True)], (b, True), half=True)
        self._compare("<=", s, r, 0, b, half=True)
        self._compare("<=", r, t, 0, b, half=True)
        self._compare("<=", s, u, 0, b, half=True)
        self._compare("<=", u, r, 0, b, half=True)
        return b

    # -- rules ----------------------------------------------------------------------------------

    def post_rule(self, rule: InterStateRule, t0: int, mode: str = ARRAY) -> VarId:
        """Require the rule at split point ``t0``: past leaves on ``[0..t0]``,
        future leaves on ``[t0+1..H-1]``."""
        h = self.space.horizon
        if h < 2:
            raise TranslationError("rules need at least two stages: unsatisfiable-rule configuration")
        if not 0 <= t0 <= h - 2:
            raise TranslationError(f"split point {t0} outside [0..{h - 2}]")
        body = desugar(rule.body)
        if mode == UNFOLD:
            b = self._skeleton_unfold(body, t0)
        elif mode == ARRAY:
            b = self._skeleton_array(body, t0, True)
        else:
            raise TranslationError(f"unknown translation mode {mode!r}")
        self.store.post(BoolClause([(b, True)]))
        return b

    def _leaf(self, f: Formula, t0: int, mode: str, positive: bool = True) -> VarId:
        h = self.space.horizon
        if isinstance(f, Next):
            body = f.f if positive else Not(f.f)
            return self.truth(body, FUTURE, t0 + 1, h - 1, mode)
        body = f if positive else Not(f)
        return self.truth(body, PAST, 0, t0, mode)

    def _skeleton_unfold(self, f: Formula, t0: int) -> VarId:
        if isinstance(f, Next) or not is_future(f):
            return self._leaf(f, t0, UNFOLD)
        if isinstance(f, Not):
            inner = self._skeleton_unfold(f.f, t0)
            b = self._bool()
            csp.bool_gate(self.store, "NOT", [inner], b)
            return b
        if isinstance(f, (And, Or, Implies, Equiv)):
            l, r = self._skeleton_unfold(f.l, t0), self._skeleton_unfold(f.r, t0)
            b = self._bool()
            csp.bool_gate(self.store, type(f).__name__.upper(), [l, r], b)
            return b
        raise TranslationError(f"unsupported rule node {type(f).__name__}")

    def _skeleton_array(self, f: Formula, t0: int, positive: bool) -> VarId:
        if isinstance(f, Next) or not is_future(f):
            return self._leaf(f, t0, ARRAY, positive)
        if isinstance(f, Not):
            return self._skeleton_array(f.f, t0, not positive)
        if isinstance(f, (And, Or)):
            conj = isinstance(f, And) == positive
            parts = [self._skeleton_array(f.l, t0, positive), self._skeleton_array(f.r, t0, positive)]
            return self._gate("AND" if conj else "OR", parts, half=True)
        if isinstance(f, Implies):
            return self._skeleton_array(Or(Not(f.l), f.r), t0, positive)
        if isinstance(f, Equiv):
            alt = Or(And(f.l, f.r), And(Not(f.l), Not(f.r)))
            return self._skeleton_array(alt, t0, positive)
        raise TranslationError(f"unsupported rule node {type(f).__name__}")


def _flatten(f: Formula) -> list[Formula]:
    cls = type(f)
    out: list[Formula] = []
    stack = [f]
    while stack:
        g = stack.pop()
        if type(g) is cls:
            stack.append(g.r)
            stack.append(g.l)
        else:
            out.append(g)
    return out


# -- module-level operations ----------------------------------------------------------------------


def _result(store: Store, before_c: int, before_v: int, truth: VarId) -> TranslationResult:
    return TranslationResult(truth, store.constraints[before_c:], list(range(before_v, len(store))))


def unfold(phi: Formula, direction: str, iv: tuple[int, int], space: StageSpace, store: Store, memo: bool = True) -> TranslationResult:
    c0, v0 = len(store.constraints), len(store)
    b = Translator(store, space, memo).unfold(phi, direction, iv[0], iv[1])
    return _result(store, c0, v0, b)


def array_translate(phi: Formula, direction: str, iv: tuple[Time, Time], space: StageSpace, store: Store, memo: bool = True) -> TranslationResult:
    c0, v0 = len(store.constraints), len(store)
    b = Translator(store, space, memo).array(phi, direction, iv[0], iv[1])
    return _result(store, c0, v0, b)


def post_rule(rule: InterStateRule, t0: int, space: StageSpace, store: Store, mode: str = ARRAY) -> TranslationResult:
    c0, v0 = len(store.constraints), len(store)
    b = Translator(store, space).post_rule(rule, t0, mode)
    return _result(store, c0, v0, b)
