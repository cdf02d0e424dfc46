"""Finite-domain constraint store with hyper-arc consistency propagation and
trail-based backtracking search.

Every domain is a bitmask over non-negative integers: relation variables use
relation indices, Boolean variables use ``{0, 1}`` and integer variables
(time points) use their value directly.  Domains only ever shrink; each
change is recorded on a trail so that search can restore state exactly.
"""

from __future__ import annotations

import enum
import time
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .calculus import Calculus

VarId = int

FALSE_MASK = 1  # {0}
TRUE_MASK = 2  # {1}
BOOL_MASK = 3


class Sort(enum.Enum):
    RELATION = "relation"
    INT = "int"
    BOOL = "bool"


class CSPError(ValueError):
    pass


class SearchExhausted(Exception):
    """Node or wall-clock budget ran out before search finished."""


def bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(values: Iterable[int]) -> int:
    m = 0
    for v in values:
        if v < 0:
            raise CSPError(f"negative domain value {v}")
        m |= 1 << v
    return m


def _min(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def _max(mask: int) -> int:
    return mask.bit_length() - 1


def _le(v: int) -> int:
    """Mask of all values <= v."""
    return (1 << (v + 1)) - 1 if v >= 0 else 0


def _ge(v: int) -> int:
    """Mask of all values >= v (an infinite bit pattern, safe under &)."""
    return ~((1 << v) - 1) if v > 0 else -1


def _shift(mask: int, k: int) -> int:
    """Mask of {v + k : v in mask}, dropping negatives."""
    return mask << k if k >= 0 else mask >> -k


@dataclass(frozen=True)
class Domain:
    sort: Sort
    mask: int
    calculus: Calculus | None = None

    @classmethod
    def relations(cls, calculus: Calculus, names: Iterable[str] | None = None) -> "Domain":
        mask = calculus.full if names is None else calculus.mask(names)
        return cls(Sort.RELATION, mask, calculus)

    @classmethod
    def ints(cls, lo: int, hi: int) -> "Domain":
        return cls(Sort.INT, mask_of(range(lo, hi + 1)))

    @classmethod
    def int_set(cls, values: Iterable[int]) -> "Domain":
        return cls(Sort.INT, mask_of(values))

    @classmethod
    def boolean(cls) -> "Domain":
        return cls(Sort.BOOL, BOOL_MASK)

    @property
    def values(self) -> list[int]:
        return list(bits(self.mask))


# -- constraints ---------------------------------------------------------------


class Constraint:
    """Base class.  ``propagate`` narrows domains through the store and
    returns False on a wipe-out; ``idempotent`` propagators are not requeued
    by their own domain changes."""

    vars: tuple[VarId, ...] = ()
    idempotent = True
    queued = False

    def propagate(self, store: "Store") -> bool:  # pragma: no cover - abstract
        raise NotImplementedError

    def describe(self, store: "Store") -> str:
        names = ", ".join(store.names[v] for v in self.vars)
        return f"{type(self).__name__}({names})"


class BinaryTable:
    """Shared support table for extensional binary constraints; revisions are
    cached by domain pair since the same table is posted many times."""

    def __init__(self, pairs: Iterable[tuple[int, int]], name: str = "table"):
        self.name = name
        fwd: dict[int, int] = {}
        bwd: dict[int, int] = {}
        for a, b in pairs:
            fwd[a] = fwd.get(a, 0) | 1 << b
            bwd[b] = bwd.get(b, 0) | 1 << a
        self.fwd = fwd
        self.bwd = bwd
        self._cache: dict[tuple[int, int], tuple[int, int]] = {}

    def pairs(self) -> set[tuple[int, int]]:
        return {(a, b) for a, m in self.fwd.items() for b in bits(m)}

    def revise(self, dx: int, dy: int) -> tuple[int, int]:
        key = (dx, dy)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        nx = ny = 0
        fwd = self.fwd
        for a in bits(dx):
            s = fwd.get(a, 0) & dy
            if s:
                nx |= 1 << a
                ny |= s
        self._cache[key] = (nx, ny)
        return nx, ny


class TernaryTable:
    """Shared support table for ternary constraints, e.g. composition."""

    def __init__(self, triples: Iterable[tuple[int, int, int]], name: str = "table"):
        self.name = name
        rows: dict[int, dict[int, int]] = {}
        for a, b, c in triples:
            row = rows.setdefault(a, {})
            row[b] = row.get(b, 0) | 1 << c
        self.rows = rows
        self._cache: dict[tuple[int, int, int], tuple[int, int, int]] = {}

    @classmethod
    def composition(cls, calculus: Calculus) -> "TernaryTable":
        n = len(calculus)
        return cls(
            ((a, b, c) for a in range(n) for b in range(n) for c in bits(calculus.composition[a][b])),
            name=f"{calculus.name}.comp",
        )

    def triples(self) -> set[tuple[int, int, int]]:
        return {(a, b, c) for a, row in self.rows.items() for b, m in row.items() for c in bits(m)}

    def revise(self, dx: int, dy: int, dz: int) -> tuple[int, int, int]:
        key = (dx, dy, dz)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        nx = ny = nz = 0
        for a in bits(dx):
            row = self.rows.get(a)
            if not row:
                continue
            for b in bits(dy):
                s = row.get(b, 0) & dz
                if s:
                    nx |= 1 << a
                    ny |= 1 << b
                    nz |= s
        self._cache[key] = (nx, ny, nz)
        return nx, ny, nz


class ExtensionalBinary(Constraint):
    def __init__(self, x: VarId, y: VarId, table: BinaryTable | Iterable[tuple[int, int]]):
        self.x, self.y = x, y
        self.table = table if isinstance(table, BinaryTable) else BinaryTable(table)
        self.vars = (x, y)

    def propagate(self, store: "Store") -> bool:
        dom = store.dom
        nx, ny = self.table.revise(dom[self.x], dom[self.y])
        return store.narrow(self.x, nx) and store.narrow(self.y, ny)

    def describe(self, store: "Store") -> str:
        return f"{self.table.name}({store.names[self.x]}, {store.names[self.y]})"


class ExtensionalTernary(Constraint):
    def __init__(self, x: VarId, y: VarId, z: VarId, table: TernaryTable | Iterable[tuple[int, int, int]]):
        self.x, self.y, self.z = x, y, z
        self.table = table if isinstance(table, TernaryTable) else TernaryTable(table)
        self.vars = (x, y, z)

    def propagate(self, store: "Store") -> bool:
        dom = store.dom
        nx, ny, nz = self.table.revise(dom[self.x], dom[self.y], dom[self.z])
        return store.narrow(self.x, nx) and store.narrow(self.y, ny) and store.narrow(self.z, nz)

    def describe(self, store: "Store") -> str:
        return f"{self.table.name}({store.names[self.x]}, {store.names[self.y]}, {store.names[self.z]})"


class ReifiedMember(Constraint):
    """``(x in values) == b``; with ``half`` only ``b -> (x in values)``.

    Atoms ``Q[A,B] = q`` and ``Q[A,B] != q`` are the singleton and
    co-singleton cases."""

    def __init__(self, x: VarId, values: int, b: VarId, half: bool = False):
        self.x, self.values, self.b, self.half = x, values, b, half
        self.vars = (x, b)

    def propagate(self, store: "Store") -> bool:
        db = store.dom[self.b]
        if db == TRUE_MASK:
            return store.narrow(self.x, self.values)
        if db == FALSE_MASK:
            return True if self.half else store.narrow(self.x, ~self.values)
        dx = store.dom[self.x]
        if not dx & self.values:
            return store.narrow(self.b, FALSE_MASK)
        if not self.half and not dx & ~self.values:
            return store.narrow(self.b, TRUE_MASK)
        return True

    def describe(self, store: "Store") -> str:
        arrow = "<-" if self.half else "=="
        return f"({store.names[self.x]} in {sorted(bits(self.values))}) {arrow} {store.names[self.b]}"


class IntCompare(Constraint):
    """``x op y + k`` for ``op`` in ``{'=', '<='}``.  Either side may be None,
    standing for the constant 0; when ``b`` is given the comparison is
    reified (``== b``), or half-reified (``b -> ...``) with ``half``."""

    def __init__(self, op: str, x: VarId | None, y: VarId | None, k: int = 0, b: VarId | None = None, half: bool = False):
        if op not in ("=", "<="):
            raise CSPError(f"unsupported comparison {op!r}")
        if x is None and y is None:
            raise CSPError("comparison between two constants")
        self.op, self.x, self.y, self.k, self.b, self.half = op, x, y, k, b, half
        self.vars = tuple(v for v in (x, y, b) if v is not None)

    def _narrow(self, store: "Store", v: VarId | None, mask: int) -> bool:
        return True if v is None else store.narrow(v, mask)

    def propagate(self, store: "Store") -> bool:
        dom = store.dom
        dx = 1 if self.x is None else dom[self.x]
        dy = 1 if self.y is None else dom[self.y]
        k = self.k
        db = TRUE_MASK if self.b is None else dom[self.b]
        if self.op == "<=":
            lo_x, hi_x, lo_y, hi_y = _min(dx), _max(dx), _min(dy), _max(dy)
            if db == TRUE_MASK:
                return self._narrow(store, self.x, _le(hi_y + k)) and self._narrow(store, self.y, _ge(lo_x - k))
            if db == FALSE_MASK:
                if self.half:
                    return True
                return self._narrow(store, self.x, _ge(lo_y + k + 1)) and self._narrow(store, self.y, _le(hi_x - k - 1))
            if lo_x > hi_y + k:
                return store.narrow(self.b, FALSE_MASK)
            if not self.half and hi_x <= lo_y + k:
                return store.narrow(self.b, TRUE_MASK)
            return True
        shifted = _shift(dy, k)
        common = dx & shifted
        if db == TRUE_MASK:
            return self._narrow(store, self.x, common) and self._narrow(store, self.y, _shift(common, -k))
        if db == FALSE_MASK:
            if self.half:
                return True
            if not shifted & (shifted - 1):
                if not self._narrow(store, self.x, ~shifted):
                    return False
                dx = 1 if self.x is None else dom[self.x]
            if not dx & (dx - 1):
                return self._narrow(store, self.y, ~_shift(dx, -k))
            return True
        if not common:
            return store.narrow(self.b, FALSE_MASK)
        if not self.half and dx == shifted and not dx & (dx - 1):
            return store.narrow(self.b, TRUE_MASK)
        return True

    def describe(self, store: "Store") -> str:
        lhs = "0" if self.x is None else store.names[self.x]
        rhs = str(self.k) if self.y is None else f"{store.names[self.y]}{self.k:+d}" if self.k else store.names[self.y]
        text = f"{lhs} {self.op} {rhs}"
        if self.b is None:
            return text
        return f"({text}) {'<-' if self.half else '=='} {store.names[self.b]}"


Literal = tuple[VarId, bool]


class BoolOr(Constraint):
    """``out == OR(literals)``.  ``forward`` enforces ``out -> OR``,
    ``backward`` enforces ``OR -> out``; both together give equivalence.
    ``out`` is itself a literal, which lets AND be expressed as the dual."""

    def __init__(self, literals: Sequence[Literal], out: Literal, forward: bool = True, backward: bool = True):
        self.literals = tuple(literals)
        self.out = out
        self.forward, self.backward = forward, backward
        self.vars = tuple(dict.fromkeys([v for v, _ in self.literals] + [out[0]]))

    @staticmethod
    def _val(dom: list[int], lit: Literal) -> int:
        d = dom[lit[0]]
        if d == BOOL_MASK:
            return -1
        v = 1 if d == TRUE_MASK else 0
        return v if lit[1] else 1 - v

    @staticmethod
    def _set(store: "Store", lit: Literal, value: int) -> bool:
        v = value if lit[1] else 1 - value
        return store.narrow(lit[0], TRUE_MASK if v else FALSE_MASK)

    def propagate(self, store: "Store") -> bool:
        dom = store.dom
        out = self._val(dom, self.out)
        unknown = None
        n_unknown = 0
        for lit in self.literals:
            v = self._val(dom, lit)
            if v == 1:
                if self.backward:
                    return self._set(store, self.out, 1)
                return True
            if v == -1:
                n_unknown += 1
                unknown = lit
        if n_unknown == 0:
            if self.forward:
                return self._set(store, self.out, 0)
            return True
        if out == 0 and self.backward:
            for lit in self.literals:
                if not self._set(store, lit, 0):
                    return False
            return True
        if out == 1 and self.forward and n_unknown == 1:
            return self._set(store, unknown, 1)
        return True

    def describe(self, store: "Store") -> str:
        def lit(l: Literal) -> str:
            return store.names[l[0]] if l[1] else "!" + store.names[l[0]]

        arrow = {(True, True): "==", (True, False): "->", (False, True): "<-"}[(self.forward, self.backward)]
        return f"{lit(self.out)} {arrow} OR({', '.join(lit(l) for l in self.literals)})"


class BoolClause(Constraint):
    """``OR(literals) == truth`` for a constant truth value."""

    def __init__(self, literals: Sequence[Literal], truth: int = 1):
        self.literals = tuple(literals)
        self.truth = truth
        self.vars = tuple(dict.fromkeys(v for v, _ in self.literals))

    def propagate(self, store: "Store") -> bool:
        dom = store.dom
        if not self.truth:
            return all(BoolOr._set(store, lit, 0) for lit in self.literals)
        unknown = None
        n = 0
        for lit in self.literals:
            v = BoolOr._val(dom, lit)
            if v == 1:
                return True
            if v == -1:
                n += 1
                unknown = lit
        if n == 0:
            store.failed = True
            return False
        if n == 1:
            return BoolOr._set(store, unknown, 1)
        return True

    def describe(self, store: "Store") -> str:
        body = " | ".join(store.names[v] if s else "!" + store.names[v] for v, s in self.literals)
        return f"({body}) == {self.truth}"


class ArrayElement(Constraint):
    """``family[index] in target``.  ``target`` is a variable or a constant
    value mask; with ``b`` the constraint is half-reified (``b -> ...``)."""

    def __init__(self, family: Sequence[VarId], index: VarId, target: VarId | None = None, values: int | None = None, b: VarId | None = None):
        if (target is None) == (values is None):
            raise CSPError("ArrayElement needs exactly one of target or values")
        self.family = tuple(family)
        self.index, self.target, self.const, self.b = index, target, values, b
        self.vars = tuple(dict.fromkeys(self.family + tuple(v for v in (index, target, b) if v is not None)))
        self.positions = (1 << len(self.family)) - 1

    def propagate(self, store: "Store") -> bool:
        dom = store.dom
        if not store.narrow(self.index, self.positions):
            return False
        tgt = self.const if self.target is None else dom[self.target]
        db = TRUE_MASK if self.b is None else dom[self.b]
        if db == FALSE_MASK:
            return True
        idx = dom[self.index]
        supported = 0
        reach = 0
        for i in bits(idx):
            m = dom[self.family[i]] & tgt
            if m:
                supported |= 1 << i
                reach |= m
        if db != TRUE_MASK:
            return True if supported else store.narrow(self.b, FALSE_MASK)
        if not store.narrow(self.index, supported):
            return False
        if not supported & (supported - 1):
            if not store.narrow(self.family[_min(supported)], tgt):
                return False
        if self.target is not None:
            return store.narrow(self.target, reach)
        return True

    def describe(self, store: "Store") -> str:
        fam = store.names[self.family[0]].rsplit(",", 1)[0] + ",*]" if self.family else "[]"
        rhs = store.names[self.target] if self.target is not None else str(sorted(bits(self.const)))
        text = f"{fam}[{store.names[self.index]}] in {rhs}"
        return text if self.b is None else f"({text}) <- {store.names[self.b]}"


# -- store -----------------------------------------------------------------------


class Store:
    """Variables, domains and constraints with a propagation queue and trail."""

    def __init__(self) -> None:
        self.dom: list[int] = []
        self.initial: list[int] = []
        self.sorts: list[Sort] = []
        self.names: list[str] = []
        self.calculi: list[Calculus | None] = []
        self.watch: list[list[Constraint]] = []
        self.constraints: list[Constraint] = []
        self.trail: list[tuple[VarId, int]] = []
        self.queue: deque[Constraint] = deque()
        self.current: Constraint | None = None
        self.failed = False
        self.nodes = 0
        self.backtracks = 0
        self.revisions = 0
        self.failures = 0
        self.weight: list[int] = []
        self._const: dict[int, VarId] = {}

    # -- variables -------------------------------------------------------------

    def new_var(self, domain: Domain, name: str | None = None) -> VarId:
        if domain.mask <= 0:
            raise CSPError("empty domain")
        if domain.sort is Sort.BOOL and domain.mask & ~BOOL_MASK:
            raise CSPError("Boolean domain must be a subset of {0, 1}")
        v = len(self.dom)
        self.dom.append(domain.mask)
        self.initial.append(domain.mask)
        self.sorts.append(domain.sort)
        self.names.append(name or f"_v{v}")
        self.calculi.append(domain.calculus)
        self.watch.append([])
        self.weight.append(0)
        return v

    def new_bool(self, name: str | None = None) -> VarId:
        return self.new_var(Domain.boolean(), name)

    def const_bool(self, value: bool) -> VarId:
        """A shared Boolean fixed to ``value``."""
        key = int(bool(value))
        if key not in self._const:
            d = Domain(Sort.BOOL, TRUE_MASK if key else FALSE_MASK)
            self._const[key] = self.new_var(d, "true" if key else "false")
        return self._const[key]

    def __len__(self) -> int:
        return len(self.dom)

    def values(self, v: VarId) -> list[int]:
        return list(bits(self.dom[v]))

    def value(self, v: VarId) -> int:
        d = self.dom[v]
        if d & (d - 1):
            raise CSPError(f"{self.names[v]} is not fixed")
        return _min(d)

    def is_fixed(self, v: VarId) -> bool:
        d = self.dom[v]
        return not d & (d - 1)

    # -- constraints ------------------------------------------------------------

    def post(self, c: Constraint) -> Constraint:
        n = len(self.dom)
        for v in c.vars:
            if not 0 <= v < n:
                raise CSPError(f"unknown variable {v}")
        if isinstance(c, ReifiedMember) and self.sorts[c.b] is not Sort.BOOL:
            raise CSPError("reification target must be Boolean")
        if isinstance(c, (BoolOr, BoolClause)):
            lits = list(c.literals) + ([c.out] if isinstance(c, BoolOr) else [])
            for v, _ in lits:
                if self.sorts[v] is not Sort.BOOL:
                    raise CSPError(f"{self.names[v]} is not Boolean")
        if isinstance(c, IntCompare) and c.b is not None and self.sorts[c.b] is not Sort.BOOL:
            raise CSPError("reification target must be Boolean")
        self.constraints.append(c)
        for v in dict.fromkeys(c.vars):
            self.watch[v].append(c)
            self.weight[v] += 1
        c.queued = True
        self.queue.append(c)
        return c

    def narrow(self, v: VarId, mask: int) -> bool:
        old = self.dom[v]
        new = old & mask
        if new == old:
            return True
        if not new:
            self.failed = True
            return False
        self.trail.append((v, old))
        self.dom[v] = new
        cur = self.current
        q = self.queue
        for c in self.watch[v]:
            if not c.queued and (c is not cur or not c.idempotent):
                c.queued = True
                q.append(c)
        return True

    def fix(self, v: VarId, value: int) -> bool:
        return self.narrow(v, 1 << value)

    def propagate(self) -> bool:
        """Run to the GAC fixpoint; False (and ``failed``) on a wipe-out."""
        if self.failed:
            self._clear_queue()
            return False
        q = self.queue
        while q:
            c = q.popleft()
            c.queued = False
            self.current = c
            self.revisions += 1
            if not c.propagate(self):
                self.failures += 1
                for v in c.vars:
                    self.weight[v] += 1
                self.current = None
                self.failed = True
                self._clear_queue()
                return False
        self.current = None
        return True

    def _clear_queue(self) -> None:
        for c in self.queue:
            c.queued = False
        self.queue.clear()

    # -- trail -------------------------------------------------------------------

    def mark(self) -> int:
        return len(self.trail)

    def undo(self, mark: int) -> None:
        trail, dom = self.trail, self.dom
        while len(trail) > mark:
            v, old = trail.pop()
            dom[v] = old
        self.failed = False
        self._clear_queue()

    def snapshot(self) -> list[int]:
        return list(self.dom)

    def dump(self) -> str:
        lines = ["variables:"]
        for v, d in enumerate(self.dom):
            calc = self.calculi[v]
            vals = calc.names(d) if calc is not None else list(bits(d))
            lines.append(f"  {self.names[v]} [{self.sorts[v].value}] = {{{', '.join(map(str, vals))}}}")
        lines.append("constraints:")
        lines += [f"  {c.describe(self)}" for c in self.constraints]
        lines.append(f"stats: nodes={self.nodes} backtracks={self.backtracks}")
        return "\n".join(lines)


# -- convenience posting --------------------------------------------------------------


def new_var(store: Store, domain: Domain, name: str | None = None) -> VarId:
    return store.new_var(domain, name)


def post(store: Store, c: Constraint) -> Constraint:
    return store.post(c)


def propagate(store: Store) -> bool:
    return store.propagate()


def bool_and(store: Store, inputs: Sequence[Literal], out: Literal, half: bool = False) -> Constraint:
    """``out == AND(inputs)`` (or ``out -> AND`` with ``half``), as the dual OR."""
    # out == AND(x)  <=>  !out == OR(!x); out -> AND(x) is the backward half
    neg = [(v, not s) for v, s in inputs]
    return store.post(BoolOr(neg, (out[0], not out[1]), forward=not half, backward=True))


def bool_or(store: Store, inputs: Sequence[Literal], out: Literal, half: bool = False) -> Constraint:
    return store.post(BoolOr(inputs, out, forward=True, backward=not half))


_EQUIV_TABLE = TernaryTable(((a, b, int(a == b)) for a in (0, 1) for b in (0, 1)), name="equiv")


def bool_gate(store: Store, gate: str, inputs: Sequence[VarId], out: VarId) -> Constraint:
    """Post ``out == gate(inputs)`` for gate in AND, OR, NOT, IMPLIES, EQUIV."""
    gate = gate.upper()
    if gate == "AND":
        return bool_and(store, [(v, True) for v in inputs], (out, True))
    if gate == "OR":
        return bool_or(store, [(v, True) for v in inputs], (out, True))
    if gate == "NOT":
        (a,) = inputs
        return bool_or(store, [(a, False)], (out, True))
    if gate == "IMPLIES":
        a, b = inputs
        return bool_or(store, [(a, False), (b, True)], (out, True))
    if gate == "EQUIV":
        a, b = inputs
        return store.post(ExtensionalTernary(a, b, out, _EQUIV_TABLE))
    raise CSPError(f"unknown gate {gate}")


# -- branching heuristics -----------------------------------------------------------------


class Heuristic:
    """Variable selection, optionally within priority classes given as an
    ``order`` of sorts (by default all variables compete together); ties go
    to the earliest-created variable.

    With ``weighted`` set (the default) the variable minimising
    domain size / conflict weight is chosen, where a variable's weight is
    its number of constraints plus the number of propagation failures those
    constraints caused.  Otherwise the smallest domain wins.  Relation
    domains are split with :func:`tractable_split`, integer and Boolean
    domains min-value first.
    """

    order: tuple[Sort, ...] | None = None

    def __init__(self, subclasses: dict[str, Sequence[int]] | None = None, order: Sequence[Sort] | None = None, weighted: bool = True):
        self.subclasses = subclasses or {}
        if order is not None:
            self.order = tuple(order)
        self.weighted = weighted
        self._groups: list[list[VarId]] | None = None
        self._n = -1

    def _classes(self, store: Store) -> list[list[VarId]]:
        if self._groups is None or self._n != len(store):
            if self.order is None:
                self._groups = [list(range(len(store)))]
            else:
                self._groups = [[v for v in range(len(store)) if store.sorts[v] is s] for s in self.order]
            self._n = len(store)
        return self._groups

    def select(self, store: Store) -> VarId | None:
        return self.pick(store, self._classes(store))[0]

    def pick(self, store: Store, groups: list[list[VarId]]) -> tuple[VarId | None, list[list[VarId]]]:
        """Best variable plus the groups with fixed variables dropped.  Domains
        only shrink below a node, so the filtered groups serve its subtree."""
        dom = store.dom
        weight = store.weight
        weighted = self.weighted
        live_groups: list[list[VarId]] = []
        best = None
        for group in groups:
            live = [v for v in group if dom[v] & (dom[v] - 1)]
            live_groups.append(live)
            if best is not None or not live:
                continue
            best_size = 1 << 30
            best_w = 1
            for v in live:
                size = dom[v].bit_count()
                w = (weight[v] or 1) if weighted else 1
                if size * best_w < best_size * w:
                    best, best_size, best_w = v, size, w
        return best, live_groups

    def split(self, store: Store, v: VarId) -> tuple[int, int]:
        d = store.dom[v]
        calc = store.calculi[v]
        if store.sorts[v] is Sort.RELATION and calc is not None:
            return tractable_split(d, calc, self.subclasses.get(calc.name))
        low = d & -d
        return low, d ^ low


def tractable_split(domain: int, calculus: Calculus, subclass: Sequence[int] | None = None) -> tuple[int, int]:
    """Partition a relation domain into ``(first, rest)``.

    With a configured tractable subclass (a collection of relation masks), the
    first part is the largest proper subset of the domain belonging to the
    subclass; otherwise it is the lowest-index relation alone.
    """
    if not domain & (domain - 1):
        raise CSPError("cannot split a domain with fewer than two values")
    if subclass:
        best = 0
        for m in subclass:
            if m and m & domain == m and m != domain and m.bit_count() > best.bit_count():
                best = m
        if best:
            return best, domain ^ best
    low = domain & -domain
    return low, domain ^ low


# -- search ------------------------------------------------------------------------------


class _Budget:
    def __init__(self, nodes: int | None, seconds: float | None):
        self.nodes = nodes
        self.deadline = None if seconds is None else time.monotonic() + seconds

    def check(self, store: Store, start_nodes: int) -> None:
        if self.nodes is not None and store.nodes - start_nodes > self.nodes:
            raise SearchExhausted(f"node budget {self.nodes} exhausted")
        if self.deadline is not None and store.nodes % 64 == 0 and time.monotonic() > self.deadline:
            raise SearchExhausted("time budget exhausted")


class _Projected(Heuristic):
    """Branch only on ``project`` variables, in the base heuristic's order."""

    def __init__(self, base: Heuristic, project: Sequence[VarId]):
        super().__init__(base.subclasses, base.order, base.weighted)
        self.base = base
        self.project = set(project)

    def _classes(self, store: Store) -> list[list[VarId]]:
        return [[v for v in g if v in self.project] for g in self.base._classes(store)]


def _probe(store: Store) -> list[int] | None:
    """One greedy dive without backtracking: each free variable in turn takes
    its least remaining value.  A cheap witness when the remaining variables
    are loosely constrained."""
    mark = store.mark()
    try:
        dom = store.dom
        for v in range(len(dom)):
            d = dom[v]
            if d & (d - 1) and not (store.narrow(v, d & -d) and store.propagate()):
                return None
        return [_min(d) for d in dom]
    finally:
        store.undo(mark)


def _search(store: Store, heuristic: Heuristic, budget: _Budget, project: Sequence[VarId] | None = None) -> Iterator[list[int]]:
    base = store.mark()
    start = store.nodes
    if not store.propagate():
        store.undo(base)
        return
    chooser = heuristic if project is None else _Projected(heuristic, project)
    groups = chooser._classes(store)
    stack: list[tuple[int, VarId, int, list[list[VarId]]]] = []
    try:
        while True:
            v, live = chooser.pick(store, groups)
            if v is None:
                if project is None:
                    yield [_min(d) for d in store.dom]
                else:
                    # the projected variables are fixed; one witness for the rest suffices
                    witness = _probe(store)
                    if witness is None:
                        inner = _search(store, heuristic, budget)
                        try:
                            witness = next(inner, None)
                        finally:
                            inner.close()
                    if witness is not None:
                        yield witness
                ok = False
            else:
                first, rest = chooser.split(store, v)
                stack.append((store.mark(), v, rest, live))
                groups = live
                store.nodes += 1
                budget.check(store, start)
                ok = store.narrow(v, first) and store.propagate()
            while not ok:
                if not stack:
                    return
                mark, v, rest, groups = stack.pop()
                store.undo(mark)
                store.backtracks += 1
                store.nodes += 1
                budget.check(store, start)
                ok = store.narrow(v, rest) and store.propagate()
    finally:
        store.undo(base)


def solve(store: Store, heuristic: Heuristic | None = None, *, node_budget: int | None = None, time_budget: float | None = None) -> list[int] | None:
    """First solution under the deterministic branching order, or None.

    The store is restored to its state before the call.  Raises
    :class:`SearchExhausted` when a budget runs out.
    """
    gen = _search(store, heuristic or Heuristic(), _Budget(node_budget, time_budget))
    try:
        return next(gen, None)
    finally:
        gen.close()


def solve_all(store: Store, heuristic: Heuristic | None = None, limit: int | None = None, *, project: Sequence[VarId] | None = None, node_budget: int | None = None, time_budget: float | None = None) -> list[list[int]]:
    """All solutions (up to ``limit``).  With ``project``, solutions are
    distinct on those variables only: one full witness per projection."""
    out: list[list[int]] = []
    gen = _search(store, heuristic or Heuristic(), _Budget(node_budget, time_budget), project)
    try:
        for sol in gen:
            out.append(sol)
            if limit is not None and len(out) >= limit:
                break
    finally:
        gen.close()
    return out
