"""Qualitative calculi as data: relations, identity, converse, composition,
and conceptual neighbourhood.

Relation sets are bitmasks over relation indices (bit ``i`` set means
relation ``i`` is a member), so every calculus has at most 64 relations.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from itertools import product
from pathlib import Path
from typing import Iterable

log = logging.getLogger(__name__)

MAX_RELATIONS = 64


class CalculusError(ValueError):
    """Raised when a calculus document cannot be parsed or is incoherent."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column or 1}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Relation:
    index: int
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Violation:
    """One failed axiom together with the tuple witnessing it."""

    axiom: str
    witness: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.axiom}: {', '.join(self.witness)}"


@dataclass(frozen=True, eq=False)
class Calculus:
    """An immutable binary qualitative calculus.

    ``converse[i]`` is the index of the converse of relation ``i``;
    ``composition[i][j]`` is the bitmask of relations ``k`` such that
    ``a i b`` and ``b j c`` admit ``a k c``; ``neighbours[i]`` is the bitmask
    of relations reachable from ``i`` by one atomic change (irreflexive).
    """

    name: str
    relation_names: tuple[str, ...]
    identity: int
    converse: tuple[int, ...]
    composition: tuple[tuple[int, ...], ...]
    neighbours: tuple[int, ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.relation_names) > MAX_RELATIONS:
            raise CalculusError(f"at most {MAX_RELATIONS} relations supported")
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(self.relation_names)})

    # -- lookup -------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.relation_names)

    @property
    def relations(self) -> tuple[Relation, ...]:
        return tuple(Relation(i, n) for i, n in enumerate(self.relation_names))

    @property
    def full(self) -> int:
        return (1 << len(self.relation_names)) - 1

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown relation {name!r} in calculus {self.name}") from None

    def mask(self, names: Iterable[str]) -> int:
        m = 0
        for n in names:
            m |= 1 << self.index(n)
        return m

    def names(self, mask: int) -> list[str]:
        return [n for i, n in enumerate(self.relation_names) if mask >> i & 1]

    def conv(self, name: str) -> str:
        return self.relation_names[self.converse[self.index(name)]]

    def compose(self, r: str, s: str) -> set[str]:
        return set(self.names(self.composition[self.index(r)][self.index(s)]))

    def neighbourhood(self, name: str) -> set[str]:
        return set(self.names(self.neighbours[self.index(name)]))

    def edges(self) -> list[tuple[str, str]]:
        n = len(self)
        return [
            (self.relation_names[i], self.relation_names[j])
            for i in range(n)
            for j in range(i + 1, n)
            if self.neighbours[i] >> j & 1
        ]

    def converse_mask(self, mask: int) -> int:
        out = 0
        for i in range(len(self)):
            if mask >> i & 1:
                out |= 1 << self.converse[i]
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Calculus):
            return NotImplemented
        return (
            self.name == other.name
            and self.relation_names == other.relation_names
            and self.identity == other.identity
            and self.converse == other.converse
            and self.composition == other.composition
            and self.neighbours == other.neighbours
        )

    def __hash__(self) -> int:
        return hash((self.name, self.relation_names, self.composition))

    # -- (de)serialisation ---------------------------------------------------

    def serialize(self) -> str:
        rn = self.relation_names
        lines = [f"calculus {self.name}", "relations: " + " ".join(rn), f"identity: {rn[self.identity]}", "", "converse:"]
        lines += [f"  {rn[i]} -> {rn[self.converse[i]]}" for i in range(len(rn))]
        lines += ["", "composition:"]
        for i, j in product(range(len(rn)), repeat=2):
            cell = ", ".join(self.names(self.composition[i][j]))
            lines.append(f"  {rn[i]} ; {rn[j]} -> {{{cell}}}")
        lines += ["", "neighbourhood:"]
        lines += [f"  {a} -- {b}" for a, b in self.edges()]
        return "\n".join(lines) + "\n"


def validate(c: Calculus) -> list[Violation]:
    """Check the five coherence axioms exhaustively; returns all violations."""
    rn = c.relation_names
    n = len(rn)
    out: list[Violation] = []
    for r in range(n):
        if c.converse[c.converse[r]] != r:
            out.append(Violation("converse involution", (rn[r], rn[c.converse[r]], rn[c.converse[c.converse[r]]])))
    if c.converse[c.identity] != c.identity:
        out.append(Violation("converse of identity", (rn[c.identity], rn[c.converse[c.identity]])))
    for r in range(n):
        if c.composition[c.identity][r] != 1 << r:
            out.append(Violation("left identity", (rn[c.identity], rn[r])))
        if c.composition[r][c.identity] != 1 << r:
            out.append(Violation("right identity", (rn[r], rn[c.identity])))
    for r, s, t in product(range(n), repeat=3):
        lhs = c.composition[r][s] >> t & 1
        rhs = c.composition[c.converse[s]][c.converse[r]] >> c.converse[t] & 1
        if lhs != rhs:
            out.append(Violation("converse-composition coherence", (rn[r], rn[s], rn[t])))
    for r in range(n):
        if c.neighbours[r] >> r & 1:
            out.append(Violation("neighbourhood irreflexive", (rn[r],)))
        for s in range(n):
            if (c.neighbours[r] >> s & 1) != (c.neighbours[s] >> r & 1):
                out.append(Violation("neighbourhood symmetric", (rn[r], rn[s])))
    return out


# -- text format ---------------------------------------------------------------

_SECTION = re.compile(r"^(relations|identity|converse|composition|neighbourhood)\s*:\s*(.*)$")
_CONV = re.compile(r"^(\S+)\s*->\s*(\S+)$")
_COMP = re.compile(r"^(\S+)\s*;\s*(\S+)\s*->\s*\{([^}]*)\}$")
_NEIGH = re.compile(r"^(\S+)\s*--\s*(\S+)$")


def load_calculus(source: str, *, strict: bool = True) -> Calculus:
    """Parse a calculus document (see docs/formats.md) and validate it.

    A missing ``neighbourhood`` section yields the complete graph, with a
    warning.  With ``strict`` set, an incoherent calculus raises.
    """
    name = None
    relations: list[str] | None = None
    identity = None
    converse: dict[str, tuple[str, int]] = {}
    composition: dict[tuple[str, str], tuple[list[str], int]] = {}
    edges: list[tuple[str, str, int]] = []
    section = None
    for lineno, raw in enumerate(source.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        col = len(line) - len(line.lstrip()) + 1
        text = line.strip()
        if text.startswith("calculus ") or text == "calculus":
            parts = text.split()
            if len(parts) != 2:
                raise CalculusError("expected 'calculus <name>'", lineno, col)
            name = parts[1]
            continue
        m = _SECTION.match(text)
        if m:
            section, rest = m.group(1), m.group(2).strip()
            if section == "relations":
                relations = rest.split()
                if len(set(relations)) != len(relations):
                    raise CalculusError("duplicate relation name", lineno, col)
                section = None
            elif section == "identity":
                identity = (rest, lineno)
                section = None
            elif rest:
                raise CalculusError(f"unexpected text after '{section}:'", lineno, col + len(section) + 1)
            continue
        if section == "converse":
            m = _CONV.match(text)
            if not m:
                raise CalculusError("expected 'r -> s'", lineno, col)
            converse[m.group(1)] = (m.group(2), lineno)
        elif section == "composition":
            m = _COMP.match(text)
            if not m:
                raise CalculusError("expected 'r ; s -> {t1, t2, ...}'", lineno, col)
            cell = [t.strip() for t in m.group(3).split(",") if t.strip()]
            composition[(m.group(1), m.group(2))] = (cell, lineno)
        elif section == "neighbourhood":
            m = _NEIGH.match(text)
            if not m:
                raise CalculusError("expected 'r -- s'", lineno, col)
            edges.append((m.group(1), m.group(2), lineno))
        else:
            raise CalculusError(f"unexpected line {text!r}", lineno, col)

    if name is None:
        raise CalculusError("missing 'calculus <name>' header")
    if relations is None:
        raise CalculusError("missing 'relations:' section")
    if identity is None:
        raise CalculusError("missing 'identity:' line")
    idx = {r: i for i, r in enumerate(relations)}

    def resolve(sym: str, lineno: int) -> int:
        if sym not in idx:
            raise CalculusError(f"unknown relation {sym!r}", lineno)
        return idx[sym]

    n = len(relations)
    ident = resolve(*identity)
    conv = [-1] * n
    for r, (s, lineno) in converse.items():
        conv[resolve(r, lineno)] = resolve(s, lineno)
    missing = [relations[i] for i in range(n) if conv[i] < 0]
    if missing:
        raise CalculusError(f"converse undefined for {', '.join(missing)}")
    comp = [[0] * n for _ in range(n)]
    seen = set()
    for (r, s), (cell, lineno) in composition.items():
        i, j = resolve(r, lineno), resolve(s, lineno)
        mask = 0
        for t in cell:
            mask |= 1 << resolve(t, lineno)
        if not mask:
            raise CalculusError(f"empty composition cell {r} ; {s}", lineno)
        comp[i][j] = mask
        seen.add((i, j))
    if len(seen) != n * n:
        i, j = next((i, j) for i, j in product(range(n), repeat=2) if (i, j) not in seen)
        raise CalculusError(f"composition cell {relations[i]} ; {relations[j]} missing")
    neigh = [0] * n
    if edges:
        for a, b, lineno in edges:
            i, j = resolve(a, lineno), resolve(b, lineno)
            neigh[i] |= 1 << j
            neigh[j] |= 1 << i
    else:
        log.warning("calculus %s: no neighbourhood section, using the complete graph", name)
        full = (1 << n) - 1
        neigh = [full & ~(1 << i) for i in range(n)]

    calc = Calculus(
        name=name,
        relation_names=tuple(relations),
        identity=ident,
        converse=tuple(conv),
        composition=tuple(tuple(row) for row in comp),
        neighbours=tuple(neigh),
    )
    if strict:
        report = validate(calc)
        if report:
            raise CalculusError(f"calculus {name} violates {report[0]}")
    return calc


def load_calculus_file(path: str | Path) -> Calculus:
    return load_calculus(Path(path).read_text())


@lru_cache(maxsize=None)
def _builtin(filename: str) -> Calculus:
    text = resources.files("qualsim.data").joinpath(filename).read_text()
    return load_calculus(text)


def builtin_rcc8() -> Calculus:
    return _builtin("rcc8.calc")


def builtin_cardinal() -> Calculus:
    return _builtin("cardinal.calc")


BUILTINS = {"rcc8": builtin_rcc8, "cardinal": builtin_cardinal}


def resolve_calculus(ref: str, base: Path | None = None) -> Calculus:
    """A builtin name (``rcc8``, ``cardinal``) or a path to a calculus file."""
    if ref in BUILTINS:
        return BUILTINS[ref]()
    path = Path(ref)
    if base is not None and not path.is_absolute():
        path = base / path
    return load_calculus_file(path)
