"""Scenarios and the iterative-deepening simulation loop.

A simulation is a sequence of stages, one qualitative array per time point.
For each horizon ``u = 1, 2, ...`` a fresh constraint store is built with
stages ``0..u-1``; the first horizon whose store admits a solution gives a
shortest simulation.
"""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Sequence

import yaml

from . import csp
from .calculus import Calculus, resolve_calculus
from .csp import BinaryTable, BoolClause, ExtensionalBinary, ExtensionalTernary, Heuristic, SearchExhausted, Store, TernaryTable, VarId
from .temporal import (
    FUTURE,
    PAST,
    And,
    Atom,
    Formula,
    FormulaError,
    InterStateRule,
    Member,
    desugar,
    is_future,
    is_past,
    object_names,
    parse,
    parse_rule,
    relation_names,
)
from .translate import ARRAY, UNFOLD, StageSpace, Translator

log = logging.getLogger(__name__)

TMAX_CAP = 100_000

BUILTIN_SCENARIOS = ("navigation", "piano", "phagocytosis")

Stages = list[dict[tuple[str, str], str]]


class ScenarioError(ValueError):
    pass


class Status(enum.Enum):
    SOLUTION = "Solution"
    NO_SOLUTION = "NoSolutionWithinTmax"
    BUDGET_EXHAUSTED = "BudgetExhausted"


@dataclass
class Options:
    t_max: int | None = None
    non_circular: bool = True
    translation: str = ARRAY
    heuristic: str = "default"
    node_budget: int | None = None
    time_budget: float | None = None
    max_changes_per_step: int | None = None
    min_horizon: int = 1


@dataclass
class Scenario:
    name: str
    objects: tuple[str, ...]
    calculus: Calculus
    initial: list[Formula] = field(default_factory=list)
    intra: list[Formula] = field(default_factory=list)
    rules: list[InterStateRule] = field(default_factory=list)
    goals: list[Formula] = field(default_factory=list)
    final: list[Formula] = field(default_factory=list)
    options: Options = field(default_factory=Options)
    sets: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(set(self.objects)) != len(self.objects):
            raise ScenarioError("object names must be unique")
        if not self.objects:
            raise ScenarioError("a scenario needs at least one object")
        known = set(self.objects)
        rels = set(self.calculus.relation_names)
        try:
            self.initial = [desugar(f, self.objects) for f in self.initial]
            self.intra = [desugar(f, self.objects) for f in self.intra]
            self.goals = [desugar(f, self.objects) for f in self.goals]
            self.final = [desugar(f, self.objects) for f in self.final]
            self.rules = [InterStateRule(desugar(r.body, self.objects), r.label) for r in self.rules]
        except FormulaError as e:
            raise ScenarioError(str(e)) from e
        everything = self.initial + self.intra + self.goals + self.final + [r.body for r in self.rules]
        for f in everything:
            bad = object_names(f) - known
            if bad:
                raise ScenarioError(f"unknown objects {sorted(bad)} in {f}")
            bad = relation_names(f) - rels
            if bad:
                raise ScenarioError(f"relations {sorted(bad)} not in calculus {self.calculus.name}")
        for f in self.intra + self.final:
            if is_past(f) or is_future(f):
                raise ScenarioError(f"intra-state and final formulas must be non-temporal: {f}")
        for f in self.initial:
            if is_future(f):
                raise ScenarioError(f"initial formulas may only look backwards: {f}")
        for f in self.goals:
            if is_past(f):
                raise ScenarioError(f"goal formulas may only look forwards: {f}")

    @property
    def pairs(self) -> list[tuple[str, str]]:
        return [(a, b) for a in self.objects for b in self.objects if a != b]


@dataclass
class HorizonStats:
    horizon: int
    consistent: bool
    nodes: int = 0
    backtracks: int = 0
    seconds: float = 0.0
    variables: int = 0
    constraints: int = 0


@dataclass
class SimulationResult:
    status: Status
    stages: Stages | None = None
    stats: list[HorizonStats] = field(default_factory=list)
    message: str = ""

    @property
    def num_transitions(self) -> int | None:
        return None if self.stages is None else len(self.stages) - 1


@dataclass
class EnumerationResult:
    simulations: list[SimulationResult]
    truncated: bool


# -- scenario files ----------------------------------------------------------------


def _as_list(value: Any, key: str) -> list:
    if value is None:
        return []
    if isinstance(value, (str, dict)):
        return [value]
    if not isinstance(value, list):
        raise ScenarioError(f"'{key}' must be a list")
    return value


def scenario_from_dict(doc: Mapping[str, Any], base: Path | None = None) -> Scenario:
    known = {"name", "objects", "calculus", "sets", "initial", "intra", "rules", "goals", "final", "options"}
    extra = set(doc) - known
    if extra:
        raise ScenarioError(f"unknown sections {sorted(extra)}")
    objects = tuple(str(o) for o in _as_list(doc.get("objects"), "objects"))
    try:
        calculus = resolve_calculus(str(doc.get("calculus", "rcc8")), base)
    except (OSError, ValueError) as e:
        raise ScenarioError(f"cannot load calculus: {e}") from e
    sets = {"objects": objects}
    for key, members in (doc.get("sets") or {}).items():
        sets[str(key)] = tuple(str(m) for m in members)

    def formulas(key: str) -> list[Formula]:
        out = []
        for text in _as_list(doc.get(key), key):
            if not isinstance(text, str):
                raise ScenarioError(f"{key}: expected a formula string, got {text!r} (quote formulas containing ':')")
            try:
                out.append(parse(str(text), sets))
            except FormulaError as e:
                raise ScenarioError(f"{key}: {e}") from e
        return out

    rules = []
    for i, item in enumerate(_as_list(doc.get("rules"), "rules")):
        if isinstance(item, dict):
            text, label = str(item.get("rule", "")), str(item.get("label", f"rule{i}"))
        else:
            text, label = str(item), f"rule{i}"
        try:
            rules.append(parse_rule(text, sets, label))
        except FormulaError as e:
            raise ScenarioError(f"rules[{i}]: {e}") from e
    raw = dict(doc.get("options") or {})
    try:
        options = Options(**raw)
    except TypeError as e:
        raise ScenarioError(f"bad options: {e}") from e
    if options.translation not in (ARRAY, UNFOLD):
        raise ScenarioError(f"unknown translation {options.translation!r}")
    return Scenario(
        name=str(doc.get("name", "scenario")),
        objects=objects,
        calculus=calculus,
        initial=formulas("initial"),
        intra=formulas("intra"),
        rules=rules,
        goals=formulas("goals"),
        final=formulas("final"),
        options=options,
        sets=sets,
    )


def load_scenario(ref: str | Path) -> Scenario:
    """A builtin scenario name or a path to a YAML scenario file."""
    if str(ref) in BUILTIN_SCENARIOS:
        text = resources.files("qualsim.scenarios").joinpath(f"{ref}.yaml").read_text()
        base = None
    else:
        path = Path(ref)
        try:
            text = path.read_text()
        except OSError as e:
            raise ScenarioError(f"cannot read scenario {ref}: {e}") from e
        base = path.parent
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ScenarioError(f"malformed scenario file: {e}") from e
    if not isinstance(doc, dict):
        raise ScenarioError("a scenario file must be a mapping")
    return scenario_from_dict(doc, base)


# -- model construction ----------------------------------------------------------------


def initial_domains(scenario: Scenario) -> dict[tuple[str, str], int]:
    """Domain restrictions read off top-level atoms of the initial formulas."""
    calc = scenario.calculus
    out: dict[tuple[str, str], int] = {}

    def restrict(a: str, b: str, mask: int) -> None:
        out[(a, b)] = out.get((a, b), calc.full) & mask
        out[(b, a)] = out.get((b, a), calc.full) & calc.converse_mask(mask)

    def walk(f: Formula) -> None:
        if isinstance(f, And):
            walk(f.l)
            walk(f.r)
        elif isinstance(f, Atom):
            m = 1 << calc.index(f.rel)
            restrict(f.a, f.b, m if f.op == "=" else calc.full & ~m)
        elif isinstance(f, Member):
            m = calc.mask(f.rels)
            restrict(f.a, f.b, m if f.positive else calc.full & ~m)

    for f in scenario.initial:
        walk(f)
    return out


class Model:
    """The constraint model of one scenario at one horizon."""

    def __init__(self, scenario: Scenario, horizon: int, translation: str | None = None, non_circular: bool | None = None, goals: bool = True):
        if horizon < 1:
            raise ScenarioError("horizon must be at least 1")
        self.scenario = scenario
        self.horizon = horizon
        self.mode = translation or scenario.options.translation
        self.non_circular = scenario.options.non_circular if non_circular is None else non_circular
        self.store = Store()
        self.space = StageSpace(scenario.objects, scenario.calculus, 0)
        self.translator = Translator(self.store, self.space)
        calc = scenario.calculus
        self._conv = BinaryTable(((i, calc.converse[i]) for i in range(len(calc))), name="conv")
        self._comp = TernaryTable.composition(calc)
        self._link = BinaryTable(
            ((i, j) for i in range(len(calc)) for j in range(len(calc)) if i == j or calc.neighbours[i] >> j & 1),
            name="neighbour",
        )
        self.counts: dict[str, int] = {"converse": 0, "composition": 0, "link": 0, "noncircular": 0}
        self.contradictory = False
        for t in range(horizon):
            self.build_stage(t)
        for t in range(horizon - 1):
            self.link_stages(t)
        tr = self.translator
        for f in scenario.initial:
            tr.require(f, PAST, 0, 0, UNFOLD)
        if horizon >= 2:
            for rule in scenario.rules:
                for t0 in range(horizon - 1):
                    tr.post_rule(rule, t0, self.mode)
        for f in scenario.goals if goals else ():
            tr.require(f, FUTURE, 0, horizon - 1, self.mode)
        if self.non_circular and horizon >= 2:
            self.post_non_circularity()
        if scenario.options.max_changes_per_step is not None:
            self.post_change_limit(scenario.options.max_changes_per_step)
        if self.contradictory:
            self.store.failed = True

    def build_stage(self, t: int) -> None:
        sc = self.scenario
        store = self.store
        domains = None
        if t == 0:
            domains = initial_domains(sc)
            if not all(domains.values()):
                # contradictory restrictions: keep the variables, fail the store
                domains = {p: m or sc.calculus.full for p, m in domains.items()}
                self.contradictory = True
        t_new = self.space.add_stage(store, domains)
        assert t_new == t
        objs = sc.objects
        q = self.space.q
        for i, a in enumerate(objs):
            for b in objs[i + 1:]:
                store.post(ExtensionalBinary(q[(a, b, t)], q[(b, a, t)], self._conv))
                self.counts["converse"] += 1
        for a in objs:
            for b in objs:
                if b == a:
                    continue
                for c in objs:
                    if c == a or c == b:
                        continue
                    store.post(ExtensionalTernary(q[(a, b, t)], q[(b, c, t)], q[(a, c, t)], self._comp))
                    self.counts["composition"] += 1
        for f in sc.intra:
            self.translator.require(f, FUTURE, t, t, UNFOLD)

    def link_stages(self, t: int) -> None:
        q = self.space.q
        for a, b in self.scenario.pairs:
            self.store.post(ExtensionalBinary(q[(a, b, t)], q[(a, b, t + 1)], self._link))
            self.counts["link"] += 1

    def _unordered(self) -> list[tuple[str, str]]:
        objs = self.scenario.objects
        return [(a, b) for i, a in enumerate(objs) for b in objs[i + 1:]]

    def _same(self, a: str, b: str, i: int, j: int) -> VarId:
        """Boolean that is 1 exactly when pair (a, b) has the same relation at stages i and j."""
        q = self.space.q
        eq = self.store.new_bool(f"same[{a},{b},{i},{j}]")
        n = len(self.scenario.calculus)
        self.store.post(ExtensionalTernary(q[(a, b, i)], q[(a, b, j)], eq, _EQUALITY_TABLES.setdefault(n, _equality_table(n))))
        return eq

    def post_non_circularity(self) -> None:
        """Every two stages differ on at least one pair."""
        pairs = self._unordered()
        for i in range(self.horizon):
            for j in range(i + 1, self.horizon):
                lits = [(self._same(a, b, i, j), False) for a, b in pairs]
                self.store.post(BoolClause(lits))
                self.counts["noncircular"] += 1

    def post_change_limit(self, k: int) -> None:
        pairs = self._unordered()
        for t in range(self.horizon - 1):
            changed = [(self._same(a, b, t, t + 1), False) for a, b in pairs]
            self.store.post(AtMost(changed, k))

    def impose_final(self) -> None:
        for f in self.scenario.final:
            self.translator.require(f, FUTURE, self.horizon - 1, self.horizon - 1, UNFOLD)

    def heuristic(self, name: str | None = None) -> Heuristic:
        name = name or self.scenario.options.heuristic
        if name == "default":
            return Heuristic()
        if name == "tractable":
            return Heuristic(subclasses=TRACTABLE_SUBCLASSES)
        raise ScenarioError(f"unknown heuristic {name!r}")

    def stages_of(self, values: Sequence[int]) -> Stages:
        return self.space.trace(values)


# No tractable subclass tables ship; the heuristic then splits singletons first.
TRACTABLE_SUBCLASSES: dict[str, list[int]] = {}


def _equality_table(n: int) -> TernaryTable:
    return TernaryTable(((x, y, int(x == y)) for x in range(n) for y in range(n)), name="same")


_EQUALITY_TABLES: dict[int, TernaryTable] = {}


class AtMost(csp.Constraint):
    """At most ``k`` of the literals are true."""

    def __init__(self, literals: Sequence[csp.Literal], k: int):
        self.literals = tuple(literals)
        self.k = k
        self.vars = tuple(dict.fromkeys(v for v, _ in self.literals))

    def propagate(self, store: Store) -> bool:
        vals = [csp.BoolOr._val(store.dom, lit) for lit in self.literals]
        ones = vals.count(1)
        if ones > self.k:
            store.failed = True
            return False
        if ones == self.k:
            return all(csp.BoolOr._set(store, lit, 0) for lit, v in zip(self.literals, vals) if v == -1)
        return True


# -- simulation ---------------------------------------------------------------------------------


def default_tmax(scenario: Scenario, cap: int = TMAX_CAP) -> int:
    """Number of distinct qualitative arrays, ``|O| (|O|-1) 2^(|Q|-1)``, or the override."""
    if scenario.options.t_max is not None:
        return scenario.options.t_max
    n = len(scenario.objects)
    bound = n * (n - 1) * 2 ** (len(scenario.calculus) - 1)
    if bound > cap:
        raise ScenarioError(f"default t_max {bound} exceeds the cap {cap}; set options.t_max explicitly")
    return max(bound, 1)


def _stage_zero_consistent(scenario: Scenario) -> bool:
    """Stage 0 with its initial and intra-state constraints appears in every
    horizon's model unchanged, so if it alone is inconsistent no horizon can
    succeed."""
    model = Model(scenario, 1, non_circular=False, goals=False)
    return model.store.propagate()


def simulate(scenario: Scenario, *, t_max: int | None = None, heuristic: str | None = None, translation: str | None = None, non_circular: bool | None = None, node_budget: int | None = None, time_budget: float | None = None, progress=None) -> SimulationResult:
    """Shortest simulation from the initial to the final situation."""
    opts = scenario.options
    limit = t_max if t_max is not None else default_tmax(scenario)
    node_budget = node_budget if node_budget is not None else opts.node_budget
    time_budget = time_budget if time_budget is not None else opts.time_budget
    deadline = None if time_budget is None else time.monotonic() + time_budget
    nodes_left = node_budget
    stats: list[HorizonStats] = []
    if not _stage_zero_consistent(scenario):
        return SimulationResult(Status.NO_SOLUTION, None, stats, "the initial situation is inconsistent")
    for u in range(max(1, opts.min_horizon), limit + 1):
        started = time.monotonic()
        model = Model(scenario, u, translation, non_circular)
        store = model.store
        hs = HorizonStats(u, False, variables=len(store), constraints=len(store.constraints))
        stats.append(hs)
        solution = None
        if store.propagate():
            hs.consistent = True
            model.impose_final()
            remaining = None if deadline is None else max(0.0, deadline - time.monotonic())
            try:
                solution = csp.solve(store, model.heuristic(heuristic), node_budget=nodes_left, time_budget=remaining)
            except SearchExhausted as e:
                hs.nodes, hs.backtracks = store.nodes, store.backtracks
                hs.seconds = time.monotonic() - started
                return SimulationResult(Status.BUDGET_EXHAUSTED, None, stats, str(e))
        hs.nodes, hs.backtracks = store.nodes, store.backtracks
        hs.seconds = time.monotonic() - started
        if progress is not None:
            progress(hs)
        log.info("horizon %d: consistent=%s nodes=%d %.2fs", u, hs.consistent, hs.nodes, hs.seconds)
        if solution is not None:
            return SimulationResult(Status.SOLUTION, model.stages_of(solution), stats)
        if nodes_left is not None:
            nodes_left -= hs.nodes
            if nodes_left <= 0:
                return SimulationResult(Status.BUDGET_EXHAUSTED, None, stats, "node budget exhausted")
        if deadline is not None and time.monotonic() > deadline:
            return SimulationResult(Status.BUDGET_EXHAUSTED, None, stats, "time budget exhausted")
    return SimulationResult(Status.NO_SOLUTION, None, stats, f"no simulation with at most {limit} stages")


def enumerate_simulations(scenario: Scenario, horizon: int, limit: int | None = None, *, heuristic: str | None = None, translation: str | None = None, non_circular: bool | None = None, node_budget: int | None = None, time_budget: float | None = None) -> EnumerationResult:
    """All ground simulations with exactly ``horizon`` stages (up to ``limit``)."""
    model = Model(scenario, horizon, translation, non_circular)
    store = model.store
    started = time.monotonic()
    hs = HorizonStats(horizon, store.propagate(), variables=len(store), constraints=len(store.constraints))
    if not hs.consistent:
        return EnumerationResult([], False)
    model.impose_final()
    fetch = None if limit is None else limit + 1
    sols = csp.solve_all(
        store,
        model.heuristic(heuristic),
        fetch,
        project=model.space.relation_vars(),
        node_budget=node_budget,
        time_budget=time_budget,
    )
    hs.nodes, hs.backtracks, hs.seconds = store.nodes, store.backtracks, time.monotonic() - started
    truncated = limit is not None and len(sols) > limit
    sols = sols[:limit] if limit is not None else sols
    return EnumerationResult([SimulationResult(Status.SOLUTION, model.stages_of(s), [hs]) for s in sols], truncated)


def build_stage(scenario: Scenario, t: int, model: Model) -> None:
    model.build_stage(t)


def link_stages(scenario: Scenario, t: int, model: Model) -> None:
    model.link_stages(t)


def non_circularity(model: Model) -> None:
    model.post_non_circularity()
