import random

import pytest

from qualsim.calculus import builtin_cardinal, builtin_rcc8
from qualsim.csp import ArrayElement, IntCompare, ReifiedMember, Store, solve_all
from qualsim.temporal import FUTURE, PAST, Always, Atom, Implies, Next, nnf, parse, parse_rule
from qualsim.translate import (
    ARRAY,
    UNFOLD,
    StageSpace,
    TranslationError,
    Translator,
    array_translate,
    post_rule,
    unfold,
)
from equivalence import interval_discrepancies
from oracles import (
    FUTURE_BINARY,
    FUTURE_UNARY,
    LEAVES,
    PAST_BINARY,
    PAST_UNARY,
    formulas_up_to_depth,
    two_calculus,
)

CARDINAL = builtin_cardinal()
RCC8 = builtin_rcc8()
TWO = two_calculus()
NESTED = parse("F (Q[ship,buoy_a] = E & F Q[ship,buoy_a] = S)")


def space_for(objects, calc, horizon):
    store = Store()
    return store, StageSpace.create(store, objects, calc, horizon)


def count(posted, kind, op=None):
    return sum(isinstance(c, kind) and (op is None or c.op == op) for c in posted)


def test_stage_space_layout():
    store, space = space_for(["a", "b"], RCC8, 3)
    assert space.horizon == 3
    assert len(space.relation_vars()) == 12
    assert store.value(space.var("a", "a", 2)) == RCC8.identity
    assert len(store.values(space.var("a", "b", 1))) == 8
    with pytest.raises(TranslationError):
        space.var("a", "b", 3)


@pytest.mark.parametrize("n", range(1, 11))
def test_unfold_nested_eventually_count(n):
    store, space = space_for(["ship", "buoy_a"], CARDINAL, n + 1)
    res = unfold(NESTED, FUTURE, (1, n), space, store, memo=False)
    assert count(res.posted, ReifiedMember) == n * (n + 3) // 2


def test_unfold_memo_shares_atoms():
    n = 8
    store, space = space_for(["ship", "buoy_a"], CARDINAL, n + 1)
    res = unfold(NESTED, FUTURE, (1, n), space, store)
    # one reified equality per (atom, stage)
    assert count(res.posted, ReifiedMember) == 2 * n


def test_unfold_single_eventually():
    store, space = space_for(["A", "B"], TWO, 4)
    res = unfold(parse("F Q[A,B] = same"), FUTURE, (1, 3), space, store)
    assert count(res.posted, ReifiedMember) == 3
    store.fix(res.truth, 1)
    for t in (1, 2):
        store.fix(space.var("A", "B", t), TWO.index("diff"))
    assert store.propagate()
    assert store.value(space.var("A", "B", 3)) == TWO.index("same")


def test_array_nested_eventually_shape():
    n = 6
    store, space = space_for(["ship", "buoy_a"], CARDINAL, n + 1)
    res = array_translate(nnf(NESTED), FUTURE, (1, n), space, store)
    assert count(res.posted, ArrayElement) == 2
    assert count(res.posted, IntCompare, "<=") == 4
    assert count(res.posted, ReifiedMember) == 0


def test_array_atom_at_constant_time():
    store, space = space_for(["A", "B"], TWO, 3)
    res = array_translate(parse("Q[A,B] = same"), FUTURE, (1, 2), space, store)
    assert count(res.posted, ReifiedMember) == 1
    assert count(res.posted, ArrayElement) == 0


@pytest.mark.parametrize("mode", [UNFOLD, ARRAY])
def test_next_at_last_stage_is_false(mode):
    store, space = space_for(["A", "B"], TWO, 3)
    b = Translator(store, space).truth(parse("X true"), FUTURE, 2, 2, mode)
    assert store.propagate()
    assert store.value(b) == 0


def test_array_rejects_non_nnf():
    store, space = space_for(["A", "B"], TWO, 3)
    with pytest.raises(TranslationError):
        array_translate(parse("!F Q[A,B] = same"), FUTURE, (0, 2), space, store)


def test_interval_checks():
    store, space = space_for(["A", "B"], TWO, 3)
    with pytest.raises(TranslationError):
        unfold(parse("true"), FUTURE, (1, 3), space, store)
    with pytest.raises(TranslationError):
        unfold(parse("true"), FUTURE, (2, 1), space, store)


def test_past_array_needs_constant_bounds():
    store, space = space_for(["A", "B"], TWO, 3)
    tr = Translator(store, space)
    r = tr._time_var(0, 2, "r")
    with pytest.raises(TranslationError):
        tr.array(parse("Fp Q[A,B] = same"), PAST, r, 2)


# -- rules ----------------------------------------------------------------------------------


@pytest.mark.parametrize("mode", [UNFOLD, ARRAY])
def test_invariant_rule_constrains_future(mode):
    store, space = space_for(["A", "B"], TWO, 4)
    rule = parse_rule("invariant Q[A,B] = same")
    assert rule.body == Implies(Atom("A", "B", "=", "same"), Next(Always(Atom("A", "B", "=", "same"))))
    post_rule(rule, 1, space, store, mode)
    store.fix(space.var("A", "B", 1), TWO.index("same"))
    assert store.propagate()
    assert [store.values(space.var("A", "B", t)) for t in (2, 3)] == [[0], [0]]
    assert store.values(space.var("A", "B", 0)) == [0, 1]


@pytest.mark.parametrize("mode", [UNFOLD, ARRAY])
def test_false_premise_prunes_nothing(mode):
    store, space = space_for(["A", "B"], TWO, 3)
    post_rule(parse_rule("Q[A,B] = same => Q[A,B] = same"), 0, space, store, mode)
    store.fix(space.var("A", "B", 0), TWO.index("diff"))
    assert store.propagate()
    assert store.values(space.var("A", "B", 1)) == [0, 1]
    assert store.values(space.var("A", "B", 2)) == [0, 1]


@pytest.mark.parametrize("mode", [UNFOLD, ARRAY])
def test_contact_rule_forces_next_stage(mode):
    store, space = space_for(["nutrient", "amoeba"], RCC8, 2)
    post_rule(parse_rule("Q[nutrient,amoeba] = meet => Q[nutrient,amoeba] = overlap"), 0, space, store, mode)
    store.fix(space.var("nutrient", "amoeba", 0), RCC8.index("meet"))
    assert store.propagate()
    assert RCC8.names(store.dom[space.var("nutrient", "amoeba", 1)]) == ["overlap"]


def test_split_rule_posting():
    # once B has been seen different, it stays different
    rule = parse_rule("ite(Fp Q[A,B] = diff, X G Q[A,B] = diff, X true)")
    for mode in (UNFOLD, ARRAY):
        store, space = space_for(["A", "B"], TWO, 4)
        for t0 in range(3):
            post_rule(rule, t0, space, store, mode)
        store.fix(space.var("A", "B", 1), TWO.index("diff"))
        assert store.propagate()
        assert [store.values(space.var("A", "B", t)) for t in range(4)] == [[0, 1], [1], [1], [1]]


def test_rule_time_range_checks():
    rule = parse_rule("Q[A,B] = same => Q[A,B] = same")
    store, space = space_for(["A", "B"], TWO, 1)
    with pytest.raises(TranslationError):
        post_rule(rule, 0, space, store)
    store, space = space_for(["A", "B"], TWO, 3)
    with pytest.raises(TranslationError):
        post_rule(rule, 2, space, store)


# -- agreement with the evaluator --------------------------------------------------------------

FUT = formulas_up_to_depth(3, LEAVES, FUTURE_UNARY, FUTURE_BINARY)
PST = formulas_up_to_depth(3, LEAVES, PAST_UNARY, PAST_BINARY)


@pytest.mark.parametrize("direction,pool", [(FUTURE, FUT), (PAST, PST)])
def test_sub_interval_oracle_agreement(direction, pool):
    # every sub-interval of every four-stage trace, for every fifth formula
    bad = []
    for f in pool[::5]:
        bad += interval_discrepancies(f, direction, 4)
    assert bad == []


def _models(f, direction, n, mode):
    store, space = space_for(["A", "B"], TWO, n)
    Translator(store, space).require(f, direction, 0, n - 1, mode)
    qs = [space.var("A", "B", t) for t in range(n)]
    return {tuple(sol[q] for q in qs) for sol in solve_all(store, project=qs)}


def test_solution_sets_agree_between_modes():
    rng = random.Random(3)
    for direction, pool in ((FUTURE, FUT), (PAST, PST)):
        for f in rng.sample(pool, 40):
            for n in (2, 3):
                assert _models(f, direction, n, UNFOLD) == _models(f, direction, n, ARRAY)
