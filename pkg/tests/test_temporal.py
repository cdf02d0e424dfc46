import itertools

import pytest
from hypothesis import given, settings, strategies as st

from qualsim.temporal import (
    FALSE,
    FUTURE,
    PAST,
    TRUE,
    Always,
    AlwaysPast,
    And,
    Atom,
    Eventually,
    EventuallyPast,
    Exists,
    ForAll,
    FormulaError,
    IfThenElse,
    Implies,
    InterStateRule,
    Member,
    Next,
    Not,
    ObjEq,
    Or,
    ParseError,
    PolarityError,
    Prev,
    Release,
    Since,
    Trigger,
    Until,
    WeakNext,
    WeakPrev,
    depth,
    desugar,
    evaluate,
    evaluate_rule,
    is_nnf,
    mirror,
    nnf,
    parse,
    parse_rule,
    show,
)
from oracles import (
    FUTURE_BINARY,
    FUTURE_UNARY,
    LEAVES,
    PAST_BINARY,
    PAST_UNARY,
    formulas_up_to_depth,
    traces,
)

SAME = Atom("A", "B", "=", "same")
DIFF = Atom("A", "B", "=", "diff")

ALL_TRACES = [tr for n in range(1, 5) for tr in traces(n)]
FUTURE_FORMULAS = formulas_up_to_depth(3, LEAVES, FUTURE_UNARY, FUTURE_BINARY)
PAST_FORMULAS = formulas_up_to_depth(3, LEAVES, PAST_UNARY, PAST_BINARY)


def intervals(n):
    return [(s, t) for s in range(n) for t in range(s, n)]


def trace_of(word):
    return [
        {("A", "A"): "same", ("B", "B"): "same", ("A", "B"): r, ("B", "A"): r}
        for r in ("same" if c == "s" else "diff" for c in word)
    ]


# -- parsing -------------------------------------------------------------------------


def test_parse_atoms():
    assert parse("Q[A,B] = same") == SAME
    assert parse("Q[A,B] == same") == SAME
    assert parse("Q[A,B] != diff") == Atom("A", "B", "!=", "diff")
    assert parse("Q[A,B] in {same, diff}") == Member("A", "B", True, ("same", "diff"))
    assert parse("Q[A,B] notin {diff}") == Member("A", "B", False, ("diff",))
    assert parse("A == B") == ObjEq("A", "B", True)
    assert parse("true") == TRUE and parse("false") == FALSE


def test_parse_precedence():
    assert parse("Q[A,B]=same & Q[A,B]=diff | true") == Or(And(SAME, DIFF), TRUE)
    assert parse("true -> true -> Q[A,B]=same") == Implies(TRUE, Implies(TRUE, SAME))
    assert parse("X Q[A,B]=same U Q[A,B]=diff") == Until(Next(SAME), DIFF)
    assert parse("F G Q[A,B]=same") == Eventually(Always(SAME))
    assert parse("Q[A,B]=same S Q[A,B]=diff & true") == And(Since(SAME, DIFF), TRUE)
    assert parse("Xp WXp Fp Gp Q[A,B]=same") == Prev(WeakPrev(EventuallyPast(AlwaysPast(SAME))))
    assert parse("WX (Q[A,B]=same R Q[A,B]=diff)") == WeakNext(Release(SAME, DIFF))
    assert parse("Q[A,B]=same T Q[A,B]=diff") == Trigger(SAME, DIFF)


def test_parse_named_sets_and_quantifiers():
    sets = {"rels": ["same", "diff"], "objs": ["A", "B"]}
    assert parse("Q[A,B] in rels", sets) == Member("A", "B", True, ("same", "diff"))
    f = parse("forall x, y in objs: x != y -> Q[x,y] = diff", sets)
    assert f == ForAll(("x", "y"), ("A", "B"), Implies(ObjEq("x", "y", False), Atom("x", "y", "=", "diff")))
    g = parse("exists x in {A}: Q[x,B] = same")
    assert isinstance(g, Exists)
    assert parse("ite(Q[A,B]=same, X true, true)") == IfThenElse(SAME, Next(TRUE), TRUE)


@pytest.mark.parametrize("text,pos", [
    ("Q[A,B] = ", 9),
    ("Q[A,B] = same &", 15),
    ("(Q[A,B] = same", 14),
    ("Q[A,B] % same", 7),
])
def test_parse_errors_report_position(text, pos):
    with pytest.raises(ParseError) as err:
        parse(text)
    assert err.value.pos == pos


def test_unknown_set_name():
    with pytest.raises(ParseError):
        parse("Q[A,B] in nowhere", {})


def test_show_parse_round_trip():
    for f in FUTURE_FORMULAS[:400] + PAST_FORMULAS[:400]:
        assert parse(show(f)) == f


# -- polarity ---------------------------------------------------------------------------


def test_mixed_direction_rejected():
    f = parse("X Xp Q[A,B]=same")
    with pytest.raises(PolarityError):
        nnf(f)
    with pytest.raises(PolarityError):
        nnf(parse("Fp Q[A,B]=same"), FUTURE)


def test_rule_polarity():
    with pytest.raises(PolarityError):
        parse_rule("F Q[A,B]=same => Q[A,B]=diff")
    with pytest.raises(PolarityError):
        parse_rule("Q[A,B]=same => Xp Q[A,B]=diff")
    with pytest.raises(PolarityError):
        parse_rule("invariant F Q[A,B]=same")
    with pytest.raises(PolarityError):
        parse_rule("Q[A,B]=same -> F Q[A,B]=diff")
    with pytest.raises(ParseError):
        parse_rule("true => true => true")


def test_rule_shapes():
    r = parse_rule("Xp Q[A,B]=same => Q[A,B]=diff", label="flip")
    assert r == InterStateRule.of(Prev(SAME), DIFF, "flip")
    assert r.past == Prev(SAME) and r.future == DIFF
    inv = parse_rule("invariant Q[A,B]=same")
    assert inv.body == Implies(SAME, Next(Always(SAME)))
    split = parse_rule("Q[A,B]=same & X Q[A,B]=diff | Fp Q[A,B]=diff")
    assert split.past is None
    assert split.body == Or(And(SAME, Next(DIFF)), EventuallyPast(DIFF))


def test_evaluate_rule_meaning():
    rule = parse_rule("Q[A,B]=same => Q[A,B]=diff")
    tr = trace_of("sdsd")
    assert all(evaluate_rule(rule, tr, t0) for t0 in range(3))
    assert not evaluate_rule(rule, trace_of("ss"), 0)
    inv = parse_rule("invariant Q[A,B]=diff")
    assert evaluate_rule(inv, trace_of("sdd"), 0)
    assert not evaluate_rule(inv, trace_of("dds"), 0)
    # split-form rule: past leaf read on [0..t0], future leaf on [t0+1..end]
    split = parse_rule("ite(Fp Q[A,B]=diff, X G Q[A,B]=diff, X true)")
    assert evaluate_rule(split, trace_of("sdd"), 1)
    assert not evaluate_rule(split, trace_of("sds"), 1)
    assert evaluate_rule(split, trace_of("sds"), 0)


# -- desugaring -------------------------------------------------------------------------------


def test_desugar_expands_everything():
    f = desugar(parse("forall x, y in {A, B}: x != y -> Q[x,y] != same"), ["A", "B"])
    tr = trace_of("d")
    assert evaluate(f, tr, (0, 0))
    assert not evaluate(f, trace_of("s"), (0, 0))
    m = desugar(parse("Q[A,B] notin {same, diff}"))
    assert m == And(Atom("A", "B", "!=", "same"), Atom("A", "B", "!=", "diff"))
    e = desugar(parse("exists x in {A, B}: Q[x,A] = diff"))
    assert evaluate(e, trace_of("d"), (0, 0)) and not evaluate(e, trace_of("s"), (0, 0))


def test_desugar_checks_names():
    with pytest.raises(FormulaError):
        desugar(parse("Q[A,C] = same"), ["A", "B"])
    with pytest.raises(FormulaError):
        desugar(parse("forall x in {C}: Q[x,A] = same"), ["A", "B"])


def test_ite_meaning():
    f = desugar(parse("ite(Q[A,B]=same, X Q[A,B]=diff, X Q[A,B]=same)"))
    assert evaluate(f, trace_of("sd"), (0, 1))
    assert evaluate(f, trace_of("dd"), (0, 1)) is False
    assert evaluate(f, trace_of("ds"), (0, 1))


# -- semantics -----------------------------------------------------------------------------------


def test_hand_evaluations():
    tr = trace_of("sdds")
    assert evaluate(parse("X Q[A,B]=diff"), tr, (0, 3))
    assert not evaluate(parse("X true"), tr, (3, 3))
    assert evaluate(parse("WX false"), tr, (3, 3))
    assert evaluate(parse("Q[A,B]=diff U Q[A,B]=same"), tr, (1, 3))
    assert not evaluate(parse("Q[A,B]=diff U Q[A,B]=same"), tr, (1, 2))
    assert evaluate(parse("G Q[A,B]=diff"), tr, (1, 2))
    # past atoms read the upper bound
    assert evaluate(parse("Q[A,B]=same"), tr, (0, 3), PAST)
    assert evaluate(parse("Q[A,B]=diff S Q[A,B]=same"), tr, (0, 2), PAST)
    assert not evaluate(parse("Q[A,B]=diff S Q[A,B]=same"), tr, (1, 2), PAST)
    assert not evaluate(parse("Xp true"), tr, (2, 2), PAST)
    assert evaluate(parse("Gp Q[A,B]=diff"), tr, (1, 2), PAST)


def test_empty_interval_rejected():
    with pytest.raises(FormulaError):
        evaluate(TRUE, trace_of("ss"), (1, 0))
    with pytest.raises(FormulaError):
        evaluate(TRUE, trace_of("ss"), (0, 2))


def _agree(f, g, direction):
    for tr in ALL_TRACES:
        for iv in intervals(len(tr)):
            if evaluate(f, tr, iv, direction) != evaluate(g, tr, iv, direction):
                return False
    return True


def test_nnf_preserves_meaning():
    for f in FUTURE_FORMULAS[::7]:
        g = nnf(f, FUTURE)
        assert is_nnf(g)
        assert _agree(f, g, FUTURE), show(f)
    for f in PAST_FORMULAS[::7]:
        g = nnf(f, PAST)
        assert is_nnf(g)
        assert _agree(f, g, PAST), show(f)


def test_mirror_duality():
    for f in FUTURE_FORMULAS[::5]:
        m = mirror(f)
        assert mirror(m) == f
        for tr in ALL_TRACES:
            n = len(tr)
            rev = tr[::-1]
            for s, t in intervals(n):
                assert evaluate(f, tr, (s, t), FUTURE) == evaluate(m, rev, (n - 1 - t, n - 1 - s), PAST)


@pytest.mark.parametrize("phi,psi", [(SAME, DIFF), (TRUE, SAME), (Not(SAME), Next(SAME))])
def test_unfolding_laws(phi, psi):
    for tr in ALL_TRACES:
        for s, t in intervals(len(tr)):
            def ev(f, lo=s):
                return evaluate(f, tr, (lo, t))
            nxt = s + 1 <= t
            assert ev(Always(phi)) == (ev(phi) and (not nxt or ev(Always(phi), s + 1)))
            assert ev(Eventually(phi)) == (ev(phi) or (nxt and ev(Eventually(phi), s + 1)))
            assert ev(Until(phi, psi)) == (ev(psi) or (ev(phi) and nxt and ev(Until(phi, psi), s + 1)))
            assert ev(Release(phi, psi)) == (ev(psi) and (ev(phi) or not nxt or ev(Release(phi, psi), s + 1)))


def test_past_unfolding_laws():
    phi, psi = SAME, DIFF
    for tr in ALL_TRACES:
        for s, t in intervals(len(tr)):
            def ev(f, hi=t):
                return evaluate(f, tr, (s, hi), PAST)
            prv = s <= t - 1
            assert ev(Since(phi, psi)) == (ev(psi) or (ev(phi) and prv and ev(Since(phi, psi), t - 1)))
            assert ev(AlwaysPast(phi)) == (ev(phi) and (not prv or ev(AlwaysPast(phi), t - 1)))


def test_depth():
    assert depth(SAME) == 1
    assert depth(parse("X (Q[A,B]=same U true)")) == 3


# -- properties over random formulas ------------------------------------------------------------

atoms_st = st.sampled_from([TRUE, SAME, DIFF])


def formula_st(unary, binary):
    return st.recursive(
        atoms_st,
        lambda kids: st.one_of(
            st.tuples(st.sampled_from(unary), kids).map(lambda p: p[0](p[1])),
            st.tuples(st.sampled_from(binary), kids, kids).map(lambda p: p[0](p[1], p[2])),
        ),
        max_leaves=6,
    )


traces_st = st.lists(st.sampled_from("sd"), min_size=1, max_size=5).map(lambda w: trace_of("".join(w)))


@settings(max_examples=150, deadline=None)
@given(formula_st(FUTURE_UNARY, FUTURE_BINARY), traces_st, st.data())
def test_nnf_property(f, tr, data):
    s = data.draw(st.integers(0, len(tr) - 1))
    t = data.draw(st.integers(s, len(tr) - 1))
    assert evaluate(nnf(f), tr, (s, t)) == evaluate(f, tr, (s, t))


@settings(max_examples=150, deadline=None)
@given(formula_st(PAST_UNARY, PAST_BINARY), traces_st, st.data())
def test_mirror_property(f, tr, data):
    n = len(tr)
    s = data.draw(st.integers(0, n - 1))
    t = data.draw(st.integers(s, n - 1))
    assert evaluate(f, tr, (s, t), PAST) == evaluate(mirror(f), tr[::-1], (n - 1 - t, n - 1 - s), FUTURE)


@settings(max_examples=150, deadline=None)
@given(formula_st(FUTURE_UNARY + PAST_UNARY, FUTURE_BINARY + PAST_BINARY))
def test_show_round_trip_property(f):
    assert parse(show(f)) == f


def test_negation_duals():
    for a, b in itertools.product([TRUE, SAME, DIFF], repeat=2):
        assert _agree(Not(Until(a, b)), Release(Not(a), Not(b)), FUTURE)
        assert _agree(Not(Since(a, b)), Trigger(Not(a), Not(b)), PAST)
        assert _agree(Not(Next(a)), WeakNext(Not(a)), FUTURE)
        assert _agree(Not(Prev(a)), WeakPrev(Not(a)), PAST)
