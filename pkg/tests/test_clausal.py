import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logopt.clausal import (EMPTY, Clause, ClauseError, Literal, bound_rows, cg_round,
                            clause_to_inequality, elementary_closure_clause_check,
                            format_clauses, input_resolution_derive, is_consistent_partial,
                            is_consistent_set, is_lp_consistent_partial, is_lp_consistent_set,
                            natural_key, parse_clauses, partial_assignments, resolution_closure,
                            resolve, unit_propagate, violates)
from logopt.lp import GE, LinearConstraint
from strategies import clause_sets, zero_one_sets

c = Clause.of
EQ1 = [c("x1 x2 x3"), c("x1 ~x3")]
EQ4 = [LinearConstraint({"x1": 1, "x2": 1, "x3": 1}, GE, 1), LinearConstraint({"x2": 1, "x3": -1}, GE, 0)]
LP_S = [LinearConstraint({"x1": 2, "x2": 2}, GE, 1), LinearConstraint({"x1": 2, "x2": -2}, GE, -1)]


def variables_of(cons):
    out = set()
    for con in cons:
        out |= con.variables if isinstance(con, Clause) else set(con.coefficients)
    return sorted(out, key=natural_key)


def models(cons, names):
    for bits in itertools.product((0, 1), repeat=len(names)):
        point = dict(zip(names, bits))
        if all(con.satisfied_by(point) for con in cons):
            yield point


def implies(clauses, target):
    names = sorted({v for cl in clauses for v in cl.variables} | target.variables)
    return all(target.satisfied_by(p) for p in models(clauses, names))


def test_literal_and_clause_text():
    assert str(-Literal("x1")) == "~x1"
    assert Literal.parse("-x2") == Literal("x2", False) == Literal.parse("!x2")
    assert str(c("x2 ~x1 x10")) == "~x1 v x2 v x10"
    assert str(EMPTY) == "<empty>"


def test_tautology_rejected():
    with pytest.raises(ClauseError):
        c("x1 ~x1")


def test_resolvent_example():
    assert resolve(*EQ1) == c("x1 x2")


def test_no_resolvent_on_double_clash():
    assert resolve(c("x1 x2"), c("~x1 ~x2")) is None
    assert resolve(c("x1"), c("x2")) is None


def test_closure_contains_resolvent():
    closure = resolution_closure(EQ1)
    assert c("x1 x2") in closure.clauses and not closure.truncated


def test_closure_of_unsatisfiable_set():
    cls = [c("x1 x2"), c("x1 ~x2"), c("~x1 x2"), c("~x1 ~x2")]
    assert resolution_closure(cls).clauses == {EMPTY}


def test_input_derivation_length_one():
    der = input_resolution_derive(EQ1, c("x1 x2"))
    assert len(der) == 1 and der.result == c("x1 x2")


def test_input_derivation_absent():
    # refutable by full resolution but not by input resolution
    cls = [c("x1 x2"), c("x1 ~x2"), c("~x1 x2"), c("~x1 ~x2")]
    assert input_resolution_derive(cls, EMPTY) is None


def test_elementary_closure_check():
    assert elementary_closure_clause_check(EQ1, c("x1 x2"))
    assert not elementary_closure_clause_check(EQ1, c("x2"))


def test_unit_propagation():
    res = unit_propagate([c("x1"), c("~x1 x2"), c("~x2 x3 x4")])
    assert [str(l) for l in res.units] == ["x1", "x2"]
    assert res.clauses == {c("x3 x4")} and not res.conflict
    assert unit_propagate([c("x1"), c("~x1")]).conflict


def test_clause_inequalities():
    assert clause_to_inequality(c("x1 x2 x3")) == LinearConstraint({"x1": 1, "x2": 1, "x3": 1}, GE, 1)
    assert clause_to_inequality(c("x1 ~x3")) == LinearConstraint({"x1": 1, "x3": -1}, GE, 0)


def test_cg_rounding_example():
    rows = [clause_to_inequality(cl) for cl in EQ1] + [LinearConstraint({"x2": 1}, GE, 0)]
    half = Fraction(1, 2)
    assert cg_round(rows, [half, half, half]) == LinearConstraint({"x1": 1, "x2": 1}, GE, 1)


def test_cg_rejects_negative_multiplier():
    with pytest.raises(ClauseError):
        cg_round([LinearConstraint({"x": 1}, GE, 0)], [-1])


def test_eq4_partial_assignments():
    assert not is_consistent_partial(EQ4, {"x1": 0, "x2": 0})
    assert is_consistent_partial(EQ4, {"x1": 1})
    assert not violates({"x1": 0, "x2": 0}, EQ4[0])


def test_eq4_set_consistency():
    ok, witness = is_consistent_set(EQ4)
    assert not ok and witness == {"x1": 0, "x2": 0}
    ok, witness = is_consistent_set(EQ4 + [LinearConstraint({"x1": 1, "x2": 1}, GE, 1)])
    assert ok and witness is None


def test_lp_consistency_example():
    assert is_lp_consistent_partial(LP_S, {"x1": 0})
    assert not is_consistent_partial(LP_S, {"x1": 0})
    ok, witness = is_lp_consistent_set(LP_S)
    assert not ok and witness == {"x1": 0}
    ok, _ = is_lp_consistent_set(LP_S + [LinearConstraint({"x1": 1}, GE, 1)])
    assert ok


def test_partial_assignment_order():
    assert list(partial_assignments(["a", "b"]))[:4] == [{}, {"b": 0}, {"b": 1}, {"a": 0}]


def test_clause_file_round_trip():
    text = "c comment\np cnf 3 3\nx1 x2 x3 0\nx1 -x3 0\n0\n"
    cls = parse_clauses(text)
    assert cls == [c("x1 x2 x3"), c("x1 ~x3"), EMPTY]
    assert parse_clauses(format_clauses(cls)) == cls


@pytest.mark.parametrize("bad", ["x1 x2 0\n", "p cnf 2 2\nx1 0\n", "p cnf 1 1\nx1 x2 0\n",
                                 "p cnf 1 1\nx1 -x1 0\n", "p dnf 1 1\nx1\n"])
def test_clause_file_errors(bad):
    with pytest.raises(ClauseError):
        parse_clauses(bad)


@settings(max_examples=200, deadline=None)
@given(clause_sets())
def test_resolvents_are_implied(cls):
    for a, b in itertools.combinations(cls, 2):
        r = resolve(a, b)
        if r is not None:
            assert implies(cls, r)


@settings(max_examples=150, deadline=None)
@given(clause_sets(), st.data())
def test_closure_is_complete(cls, data):
    closure = resolution_closure(cls)
    assert not closure.truncated
    names = sorted({v for cl in cls for v in cl.variables})
    assert all(implies(cls, k) for k in closure.clauses)
    vs = data.draw(st.lists(st.sampled_from(names), max_size=len(names), unique=True))
    target = Clause(frozenset(Literal(v, data.draw(st.booleans())) for v in vs))
    assert implies(cls, target) == any(k.subsumes(target) for k in closure.clauses)


@settings(max_examples=150, deadline=None)
@given(clause_sets(), st.data())
def test_input_derivations_inside_closure(cls, data):
    closure = resolution_closure(cls).clauses
    names = sorted({v for cl in cls for v in cl.variables})
    vs = data.draw(st.lists(st.sampled_from(names), max_size=len(names), unique=True))
    target = Clause(frozenset(Literal(v, data.draw(st.booleans())) for v in vs))
    der = input_resolution_derive(cls, target)
    if der is not None:
        assert der.result.subsumes(target)
        assert implies(cls, der.result)
        assert any(k.subsumes(der.result) for k in closure)
        for d, o, r in der.steps:
            assert o in cls and resolve(d, o) == r


@settings(max_examples=200, deadline=None)
@given(clause_sets())
def test_input_refutation_iff_unit_refutation(cls):
    assert (input_resolution_derive(cls, EMPTY) is not None) == unit_propagate(cls).conflict


@settings(max_examples=200, deadline=None)
@given(clause_sets())
def test_unit_propagation_sound(cls):
    res = unit_propagate(cls)
    for lit in res.units:
        assert implies(cls, Clause(frozenset([lit])))
    if res.conflict:
        assert implies(cls, EMPTY)


@settings(max_examples=200, deadline=None)
@given(clause_sets())
def test_inequality_mapping_matches_clauses(cls):
    names = sorted({v for cl in cls for v in cl.variables})
    for bits in itertools.product((0, 1), repeat=len(names)):
        point = dict(zip(names, bits))
        for cl in cls:
            assert cl.satisfied_by(point) == clause_to_inequality(cl).satisfied_by(point)


@settings(max_examples=200, deadline=None)
@given(zero_one_sets(), st.data())
def test_cg_cuts_are_valid(rows, data):
    names = variables_of(rows)
    rows = rows + bound_rows(names)
    mult = data.draw(st.lists(st.integers(0, 4).map(lambda k: Fraction(k, 2)),
                              min_size=len(rows), max_size=len(rows)))
    cut = cg_round(rows, mult)
    for point in models(rows, names):
        assert cut.satisfied_by(point)


@settings(max_examples=100, deadline=None)
@given(zero_one_sets(max_vars=4))
def test_consistency_chain(rows):
    """consistent => LP-consistent for every partial assignment, and the set
    verdicts agree with direct enumeration."""
    names = variables_of(rows)
    sols = list(models(rows, names))
    first_bad = None
    for pa in partial_assignments(names):
        consistent = any(all(s[v] == x for v, x in pa.items()) for s in sols)
        assert is_consistent_partial(rows, pa) == consistent
        if consistent:
            assert is_lp_consistent_partial(rows, pa)
        if first_bad is None and not consistent and not any(violates(pa, r) for r in rows):
            first_bad = pa
    ok, witness = is_consistent_set(rows)
    assert ok == (first_bad is None) and witness == first_bad
