from fractions import Fraction

from hypothesis import given, strategies as st

from doflab.powers import P, ZERO, PowerExpr

exps = st.fractions(min_value=0, max_value=1, max_denominator=12)
coefs = st.fractions(min_value=-3, max_value=3, max_denominator=6)


def test_canonical_form_merges_and_drops():
    e = P(1) - P(Fraction(1, 2)) + P(Fraction(1, 2)) - P(1)
    assert e.is_zero and e == ZERO
    assert (P(1, 2) + P(1, 3)).terms == ((Fraction(1), Fraction(5)),)


def test_telescoping_is_exact():
    layers = [P(1) - P("3/4"), P("3/4") - P("1/2"), P("1/2") - P("1/4"), P("1/4") - P(0)]
    total = ZERO
    for layer in layers:
        total = total + layer
    assert total == P(1) - P(0)


def test_nonnegativity_prefix_rule():
    assert (P(1) - P("1/2")).nonnegative_for_p_above_one()
    assert not (P("1/2") - P(1)).nonnegative_for_p_above_one()
    assert (P("1/2", "1/2") - P("1/5", "1/2")).nonnegative_for_p_above_one()
    assert not P(-1).nonnegative_for_p_above_one()


def test_json_round_trip_and_text():
    e = P(1) - P("13/20") * 1
    assert PowerExpr.from_json(e.to_json()) == e
    assert str(e) == "P - P^(13/20)"
    assert str(ZERO) == "0"


@given(st.lists(st.tuples(exps, coefs), max_size=5), st.floats(min_value=1.0, max_value=1e9))
def test_prefix_rule_is_sound(terms, p):
    e = PowerExpr.from_mapping(terms)
    if e.nonnegative_for_p_above_one():
        scale = sum(abs(float(c)) * p ** float(x) for x, c in e.terms) or 1.0
        assert e.evaluate(p) >= -1e-12 * scale


@given(st.lists(st.tuples(exps, coefs), max_size=4), st.lists(st.tuples(exps, coefs), max_size=4))
def test_addition_matches_evaluation(a, b):
    x, y = PowerExpr.from_mapping(a), PowerExpr.from_mapping(b)
    p = 37.5
    lhs = (x + y).evaluate(p)
    rhs = x.evaluate(p) + y.evaluate(p)
    assert abs(lhs - rhs) <= 1e-9 * (1 + abs(lhs) + abs(rhs))
