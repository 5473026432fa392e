from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leaderfp.errors import ArityError, ExpressionSyntaxError, UnknownIdentifierError
from leaderfp.expression import BinOp, IfElse, Num, Var, parse_expression


def test_simple_division_ast():
    e = parse_expression("t/2")
    assert e.root == BinOp("/", Var("t"), Num(2.0))


def test_piecewise_map():
    e = parse_expression("if x1 = 0 then 1 else x1/2")
    assert isinstance(e.root, IfElse)
    assert e(x1=0.0) == 1.0
    assert e(x1=-0.0) == 1.0
    assert e(x1=0.5) == 0.25
    np.testing.assert_array_equal(e(x1=np.array([0.0, 1.0])), [1.0, 0.5])


def test_unbalanced_paren_position():
    with pytest.raises(ExpressionSyntaxError) as info:
        parse_expression("t/(1+")
    assert info.value.position == 5


def test_unknown_identifier_and_arity():
    with pytest.raises(UnknownIdentifierError):
        parse_expression("t + y")
    with pytest.raises(UnknownIdentifierError):
        parse_expression("sin(t)")
    with pytest.raises(ArityError):
        parse_expression("abs(t, 1)")
    with pytest.raises(ArityError):
        parse_expression("min(t)")
    with pytest.raises(ExpressionSyntaxError):
        parse_expression("")


def test_restricted_variables():
    with pytest.raises(UnknownIdentifierError):
        parse_expression("x1 + n", variables={"x1"})


def test_precedence_and_associativity():
    assert parse_expression("2^3^2")() == 512.0
    assert parse_expression("-2^2")() == -4.0
    assert parse_expression("8/4/2")() == 1.0
    assert parse_expression("1 - 2 - 3")() == -4.0
    assert parse_expression("1 + 2*3")() == 7.0


def test_functions_and_comparisons():
    e = parse_expression("max(t/2, min(t, 1), abs(-3)*0)")
    assert e(t=4.0) == 2.0
    for src, expected in (("if t < 1 then 1 else 0", 0.0), ("if t <= 1 then 1 else 0", 1.0),
                          ("if t ≥ 1 then 1 else 0", 1.0), ("if t > 1 then 1 else 0", 0.0)):
        assert parse_expression(src)(t=1.0) == expected


def test_piece_selection_at_guard():
    e = parse_expression("if t < 1 then t/2 else t/3")
    assert e(t=1.0) == pytest.approx(1 / 3)


# random ASTs rendered as source, then re-parsed
def _exprs():
    leaf = st.one_of(st.sampled_from(["t", "n", "x1", "x2"]),
                     st.floats(0, 100, allow_nan=False).map(lambda v: repr(float(v))))

    def extend(child):
        binop = st.tuples(child, st.sampled_from(["+", "-", "*", "/", "^"]), child).map(
            lambda a: f"({a[0]} {a[1]} {a[2]})")
        call = st.tuples(st.sampled_from(["min", "max"]), child, child).map(lambda a: f"{a[0]}({a[1]}, {a[2]})")
        neg = child.map(lambda a: f"-{a}")
        ite = st.tuples(child, st.sampled_from(["<", "<=", "=", ">=", ">"]), child, child, child).map(
            lambda a: f"(if {a[0]} {a[1]} {a[2]} then {a[3]} else {a[4]})")
        return st.one_of(binop, call, neg, ite, child.map(lambda a: f"abs({a})"))

    return st.recursive(leaf, extend, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(_exprs())
def test_round_trip(src):
    e = parse_expression(src)
    again = parse_expression(e.to_source())
    assert again.root == e.root
