import math

import numpy as np
import pytest

from src.errors import ExpressionError
from src.expression.nodes import Binary, Number, Unary, Variable
from src.expression.parser import parse_expression


def _eval(source, *point):
    return parse_expression(source, max(1, len(point))).compile()(point)


def test_parse_power():
    """Test that x^2 parses to a power node and evaluates"""
    expr = parse_expression("x^2")

    assert expr.root == Binary("^", Variable("x"), Number(2.0))
    assert expr.scalar()(0.5) == 0.25


def test_incomplete_expression_reports_position():
    """Test that a dangling operator is reported at the end of input"""
    with pytest.raises(ExpressionError) as exc_info:
        parse_expression("x +")

    assert exc_info.value.position == 3


def test_unexpected_character_reports_position():
    """Test that an unknown character is reported where it occurs"""
    with pytest.raises(ExpressionError) as exc_info:
        parse_expression("x $ 1")

    assert exc_info.value.position == 2


@pytest.mark.parametrize(
    "source, expected",
    [
        ("2*3+4", 10.0),
        ("2+3*4", 14.0),
        ("1-2-3", -4.0),
        ("2^3^2", 512.0),
        ("-2^2", -4.0),
        ("(-2)^2", 4.0),
        ("8/4/2", 1.0),
        ("2*pi", 2 * math.pi),
        ("max(1, 2) + min(1, 2)", 3.0),
    ],
)
def test_precedence_and_associativity(source, expected):
    """Test operator binding powers and associativity"""
    assert _eval(source, 0.0) == pytest.approx(expected)


def test_unary_minus_binds_below_power():
    """Test that -x^2 negates the square"""
    expr = parse_expression("-x^2")

    assert isinstance(expr.root, Unary)
    assert expr.scalar()(3.0) == -9.0


def test_function_arity_is_checked():
    """Test that calls with the wrong number of arguments are rejected"""
    with pytest.raises(ExpressionError):
        parse_expression("sin(x, 1)")
    with pytest.raises(ExpressionError):
        parse_expression("pow(x)")
    with pytest.raises(ExpressionError):
        parse_expression("nope(x)")


def test_unbound_variable():
    """Test that y is rejected in one dimension and accepted in two"""
    with pytest.raises(ExpressionError) as exc_info:
        parse_expression("x*y", 1)

    assert exc_info.value.position == 2
    assert parse_expression("x*y", 2).compile()((2.0, 3.0)) == 6.0


def test_dimension_must_be_supported():
    """Test that expressions exist in one or two dimensions only"""
    with pytest.raises(ValueError):
        parse_expression("x", 3)


def test_piecewise_with_affine_condition():
    """Test that piecewise picks a branch from an affine comparison"""
    f = parse_expression("piecewise(x ≤ 0.5, 1, 0)").scalar()

    assert f(0.5) == 1.0
    assert f(0.6) == 0.0


def test_piecewise_needs_affine_condition():
    """Test that a nonlinear condition is rejected"""
    with pytest.raises(ExpressionError):
        parse_expression("piecewise(x*x < 0.5, 1, 0)")


def test_piecewise_needs_comparison():
    """Test that a missing comparison is rejected"""
    with pytest.raises(ExpressionError):
        parse_expression("piecewise(x, 1, 0)")


@pytest.mark.parametrize(
    "source",
    [
        "x^2 + 3*x - 1",
        "-sin(x)/(1 + x)",
        "piecewise(2*x - 1 < 0, exp(x), ln(x + 1))",
        "deriv_osc(2, 3) + pi",
    ],
)
def test_source_rendering_reparses(source):
    """Test that rendered source parses back to the same tree"""
    expr = parse_expression(source)

    assert parse_expression(expr.to_source()).root == expr.root


def test_builtin_integrands():
    """Test that builtin families take constant arguments"""
    f = parse_expression("deriv_osc(2, 3)").scalar()

    assert f(0.0) == 0.0
    assert parse_expression("step_at(0.5)").scalar()(0.5) == 1.0
    with pytest.raises(ExpressionError):
        parse_expression("deriv_osc(x, 3)").compile()


def test_fractional_power_of_negative_is_nan():
    """Test that a complex power evaluates to NaN"""
    assert math.isnan(_eval("(-8)^(1/3)", 0.0))


def test_array_evaluator_matches_scalar_evaluator():
    """Test that evaluating over coordinate arrays agrees with point-by-point evaluation"""
    expr = parse_expression("sin(x) * exp(-y) + piecewise(x ≤ 0.5, x^2, sqrt(y))", 2)
    grid = np.linspace(0.0, 1.0, 7)
    xs, ys = (c.ravel() for c in np.meshgrid(grid, grid))

    values = expr.compile_array()((xs, ys))
    scalar = expr.compile()

    assert values.shape == xs.shape
    assert values.tolist() == pytest.approx([scalar((x, y)) for x, y in zip(xs, ys)])


def test_array_evaluator_marks_invalid_points_nan():
    """Test that a complex power gives NaN over arrays as it does for points"""
    values = parse_expression("(x - 1)^(1/3)").compile_array()((np.array([0.0, 2.0]),))

    assert math.isnan(values[0])
    assert values[1] == pytest.approx(1.0)
