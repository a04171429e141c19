import itertools
from fractions import Fraction

import numpy as np
import pytest

from src.expression.builtins import deriv_osc, dirichlet, first_rationals, rationals, step_at


def test_rationals_enumeration_order():
    """Test that rationals are listed by height with repeats crossed out"""
    first = list(itertools.islice(rationals(), 11))

    assert first == [
        Fraction(0),
        Fraction(1),
        Fraction(-1),
        Fraction(1, 2),
        Fraction(-1, 2),
        Fraction(2),
        Fraction(-2),
        Fraction(1, 3),
        Fraction(-1, 3),
        Fraction(3),
        Fraction(-3),
    ]


def test_first_rationals_are_distinct():
    """Test that the enumeration never repeats a value"""
    values = first_rationals(200)

    assert len(values) == 200
    assert len(set(values)) == 200


def test_dirichlet_indicator():
    """Test that the indicator is one exactly on the listed rationals"""
    f = dirichlet(5)

    assert f(0.5) == 1.0
    assert f(2.0) == 0.0
    assert f(0.3) == 0.0


def test_step_at():
    """Test that the step is right-continuous at its jump"""
    f = step_at(0.25)

    assert f(0.25) == 1.0
    assert f(0.2) == 0.0


def test_oscillating_derivative_accepts_arrays():
    """Test that deriv_osc evaluates arrays elementwise, 0 included"""
    f = deriv_osc(2, 3)
    xs = np.array([0.0, 0.25, 0.5, 1.0])

    values = f(xs)

    assert values[0] == 0.0
    assert values[1:].tolist() == pytest.approx([f(x) for x in xs[1:].tolist()])
    assert isinstance(f(0.5), float)
