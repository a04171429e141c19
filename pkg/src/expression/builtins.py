"""Functions, constants and integrand builtins available to expressions."""

import math
from fractions import Fraction
from typing import Callable, Dict, Iterator, List, NamedTuple

import numpy as np


class Function(NamedTuple):
    arity: int
    fn: Callable[..., float]


class Builtin(NamedTuple):
    """An integrand family: constant arguments in, a function of x out"""

    arity: int
    factory: Callable[..., Callable[[float], float]]


def _sign(x: float) -> float:
    return math.copysign(1.0, x) if x else 0.0


FUNCTIONS: Dict[str, Function] = {
    "sin": Function(1, math.sin),
    "cos": Function(1, math.cos),
    "exp": Function(1, math.exp),
    "ln": Function(1, math.log),
    "sqrt": Function(1, math.sqrt),
    "abs": Function(1, abs),
    "sign": Function(1, _sign),
    "pow": Function(2, math.pow),
    "min": Function(2, min),
    "max": Function(2, max),
}

CONSTANTS: Dict[str, float] = {"pi": math.pi, "e": math.e}


def deriv_osc(p: float, q: float) -> Callable[[float], float]:
    """F' for F(x) = x**p sin(x**-q), with F'(0) = 0; accepts floats or arrays"""

    def derivative(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            phase = x**-q
            value = p * x ** (p - 1) * np.sin(phase) - q * x ** (p - q - 1) * np.cos(phase)
        value = np.where(x == 0, 0.0, value)
        return float(value) if value.ndim == 0 else value

    return derivative


def deriv_osc_antiderivative(p: float, q: float) -> Callable[[float], float]:
    return lambda x: 0.0 if x == 0 else x**p * math.sin(x**-q)


def rationals() -> Iterator[Fraction]:
    """0, 1, -1, 1/2, -1/2, 2, -2, 1/3, ... by height |p| + q, repeats crossed out"""
    yield Fraction(0)
    seen = {Fraction(0)}
    height = 2
    while True:
        for p in range(1, height):
            value = Fraction(p, height - p)
            if value in seen:
                continue
            seen.add(value)
            yield value
            yield -value
        height += 1


def first_rationals(count: int) -> List[float]:
    values: List[float] = []
    for value in rationals():
        if len(values) >= count:
            break
        values.append(float(value))
    return values


def dirichlet(count: float) -> Callable[[float], float]:
    """Indicator of the first `count` rationals of the enumeration"""
    members = frozenset(first_rationals(int(count)))
    return lambda x: 1.0 if x in members else 0.0


def step_at(c: float) -> Callable[[float], float]:
    return lambda x: 1.0 if x >= c else 0.0


BUILTINS: Dict[str, Builtin] = {
    "deriv_osc": Builtin(2, deriv_osc),
    "dirichlet": Builtin(1, dirichlet),
    "step_at": Builtin(1, step_at),
}
