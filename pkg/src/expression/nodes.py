"""Expression AST, canonical source rendering and compilation to closures.

`compile_node` builds scalar closures; `compile_array` builds their numpy
counterparts over coordinate arrays, used for batch evaluation.
"""

import math
import operator
from dataclasses import dataclass, field
from typing import Callable, Sequence, Tuple, Union

import numpy as np

from ..errors import ExpressionError
from .builtins import BUILTINS, CONSTANTS, FUNCTIONS

Evaluator = Callable[[Sequence[float]], float]

BINARY_OPERATORS = {
    "+": operator.add,
    "-": operator.sub,
    "*": operator.mul,
    "/": operator.truediv,
    "^": operator.pow,
}

COMPARISONS = {"<": operator.lt, "<=": operator.le, "=": operator.eq}


@dataclass(frozen=True)
class Number:
    value: float
    position: int = field(default=0, compare=False)

    def to_source(self) -> str:
        return repr(float(self.value))


@dataclass(frozen=True)
class Variable:
    name: str
    position: int = field(default=0, compare=False)

    def to_source(self) -> str:
        return self.name


@dataclass(frozen=True)
class Constant:
    name: str
    position: int = field(default=0, compare=False)

    def to_source(self) -> str:
        return self.name


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Node"
    position: int = field(default=0, compare=False)

    def to_source(self) -> str:
        return f"({self.op}{self.operand.to_source()})"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"
    position: int = field(default=0, compare=False)

    def to_source(self) -> str:
        return f"({self.left.to_source()} {self.op} {self.right.to_source()})"


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple["Node", ...]
    position: int = field(default=0, compare=False)

    def to_source(self) -> str:
        return f"{self.name}({', '.join(a.to_source() for a in self.args)})"


@dataclass(frozen=True)
class Condition:
    op: str
    left: "Node"
    right: "Node"
    position: int = field(default=0, compare=False)

    def to_source(self) -> str:
        return f"{self.left.to_source()} {self.op} {self.right.to_source()}"


@dataclass(frozen=True)
class Piecewise:
    condition: Condition
    then: "Node"
    otherwise: "Node"
    position: int = field(default=0, compare=False)

    def to_source(self) -> str:
        return (
            f"piecewise({self.condition.to_source()}, "
            f"{self.then.to_source()}, {self.otherwise.to_source()})"
        )


Node = Union[Number, Variable, Constant, Unary, Binary, Call, Piecewise]


def variables_of(node: Node) -> set:
    if isinstance(node, Variable):
        return {node.name}
    if isinstance(node, Unary):
        return variables_of(node.operand)
    if isinstance(node, (Binary, Condition)):
        return variables_of(node.left) | variables_of(node.right)
    if isinstance(node, Call):
        found = set()
        for arg in node.args:
            found |= variables_of(arg)
        return found
    if isinstance(node, Piecewise):
        return (
            variables_of(node.condition)
            | variables_of(node.then)
            | variables_of(node.otherwise)
        )
    return set()


def is_affine(node: Node) -> bool:
    """Sums of constants and constant multiples of variables"""
    if isinstance(node, (Number, Constant, Variable)):
        return True
    if isinstance(node, Unary):
        return is_affine(node.operand)
    if isinstance(node, Binary):
        if node.op in "+-":
            return is_affine(node.left) and is_affine(node.right)
        if node.op == "*":
            return (not variables_of(node.left) and is_affine(node.right)) or (
                not variables_of(node.right) and is_affine(node.left)
            )
        if node.op == "/":
            return is_affine(node.left) and not variables_of(node.right)
        return not variables_of(node)
    return not variables_of(node)


def constant_value(node: Node) -> float:
    if variables_of(node):
        raise ExpressionError("Argument must be constant", node.position)
    return compile_node(node, ())(())


def compile_node(node: Node, variables: Sequence[str]) -> Evaluator:
    """Closure evaluating `node` on a coordinate tuple ordered as `variables`"""
    if isinstance(node, Number):
        value = float(node.value)
        return lambda p: value
    if isinstance(node, Constant):
        value = CONSTANTS[node.name]
        return lambda p: value
    if isinstance(node, Variable):
        index = variables.index(node.name)
        return lambda p: p[index]
    if isinstance(node, Unary):
        operand = compile_node(node.operand, variables)
        return lambda p: -operand(p)
    if isinstance(node, Binary):
        left = compile_node(node.left, variables)
        right = compile_node(node.right, variables)
        op = BINARY_OPERATORS[node.op]
        if node.op == "^":
            return lambda p: _power(left(p), right(p))
        return lambda p: op(left(p), right(p))
    if isinstance(node, Piecewise):
        cond = node.condition
        test = COMPARISONS[cond.op]
        lhs = compile_node(cond.left, variables)
        rhs = compile_node(cond.right, variables)
        then = compile_node(node.then, variables)
        otherwise = compile_node(node.otherwise, variables)
        return lambda p: then(p) if test(lhs(p), rhs(p)) else otherwise(p)
    if isinstance(node, Call):
        if node.name in BUILTINS:
            args = [constant_value(a) for a in node.args]
            fn = BUILTINS[node.name].factory(*args)
            return lambda p: fn(p[0])
        fn = FUNCTIONS[node.name].fn
        args = [compile_node(a, variables) for a in node.args]
        return lambda p: fn(*(a(p) for a in args))
    raise ExpressionError(f"Cannot compile {type(node).__name__}", node.position)


def _power(base: float, exponent: float) -> float:
    result = base**exponent
    if isinstance(result, complex):
        return math.nan
    return result


ArrayEvaluator = Callable[[Sequence[np.ndarray]], np.ndarray]

ARRAY_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "ln": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "sign": np.sign,
    "pow": np.power,
    "min": np.minimum,
    "max": np.maximum,
}


def compile_array(node: Node, variables: Sequence[str]) -> ArrayEvaluator:
    """Like `compile_node` over coordinate arrays; invalid results become NaN or ±inf"""
    if isinstance(node, (Number, Constant)):
        value = compile_node(node, variables)(())
        return lambda p: value
    if isinstance(node, Variable):
        index = variables.index(node.name)
        return lambda p: np.asarray(p[index], dtype=float)
    if isinstance(node, Unary):
        operand = compile_array(node.operand, variables)
        return lambda p: -operand(p)
    if isinstance(node, Binary):
        left = compile_array(node.left, variables)
        right = compile_array(node.right, variables)
        op = np.power if node.op == "^" else BINARY_OPERATORS[node.op]
        return lambda p: op(np.asarray(left(p), dtype=float), right(p))
    if isinstance(node, Piecewise):
        cond = node.condition
        test = COMPARISONS[cond.op]
        lhs = compile_array(cond.left, variables)
        rhs = compile_array(cond.right, variables)
        then = compile_array(node.then, variables)
        otherwise = compile_array(node.otherwise, variables)
        return lambda p: np.where(test(lhs(p), rhs(p)), then(p), otherwise(p))
    if isinstance(node, Call):
        if node.name in BUILTINS:
            args = [constant_value(a) for a in node.args]
            fn = BUILTINS[node.name].factory(*args)
            return lambda p: fn(p[0])
        fn = ARRAY_FUNCTIONS[node.name]
        args = [compile_array(a, variables) for a in node.args]
        return lambda p: fn(*(a(p) for a in args))
    raise ExpressionError(f"Cannot compile {type(node).__name__}", node.position)
