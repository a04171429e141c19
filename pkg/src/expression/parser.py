"""Pratt parser for integrand expressions.

Binding powers: `^` (right associative) above unary minus, above `*` `/`,
above `+` `-`. Conditions appear only as the first argument of `piecewise`.
"""

from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

from ..errors import ExpressionError
from .builtins import BUILTINS, CONSTANTS, FUNCTIONS
from .lexer import Token, TokenKind, tokenize
from .nodes import (
    ArrayEvaluator,
    Binary,
    Call,
    Condition,
    Constant,
    Node,
    Number,
    Piecewise,
    Unary,
    Variable,
    compile_array,
    compile_node,
    is_affine,
)

VARIABLES = ("x", "y")

LEFT_BINDING = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
UNARY_BINDING = 30


class Parser:
    def __init__(self, tokens: Sequence[Token], variables: Sequence[str]):
        self.tokens = tokens
        self.index = 0
        self.variables = tuple(variables)

    @property
    def token(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.token
        self.index += 1
        return token

    def expect(self, text: str) -> Token:
        if self.token.text != text or self.token.kind is not TokenKind.OP:
            raise ExpressionError(f"Expected {text!r}, found {self._describe()}", self.token.position)
        return self.advance()

    def _describe(self) -> str:
        if self.token.kind is TokenKind.END:
            return "end of input"
        return repr(self.token.text)

    def parse(self) -> Node:
        node = self.expression()
        if self.token.kind is not TokenKind.END:
            raise ExpressionError(f"Unexpected {self._describe()}", self.token.position)
        return node

    def expression(self, rbp: int = 0) -> Node:
        left = self.nud(self.advance())
        while self.token.kind is TokenKind.OP and rbp < LEFT_BINDING.get(self.token.text, 0):
            left = self.led(self.advance(), left)
        return left

    def nud(self, token: Token) -> Node:
        if token.kind is TokenKind.NUMBER:
            return Number(float(token.text), token.position)
        if token.kind is TokenKind.NAME:
            return self.name(token)
        if token.kind is TokenKind.OP and token.text == "-":
            return Unary("-", self.expression(UNARY_BINDING), token.position)
        if token.kind is TokenKind.OP and token.text == "(":
            node = self.expression()
            self.expect(")")
            return node
        if token.kind is TokenKind.END:
            raise ExpressionError("Unexpected end of input", token.position)
        raise ExpressionError(f"Unexpected {token.text!r}", token.position)

    def led(self, token: Token, left: Node) -> Node:
        if token.text == "^":
            return Binary("^", left, self.expression(LEFT_BINDING["^"] - 1), token.position)
        return Binary(token.text, left, self.expression(LEFT_BINDING[token.text]), token.position)

    def name(self, token: Token) -> Node:
        if self.token.text == "(" and self.token.kind is TokenKind.OP:
            return self.call(token)
        if token.text in self.variables:
            return Variable(token.text, token.position)
        if token.text in CONSTANTS:
            return Constant(token.text, token.position)
        if token.text in VARIABLES:
            raise ExpressionError(
                f"Variable {token.text!r} is not bound in {len(self.variables)} dimension(s)",
                token.position,
            )
        raise ExpressionError(f"Unknown name {token.text!r}", token.position)

    def arguments(self) -> List[Node]:
        self.expect("(")
        args = []
        if self.token.text != ")":
            args.append(self.expression())
            while self.token.text == ",":
                self.advance()
                args.append(self.expression())
        self.expect(")")
        return args

    def call(self, token: Token) -> Node:
        if token.text == "piecewise":
            return self.piecewise(token)
        if token.text in FUNCTIONS:
            arity = FUNCTIONS[token.text].arity
        elif token.text in BUILTINS:
            arity = BUILTINS[token.text].arity
        else:
            raise ExpressionError(f"Unknown function {token.text!r}", token.position)
        args = self.arguments()
        if len(args) != arity:
            raise ExpressionError(
                f"{token.text} takes {arity} argument(s), got {len(args)}", token.position
            )
        return Call(token.text, tuple(args), token.position)

    def piecewise(self, token: Token) -> Node:
        self.expect("(")
        left = self.expression()
        if self.token.text not in ("<", "<=", "="):
            raise ExpressionError(
                f"Expected a comparison, found {self._describe()}", self.token.position
            )
        op = self.advance()
        right = self.expression()
        condition = Condition(op.text, left, right, op.position)
        if not (is_affine(left) and is_affine(right)):
            raise ExpressionError("Condition must be affine", op.position)
        self.expect(",")
        then = self.expression()
        self.expect(",")
        otherwise = self.expression()
        self.expect(")")
        return Piecewise(condition, then, otherwise, token.position)


@dataclass(frozen=True)
class Expression:
    """Parsed integrand with its source and bound variables"""

    root: Node
    source: str
    variables: Tuple[str, ...]

    def to_source(self) -> str:
        return self.root.to_source()

    def compile(self) -> Callable[[Sequence[float]], float]:
        return compile_node(self.root, self.variables)

    def compile_array(self) -> ArrayEvaluator:
        """Evaluator over a tuple of coordinate arrays"""
        return compile_array(self.root, self.variables)

    def scalar(self) -> Callable[[float], float]:
        """1D evaluator taking a bare float"""
        evaluator = self.compile()
        return lambda x: evaluator((x,))


def parse_expression(source: str, dim: int = 1) -> Expression:
    if not 1 <= dim <= len(VARIABLES):
        raise ValueError(f"Expressions support 1 to {len(VARIABLES)} dimensions, got {dim}")
    variables = VARIABLES[:dim]
    root = Parser(tokenize(source), variables).parse()
    return Expression(root, source, variables)
