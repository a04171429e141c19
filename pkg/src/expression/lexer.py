import re
from dataclasses import dataclass
from enum import StrEnum
from typing import List

from ..errors import ExpressionError


class TokenKind(StrEnum):
    NUMBER = "number"
    NAME = "name"
    OP = "op"
    END = "end"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    position: int


TOKEN_PATTERN = re.compile(
    r"""
    (?P<space>\s+)
    | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
    | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
    | (?P<op><=|≤|[-+*/^(),<=])
    """,
    re.VERBOSE,
)


def tokenize(source: str) -> List[Token]:
    tokens = []
    position = 0
    while position < len(source):
        match = TOKEN_PATTERN.match(source, position)
        if match is None:
            raise ExpressionError(f"Unexpected character {source[position]!r}", position)
        kind = match.lastgroup
        if kind != "space":
            text = match.group()
            if text == "≤":
                text = "<="
            tokens.append(Token(TokenKind(kind), text, position))
        position = match.end()
    tokens.append(Token(TokenKind.END, "", len(source)))
    return tokens
