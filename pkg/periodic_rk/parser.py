"""Pratt parser for the arithmetic expression language of problem files.

Grammar, loosest binding first: `+ -` (left), `* /` (left), unary `-`, `^` (right).
Functions take a single parenthesised argument. Whitespace is insignificant.
"""

import re
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import ParseError
from .expr import FUNCTIONS, VARIABLES, BinOp, Call, Expr, Number, Variable, neg

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
    | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
    | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)

EXPRESSION_START = frozenset({"number", "variable", "function", "(", "-"})
AFTER_OPERAND = frozenset({"+", "-", "*", "/", "^", ")", "end of input"})

_BINDING_POWER = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}
_UNARY_MINUS = 25


@dataclass(frozen=True)
class Token:
    kind: str  # number, name, op or end
    text: str
    offset: int  # in bytes


def tokenize(text: str) -> Iterator[Token]:
    position = 0
    byte_offset = 0
    while position < len(text):
        match = _TOKEN.match(text, position)
        if match is None:
            raise ParseError(
                f"unexpected character {text[position]!r}",
                byte_offset,
                EXPRESSION_START | AFTER_OPERAND,
            )

        kind = match.lastgroup
        assert kind is not None
        if kind != "ws":
            yield Token(kind, match.group(), byte_offset)

        byte_offset += len(match.group().encode("utf-8"))
        position = match.end()

    yield Token("end", "", byte_offset)


class Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.tokens = list(tokenize(text))
        self.index = 0

    def parse(self) -> Expr:
        result = self.expression(0)
        token = self.peek()
        if token.kind != "end":
            raise self.unexpected(token, AFTER_OPERAND)
        return result

    def peek(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.tokens[self.index]
        if token.kind != "end":
            self.index += 1
        return token

    def expect(self, text: str) -> Token:
        token = self.advance()
        if token.kind != "op" or token.text != text:
            raise self.unexpected(token, {text})
        return token

    def expression(self, right_binding_power: int) -> Expr:
        left = self.null_denotation(self.advance())
        while right_binding_power < self.left_binding_power(self.peek()):
            left = self.left_denotation(self.advance(), left)
        return left

    @staticmethod
    def left_binding_power(token: Token) -> int:
        if token.kind == "op":
            return _BINDING_POWER.get(token.text, 0)
        return 0

    def null_denotation(self, token: Token) -> Expr:
        if token.kind == "number":
            return Number(float(token.text))

        elif token.kind == "name":
            if token.text in FUNCTIONS:
                self.expect("(")
                argument = self.expression(0)
                self.expect(")")
                return Call(token.text, argument)
            elif token.text in VARIABLES:
                return Variable(token.text)
            raise ParseError(f"unknown identifier {token.text!r}", token.offset, EXPRESSION_START)

        elif token.kind == "op" and token.text == "(":
            inner = self.expression(0)
            self.expect(")")
            return inner

        elif token.kind == "op" and token.text == "-":
            return neg(self.expression(_UNARY_MINUS))

        raise self.unexpected(token, EXPRESSION_START)

    def left_denotation(self, token: Token, left: Expr) -> Expr:
        power = _BINDING_POWER[token.text]
        if token.text == "^":
            # right-associative: a^b^c is a^(b^c)
            return BinOp("^", left, self.expression(power - 1))
        return BinOp(token.text, left, self.expression(power))

    @staticmethod
    def unexpected(token: Token, expected: Iterable[str]) -> ParseError:
        what = "end of input" if token.kind == "end" else repr(token.text)
        return ParseError(f"unexpected {what}", token.offset, expected)


def parse(text: str) -> Expr:
    return Parser(text).parse()
