"""Expression language for local rules.

Grammar (whitespace insignificant)::

    expr   := term ('+' term)*
    term   := factor ('*' factor)*
    factor := integer | 'x' digits | '(' expr ')'

Evaluation is integer arithmetic reduced modulo the cardinality of the
vertex being updated. Juxtaposition is not multiplication: write ``x1*x2``.
The Boolean complement of ``x3`` over Z_2 is written ``(x3+1)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ParseError(ValueError):
    """Syntax error carrying a 1-based line and column."""

    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Var:
    index: int  # 1-based vertex number


@dataclass(frozen=True)
class Add:
    terms: tuple


@dataclass(frozen=True)
class Mul:
    factors: tuple


Expression = Const | Var | Add | Mul


class _Parser:
    def __init__(self, text: str, line: int, column: int):
        self.text = text
        self.pos = 0
        self.line = line
        self.column = column

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.line, self.column + self.pos)

    def skip(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self) -> Expression:
        node = self.expr()
        if self.peek():
            raise self.error(f"unexpected {self.peek()!r}")
        return node

    def expr(self) -> Expression:
        terms = [self.term()]
        while self.peek() == "+":
            self.pos += 1
            terms.append(self.term())
        return terms[0] if len(terms) == 1 else Add(tuple(terms))

    def term(self) -> Expression:
        factors = [self.factor()]
        while self.peek() == "*":
            self.pos += 1
            factors.append(self.factor())
        return factors[0] if len(factors) == 1 else Mul(tuple(factors))

    def factor(self) -> Expression:
        ch = self.peek()
        if ch == "(":
            self.pos += 1
            node = self.expr()
            if self.peek() != ")":
                raise self.error("expected ')'")
            self.pos += 1
            return node
        if ch == "x":
            at = self.pos
            self.pos += 1
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            if start == self.pos:
                raise self.error("expected variable index after 'x'")
            index = int(self.text[start:self.pos])
            if index < 1:
                raise ParseError("variable indices start at 1", self.line, self.column + at)
            return Var(index)
        if ch.isdigit():
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            return Const(int(self.text[start:self.pos]))
        if not ch:
            raise self.error("unexpected end of expression")
        raise self.error(f"unexpected {ch!r}")


def parse_expression(text: str, line: int = 1, column: int = 1) -> Expression:
    """Parse ``text``; ``line``/``column`` locate it inside a larger file."""
    return _Parser(text, line, column).parse()


def render(node: Expression) -> str:
    """Canonical text; ``parse_expression(render(e)) == e``."""
    if isinstance(node, Const):
        return str(node.value)
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Add):
        return "+".join(f"({render(t)})" if isinstance(t, Add) else render(t) for t in node.terms)
    return "*".join(
        f"({render(f)})" if isinstance(f, (Add, Mul)) else render(f) for f in node.factors
    )


def variables(node: Expression) -> set[int]:
    if isinstance(node, Var):
        return {node.index}
    if isinstance(node, Const):
        return set()
    children = node.terms if isinstance(node, Add) else node.factors
    out: set[int] = set()
    for child in children:
        out |= variables(child)
    return out


def evaluate(node: Expression, coords: np.ndarray, modulus: int) -> np.ndarray:
    """Evaluate over a batch of states.

    ``coords`` has shape ``(N, n)``; column ``i`` holds ``x_{i+1}``.
    Returns an int64 vector of length ``N`` with entries in ``[0, modulus)``.
    """
    def go(e):
        if isinstance(e, Const):
            return np.full(coords.shape[0], e.value % modulus, dtype=np.int64)
        if isinstance(e, Var):
            if e.index > coords.shape[1]:
                raise IndexError(f"x{e.index} is out of range for {coords.shape[1]} vertices")
            return coords[:, e.index - 1].astype(np.int64) % modulus
        if isinstance(e, Add):
            acc = go(e.terms[0])
            for t in e.terms[1:]:
                acc = (acc + go(t)) % modulus
            return acc
        acc = go(e.factors[0])
        for f in e.factors[1:]:
            acc = (acc * go(f)) % modulus
        return acc

    return go(node)


def evaluate_at(node: Expression, state, modulus: int) -> int:
    return int(evaluate(node, np.asarray([state], dtype=np.int64), modulus)[0])
