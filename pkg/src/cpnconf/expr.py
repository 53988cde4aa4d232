"""Arc-expression language: tuples of constants, variables and arithmetic terms.

Grammar::

    expr := "(" term {"," term} ")"
    term := sum
    sum  := prod {("+" | "-") prod}
    prod := atom {("*" | "/") atom}
    atom := ident | number | "(" sum ")"
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Union

from .errors import DomainError, EvaluationError, ExpressionSyntaxError

_TOKEN_RE = re.compile(
    r"(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/(),]))"
)


@dataclass(frozen=True)
class Const:
    value: Union[int, float]

    def variables(self) -> frozenset[str]:
        return frozenset()

    def __str__(self) -> str:
        return repr(self.value)


@dataclass(frozen=True)
class Var:
    name: str

    def variables(self) -> frozenset[str]:
        return frozenset({self.name})

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Term"
    right: "Term"

    def variables(self) -> frozenset[str]:
        return self.left.variables() | self.right.variables()

    def __str__(self) -> str:
        return f"{_wrap(self.left, self.op, False)}{self.op}{_wrap(self.right, self.op, True)}"


Term = Union[Const, Var, BinOp]

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _wrap(term: Term, parent_op: str, right: bool) -> str:
    if isinstance(term, BinOp):
        p, q = _PREC[term.op], _PREC[parent_op]
        if p < q or (right and p == q and parent_op in "-/"):
            return f"({term})"
    return str(term)


@dataclass(frozen=True)
class Expression:
    """An arc label ``(e1, ..., en)``."""

    terms: tuple[Term, ...]

    @property
    def arity(self) -> int:
        return len(self.terms)

    @property
    def head(self) -> Term:
        return self.terms[0]

    def variables(self) -> frozenset[str]:
        out: frozenset[str] = frozenset()
        for t in self.terms:
            out |= t.variables()
        return out

    def __str__(self) -> str:
        return "(" + ",".join(str(t) for t in self.terms) + ")"


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while True:
            while pos < len(text) and text[pos].isspace():
                pos += 1
            if pos == len(text):
                break
            m = _TOKEN_RE.match(text, pos)
            if m is None:
                raise ExpressionSyntaxError(
                    f"unexpected character {text[pos]!r} at column {pos + 1} in {text!r}", column=pos + 1
                )
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), pos + 1))
            pos = m.end()
        self.i = 0
        self.term_index = 0

    def peek(self) -> tuple[str, str, int] | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def fail(self, expected: str) -> ExpressionSyntaxError:
        tok = self.peek()
        found = repr(tok[1]) if tok else "end of input"
        col = tok[2] if tok else len(self.text) + 1
        return ExpressionSyntaxError(
            f"parse error at token {self.term_index} (column {col}) in {self.text!r}: expected {expected}, found {found}",
            column=col,
            token=self.term_index,
        )

    def expect(self, value: str) -> None:
        tok = self.peek()
        if tok is None or tok[1] != value:
            raise self.fail(repr(value))
        self.i += 1

    def expression(self) -> Expression:
        self.expect("(")
        terms = []
        while True:
            self.term_index += 1
            terms.append(self.sum())
            tok = self.peek()
            if tok is not None and tok[1] == ",":
                self.i += 1
                continue
            self.expect(")")
            break
        if self.peek() is not None:
            raise self.fail("end of input")
        return Expression(tuple(terms))

    def sum(self) -> Term:
        node = self.prod()
        while (tok := self.peek()) is not None and tok[1] in ("+", "-"):
            self.i += 1
            node = BinOp(tok[1], node, self.prod())
        return node

    def prod(self) -> Term:
        node = self.atom()
        while (tok := self.peek()) is not None and tok[1] in ("*", "/"):
            self.i += 1
            node = BinOp(tok[1], node, self.atom())
        return node

    def atom(self) -> Term:
        tok = self.peek()
        if tok is None:
            raise self.fail("a term")
        kind, text, _ = tok
        if kind == "num":
            self.i += 1
            if any(c in text for c in ".eE"):
                return Const(float(text))
            return Const(int(text))
        if kind == "ident":
            self.i += 1
            return Var(text)
        if text == "(":
            self.i += 1
            node = self.sum()
            self.expect(")")
            return node
        raise self.fail("a term")


def parse_expression(text: str) -> Expression:
    """Parse an arc expression such as ``"(b,ts,pr,q1-q2)"``."""
    return _Parser(text).expression()


def evaluate_term(term: Term, binding: Mapping[str, object]) -> object:
    if isinstance(term, Const):
        return term.value
    if isinstance(term, Var):
        try:
            return binding[term.name]
        except KeyError:
            raise EvaluationError(f"unbound variable {term.name!r}") from None
    left = evaluate_term(term.left, binding)
    right = evaluate_term(term.right, binding)
    if isinstance(left, (str, bool)) or isinstance(right, (str, bool)):
        raise EvaluationError(f"non-numeric operand in {term}")
    if term.op == "+":
        return left + right
    if term.op == "-":
        return left - right
    if term.op == "*":
        return left * right
    if right == 0:
        raise DomainError(f"division by zero in {term}")
    if isinstance(left, int) and isinstance(right, int):
        q = Fraction(left, right)
        return int(q) if q.denominator == 1 else float(q)
    return left / right
