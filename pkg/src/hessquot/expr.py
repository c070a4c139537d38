"""Arithmetic expressions for data functions such as f(x) and phi(x).

Grammar, loosest binding first::

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := ('-' | '+') unary | power
    power := atom ('^' unary)?          # right-associative
    atom  := number | 'pi' | x<i> | func '(' expr ')' | '(' expr ')'

so ``-x1^2`` is ``-(x1^2)`` and ``2^-1`` is ``0.5``.  Error offsets are
1-based byte positions into the UTF-8 text.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ExpressionDomainError, ExpressionSyntaxError

FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt, "abs": np.abs}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Pi:
    pass


@dataclass(frozen=True)
class Var:
    index: int  # 1-based, as written


@dataclass(frozen=True)
class Neg:
    operand: "Expression"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Call:
    name: str
    arg: "Expression"


Expression = Union[Num, Pi, Var, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = []
        pos = 0
        while True:
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                rest = text[pos:]
                if rest.strip() == "":
                    break
                bad = pos + len(rest) - len(rest.lstrip())
                raise ExpressionSyntaxError(f"unexpected character {text[bad]!r}", self._offset(bad))
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.i = 0

    def _offset(self, char_pos: int) -> int:
        return len(self.text[:char_pos].encode("utf-8")) + 1

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None, len(self.text))

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def fail(self, message: str, tok=None):
        tok = tok or self.peek()
        raise ExpressionSyntaxError(message, self._offset(tok[2]))

    def expect(self, value: str):
        tok = self.peek()
        if tok[1] != value:
            what = "end of input" if tok[0] is None else repr(tok[1])
            self.fail(f"expected {value!r}, found {what}")
        self.take()

    def parse(self) -> Expression:
        e = self.expr()
        if self.peek()[0] is not None:
            self.fail(f"unexpected {self.peek()[1]!r}")
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.unary())
        return e

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("-", "+"):
            self.take()
            inner = self.unary()
            return Neg(inner) if tok[1] == "-" else inner
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        tok = self.take()
        kind, val, _ = tok
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if val == "pi":
                return Pi()
            m = re.fullmatch(r"x([1-9]\d*)", val)
            if m:
                return Var(int(m.group(1)))
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            self.fail(f"unknown identifier {val!r}", tok)
        if val == "(":
            e = self.expr()
            self.expect(")")
            return e
        what = "end of input" if kind is None else repr(val)
        self.fail(f"unexpected {what}", tok)


def parse_expression(text: str) -> Expression:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return _Parser(text).parse()


def to_text(e: Expression) -> str:
    """Canonical text; every compound subexpression is parenthesised."""
    if isinstance(e, Num):
        return repr(float(e.value))
    if isinstance(e, Pi):
        return "pi"
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Neg):
        return f"(-{to_text(e.operand)})"
    if isinstance(e, Call):
        return f"{e.name}({to_text(e.arg)})"
    return f"({to_text(e.left)} {e.op} {to_text(e.right)})"


def max_variable(e: Expression) -> int:
    if isinstance(e, Var):
        return e.index
    if isinstance(e, (Neg, Call)):
        return max_variable(e.operand if isinstance(e, Neg) else e.arg)
    if isinstance(e, BinOp):
        return max(max_variable(e.left), max_variable(e.right))
    return 0


def evaluate(e: Expression, x) -> np.ndarray | float:
    """Evaluate at points ``x`` shaped (n,) or (N, n); result broadcasts over points."""
    x = np.asarray(x, dtype=float)
    pts = np.atleast_2d(x)
    need = max_variable(e)
    if need > pts.shape[1]:
        raise ValueError(f"expression uses x{need} but points have {pts.shape[1]} coordinates")
    out = np.broadcast_to(np.asarray(_eval(e, pts), dtype=float), (pts.shape[0],))
    return float(out[0]) if x.ndim == 1 else out.copy()


def _eval(e: Expression, pts: np.ndarray):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Pi):
        return math.pi
    if isinstance(e, Var):
        return pts[:, e.index - 1]
    if isinstance(e, Neg):
        return -_eval(e.operand, pts)
    if isinstance(e, Call):
        a = _eval(e.arg, pts)
        if e.name == "sqrt" and np.any(np.asarray(a) < 0):
            raise ExpressionDomainError("sqrt of a negative number")
        return FUNCTIONS[e.name](a)
    a, b = _eval(e.left, pts), _eval(e.right, pts)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if e.op == "/":
        if np.any(np.asarray(b) == 0):
            raise ExpressionDomainError("division by zero")
        return a / b
    with np.errstate(invalid="ignore"):
        r = np.power(np.asarray(a, dtype=float), b)
    if np.any(np.isnan(r)):
        raise ExpressionDomainError("power of a negative base to a fractional exponent")
    return r


class CompiledExpression:
    """Parsed expression usable as a callable on point arrays."""

    def __init__(self, text: str):
        self.text = text
        self.tree = parse_expression(text)

    def __call__(self, x):
        return evaluate(self.tree, x)

    def __repr__(self):
        return f"CompiledExpression({self.text!r})"
