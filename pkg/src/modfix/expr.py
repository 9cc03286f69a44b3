"""Small arithmetic expression language for user-defined mappings.

Grammar (whitespace is insignificant)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := number | VAR | '(' expr ')' | func '(' expr [',' expr] ')'
    func   := abs | sqrt | min | max

``VAR`` is a single variable name chosen by the caller: ``f`` for mappings,
``r`` for the comparison function of condition (I), ``t`` for Orlicz
functions. There is no unary minus; write ``0-f``.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from modfix.errors import EvaluationError, ParseError

__all__ = ["Num", "Var", "BinOp", "Call", "parse_expr", "evaluate", "to_text", "FUNCTIONS"]

FUNCTIONS = {"abs": 1, "sqrt": 1, "min": 2, "max": 2}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/(),])
""", re.VERBOSE)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, variable):
        self.text = text
        self.variable = variable
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, tok, pos = self.peek()
        if tok != value or kind == "end":
            found = "end of input" if kind == "end" else repr(tok)
            raise ParseError(f"expected {value!r}, found {found}", pos, self.text)
        return self.take()

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        kind, tok, pos = self.peek()
        if kind == "num":
            self.take()
            return Num(float(tok))
        if kind == "name":
            self.take()
            if self.peek()[1] == "(":
                return self.call(tok, pos)
            if tok == self.variable:
                return Var(tok)
            if tok in FUNCTIONS:
                raise ParseError(f"expected '(' after function {tok!r}", self.peek()[2], self.text)
            raise ParseError(
                f"unknown identifier {tok!r} (variable is {self.variable!r})", pos, self.text)
        if tok == "(" and kind == "op":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(tok)
        raise ParseError(
            f"expected number, {self.variable!r}, '(' or function, found {found}", pos, self.text)

    def call(self, name, pos):
        if name not in FUNCTIONS:
            raise ParseError(f"unknown function {name!r}", pos, self.text)
        self.expect("(")
        args = [self.expr()]
        while self.peek()[1] == ",":
            self.take()
            args.append(self.expr())
        self.expect(")")
        if len(args) != FUNCTIONS[name]:
            raise ParseError(
                f"{name} takes {FUNCTIONS[name]} argument(s), got {len(args)}", pos, self.text)
        return Call(name, tuple(args))


def parse_expr(text, variable="f"):
    """Parse ``text`` into an expression tree over one variable.

    Raises
    ------
    ParseError
        With the 0-based offset of the offending token.
    """
    p = _Parser(text, variable)
    node = p.expr()
    kind, tok, pos = p.peek()
    if kind != "end":
        raise ParseError(f"expected operator or end of input, found {tok!r}", pos, text)
    return node


def _first_bad(mask):
    idx = np.flatnonzero(mask)
    return int(idx[0]) if idx.size else None


def _eval(node, x):
    if isinstance(node, Num):
        return np.full_like(x, node.value)
    if isinstance(node, Var):
        return x
    if isinstance(node, BinOp):
        a = _eval(node.left, x)
        b = _eval(node.right, x)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        bad = _first_bad(b == 0)
        if bad is not None:
            raise EvaluationError("division by zero", bad)
        return a / b
    if isinstance(node, Call):
        args = [_eval(arg, x) for arg in node.args]
        if node.name == "abs":
            return np.abs(args[0])
        if node.name == "sqrt":
            bad = _first_bad(args[0] < 0)
            if bad is not None:
                raise EvaluationError("sqrt of negative value", bad)
            return np.sqrt(args[0])
        if node.name == "min":
            return np.minimum(args[0], args[1])
        return np.maximum(args[0], args[1])
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node, x):
    """Evaluate ``node`` at ``x`` (a float or an array, pointwise).

    Returns a float for scalar input and an array otherwise. Failures raise
    :class:`EvaluationError` carrying the index of the first bad point.
    """
    scalar = np.ndim(x) == 0
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    with np.errstate(all="ignore"):
        out = _eval(node, arr)
    bad = _first_bad(~np.isfinite(out))
    if bad is not None:
        raise EvaluationError("non-finite result", bad)
    return float(out[0]) if scalar else out


def to_text(node):
    """Render ``node`` as text that :func:`parse_expr` reads back unchanged."""
    if isinstance(node, Num):
        if not math.isfinite(node.value):
            raise ValueError("cannot render a non-finite literal")
        body = repr(abs(node.value))
        return f"(0-{body})" if math.copysign(1.0, node.value) < 0 else body
    if isinstance(node, Var):
        return node.name
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    return f"{node.name}({', '.join(to_text(a) for a in node.args)})"
