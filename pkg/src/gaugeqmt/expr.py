"""A small real-valued expression language over ``x``, ``y`` and named parameters.

Grammar (lowest to highest precedence)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?
    atom   := NUMBER | "x" | "y" | "pi" | PARAM | FUNC "(" expr ")" | "(" expr ")"

``^`` is right associative and binds tighter than unary minus, so ``-x^2`` is
``-(x^2)`` and ``2^-x`` is ``2^(-x)``.  There is no implicit multiplication.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

import numpy as np

from .errors import (
    ContractError,
    ExprSyntaxError,
    NumericalError,
    UnboundParameterError,
    UnknownIdentifierError,
)
from .fields import Grid2D, RealField

FUNCTIONS = ("exp", "sqrt", "sin", "cos", "abs")
VARIABLES = ("x", "y")
RESERVED = frozenset(FUNCTIONS + VARIABLES + ("pi",))

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


@dataclass(frozen=True)
class Const:
    value: float

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Pi:
    def __str__(self):
        return "pi"


@dataclass(frozen=True)
class Var:
    name: str  # "x" or "y"

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Param:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Neg:
    operand: "Expr"

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"

    def __str__(self):
        return to_text(self)


Expr = Union[Const, Pi, Var, Param, Neg, BinOp, Call]

ZERO = Const(0.0)


# --------------------------------------------------------------------------
# tokenizer and parser

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # num, ident, op, end
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, params: frozenset[str]):
        self.text = text
        self.params = params
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def _advance(self) -> _Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def _fail(self, tok: _Token | None = None):
        tok = tok or self.tok
        what = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ExprSyntaxError(f"unexpected {what}", tok.pos, self.text)

    def _expect(self, text: str):
        if self.tok.kind != "op" or self.tok.text != text:
            self._fail()
        self._advance()

    def parse(self) -> Expr:
        node = self.expr()
        if self.tok.kind != "end":
            self._fail()
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self._advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self._advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self._advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self._advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self._advance()
            return Const(float(tok.text))
        if tok.kind == "op" and tok.text == "(":
            self._advance()
            node = self.expr()
            self._expect(")")
            return node
        if tok.kind == "ident":
            self._advance()
            name = tok.text
            if name in FUNCTIONS:
                self._expect("(")
                arg = self.expr()
                self._expect(")")
                return Call(name, arg)
            if name in VARIABLES:
                return Var(name)
            if name == "pi":
                return Pi()
            if name in self.params:
                return Param(name)
            raise UnknownIdentifierError(name, tok.pos)
        self._fail(tok)


def parse(text: str, declared_params: Iterable[str] = ()) -> Expr:
    """Parse ``text`` into an expression tree.

    Raises:
        ExprSyntaxError: malformed input; ``position`` holds the character offset.
        UnknownIdentifierError: an identifier that is not declared.
    """
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0, text)
    params = frozenset(declared_params)
    clash = params & RESERVED
    if clash:
        raise ContractError(f"parameter names clash with reserved words: {sorted(clash)}")
    return _Parser(text, params).parse()


# --------------------------------------------------------------------------
# printing


def _prec(node: Expr) -> int:
    if isinstance(node, BinOp):
        return {"+": _PREC_ADD, "-": _PREC_ADD, "*": _PREC_MUL, "/": _PREC_MUL, "^": _PREC_POW}[node.op]
    if isinstance(node, Neg):
        return _PREC_NEG
    if isinstance(node, Const) and (node.value < 0 or math.copysign(1.0, node.value) < 0):
        return _PREC_NEG
    return _PREC_ATOM


def _wrap(node: Expr, min_prec: int) -> str:
    s = to_text(node)
    return f"({s})" if _prec(node) < min_prec else s


def to_text(node: Expr) -> str:
    """Render ``node`` with the minimal parentheses that reparse to the same tree."""
    if isinstance(node, Const):
        return repr(float(node.value))
    if isinstance(node, (Pi, Var, Param)):
        return str(node)
    if isinstance(node, Neg):
        return "-" + _wrap(node.operand, _PREC_NEG)
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    if isinstance(node, BinOp):
        if node.op == "^":
            return f"{_wrap(node.left, _PREC_ATOM)}^{_wrap(node.right, _PREC_NEG)}"
        p = _prec(node)
        return f"{_wrap(node.left, p)}{node.op}{_wrap(node.right, p + 1)}"
    raise TypeError(f"not an expression node: {node!r}")


# --------------------------------------------------------------------------
# tree utilities


def parameters(node: Expr) -> frozenset[str]:
    """Names of all parameters referenced by ``node``."""
    if isinstance(node, Param):
        return frozenset([node.name])
    if isinstance(node, Neg):
        return parameters(node.operand)
    if isinstance(node, Call):
        return parameters(node.arg)
    if isinstance(node, BinOp):
        return parameters(node.left) | parameters(node.right)
    return frozenset()


def substitute(node: Expr, values: Mapping[str, float]) -> Expr:
    """Replace the named parameters by constants."""
    if isinstance(node, Param):
        return Const(float(values[node.name])) if node.name in values else node
    if isinstance(node, Neg):
        return Neg(substitute(node.operand, values))
    if isinstance(node, Call):
        return Call(node.func, substitute(node.arg, values))
    if isinstance(node, BinOp):
        return BinOp(node.op, substitute(node.left, values), substitute(node.right, values))
    return node


def is_zero(node: Expr) -> bool:
    return isinstance(node, Const) and node.value == 0.0


def add(a: Expr, b: Expr) -> Expr:
    """Sum of two trees; a literal zero operand is dropped."""
    if is_zero(a):
        return b
    if is_zero(b):
        return a
    return BinOp("+", a, b)


# --------------------------------------------------------------------------
# evaluation

_NP_FUNCS = {"exp": np.exp, "sqrt": np.sqrt, "sin": np.sin, "cos": np.cos, "abs": np.abs}
_MATH_FUNCS = {"exp": math.exp, "sqrt": math.sqrt, "sin": math.sin, "cos": math.cos, "abs": abs}


def _lookup(params: Mapping[str, float], name: str) -> float:
    try:
        return float(params[name])
    except KeyError:
        raise UnboundParameterError(name) from None


def _eval_array(node: Expr, X, Y, params):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Pi):
        return math.pi
    if isinstance(node, Var):
        return X if node.name == "x" else Y
    if isinstance(node, Param):
        return _lookup(params, node.name)
    if isinstance(node, Neg):
        return np.negative(_eval_array(node.operand, X, Y, params))
    if isinstance(node, Call):
        return _NP_FUNCS[node.func](_eval_array(node.arg, X, Y, params))
    a = _eval_array(node.left, X, Y, params)
    b = _eval_array(node.right, X, Y, params)
    if node.op == "+":
        return np.add(a, b)
    if node.op == "-":
        return np.subtract(a, b)
    if node.op == "*":
        return np.multiply(a, b)
    if node.op == "/":
        return np.divide(a, b)
    return np.power(np.asarray(a, dtype=float), b)


def eval_on_grid(node: Expr, grid: Grid2D, params: Mapping[str, float]) -> RealField:
    """Evaluate ``node`` at every lattice point of ``grid``.

    Raises:
        UnboundParameterError: a referenced parameter is missing from ``params``.
        NumericalError: the result is not finite somewhere; the message names
            the first offending lattice index in row-major order.
    """
    for name in sorted(parameters(node)):
        _lookup(params, name)
    X, Y = grid.mesh
    with np.errstate(all="ignore"):
        values = _eval_array(node, X, Y, params)
    values = np.broadcast_to(np.asarray(values, dtype=float), grid.shape)
    bad = ~np.isfinite(values)
    if bad.any():
        i, j = np.unravel_index(int(np.argmax(bad.ravel())), grid.shape)
        raise NumericalError(
            f"expression {to_text(node)!r} is not finite at lattice index ({i}, {j}), "
            f"point {grid.point(i, j)}"
        )
    return RealField(grid, values)


def evaluate(node: Expr, x: float, y: float, params: Mapping[str, float]) -> float:
    """Scalar evaluation with the :mod:`math` module (independent of numpy)."""

    def ev(n: Expr) -> float:
        if isinstance(n, Const):
            return n.value
        if isinstance(n, Pi):
            return math.pi
        if isinstance(n, Var):
            return float(x) if n.name == "x" else float(y)
        if isinstance(n, Param):
            return _lookup(params, n.name)
        if isinstance(n, Neg):
            return -ev(n.operand)
        if isinstance(n, Call):
            return _MATH_FUNCS[n.func](ev(n.arg))
        a, b = ev(n.left), ev(n.right)
        if n.op == "+":
            return a + b
        if n.op == "-":
            return a - b
        if n.op == "*":
            return a * b
        if n.op == "/":
            return a / b
        return math.pow(a, b)

    try:
        value = ev(node)
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        raise NumericalError(f"expression {to_text(node)!r} failed at ({x}, {y}): {exc}") from exc
    if not math.isfinite(value):
        raise NumericalError(f"expression {to_text(node)!r} is not finite at ({x}, {y})")
    return value
