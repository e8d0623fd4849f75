"""Infix expression language for homogeneous functions of ``u1..ud``.

Grammar (ASCII, whitespace insignificant)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := primary ('^' exponent)?
    exponent:= ['-' | '+'] NUMBER | '(' ['-' | '+'] NUMBER ')'
    primary := NUMBER | VARIABLE | 'abs' '(' expr ')' | '(' expr ')'

Chart expressions (used by chart files, never by ``--function``) use the
variables ``s1..sm`` and additionally accept ``sin``, ``cos``, ``sqrt`` and
the constant ``pi``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import jet
from .jet import DomainError, DualTower


class ExprError(ValueError):
    """Base class for expression-language errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, position: int, source: str = ""):
        self.position = position
        self.source = source
        pointer = f"\n  {source}\n  {' ' * position}^" if source else ""
        super().__init__(f"{message} at position {position}{pointer}")


class UnknownIdentifierError(ExprSyntaxError):
    pass


class VariableIndexError(ExprSyntaxError):
    pass


# -- AST -------------------------------------------------------------------
@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class Add:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Sub:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Mul:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Div:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: float


@dataclass(frozen=True)
class Abs:
    arg: "Node"


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class Func:
    """Chart-only elementary function (sin, cos, sqrt)."""

    name: str
    arg: "Node"


Node = Union[Const, Var, Add, Sub, Mul, Div, Pow, Abs, Neg, Func]

_BINARY = {Add: "+", Sub: "-", Mul: "*", Div: "/"}
_CHART_FUNCS = {"sin", "cos", "sqrt"}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


@dataclass(frozen=True)
class Token:
    kind: str  # 'num' | 'name' | 'op' | 'end'
    text: str
    pos: int


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        if source[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(source, pos)
        if not m or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", pos, source)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append(Token(kind, m.group(kind), start))
        pos = m.end()
    tokens.append(Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, source: str, dim: int, var_prefix: str, chart: bool):
        self.source = source
        self.dim = dim
        self.var_prefix = var_prefix
        self.chart = chart
        self.tokens = tokenize(source)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def _error(self, msg, tok=None, cls=ExprSyntaxError):
        tok = tok or self.tok
        return cls(msg, tok.pos, self.source)

    def accept(self, text) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            found = self.tok.text or "end of input"
            raise self._error(f"expected {text!r}, found {found!r}")

    def parse(self) -> Node:
        if self.tok.kind == "end":
            raise self._error("empty expression")
        node = self.expr()
        if self.tok.kind != "end":
            raise self._error(f"unexpected token {self.tok.text!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            if self.accept("+"):
                node = Add(node, self.term())
            elif self.accept("-"):
                node = Sub(node, self.term())
            else:
                return node

    def term(self) -> Node:
        node = self.unary()
        while True:
            if self.accept("*"):
                node = Mul(node, self.unary())
            elif self.accept("/"):
                node = Div(node, self.unary())
            else:
                return node

    def unary(self) -> Node:
        if self.accept("-"):
            return Neg(self.unary())
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        if self.accept("^"):
            exp_tok = self.tok
            k = self.exponent()
            if not float(k).is_integer() and not _provably_nonnegative(base):
                raise self._error(
                    "non-integer exponent requires abs(...) or a provably nonnegative base", exp_tok)
            if self.tok.kind == "op" and self.tok.text == "^":
                raise self._error("chained powers are ambiguous; add parentheses")
            return Pow(base, k)
        return base

    def exponent(self) -> float:
        paren = self.accept("(")
        sign = 1.0
        if self.accept("-"):
            sign = -1.0
        elif self.accept("+"):
            pass
        if self.tok.kind != "num":
            raise self._error("exponent must be a real literal")
        value = sign * float(self.tok.text)
        self.i += 1
        if paren:
            self.expect(")")
        return value

    def primary(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Const(float(tok.text))
        if tok.kind == "op" and tok.text == "(":
            self.i += 1
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "name":
            self.i += 1
            name = tok.text
            if name == "abs":
                self.expect("(")
                node = self.expr()
                self.expect(")")
                return Abs(node)
            if self.chart and name in _CHART_FUNCS:
                self.expect("(")
                node = self.expr()
                self.expect(")")
                if name == "sqrt" and not _provably_nonnegative(node):
                    raise self._error("sqrt argument must be provably nonnegative", tok)
                return Func(name, node)
            if self.chart and name == "pi":
                return Const(math.pi)
            m = re.fullmatch(re.escape(self.var_prefix) + r"(\d+)", name)
            if m:
                index = int(m.group(1))
                if not 1 <= index <= self.dim:
                    raise self._error(
                        f"variable index {index} outside 1..{self.dim}", tok, VariableIndexError)
                return Var(index)
            raise self._error(f"unknown identifier {name!r}", tok, UnknownIdentifierError)
        found = tok.text or "end of input"
        raise self._error(f"unexpected token {found!r}")


def _provably_nonnegative(node: Node) -> bool:
    if isinstance(node, Const):
        return node.value >= 0
    if isinstance(node, Abs):
        return True
    if isinstance(node, Pow):
        k = node.exponent
        if float(k).is_integer() and int(k) % 2 == 0:
            return True
        return _provably_nonnegative(node.base)
    if isinstance(node, (Add, Mul, Div)):
        return _provably_nonnegative(node.left) and _provably_nonnegative(node.right)
    if isinstance(node, Func):
        return node.name == "sqrt"
    return False


# -- printing ----------------------------------------------------------------
_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}


def _fmt_number(x: float) -> str:
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def to_source(node: Node, var_prefix: str = "u") -> str:
    """Render ``node`` so that parsing the text yields an identical AST."""

    def prec(n):
        return _PREC.get(type(n), 5)

    def wrap(n, needed):
        text = render(n)
        return f"({text})" if prec(n) < needed else text

    def render(n):
        if isinstance(n, Const):
            if n.value == math.pi and var_prefix == "s":
                return "pi"
            return _fmt_number(n.value)
        if isinstance(n, Var):
            return f"{var_prefix}{n.index}"
        if isinstance(n, Abs):
            return f"abs({render(n.arg)})"
        if isinstance(n, Func):
            return f"{n.name}({render(n.arg)})"
        if isinstance(n, Neg):
            return "-" + wrap(n.arg, 3)
        if isinstance(n, Pow):
            return f"{wrap(n.base, 5)}^{_fmt_number(n.exponent)}"
        op = _BINARY[type(n)]
        p = prec(n)
        # left-associative: the right operand needs parens at equal precedence
        return f"{wrap(n.left, p)}{op}{wrap(n.right, p + 1)}"

    return render(node)


# -- evaluation --------------------------------------------------------------
def evaluate_node(node: Node, args):
    """Evaluate ``node`` with variable values ``args`` (floats, arrays or towers)."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return args[node.index - 1]
    if isinstance(node, Add):
        return evaluate_node(node.left, args) + evaluate_node(node.right, args)
    if isinstance(node, Sub):
        return evaluate_node(node.left, args) - evaluate_node(node.right, args)
    if isinstance(node, Mul):
        return evaluate_node(node.left, args) * evaluate_node(node.right, args)
    if isinstance(node, Div):
        num = evaluate_node(node.left, args)
        den = evaluate_node(node.right, args)
        if not isinstance(den, DualTower):
            if isinstance(den, np.ndarray):
                with np.errstate(divide="ignore", invalid="ignore"):
                    return num / den
            if den == 0:
                raise DomainError("division by zero")
        return num / den
    if isinstance(node, Neg):
        return -evaluate_node(node.arg, args)
    if isinstance(node, Abs):
        return jet.absolute(evaluate_node(node.arg, args))
    if isinstance(node, Pow):
        if isinstance(node.base, Abs):
            return jet.power_abs(evaluate_node(node.base.arg, args), node.exponent)
        return jet.power(evaluate_node(node.base, args), node.exponent)
    if isinstance(node, Func):
        return getattr(jet, node.name)(evaluate_node(node.arg, args))
    raise TypeError(f"unknown node {node!r}")


@dataclass(frozen=True)
class Expr:
    """A parsed expression over ``u1..u{dim}``; immutable and thread-safe."""

    ast: Node
    dim: int
    source: str = ""

    def __call__(self, point) -> float:
        point = np.asarray(point, dtype=float)
        return float(evaluate_node(self.ast, list(point)))

    def evaluate(self, args):
        """Evaluate on a list of ``dim`` components of any supported kind."""
        return evaluate_node(self.ast, args)

    def batch(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        out = evaluate_node(self.ast, [points[:, i] for i in range(self.dim)])
        return np.broadcast_to(np.asarray(out, dtype=float), points.shape[:1]).copy()

    def jet(self, point) -> DualTower:
        return eval_jet(self, point)

    def to_source(self) -> str:
        return to_source(self.ast)


def parse(source: str, dim: int) -> Expr:
    """Parse ``source`` as a function of ``u1..u{dim}``."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    return Expr(_Parser(source, dim, "u", chart=False).parse(), dim, source)


def parse_chart_component(source: str, dim: int) -> Expr:
    """Parse one component of a chart map in the variables ``s1..s{dim}``."""
    return Expr(_Parser(source, dim, "s", chart=True).parse(), dim, source)


def eval_jet(e: Expr, point) -> DualTower:
    """Value, exact gradient and exact Hessian of ``e`` at ``point``."""
    point = np.asarray(point, dtype=float)
    if point.shape[-1] != e.dim:
        raise ValueError(f"point has {point.shape[-1]} coordinates, expression has dim {e.dim}")
    out = evaluate_node(e.ast, DualTower.seeds(point))
    if not isinstance(out, DualTower):  # constant expression
        out = DualTower.seed(np.zeros(point.shape[:-1]), 0, e.dim)._const(out)
    return out
