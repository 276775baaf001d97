"""Tiny expression language shared by the benchmark corpus and the CLI.

Grammar (``·`` and ``*`` both multiply, ``^`` takes a nonnegative integer)::

    expr  := term (("+" | "-") term)*
    term  := unary (("*" | "·" | "/") unary)*
    unary := "-" unary | power
    power := atom ("^" INT)?
    atom  := NUMBER | NAME | "[" NUMBER "," NUMBER "]" | "(" expr ")"
           | "|" expr "|" | "abs(" expr ")"

Names are uncertain parameters on [-1, 1]; bracketed intervals are
constants that do not count as parameters.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple, Union

from .classical import Interval

__all__ = ["ExprError", "Node", "parse", "variables", "evaluate"]


class ExprError(ValueError):
    """Syntax error or unsupported construct in an expression."""


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    interval: Interval


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class Abs:
    arg: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Bin:
    op: str
    left: "Node"
    right: "Node"


Node = Union[Num, Var, Const, Neg, Abs, Pow, Bin]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)"
    r"|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()\[\],|·]))"
)


def _tokenize(text: str) -> List[Tuple[str, str]]:
    out: List[Tuple[str, str]] = []
    pos = 0
    text = text.replace("−", "-").replace("×", "*").replace("²", "^2").replace("³", "^3")
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExprError(f"unexpected character at {pos}: {text[pos:pos + 10]!r}")
        kind = m.lastgroup
        out.append((kind, m.group(kind)))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> Tuple[str, str]:
        return self.tokens[self.i] if self.i < len(self.tokens) else ("end", "")

    def take(self, value: str = None) -> Tuple[str, str]:
        tok = self.peek()
        if value is not None and tok[1] != value:
            raise ExprError(f"expected {value!r}, found {tok[1] or 'end of input'!r}")
        if tok[0] == "end":
            raise ExprError("unexpected end of input")
        self.i += 1
        return tok

    def parse(self) -> Node:
        node = self.expr()
        if self.peek()[0] != "end":
            raise ExprError(f"trailing input at {self.peek()[1]!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            node = Bin(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "·", "/"):
            op = self.take()[1]
            node = Bin("/" if op == "/" else "*", node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        node = self.atom()
        if self.peek()[1] == "^":
            self.take()
            kind, value = self.take()
            if kind != "num" or not value.isdigit():
                raise ExprError(f"exponent must be a nonnegative integer, got {value!r}")
            node = Pow(node, int(value))
        return node

    def number(self) -> float:
        sign = 1.0
        if self.peek()[1] == "-":
            self.take()
            sign = -1.0
        kind, value = self.take()
        if kind != "num":
            raise ExprError(f"expected a number, found {value!r}")
        return sign * float(value)

    def atom(self) -> Node:
        kind, value = self.peek()
        if kind == "num":
            self.take()
            return Num(float(value))
        if kind == "name":
            self.take()
            if value == "abs" and self.peek()[1] == "(":
                self.take("(")
                node = self.expr()
                self.take(")")
                return Abs(node)
            return Var(value)
        if value == "(":
            self.take()
            node = self.expr()
            self.take(")")
            return node
        if value == "[":
            self.take()
            lo = self.number()
            self.take(",")
            hi = self.number()
            self.take("]")
            try:
                return Const(Interval(lo, hi))
            except ValueError as exc:
                raise ExprError(str(exc)) from exc
        if value == "|":
            self.take()
            node = self.expr()
            self.take("|")
            return Abs(node)
        raise ExprError(f"unexpected token {value or 'end of input'!r}")


def parse(text: str) -> Node:
    return _Parser(text).parse()


def variables(node: Node) -> List[str]:
    """Distinct parameter names, sorted."""
    found = set()

    def walk(n: Node) -> None:
        if isinstance(n, Var):
            found.add(n.name)
        elif isinstance(n, (Neg, Abs)):
            walk(n.arg)
        elif isinstance(n, Pow):
            walk(n.base)
        elif isinstance(n, Bin):
            walk(n.left)
            walk(n.right)

    walk(node)
    return sorted(found)


def evaluate(node: Node, ops: Dict[str, Callable], env: Dict[str, object]):
    """Fold ``node`` with the callbacks in ``ops``.

    ``ops`` needs ``num``, ``const``, ``add``, ``sub``, ``mul``, ``div``,
    ``neg`` and ``pow``; ``abs`` is optional.  ``env`` maps names to values.
    """
    if isinstance(node, Num):
        return ops["num"](node.value)
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise ExprError(f"unknown parameter {node.name!r}") from None
    if isinstance(node, Const):
        return ops["const"](node.interval)
    if isinstance(node, Neg):
        return ops["neg"](evaluate(node.arg, ops, env))
    if isinstance(node, Abs):
        if "abs" not in ops:
            raise ExprError("|.| is not supported by this arithmetic")
        return ops["abs"](evaluate(node.arg, ops, env))
    if isinstance(node, Pow):
        return ops["pow"](evaluate(node.base, ops, env), node.exponent)
    if isinstance(node, Bin):
        left = evaluate(node.left, ops, env)
        right = evaluate(node.right, ops, env)
        return ops[{"+": "add", "-": "sub", "*": "mul", "/": "div"}[node.op]](left, right)
    raise ExprError(f"unknown node {node!r}")
