"""Tiny arithmetic expression language for model configs.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | 'pi' | 'e' | 'i' | 'gamma' | 'x' '[' INT ']'
            | FUNC '(' expr ')' | '(' expr ')'
    FUNC   := sin | cos | exp | ln | abs

``x[k]`` is 1-based. Expressions compile to closures that evaluate on numpy
arrays, so one compiled expression handles a whole batch of states.
"""

from __future__ import annotations

import re
from typing import Callable

import numpy as np

__all__ = ["ExpressionError", "compile_expression"]

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "ln": np.log, "abs": np.abs}
_CONSTS = {"pi": np.pi, "e": np.e}

_TOKEN = re.compile(r"\s*(?:(\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|(.))")


class ExpressionError(ValueError):
    pass


Env = dict
Node = Callable[[Env], "np.ndarray | float"]


def _tokenize(src: str) -> list[tuple[str, str]]:
    out = []
    pos = 0
    src = src.rstrip()
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:  # pragma: no cover - the pattern always matches one char
            raise ExpressionError(f"cannot tokenize at {pos}: {src!r}")
        num, name, op = m.groups()
        if num is not None:
            out.append(("num", num))
        elif name is not None:
            out.append(("name", name))
        elif op is not None and not op.isspace():
            if op not in "+-*/^()[]":
                raise ExpressionError(f"unexpected character {op!r} in {src!r}")
            out.append(("op", op))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, src: str, dim_x: int):
        self.src = src
        self.toks = _tokenize(src)
        self.pos = 0
        self.dim_x = dim_x

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else (None, None)

    def take(self, kind=None, value=None):
        tok = self.peek()
        if tok[0] is None or (kind and tok[0] != kind) or (value and tok[1] != value):
            want = value or kind or "token"
            raise ExpressionError(f"expected {want} at token {self.pos} in {self.src!r}")
        self.pos += 1
        return tok

    def parse(self) -> Node:
        node = self.expr()
        if self.pos != len(self.toks):
            raise ExpressionError(f"trailing input at token {self.pos} in {self.src!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            node = _bin(node, rhs, np.add if op == "+" else np.subtract)
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            rhs = self.unary()
            node = _bin(node, rhs, np.multiply if op == "*" else np.divide)
        return node

    def unary(self) -> Node:
        if self.peek() == ("op", "-"):
            self.take()
            inner = self.unary()
            return lambda env: -inner(env)
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            expo = self.unary()
            return _bin(base, expo, np.power)
        return base

    def atom(self) -> Node:
        kind, val = self.peek()
        if kind == "num":
            self.take()
            c = float(val)
            return lambda env: c
        if kind == "op" and val == "(":
            self.take()
            node = self.expr()
            self.take("op", ")")
            return node
        if kind == "name":
            self.take()
            if val in _CONSTS:
                c = _CONSTS[val]
                return lambda env: c
            if val in _FUNCS:
                fn = _FUNCS[val]
                self.take("op", "(")
                arg = self.expr()
                self.take("op", ")")
                return lambda env: fn(arg(env))
            if val == "i":
                return lambda env: env["i"]
            if val == "gamma":
                return lambda env: env["gamma"]
            if val == "x":
                self.take("op", "[")
                idx = self.take("num")[1]
                self.take("op", "]")
                if not idx.isdigit() or not 1 <= int(idx) <= self.dim_x:
                    raise ExpressionError(f"x[{idx}] out of range 1..{self.dim_x} in {self.src!r}")
                k = int(idx) - 1
                return lambda env: env["x"][..., k]
            raise ExpressionError(f"unknown name {val!r} in {self.src!r}")
        raise ExpressionError(f"unexpected token {val!r} in {self.src!r}")


def _bin(a: Node, b: Node, fn) -> Node:
    return lambda env: fn(a(env), b(env))


def compile_expression(src: str | float | int, dim_x: int) -> Callable[..., np.ndarray]:
    """Compile ``src`` into ``f(x, i, gamma)``.

    ``x`` has shape ``(n, dim_x)``; ``i`` and ``gamma`` broadcast against
    ``(n,)``. The result always has shape ``(n,)``.
    """
    if isinstance(src, (int, float)) and not isinstance(src, bool):
        src = repr(float(src))
    if not isinstance(src, str):
        raise ExpressionError(f"expression must be a string or number, got {type(src).__name__}")
    node = _Parser(src, dim_x).parse()

    def evaluate(x, i=0, gamma=0.0):
        x = np.asarray(x, dtype=float)
        n = x.shape[0]
        val = node({"x": x, "i": np.asarray(i, dtype=float), "gamma": np.asarray(gamma, dtype=float)})
        return np.broadcast_to(np.asarray(val, dtype=float), (n,)).copy()

    evaluate.source = src
    return evaluate
