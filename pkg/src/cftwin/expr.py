"""Mechanism formulas compiled to exhaustive lookup tables.

Grammar (loosest binding first)::

    expr   := cmp ('?' expr ':' expr)?
    cmp    := or (('==' | '!=') or)*
    or     := and ('|' and)*
    and    := xor ('&' xor)*
    xor    := add ('^' add)*
    add    := mul (('+' | '-') mul)*
    mul    := unary ('*' unary)*
    unary  := '!' unary | '-' unary | atom
    atom   := INT | IDENT | ('min' | 'max') '(' expr ',' expr ')' | '(' expr ')'

Values are integers. ``!`` and ``?:`` treat 0 as false and anything else
as true; comparisons yield 0 or 1; ``& | ^`` are bitwise.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from cftwin.errors import CftwinError


class ExprSyntaxError(CftwinError, SyntaxError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class ExprRangeError(CftwinError, ValueError):
    def __init__(self, message, inputs):
        super().__init__(message)
        self.inputs = inputs


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Node"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Cond:
    test: "Node"
    then: "Node"
    orelse: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


Node = Union[Num, Var, Unary, Binary, Cond, Call]

# binding power per binary operator
_BINARY = {
    "==": 10, "!=": 10,
    "|": 20,
    "&": 30,
    "^": 40,
    "+": 50, "-": 50,
    "*": 60,
}
_UNARY_BP = 70
_FUNCS = ("min", "max")

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op>==|!=|[!^&|+\-*?:(),])
""", re.VERBOSE)


def tokenize(source: str):
    pos = 0
    out = []
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unknown token {source[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group(), pos))
        pos = m.end()
    out.append(("end", "", len(source)))
    return out


class _Parser:
    def __init__(self, source):
        self.tokens = tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        kind, val, pos = self.peek()
        if val != text or kind == "end":
            found = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {text!r}, found {found}", pos)
        return self.advance()

    def parse(self):
        node = self.expression()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", pos)
        return node

    def expression(self):
        test = self.binary(0)
        if self.peek()[1] == "?":
            self.advance()
            then = self.expression()
            self.expect(":")
            orelse = self.expression()
            return Cond(test, then, orelse)
        return test

    def binary(self, min_bp):
        left = self.unary()
        while True:
            kind, val, _ = self.peek()
            bp = _BINARY.get(val) if kind == "op" else None
            if bp is None or bp <= min_bp:
                return left
            self.advance()
            left = Binary(val, left, self.binary(bp))

    def unary(self):
        kind, val, pos = self.peek()
        if kind == "op" and val in ("!", "-"):
            self.advance()
            return Unary(val, self.unary())
        return self.atom()

    def atom(self):
        kind, val, pos = self.advance()
        if kind == "int":
            return Num(int(val))
        if kind == "ident":
            if val in _FUNCS and self.peek()[1] == "(":
                self.advance()
                a = self.expression()
                self.expect(",")
                b = self.expression()
                self.expect(")")
                return Call(val, (a, b))
            return Var(val)
        if val == "(":
            node = self.expression()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {what}", pos)


@dataclass(frozen=True)
class MechanismExpr:
    source: str
    ast: Node

    @property
    def free_vars(self) -> frozenset[str]:
        return free_vars(self.ast)


def parse(source: str) -> MechanismExpr:
    return MechanismExpr(source, _Parser(source).parse())


def free_vars(node: Node) -> frozenset[str]:
    if isinstance(node, Var):
        return frozenset([node.name])
    if isinstance(node, Num):
        return frozenset()
    if isinstance(node, Unary):
        return free_vars(node.operand)
    if isinstance(node, Binary):
        return free_vars(node.left) | free_vars(node.right)
    if isinstance(node, Cond):
        return free_vars(node.test) | free_vars(node.then) | free_vars(node.orelse)
    return frozenset().union(*(free_vars(a) for a in node.args))


def pretty(node: Node) -> str:
    """Render ``node`` with the minimum parentheses needed to reparse it."""
    return _pretty(node, 0)


def _pretty(node, ctx_bp):
    if isinstance(node, Num):
        return str(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({pretty(node.args[0])}, {pretty(node.args[1])})"
    if isinstance(node, Unary):
        return node.op + _pretty(node.operand, _UNARY_BP)
    if isinstance(node, Binary):
        bp = _BINARY[node.op]
        # left-associative: right operand needs strictly tighter binding
        text = f"{_pretty(node.left, bp - 1)} {node.op} {_pretty(node.right, bp)}"
        return f"({text})" if bp <= ctx_bp else text
    text = f"{_pretty(node.test, 1)} ? {_pretty(node.then, 0)} : {_pretty(node.orelse, 0)}"
    return f"({text})" if ctx_bp > 0 else text


def evaluate(node: Node, env: Mapping[str, int]) -> int:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Unary):
        v = evaluate(node.operand, env)
        return int(v == 0) if node.op == "!" else -v
    if isinstance(node, Cond):
        branch = node.then if evaluate(node.test, env) != 0 else node.orelse
        return evaluate(branch, env)
    if isinstance(node, Call):
        a, b = (evaluate(x, env) for x in node.args)
        return min(a, b) if node.func == "min" else max(a, b)
    a = evaluate(node.left, env)
    b = evaluate(node.right, env)
    op = node.op
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "^":
        return a ^ b
    if op == "&":
        return a & b
    if op == "|":
        return a | b
    if op == "==":
        return int(a == b)
    return int(a != b)


def compile_table(e: MechanismExpr | str, parents: Sequence[str],
                  parent_domains: Mapping[str, Sequence[int]],
                  out_domain: Sequence[int]) -> dict[tuple[int, ...], int]:
    """Tabulate ``e`` over every combination of parent values.

    Keys are tuples ordered like ``parents``.
    """
    if isinstance(e, str):
        e = parse(e)
    missing = e.free_vars - set(parents)
    if missing:
        raise ExprRangeError(
            f"{e.source!r} uses {sorted(missing)} which are not parents", None)
    allowed = set(out_domain)
    table = {}
    for combo in itertools.product(*(parent_domains[p] for p in parents)):
        env = dict(zip(parents, combo))
        value = evaluate(e.ast, env)
        if value not in allowed:
            inputs = ", ".join(f"{p}={v}" for p, v in env.items())
            raise ExprRangeError(
                f"{e.source!r} yields {value} outside {sorted(allowed)} "
                f"at ({inputs})", env)
        table[combo] = value
    return table
