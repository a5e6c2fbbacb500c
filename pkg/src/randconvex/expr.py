"""A small expression language for per-atom scalar maps.

Grammar, loosest to tightest binding::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?          # right associative
    atom   := NUMBER | "x" | NAME | FUNC "(" expr ["," expr] ")" | "(" expr ")"

``x`` is the free variable; any other bare name is a constant looked up in
the bindings at evaluation time.  Evaluation is elementwise over atoms, so a
compiled expression is local by construction.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from .errors import DomainError, ParseError, UnboundNameError, UnknownFunctionError
from .measure import L0Real

UNARY_FUNCS = ("abs", "sqrt", "sin", "cos", "exp")
BINARY_FUNCS = ("min", "max")
EXACT_POWER_LIMIT = 16


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or one of UNARY_FUNCS
    arg: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call2:
    name: str  # min or max
    left: "Expr"
    right: "Expr"


Expr = Union[Num, Var, Const, Unary, Binary, Call2]

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", _byte_offset(text, pos))
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), _byte_offset(text, start)))
        pos = m.end()
    tokens.append(("end", "", _byte_offset(text, len(text))))
    return tokens


def _byte_offset(text: str, idx: int) -> int:
    return len(text[:idx].encode("utf-8"))


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, off = self.take()
        if val != value or kind != "op":
            got = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {value!r}, got {got}", off)

    def parse(self) -> Expr:
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", off)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Unary("neg", self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return Binary("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, val, off = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if self.peek()[:2] == ("op", "("):
                return self.call(val, off)
            if val in UNARY_FUNCS or val in BINARY_FUNCS:
                raise ParseError(f"function {val!r} needs an argument list", self.peek()[2])
            return Var() if val == "x" else Const(val)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        got = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"expected a number, name or '(', got {got}", off)

    def call(self, name: str, off: int) -> Expr:
        if name not in UNARY_FUNCS and name not in BINARY_FUNCS:
            raise UnknownFunctionError(f"unknown function {name!r}", off)
        self.expect("(")
        first = self.expr()
        if name in BINARY_FUNCS:
            self.expect(",")
            second = self.expr()
            self.expect(")")
            return Call2(name, first, second)
        self.expect(")")
        return Unary(name, first)


def parse_expr(text: str) -> Expr:
    return _Parser(text).parse()


# binding strength used by the printer
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}
_ATOM = 5


def _prec(node: Expr) -> int:
    if isinstance(node, Binary):
        return _PREC[node.op]
    if isinstance(node, Unary) and node.op == "neg":
        return _PREC["neg"]
    return _ATOM


def to_text(node: Expr) -> str:
    """Render with the fewest parentheses that re-parse to the same tree."""

    def wrap(child: Expr, need: int) -> str:
        s = to_text(child)
        return f"({s})" if _prec(child) < need else s

    if isinstance(node, Num):
        v = float(node.value)
        return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Unary):
        if node.op == "neg":
            return "-" + wrap(node.arg, _PREC["neg"])
        return f"{node.op}({to_text(node.arg)})"
    if isinstance(node, Call2):
        return f"{node.name}({to_text(node.left)}, {to_text(node.right)})"
    p = _PREC[node.op]
    if node.op == "^":
        return f"{wrap(node.left, _ATOM)}^{wrap(node.right, _PREC['neg'])}"
    return f"{wrap(node.left, p)} {node.op} {wrap(node.right, p + 1)}"


def free_constants(node: Expr) -> set[str]:
    if isinstance(node, Const):
        return {node.name}
    if isinstance(node, Unary):
        return free_constants(node.arg)
    if isinstance(node, (Binary, Call2)):
        return free_constants(node.left) | free_constants(node.right)
    return set()


def eval_expr(node: Expr, bindings: Mapping[str, L0Real], x: L0Real) -> L0Real:
    """Evaluate atomwise; domain failures name the first offending atom."""
    space = x.space
    missing = sorted(free_constants(node) - set(bindings))
    if missing:
        raise UnboundNameError(f"unbound constant(s): {', '.join(missing)}")
    env = {}
    for name, val in bindings.items():
        if val.space != space:
            raise UnboundNameError(f"binding {name!r} lives on a different space")
        env[name] = val.values
    return L0Real(space, evaluate_array(node, env, x.values, space.atom_ids))


def evaluate_array(node: Expr, env: Mapping[str, np.ndarray], xs: np.ndarray, atom_ids) -> np.ndarray:
    with np.errstate(all="ignore"):
        return _eval(node, env, np.asarray(xs, dtype=float), atom_ids)


def _fail(message: str, bad: np.ndarray, atom_ids) -> None:
    idx = np.flatnonzero(bad)
    if idx.size:
        raise DomainError(message, atom_ids[idx[0]])


def _eval(node: Expr, env, xs: np.ndarray, atom_ids) -> np.ndarray:
    if isinstance(node, Num):
        return np.full(xs.shape, node.value)
    if isinstance(node, Var):
        return xs
    if isinstance(node, Const):
        return np.asarray(env[node.name], dtype=float)
    if isinstance(node, Unary):
        a = _eval(node.arg, env, xs, atom_ids)
        if node.op == "neg":
            out = -a
        elif node.op == "abs":
            out = np.abs(a)
        elif node.op == "sqrt":
            _fail("sqrt of a negative number", a < 0, atom_ids)
            out = np.sqrt(a)
        elif node.op == "sin":
            out = np.sin(a)
        elif node.op == "cos":
            out = np.cos(a)
        else:
            out = np.exp(a)
    elif isinstance(node, Call2):
        a = _eval(node.left, env, xs, atom_ids)
        b = _eval(node.right, env, xs, atom_ids)
        out = np.minimum(a, b) if node.name == "min" else np.maximum(a, b)
    else:
        a = _eval(node.left, env, xs, atom_ids)
        b = _eval(node.right, env, xs, atom_ids)
        if node.op == "+":
            out = a + b
        elif node.op == "-":
            out = a - b
        elif node.op == "*":
            out = a * b
        elif node.op == "/":
            _fail("division by zero", b == 0, atom_ids)
            out = a / b
        else:
            out = _power(a, b, atom_ids)
    _fail("non-finite value", ~np.isfinite(out), atom_ids)
    return out


def _power(base: np.ndarray, exp: np.ndarray, atom_ids) -> np.ndarray:
    base, exp = np.broadcast_arrays(base, exp)
    out = np.empty(base.shape)
    integral = exp == np.round(exp)
    small = integral & (np.abs(exp) <= EXACT_POWER_LIMIT)
    _fail("zero raised to a negative power", (base == 0) & (exp < 0), atom_ids)
    for k in np.unique(exp[small]):
        sel = small & (exp == k)
        acc = np.ones(int(sel.sum()))
        b = base[sel]
        for _ in range(int(abs(k))):
            acc = acc * b
        out[sel] = 1.0 / acc if k < 0 else acc
    big = integral & ~small
    out[big] = np.power(base[big], exp[big])
    frac = ~integral
    _fail("non-integer power of a negative number", frac & (base < 0), atom_ids)
    pos = frac & (base > 0)
    out[pos] = np.power(base[pos], exp[pos])
    out[frac & (base == 0)] = 0.0
    return out

