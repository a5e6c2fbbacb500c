import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from randconvex import (
    DomainError,
    FiniteProbSpace,
    L0Real,
    LocalFunction,
    ParseError,
    UnboundNameError,
    UnknownFunctionError,
    eval_expr,
    locality_audit,
    parse_expr,
    to_text,
)
from randconvex.expr import Binary, Call2, Const, Num, Unary, Var

from exprgen import random_tree

AB = FiniteProbSpace(("a", "b"), (0.5, 0.5))


def test_grammar_examples():
    assert parse_expr("x^3 - c") == Binary("-", Binary("^", Var(), Num(3.0)), Const("c"))
    assert parse_expr("min(x, 1) * c") == Binary("*", Call2("min", Var(), Num(1.0)), Const("c"))


def test_precedence():
    assert parse_expr("-x^2") == Unary("neg", Binary("^", Var(), Num(2.0)))
    assert parse_expr("2^3^2") == Binary("^", Num(2.0), Binary("^", Num(3.0), Num(2.0)))
    assert parse_expr("1 - 2 - 3") == Binary("-", Binary("-", Num(1.0), Num(2.0)), Num(3.0))
    assert parse_expr("2^-1") == Binary("^", Num(2.0), Unary("neg", Num(1.0)))
    assert parse_expr(" ( x ) ") == Var()


@pytest.mark.parametrize(
    "text, offset",
    [("x +", 3), ("(x", 2), ("x y", 2), ("3 $ 4", 2), ("min(x)", 5), ("", 0), ("é + x", 0)],
)
def test_syntax_errors_carry_byte_offsets(text, offset):
    with pytest.raises(ParseError) as info:
        parse_expr(text)
    assert info.value.offset == offset


def test_byte_offsets_count_utf8():
    with pytest.raises(ParseError) as info:
        parse_expr("x + é")
    assert info.value.offset == 4
    with pytest.raises(ParseError) as info:
        parse_expr("é")
    assert info.value.offset == 0


def test_unknown_function():
    with pytest.raises(UnknownFunctionError):
        parse_expr("tan(x)")


def test_eval_examples():
    c = L0Real(AB, [1, 8])
    out = eval_expr(parse_expr("x^3 - c"), {"c": c}, L0Real(AB, [1, 2]))
    assert out == L0Real(AB, [0, 0])
    assert eval_expr(parse_expr("abs(x)"), {}, L0Real(AB, [-3, 2])) == L0Real(AB, [3, 2])
    with pytest.raises(DomainError) as info:
        eval_expr(parse_expr("sqrt(x)"), {}, L0Real(AB, [-1, 4]))
    assert info.value.atom == "a"


def test_eval_errors():
    with pytest.raises(UnboundNameError):
        eval_expr(parse_expr("x + k"), {}, L0Real(AB, [1, 2]))
    with pytest.raises(DomainError) as info:
        eval_expr(parse_expr("1 / x"), {}, L0Real(AB, [1, 0]))
    assert info.value.atom == "b"
    with pytest.raises(DomainError):
        eval_expr(parse_expr("x^0.5"), {}, L0Real(AB, [-1, 1]))
    with pytest.raises(DomainError):
        eval_expr(parse_expr("exp(x)"), {}, L0Real(AB, [1000, 1]))


def test_integer_powers_are_exact():
    x = L0Real(AB, [1.1, -0.3])
    out = eval_expr(parse_expr("x^3"), {}, x)
    assert out.values[0] == 1.1 * 1.1 * 1.1 and out.values[1] == -0.3 * -0.3 * -0.3


def _oracle(node, env, x):
    """Scalar recursive interpreter on the math module."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x
    if isinstance(node, Const):
        return env[node.name]
    if isinstance(node, Unary):
        a = _oracle(node.arg, env, x)
        return {"neg": lambda v: -v, "abs": abs, "sqrt": math.sqrt, "sin": math.sin, "cos": math.cos, "exp": math.exp}[node.op](a)
    a, b = _oracle(node.left, env, x), _oracle(node.right, env, x)
    if isinstance(node, Call2):
        return min(a, b) if node.name == "min" else max(a, b)
    if node.op == "^":
        return a**b if b != int(b) else math.prod([a] * int(abs(b))) ** (1 if b >= 0 else -1)
    return {"+": a + b, "-": a - b, "*": a * b, "/": a / b if b else math.inf}[node.op]


def test_evaluation_matches_scalar_oracle():
    rng = np.random.default_rng(7)
    space = FiniteProbSpace.uniform(["p", "q", "r"])
    compared = 0
    for _ in range(2000):
        tree = random_tree(rng, 4)
        consts = {"c": rng.uniform(0.5, 2, 3), "k": rng.uniform(0.5, 2, 3)}
        xs = rng.uniform(-2, 2, 3)
        try:
            got = eval_expr(tree, {k: L0Real(space, v) for k, v in consts.items()}, L0Real(space, xs)).values
        except DomainError:
            continue
        for i in range(3):
            try:
                want = _oracle(tree, {k: v[i] for k, v in consts.items()}, xs[i])
            except (ValueError, OverflowError, ZeroDivisionError):
                continue
            if isinstance(want, complex) or not math.isfinite(want):
                continue
            assert abs(got[i] - want) <= 1e-12 * max(1.0, abs(want)), to_text(tree)
            compared += 1
    assert compared > 1000


def test_round_trip_500_trees():
    rng = np.random.default_rng(11)
    for _ in range(500):
        tree = random_tree(rng, 6)
        assert parse_expr(to_text(tree)) == tree


@st.composite
def trees(draw, depth=6):
    if depth <= 1 or draw(st.booleans()):
        return draw(
            st.one_of(
                st.just(Var()),
                st.sampled_from([Const("c"), Const("k")]),
                st.floats(0, 1e6, allow_nan=False).map(Num),
            )
        )
    kind = draw(st.integers(0, 2))
    if kind == 0:
        return Binary(draw(st.sampled_from("+-*/^")), draw(trees(depth - 1)), draw(trees(depth - 1)))
    if kind == 1:
        return Unary(draw(st.sampled_from(["neg", "abs", "sqrt", "sin", "cos", "exp"])), draw(trees(depth - 1)))
    return Call2(draw(st.sampled_from(["min", "max"])), draw(trees(depth - 1)), draw(trees(depth - 1)))


@given(trees())
def test_round_trip_property(tree):
    assert parse_expr(to_text(tree)) == tree


@given(trees(depth=4), st.integers(0, 2**31))
def test_compiled_functions_are_local(tree, seed):
    space = FiniteProbSpace.uniform(["a", "b", "c"])
    consts = {"c": L0Real(space, [0.5, 1.5, 2.0]), "k": L0Real(space, [1.0, 3.0, 0.25])}
    audit = locality_audit(LocalFunction.from_expr(space, tree, consts), 10, seed)
    assert audit.max_deviation == 0.0
