"""Seeded random expression trees shared by the parser tests."""

from randconvex.expr import BINARY_FUNCS, UNARY_FUNCS, Binary, Call2, Const, Num, Unary, Var

CONSTS = ("c", "k")


def random_tree(rng, depth: int):
    if depth <= 1 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.4:
            return Var()
        if r < 0.6:
            return Const(CONSTS[int(rng.integers(len(CONSTS)))])
        if r < 0.8:
            return Num(float(rng.integers(0, 10)))
        return Num(float(round(rng.uniform(0, 10), 3)))
    kind = rng.random()
    if kind < 0.5:
        op = "+-*/^"[int(rng.integers(5))]
        return Binary(op, random_tree(rng, depth - 1), random_tree(rng, depth - 1))
    if kind < 0.85:
        op = ("neg",) + UNARY_FUNCS
        return Unary(op[int(rng.integers(len(op)))], random_tree(rng, depth - 1))
    name = BINARY_FUNCS[int(rng.integers(len(BINARY_FUNCS)))]
    return Call2(name, random_tree(rng, depth - 1), random_tree(rng, depth - 1))
