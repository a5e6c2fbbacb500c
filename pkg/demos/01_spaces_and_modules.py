"""
Random normed modules on a finite space
=======================================

A walk through the basic objects: a finite probability space, random
variables on it, a module of vector-valued elements and its random norm.
"""

# %%
# A finite space is a list of atoms with positive weights summing to one.
import numpy as np

from randconvex import (
    FiberNorm,
    FiniteProbSpace,
    L0Real,
    RandomFunctional,
    RnModuleSpec,
    companion,
    dual_norm,
    eval_functional,
    grand_stratum,
    independent_part,
    kyfan_distance,
    lattice_extrema,
    norm_attaining,
    random_norm,
)

space = FiniteProbSpace(("a", "b", "c"), (0.5, 0.3, 0.2))
xi = L0Real(space, [1.0, -2.0, 0.5])
eta = L0Real(space, [0.0, 3.0, 0.5])
print("xi ∧ eta =", lattice_extrema([xi, eta], "inf").values)
print("Ky Fan distance:", kyfan_distance(xi, eta))

# %%
# A module attaches a finite-dimensional normed fiber to each atom.
# Atom c carries a one-dimensional fiber, so it sits outside G(S).
spec = RnModuleSpec.build(
    [
        ("a", 0.5, 2, FiberNorm.euclidean()),
        ("b", 0.3, 3, FiberNorm.pnorm(3.0)),
        ("c", 0.2, 1, FiberNorm.euclidean()),
    ]
)
print("G(S) =", grand_stratum(spec).ordered())

x = spec.element({"a": [3, 4], "b": [1, 1, 1], "c": [-2]})
print("||x|| =", random_norm(x).values)

# %%
# The random conjugate space: one dual vector per atom, acting by dot products.
f = RandomFunctional(spec, [[1, 0], [0, 1, 0], [2]])
print("f(x) =", eval_functional(f, x).values)
print("||f||* =", dual_norm(f).values)

# A norm-attaining functional reproduces ||x|| and has unit dual norm on A_x.
g = norm_attaining(x)
print("g(x) =", eval_functional(g, x).values, " ||g||* =", dual_norm(g).values)

# %%
# Independence is atomwise: y is a multiple of x on a, and any two vectors
# in the one-dimensional fiber at c are dependent.
y = spec.element({"a": [6, 8], "b": [1, 0, 0], "c": [1]})
part = independent_part(x, y)
print("dependent stratum F =", part.F.ordered())
print("independent part   =", part.independent.ordered())

# On G(S) every unit element has a companion direction.
u = spec.element({"a": [0.6, 0.8], "b": np.array([1.0, 0.0, 0.0]), "c": [0]})
print("companion of u on a:", companion(u).at("a"))
