"""
The random modulus of convexity
===============================

On a finite space the modulus decomposes into the classical modulus of each
fiber.  We estimate it under four equivalent formulations, compare with the
Euclidean closed form and run the pair constructions behind the equivalence.
"""

# %%
import numpy as np

from randconvex import (
    FiberNorm,
    L0Real,
    ModulusQuery,
    RnModuleSpec,
    SearchConfig,
    Variant,
    equalize_pair,
    euclid_modulus_oracle,
    halfbound_check,
    modulus_estimate,
    prescribe_gap,
    random_norm,
    rotate_pair,
)

spec = RnModuleSpec.build(
    [
        ("a", 0.4, 2, FiberNorm.euclidean()),
        ("b", 0.4, 3, FiberNorm.pnorm(3.0)),
        ("c", 0.2, 1, FiberNorm.euclidean()),
    ]
)
cfg = SearchConfig(grid_points=1024, random_restarts=4000, refine_iters=100, seed=7)
G = spec.space.event(["a", "b"])

# %%
# Four formulations: sphere or ball pairs, gap equal to or at least eps.
eps = L0Real.constant(spec.space, 1.0)
for variant in Variant:
    est = modulus_estimate(spec, ModulusQuery(G, eps, variant), cfg)
    print(f"{variant.value:8s}", np.round(est.values, 6))
print("closed form on a:", euclid_modulus_oracle(1.0))

# %%
# One-dimensional fibers: the only sphere pairs with a gap are antipodal.
diag: list[str] = []
c = spec.space.event(["c"])
print("c, def:", modulus_estimate(spec, ModulusQuery(c, eps, Variant.GEQ_SPHERE), cfg)["c"])
print("c, eq :", modulus_estimate(spec, ModulusQuery(c, eps, Variant.EQ_SPHERE), cfg, diag)["c"], diag)

# %%
# The modulus never exceeds eps/2 on G(S).
for row in halfbound_check(spec, [0.25, 1.0, 2.0], cfg).rows:
    print(f"eps={row.eps:<5} max estimate {row.max_estimate:.6f}")

# %%
# Pair constructions on a single Euclidean plane.
plane = RnModuleSpec.build([("a", 1.0, 2, FiberNorm.euclidean())])
omega = plane.space.omega()
x = plane.element({"a": [1.0, 0.0]})
y = plane.element({"a": [0.0, 0.5]})

u, v = rotate_pair(x, y, omega)
print("rotate : u", u.at("a"), "v", v.at("a"), "u-v", (u - v).at("a"))

w = prescribe_gap(x, plane.element({"a": [0.0, 1.0]}), omega, L0Real.constant(plane.space, 1.0))
print("gap 1  :", w.at("a"), "||x-w|| =", random_norm(x - w)["a"])

u, v = equalize_pair(x, plane.element({"a": [0.5, 0.0]}))
print("equal  : u", u.at("a"), "v", v.at("a"), "||u+v|| =", random_norm(u + v)["a"])
