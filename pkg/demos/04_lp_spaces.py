"""
Uniform convexity of the derived L^p space
==========================================

Stacking the fibers with the norm (sum_w P(w) ||x(w)||^p)^(1/p) gives a
finite-dimensional Banach space.  It is uniformly convex when every fiber
is, and a single flat fiber destroys that.
"""

# %%
from randconvex import FiberNorm, RnModuleSpec, SearchConfig, lp_modulus_report, lp_norm, uniform_convexity_audit

round_spec = RnModuleSpec.build(
    [
        ("a", 0.5, 2, FiberNorm.euclidean()),
        ("b", 0.3, 3, FiberNorm.pnorm(3.0)),
        ("c", 0.2, 1, FiberNorm.euclidean()),
    ]
)
x = round_spec.element({"a": [3, 4], "b": [1, 0, 0], "c": [2]})
print("||x||_2 =", lp_norm(x, 2.0), " ||x||_3 =", lp_norm(x, 3.0))

# %%
# Estimated modulus of L^p(S), with the change under a doubled search budget.
cfg = SearchConfig(random_restarts=1000, refine_iters=100, seed=3)
for p in (1.5, 2.0, 3.0):
    rep = lp_modulus_report(round_spec, p, 1.0, cfg)
    print(f"p={p}: estimate {rep['estimate']:.5f}, budget delta {rep['budget_delta']:.1e}")

# %%
# The sampled inequality ||(x+y)/2||^p <= (1 - delta)(||x||^p + ||y||^p)/2.
audit = uniform_convexity_audit(round_spec, 2.0, 1.0, 20_000, seed=3)
print({k: audit[k] for k in ("delta_p", "samples_accepted", "worst_atom", "stability_delta")})

# %%
# A 1-norm fiber has flat faces on its sphere, and the modulus collapses.
flat_spec = RnModuleSpec.build([("a", 0.5, 2, FiberNorm.euclidean()), ("b", 0.5, 2, FiberNorm.pnorm(1.0))])
print("flat fiber, eps=0.5:", lp_modulus_report(flat_spec, 2.0, 0.5, cfg)["estimate"])
