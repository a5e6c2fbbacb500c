"""Seeded self-checks, one per structural result the library encodes.

Each suite draws random instances from its seed, runs the relevant
operations, re-checks their outputs by independent norm evaluation and
returns a :class:`SuiteReport`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .convexity import (
    ModulusQuery,
    SearchConfig,
    Variant,
    equalize_pair,
    halfbound_check,
    modulus_estimate,
    prescribe_gap,
    rotate_pair,
)
from .dual import RandomFunctional, dual_norm, eval_functional, norm_attaining, sup_formula_check
from .expr import parse_expr
from .ivt import LocalFunction, locality_audit, solve_ivt
from .lp import uniform_convexity_audit
from .measure import FiniteProbSpace, L0Real
from .module import FiberNorm, ModuleElement, RnModuleSpec, module_scale, random_norm, supports
from .rank import grand_stratum

TOL = 1e-9


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class SuiteReport:
    suite: str
    title: str
    seed: int
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(Check(name, bool(passed), detail))

    def to_json(self) -> dict:
        return {
            "suite": self.suite,
            "title": self.title,
            "seed": self.seed,
            "passed": self.passed,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks],
        }


# ------------------------------------------------------------ random inputs

NORM_CHOICES = (FiberNorm.euclidean(), FiberNorm.pnorm(1.5), FiberNorm.pnorm(3.0))


def random_space(rng: np.random.Generator, n_atoms: int) -> FiniteProbSpace:
    w = rng.uniform(0.2, 1.0, n_atoms)
    w = w / w.sum()
    # fold the rounding residue into the last weight
    w[-1] = 1.0 - w[:-1].sum()
    return FiniteProbSpace(tuple(f"w{i}" for i in range(n_atoms)), tuple(float(v) for v in w))


def random_spec(rng: np.random.Generator, dims=(2, 3), norms=NORM_CHOICES, atoms=(2, 4)) -> RnModuleSpec:
    n = int(rng.integers(atoms[0], atoms[1] + 1))
    space = random_space(rng, n)
    return RnModuleSpec(
        space,
        tuple(int(rng.choice(dims)) for _ in range(n)),
        tuple(norms[int(rng.integers(len(norms)))] for _ in range(n)),
    )


def random_unit(rng, norm: FiberNorm, d: int) -> np.ndarray:
    v = rng.standard_normal(d)
    return v / norm.norm(v)


def random_pair(rng, spec: RnModuleSpec, dependent_share: float = 0.0, y_on_sphere: bool = False):
    """x on the unit sphere everywhere, ||y|| <= 1, y nonzero.

    With ``dependent_share`` > 0 that fraction of atoms gets y = g x, |g| < 1.
    """
    xs, ys = [], []
    for d, norm in zip(spec.dims, spec.norms):
        x = random_unit(rng, norm, d)
        if rng.random() < dependent_share:
            y = rng.uniform(0.05, 0.95) * rng.choice([-1.0, 1.0]) * x
        else:
            r = 1.0 if y_on_sphere else rng.uniform(0.05, 1.0)
            y = r * random_unit(rng, norm, d)
        xs.append(x)
        ys.append(y)
    return ModuleElement(spec, xs), ModuleElement(spec, ys)


def _max_dev(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)))) if np.size(a) else 0.0


def _elem_dev(u: ModuleElement, v: ModuleElement) -> float:
    return max((_max_dev(a, b) for a, b in zip(u.vectors, v.vectors)), default=0.0)


# ------------------------------------------------------------------- suites


def suite_ivt(seed: int, instances: int = 500) -> SuiteReport:
    rep = SuiteReport("ivt", "stratified intermediate values for local functions", seed)
    rng = np.random.default_rng(seed)
    worst, bad = 0.0, 0
    for _ in range(instances):
        inst = random_ivt_instance(rng)
        eta = solve_ivt(inst.f, inst.y1, inst.y2, inst.xi, TOL)
        inside = bool(np.all(inst.y1.values <= eta.values) and np.all(eta.values <= inst.y2.values))
        resid = float(np.max(np.abs(inst.f(eta).values - inst.xi.values)))
        worst = max(worst, resid)
        bad += (not inside) or resid > TOL
    rep.add("eta within brackets, residual <= 1e-9", bad == 0, f"{instances} instances, worst residual {worst:.3e}")
    return rep


@dataclass
class IvtInstance:
    f: LocalFunction
    y1: L0Real
    y2: L0Real
    xi: L0Real


_SCALAR_MAPS: tuple[Callable[[np.random.Generator], Callable[[float], float]], ...] = (
    lambda r: (lambda c: lambda t: t**3 + c[0] * t + c[1])(r.uniform(-2, 2, 2)),
    lambda r: (lambda c: lambda t: c[0] * t * t - c[1] * t + c[2])(r.uniform(-2, 2, 3)),
    lambda r: (lambda c: lambda t: math.sin(c[0] * t) + c[1] * t)(r.uniform(0.5, 3, 2)),
    lambda r: (lambda c: lambda t: math.cos(c[0] * t) - c[1])(r.uniform(0.5, 3, 2)),
)


def random_ivt_instance(rng: np.random.Generator) -> IvtInstance:
    """2-5 atoms, a polynomial or trig map per atom, xi between the endpoint values."""
    space = random_space(rng, int(rng.integers(2, 6)))
    maps = [_SCALAR_MAPS[int(rng.integers(len(_SCALAR_MAPS)))](rng) for _ in space.atom_ids]
    a = rng.uniform(-3, 1, len(space))
    b = a + rng.uniform(0.1, 3, len(space))
    fa = np.array([m(t) for m, t in zip(maps, a)])
    fb = np.array([m(t) for m, t in zip(maps, b)])
    xi = fa + rng.random(len(space)) * (fb - fa)
    return IvtInstance(LocalFunction.from_maps(space, maps), L0Real(space, a), L0Real(space, b), L0Real(space, xi))


def suite_thm12(seed: int, cfg: SearchConfig | None = None) -> SuiteReport:
    rep = SuiteReport("thm12", "the four modulus variants agree on the rank >= 2 stratum", seed)
    cfg = cfg or SearchConfig(seed=seed)
    spec = RnModuleSpec.build(
        [
            ("e2", 0.25, 2, FiberNorm.euclidean()),
            ("e3", 0.25, 3, FiberNorm.euclidean()),
            ("p15", 0.25, 2, FiberNorm.pnorm(1.5)),
            ("p3", 0.25, 2, FiberNorm.pnorm(3.0)),
        ]
    )
    g = grand_stratum(spec)
    for eps in (0.25, 0.5, 1.0, 1.5, 2.0):
        e = L0Real.constant(spec.space, eps)
        ests = [modulus_estimate(spec, ModulusQuery(g, e, v), cfg).values for v in Variant]
        spread = float(np.max(np.max(ests, axis=0) - np.min(ests, axis=0)))
        rep.add(f"eps={eps}", spread <= 5e-3, f"max spread {spread:.3e}")
    return rep


def suite_lem31(seed: int, instances: int = 200) -> SuiteReport:
    rep = SuiteReport("lem31", "rotation onto the sphere with a preserved difference", seed)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        spec = random_spec(rng)
        x, y = random_pair(rng, spec)
        ids = [a for a in spec.space.atom_ids if rng.random() < 0.7] or [spec.space.atom_ids[0]]
        E = spec.space.event(ids)
        u, v = rotate_pair(x, y, E)
        ind = E.mask.astype(float)
        dev = max(
            _max_dev(random_norm(u).values, ind),
            _max_dev(random_norm(v).values, ind),
            _elem_dev(u - v, module_scale(L0Real(spec.space, ind), x - y)),
        )
        worst = max(worst, dev)
    rep.add("||u|| = ||v|| = I_E and u - v = I_E (x - y)", worst <= TOL, f"worst deviation {worst:.3e}")
    return rep


def suite_lem32(seed: int, instances: int = 200) -> SuiteReport:
    rep = SuiteReport("lem32", "every gap in (0, 2] is realised by a sphere pair", seed)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        spec = random_spec(rng)
        x, y = random_pair(rng, spec, y_on_sphere=True)
        D = spec.space.omega()
        eps = L0Real(spec.space, rng.uniform(1e-3, 2.0, len(spec.space)))
        v = prescribe_gap(x, y, D, eps)
        dev = max(_max_dev(random_norm(v).values, 1.0), _max_dev(random_norm(x - v).values, eps.values))
        worst = max(worst, dev)
    rep.add("||v|| = I_D and ||x - v|| = eps I_D", worst <= TOL, f"worst deviation {worst:.3e}")
    return rep


def suite_lem33(seed: int, draws: int = 100, cfg: SearchConfig | None = None) -> SuiteReport:
    rep = SuiteReport("lem33", "the modulus never exceeds eps/2 on the rank >= 2 stratum", seed)
    rng = np.random.default_rng(seed)
    cfg = cfg or SearchConfig(seed=seed)
    spec = RnModuleSpec.build(
        [("e2", 0.4, 2, FiberNorm.euclidean()), ("p3", 0.3, 2, FiberNorm.pnorm(3.0)), ("d1", 0.3, 1, FiberNorm.euclidean())]
    )
    eps_grid = 2.0 - 2.0 * rng.random(draws)  # in (0, 2]
    report = halfbound_check(spec, eps_grid, cfg)
    worst = max(r.max_excess for r in report.rows)
    rep.add("estimate <= eps/2 + 1e-6", report.passed, f"{draws} eps values, worst excess {worst:.3e}")
    return rep


def suite_prop31(seed: int, instances: int = 200) -> SuiteReport:
    rep = SuiteReport("prop31", "equalising a pair onto the sphere without shrinking its sum", seed)
    rng = np.random.default_rng(seed)
    worst_id, worst_ineq = 0.0, 0.0
    for _ in range(instances):
        spec = random_spec(rng)
        x, y = random_pair(rng, spec, dependent_share=0.4)
        u, v = equalize_pair(x, y)
        _, a_xy, _ = supports(x, y)
        ind = a_xy.mask.astype(float)
        worst_id = max(
            worst_id,
            _max_dev(random_norm(u).values, ind),
            _max_dev(random_norm(v).values, ind),
            _elem_dev(u - v, module_scale(L0Real(spec.space, ind), x - y)),
        )
        short = ind * random_norm(x + y).values - random_norm(u + v).values
        worst_ineq = max(worst_ineq, float(short.max()))
    rep.add("||u|| = ||v|| = I_A and u - v = I_A (x - y)", worst_id <= TOL, f"worst deviation {worst_id:.3e}")
    rep.add("||u + v|| >= I_A ||x + y||", worst_ineq <= TOL, f"worst shortfall {worst_ineq:.3e}")
    return rep


def suite_prop32(seed: int, samples: int = 20000) -> SuiteReport:
    rep = SuiteReport("prop32", "p-th power convexity inequality with a positive constant", seed)
    spec = RnModuleSpec.build(
        [("a", 0.5, 2, FiberNorm.euclidean()), ("b", 0.3, 3, FiberNorm.euclidean()), ("c", 0.2, 1, FiberNorm.euclidean())]
    )
    for p in (1.5, 2.0, 3.0):
        for eps in (0.5, 1.0):
            r = uniform_convexity_audit(spec, p, eps, samples, seed)
            rep.add(
                f"p={p} eps={eps}",
                r["passed"],
                f"delta_p {r['delta_p']:.6f}, stability {r['stability_delta']:.3e}",
            )
    return rep


def suite_cor21(seed: int, draws: int = 10, cfg: SearchConfig | None = None) -> SuiteReport:
    rep = SuiteReport("cor21", "the modulus is identically 1 on one-dimensional fibers", seed)
    rng = np.random.default_rng(seed)
    cfg = cfg or SearchConfig(seed=seed)
    spec = RnModuleSpec.build(
        [("d1", 0.3, 1, FiberNorm.euclidean()), ("q1", 0.3, 1, FiberNorm.pnorm(3.0)), ("e2", 0.4, 2, FiberNorm.euclidean())]
    )
    D = spec.space.event(["d1", "q1"])
    worst = 0.0
    for eps in 2.0 - 2.0 * rng.random(draws):
        est = modulus_estimate(spec, ModulusQuery(D, L0Real.constant(spec.space, eps), Variant.GEQ_SPHERE), cfg)
        worst = max(worst, _max_dev(est.values[D.mask], 1.0))
    rep.add("estimate == 1 exactly", worst == 0.0, f"{draws} eps values, worst deviation {worst:.3e}")
    return rep


def suite_hb(seed: int, pairs: int = 1000) -> SuiteReport:
    rep = SuiteReport("hb", "norm-attaining functionals and the dual-norm sup formula", seed)
    rng = np.random.default_rng(seed)
    spec = RnModuleSpec.build(
        [
            ("e", 0.25, 3, FiberNorm.euclidean()),
            ("p1", 0.25, 2, FiberNorm.pnorm(1.0)),
            ("p15", 0.25, 3, FiberNorm.pnorm(1.5)),
            ("p4", 0.25, 2, FiberNorm.pnorm(4.0)),
        ]
    )
    worst_attain, worst_bound = 0.0, -math.inf
    for _ in range(pairs):
        x = ModuleElement(spec, [rng.standard_normal(d) for d in spec.dims])
        g = norm_attaining(x)
        worst_attain = max(
            worst_attain,
            _max_dev(eval_functional(g, x).values, random_norm(x).values),
            _max_dev(dual_norm(g).values, 1.0),
        )
        f = RandomFunctional(spec, [rng.standard_normal(d) for d in spec.dims])
        bound = np.abs(eval_functional(f, x).values) - dual_norm(f).values * random_norm(x).values
        worst_bound = max(worst_bound, float(bound.max()))
    rep.add("g(x) = ||x|| and ||g||* = 1", worst_attain <= 1e-12, f"worst deviation {worst_attain:.3e}")
    rep.add("|f(x)| <= ||f||* ||x||", worst_bound <= 1e-12, f"worst excess {worst_bound:.3e}")
    f = RandomFunctional(spec, [rng.standard_normal(d) for d in spec.dims])
    sup = sup_formula_check(f, 2000, seed)
    rep.add("sampled sup attains the dual norm with the witness", sup.passed, f"witness gap {sup.witness_gap:.3e}")
    return rep


def suite_axioms(seed: int, trials: int = 500) -> SuiteReport:
    rep = SuiteReport("axioms", "random norm axioms, lattice operations and locality", seed)
    rng = np.random.default_rng(seed)
    worst_h, worst_t, zero_ok = 0.0, -math.inf, True
    for _ in range(trials):
        spec = random_spec(rng, dims=(1, 2, 3))
        rnd = lambda: ModuleElement(spec, [rng.standard_normal(d) * (rng.random() < 0.8) for d in spec.dims])
        x, y = rnd(), rnd()
        xi = L0Real(spec.space, rng.standard_normal(len(spec.space)))
        nx = random_norm(x).values
        worst_h = max(worst_h, _max_dev(random_norm(module_scale(xi, x)).values, np.abs(xi.values) * nx))
        worst_t = max(worst_t, float((random_norm(x + y).values - nx - random_norm(y).values).max()))
        zero_ok &= all((n == 0) == (not np.any(v)) for n, v in zip(nx, x.vectors))
    rep.add("||xi x|| = |xi| ||x||", worst_h <= 1e-12, f"worst deviation {worst_h:.3e}")
    rep.add("||x + y|| <= ||x|| + ||y||", worst_t <= 1e-12, f"worst excess {worst_t:.3e}")
    rep.add("||x|| = 0 exactly where x = 0", zero_ok)
    space = random_space(rng, 4)
    c = L0Real(space, rng.uniform(0.5, 2.0, 4))
    for text in ("x^3 - c", "min(x, 1) * c", "sin(c * x) + abs(x)", "sqrt(x*x + c)"):
        audit = locality_audit(LocalFunction.from_expr(space, parse_expr(text), {"c": c}), 200, seed)
        rep.add(f"locality of {text}", audit.passed and audit.evaluated > 0, f"deviation {audit.max_deviation:.3e}")
    return rep


SUITES: dict[str, Callable[[int], SuiteReport]] = {
    "thm12": suite_thm12,
    "lem31": suite_lem31,
    "lem32": suite_lem32,
    "lem33": suite_lem33,
    "prop31": suite_prop31,
    "prop32": suite_prop32,
    "cor21": suite_cor21,
    "hb": suite_hb,
    "axioms": suite_axioms,
    "ivt": suite_ivt,
}


def run_suite(name: str, seed: int) -> SuiteReport:
    return SUITES[name](seed)
