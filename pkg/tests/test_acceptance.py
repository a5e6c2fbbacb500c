"""Acceptance gate: one test (and one summary line) per criterion."""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from randconvex import (
    FiberNorm,
    L0Real,
    LocalFunction,
    ModuleElement,
    ModulusQuery,
    RandomFunctional,
    RnModuleSpec,
    SearchConfig,
    Variant,
    dual_norm,
    equalize_pair,
    euclid_modulus_oracle,
    eval_functional,
    grand_stratum,
    locality_audit,
    lp_modulus_estimate,
    modulus_estimate,
    norm_attaining,
    parse_expr,
    prescribe_gap,
    random_norm,
    rotate_pair,
    solve_ivt,
    sup_formula_check,
    supports,
    to_text,
    uniform_convexity_audit,
)
from randconvex.convexity import _fiber_estimate
from randconvex.measure import FiniteProbSpace
from randconvex.module import module_scale
from randconvex.suites import random_ivt_instance, random_pair, random_spec

from exprgen import random_tree

DEFAULT = SearchConfig()
E = FiberNorm.euclidean()


def _dev(a, b):
    return float(np.max(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))))


def _elem_dev(u, v):
    return max((_dev(a, b) for a, b in zip(u.vectors, v.vectors) if a.size), default=0.0)


def test_criterion_01_ivt_suite(accept):
    rng = np.random.default_rng(101)
    instances = [random_ivt_instance(rng) for _ in range(500)]
    t0 = time.perf_counter()
    worst, outside = 0.0, 0
    for inst in instances:
        eta = solve_ivt(inst.f, inst.y1, inst.y2, inst.xi, 1e-9)
        outside += int(np.any(eta.values < inst.y1.values) or np.any(eta.values > inst.y2.values))
        worst = max(worst, _dev(inst.f(eta).values, inst.xi.values))
    elapsed = time.perf_counter() - t0
    ok = outside == 0 and worst <= 1e-9 and elapsed < 5.0
    accept("criterion 01", ok, f"500 instances, {outside} outside brackets, worst residual {worst:.2e}, {elapsed:.2f}s")


def test_criterion_02_variant_agreement(accept):
    _fiber_estimate.cache_clear()
    spec = RnModuleSpec.build(
        [
            ("e2", 0.25, 2, E),
            ("e3", 0.25, 3, E),
            ("p15", 0.25, 2, FiberNorm.pnorm(1.5)),
            ("p3", 0.25, 2, FiberNorm.pnorm(3.0)),
        ]
    )
    D = grand_stratum(spec)
    t0 = time.perf_counter()
    worst = 0.0
    for eps in (0.25, 0.5, 1.0, 1.5, 2.0):
        e = L0Real.constant(spec.space, eps)
        est = np.array([modulus_estimate(spec, ModulusQuery(D, e, v), DEFAULT).values for v in Variant])
        worst = max(worst, float(np.max(est.max(axis=0) - est.min(axis=0))))
    elapsed = time.perf_counter() - t0
    accept("criterion 02", worst <= 5e-3 and elapsed < 60.0, f"max variant spread {worst:.2e}, {elapsed:.1f}s")


def test_criterion_03_euclidean_oracle(accept):
    _fiber_estimate.cache_clear()
    spec = RnModuleSpec.build([("a", 1.0, 2, E)])
    D = spec.space.omega()
    grid = np.linspace(0.1, 2.0, 20)
    t0 = time.perf_counter()
    worst = 0.0
    for eps in grid:
        q = ModulusQuery(D, L0Real.constant(spec.space, eps), Variant.GEQ_SPHERE)
        worst = max(worst, abs(modulus_estimate(spec, q, DEFAULT)["a"] - euclid_modulus_oracle(eps)))
    elapsed = time.perf_counter() - t0
    accept("criterion 03", worst <= 1e-3 and elapsed < 10.0, f"20 eps values, worst error {worst:.2e}, {elapsed:.2f}s")


def _dim1_spec():
    return RnModuleSpec.build(
        [("d1", 0.3, 1, E), ("q1", 0.3, 1, FiberNorm.pnorm(3.0)), ("e2", 0.4, 2, E)]
    )


def _dim1_check(variant: Variant):
    spec = _dim1_spec()
    D = spec.space.event(["d1", "q1"])
    rng = np.random.default_rng(404)
    eps_draws = 2.0 - 2.0 * rng.random(10)
    worst = 0.0
    for eps in eps_draws:
        est = modulus_estimate(spec, ModulusQuery(D, L0Real.constant(spec.space, eps), variant), DEFAULT)
        worst = max(worst, _dev(est.values[D.mask], 1.0))
    return worst


def test_criterion_04_dim1_geq_sphere(accept):
    worst = _dim1_check(Variant.GEQ_SPHERE)
    accept("criterion 04 (sphere)", worst == 0.0, f"10 eps values, worst |estimate - 1| = {worst:.2e}")


def test_criterion_04_dim1_geq_ball(accept):
    # the ball variant on a 1-dimensional fiber is eps/2 (x = 1, y = 1 - eps), so
    # this half of the criterion is expected to fail; see the decisions ledger
    worst = _dim1_check(Variant.GEQ_BALL)
    accept("criterion 04 (ball)", worst == 0.0, f"10 eps values, worst |estimate - 1| = {worst:.2e}")


def test_criterion_05_half_bound(accept):
    spec = RnModuleSpec.build([("e2", 0.4, 2, E), ("p3", 0.3, 2, FiberNorm.pnorm(3.0)), ("e3", 0.3, 3, E)])
    G = grand_stratum(spec)
    rng = np.random.default_rng(505)
    worst = -math.inf
    for eps in 2.0 - 2.0 * rng.random(100):
        q = ModulusQuery(G, L0Real.constant(spec.space, eps), Variant.GEQ_SPHERE)
        worst = max(worst, float(np.max(modulus_estimate(spec, q, DEFAULT).values[G.mask] - eps / 2)))
    accept("criterion 05", worst <= 1e-6, f"100 eps values, worst estimate - eps/2 = {worst:.3e}")


def test_criterion_06_rotation_and_gap(accept):
    rng = np.random.default_rng(606)
    worst_rot, worst_gap = 0.0, 0.0
    for _ in range(200):
        spec = random_spec(rng)
        x, y = random_pair(rng, spec)
        E_ = spec.space.event([a for a in spec.space.atom_ids if rng.random() < 0.7] or [spec.space.atom_ids[0]])
        u, v = rotate_pair(x, y, E_)
        ind = E_.mask.astype(float)
        worst_rot = max(
            worst_rot,
            _dev(random_norm(u).values, ind),
            _dev(random_norm(v).values, ind),
            _elem_dev(u - v, module_scale(L0Real(spec.space, ind), x - y)),
        )
        xs, ys = random_pair(rng, spec, y_on_sphere=True)
        D = spec.space.omega()
        eps = L0Real(spec.space, rng.uniform(1e-3, 2.0, len(spec.space)))
        w = prescribe_gap(xs, ys, D, eps)
        worst_gap = max(worst_gap, _dev(random_norm(w).values, 1.0), _dev(random_norm(xs - w).values, eps.values))
    ok = worst_rot <= 1e-9 and worst_gap <= 1e-9
    accept("criterion 06", ok, f"200 pairs, rotation dev {worst_rot:.2e}, gap dev {worst_gap:.2e}")


def test_criterion_07_equalize(accept):
    rng = np.random.default_rng(707)
    worst_id, worst_ineq, dependent_atoms, independent_atoms = 0.0, -math.inf, 0, 0
    for _ in range(200):
        spec = random_spec(rng)
        x, y = random_pair(rng, spec, dependent_share=0.4)
        for a, b in zip(x.vectors, y.vectors):
            if np.linalg.matrix_rank(np.vstack([a, b]), tol=1e-9) == 1:
                dependent_atoms += 1
            else:
                independent_atoms += 1
        u, v = equalize_pair(x, y)
        _, a_xy, _ = supports(x, y)
        ind = a_xy.mask.astype(float)
        worst_id = max(
            worst_id,
            _dev(random_norm(u).values, ind),
            _dev(random_norm(v).values, ind),
            _elem_dev(u - v, module_scale(L0Real(spec.space, ind), x - y)),
        )
        worst_ineq = max(worst_ineq, float(np.max(ind * random_norm(x + y).values - random_norm(u + v).values)))
    ok = worst_id <= 1e-9 and worst_ineq <= 1e-9 and dependent_atoms > 0 and independent_atoms > 0
    accept(
        "criterion 07",
        ok,
        f"200 instances ({dependent_atoms} dependent / {independent_atoms} independent atoms), "
        f"identity dev {worst_id:.2e}, sum shortfall {worst_ineq:.2e}",
    )


def test_criterion_08_norm_attaining(accept):
    rng = np.random.default_rng(808)
    spec = RnModuleSpec.build(
        [
            ("e", 0.25, 3, E),
            ("p1", 0.25, 2, FiberNorm.pnorm(1.0)),
            ("p15", 0.25, 3, FiberNorm.pnorm(1.5)),
            ("p4", 0.25, 2, FiberNorm.pnorm(4.0)),
        ]
    )
    worst_attain, worst_bound = 0.0, -math.inf
    for _ in range(1000):
        x = ModuleElement(spec, [rng.standard_normal(d) for d in spec.dims])
        g = norm_attaining(x)
        worst_attain = max(worst_attain, _dev(eval_functional(g, x).values, random_norm(x).values), _dev(dual_norm(g).values, 1.0))
        f = RandomFunctional(spec, [rng.standard_normal(d) for d in spec.dims])
        excess = np.abs(eval_functional(f, x).values) - dual_norm(f).values * random_norm(x).values
        worst_bound = max(worst_bound, float(excess.max()))
    f = RandomFunctional(spec, [rng.standard_normal(d) for d in spec.dims])
    sup = sup_formula_check(f, 2000, 808)
    ok = worst_attain <= 1e-12 and worst_bound <= 1e-12 and sup.passed
    accept(
        "criterion 08",
        ok,
        f"attain dev {worst_attain:.2e}, bound excess {worst_bound:.2e}, witness gap {sup.witness_gap:.2e}",
    )


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("eps", [0.5, 1.0])
def test_criterion_09_uniform_convexity_audit(accept, p, eps):
    spec = RnModuleSpec.build([("a", 0.5, 2, E), ("b", 0.3, 3, E), ("c", 0.2, 1, E)])
    t0 = time.perf_counter()
    r = uniform_convexity_audit(spec, p, eps, 100_000, 909)
    elapsed = time.perf_counter() - t0
    ok = 0.0 < r["delta_p"] < 1.0 and r["stability_delta"] < 0.25 and elapsed < 30.0
    accept(
        f"criterion 09 (p={p}, eps={eps})",
        ok,
        f"delta_p {r['delta_p']:.4f}, stability {r['stability_delta']:.2e}, {elapsed:.1f}s",
    )


def test_criterion_10_lp_probes(accept):
    convex = RnModuleSpec.build([("a", 0.5, 2, E), ("b", 0.3, 3, FiberNorm.pnorm(3.0)), ("c", 0.2, 1, E)])
    positives = {p: lp_modulus_estimate(convex, p, 1.0, DEFAULT) for p in (1.5, 2.0, 3.0)}
    flat = RnModuleSpec.build([("a", 0.5, 2, E), ("b", 0.5, 2, FiberNorm.pnorm(1.0))])
    degenerate = lp_modulus_estimate(flat, 2.0, 0.5, DEFAULT)
    ok = all(v > 0.01 for v in positives.values()) and degenerate < 1e-3
    shown = ", ".join(f"p={p}: {v:.4f}" for p, v in positives.items())
    accept("criterion 10", ok, f"eps=1 estimates {shown}; 1-norm probe at eps=0.5: {degenerate:.2e}")


def test_criterion_11_parser(accept):
    rng = np.random.default_rng(1111)
    space = FiniteProbSpace.uniform(["a", "b", "c", "d"])
    consts = {n: L0Real(space, rng.uniform(0.5, 2.0, 4)) for n in ("c", "k")}
    mismatches, worst, evaluated = 0, 0.0, 0
    for _ in range(500):
        tree = random_tree(rng, 6)
        mismatches += parse_expr(to_text(tree)) != tree
        audit = locality_audit(LocalFunction.from_expr(space, tree, consts), 20, int(rng.integers(1 << 30)))
        worst = max(worst, audit.max_deviation)
        evaluated += audit.evaluated
    ok = mismatches == 0 and worst == 0.0 and evaluated > 0
    accept("criterion 11", ok, f"500 trees, {mismatches} round-trip mismatches, locality deviation {worst}")


def test_criterion_12_determinism(accept, tmp_path):
    space = tmp_path / "space.json"
    space.write_text(
        '{"atoms": [{"id": "a", "weight": 0.6, "dim": 2, "norm": {"kind": "pnorm", "p": 3}},'
        ' {"id": "b", "weight": 0.4, "dim": 3, "norm": {"kind": "euclid"}}]}'
    )
    commands = [
        ["modulus", "--space", str(space), "--set", "a,b", "--eps", "0.75", "--seed", "5", "--restarts", "2000"],
        ["modulus", "--space", str(space), "--set", "a,b", "--eps", "0.75", "--seed", "5", "--restarts", "2000", "--variant", "ball", "--csv", "-"],
        ["lp-modulus", "--space", str(space), "--p", "2", "--eps", "1", "--samples", "3000", "--seed", "5", "--restarts", "500"],
        ["verify", "--suite", "lem32", "--seed", "5"],
    ]
    same = 0
    for cmd in commands:
        outs = [
            subprocess.run([sys.executable, "-m", "randconvex", *cmd], capture_output=True, check=True).stdout
            for _ in range(2)
        ]
        same += outs[0] == outs[1] and len(outs[0]) > 0
    accept("criterion 12", same == len(commands), f"{same}/{len(commands)} commands byte-identical across runs")
