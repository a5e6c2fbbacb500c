"""Modulus of random convexity and the pair constructions behind it.

On a finite atomic space the stratified infimum defining the modulus splits
atom by atom: gluing lets every stratum be optimised on its own, so the
value at an atom is the classical modulus of that atom's fiber under the
chosen constraint.  The estimators return the smallest objective over pairs
that were actually evaluated and found feasible, so every estimate is an
upper bound on the true modulus.

Variants (the tag values double as CLI names):

    def      pairs on the unit sphere, ||x - y|| >= eps
    eq       pairs on the unit sphere, ||x - y|| == eps
    ball     pairs in the unit ball,   ||x - y|| >= eps
    ball-eq  pairs in the unit ball,   ||x - y|| == eps
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import ConvergenceError, PreconditionError
from .ivt import LocalFunction, bisect, solve_ivt
from .measure import EventSet, L0Real, indicator, lattice_extrema
from .module import FiberNorm, ModuleElement, RnModuleSpec, module_scale, random_norm, supports
from .rank import companion_vector, fibers_independent, grand_stratum, is_independent

FEAS_RTOL = 1e-12
BALL_TOL = 1e-12
SPHERE_TOL = 1e-12
REFINE_KEEP = 8
GOLDEN_STARTS = 4
PAIR_OFFSETS = 128
IVT_TOL = 1e-12
CHECK_TOL = 1e-9
SCAN_POINTS = 513
ANTIPODE_SNAP = 1e-3
SNAP_ULPS = 8
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class Variant(str, Enum):
    GEQ_SPHERE = "def"
    EQ_SPHERE = "eq"
    GEQ_BALL = "ball"
    EQ_BALL = "ball-eq"

    @property
    def sphere(self) -> bool:
        return self in (Variant.GEQ_SPHERE, Variant.EQ_SPHERE)

    @property
    def equality(self) -> bool:
        return self in (Variant.EQ_SPHERE, Variant.EQ_BALL)


@dataclass(frozen=True)
class SearchConfig:
    grid_points: int = 2048
    random_restarts: int = 20000
    refine_iters: int = 200
    seed: int = 0

    def __post_init__(self):
        for name in ("grid_points", "random_restarts", "refine_iters"):
            if int(getattr(self, name)) < 1:
                raise PreconditionError(f"{name} must be positive")
        if int(self.seed) < 0:
            raise PreconditionError("seed must be non-negative")


@dataclass(frozen=True)
class ModulusQuery:
    D: EventSet
    eps: L0Real
    variant: Variant = Variant.GEQ_SPHERE


@dataclass(frozen=True)
class FiberEstimate:
    """Best value found at one fiber, with the pair that produced it.

    ``empty`` marks the empty-infimum convention (value 1, no pair).
    """

    value: float
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    empty: bool = False


class _Fiber:
    def __init__(self, norm: FiberNorm, dim: int):
        self.norm = norm
        self.dim = dim

    def n(self, v: np.ndarray) -> np.ndarray:
        return self.norm.norm(v)

    def unit(self, v: np.ndarray) -> np.ndarray:
        return v / self.n(v)[..., None]

    def value(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return 1.0 - self.n(0.5 * (x + y))

    def gap(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self.n(x - y)


def euclid_modulus_oracle(eps: float) -> float:
    """Closed form 1 - sqrt(1 - eps^2/4) of the Euclidean modulus."""
    eps = float(eps)
    if not 0.0 < eps <= 2.0:
        raise PreconditionError(f"eps must lie in (0, 2], got {eps!r}")
    t = eps * eps / 4.0
    # algebraically equal to 1 - sqrt(1 - t) without the cancellation
    return t / (1.0 + math.sqrt(1.0 - t))


# ---------------------------------------------------------------- search kit


def _float_bits(v: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", float(v)))[0]


def _rng_for(seed: int, norm: FiberNorm, dim: int, eps: float, tag: str) -> np.random.Generator:
    # keyed on the fiber and eps rather than the atom: equal fibers get equal estimates
    key = [int(seed), int(dim), _float_bits(norm.exponent), _float_bits(eps), sum(map(ord, tag))]
    return np.random.default_rng(key)


def _orthogonalise(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    coef = np.sum(w * x, axis=-1) / np.sum(x * x, axis=-1)
    return w - coef[..., None] * x


def _eq_partner(fib: _Fiber, x: np.ndarray, w: np.ndarray, eps: float) -> np.ndarray:
    """y on the unit sphere with ||x - y|| = eps, for each row of x.

    Walks the arc t -> unit(cos t x + sin t w) from x (t = 0) to -x (t = pi)
    and bisects on the gap.  The upper bracket end is kept so the gap never
    falls short of eps.  Near -x the computed gap rounds to the antipodal gap
    over a short arc, so partners there whose gap cannot be told apart from
    that of -x snap to -x.
    """

    def arc(t):
        return fib.unit(np.cos(t)[:, None] * x + np.sin(t)[:, None] * w)

    n = x.shape[0]
    _, hi = bisect(lambda t: fib.gap(x, arc(t)) - eps, np.zeros(n), np.full(n, math.pi))
    y = arc(hi)
    close = fib.gap(x, y) >= fib.gap(x, -x) * (1.0 - SNAP_ULPS * np.finfo(float).eps)
    snap = close & (fib.n(x + y) <= ANTIPODE_SNAP)
    y[snap] = -x[snap]
    return y


def _best(vals: np.ndarray, xs: np.ndarray, ys: np.ndarray, current: FiberEstimate) -> FiberEstimate:
    if vals.size == 0:
        return current
    vals = np.where(np.isfinite(vals), vals, np.inf)
    i = int(np.argmin(vals))
    if vals[i] < current.value:
        return FiberEstimate(float(vals[i]), xs[i].copy(), ys[i].copy())
    return current


_NONE = FiberEstimate(math.inf)


def _antipodal(fib: _Fiber) -> FiberEstimate:
    e = np.zeros(fib.dim)
    e[0] = 1.0
    x = e / float(fib.n(e))
    return FiberEstimate(1.0, x, -x)


def _golden(f: Callable[[np.ndarray], np.ndarray], a: np.ndarray, b: np.ndarray, iters: int, tol: float = 1e-9) -> None:
    """Vectorised golden-section descent on brackets [a, b].

    Only the evaluations matter: ``f`` records every point it sees.
    """
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if np.all(b - a <= tol):
            break
        left = fc <= fd
        a, b = np.where(left, a, c), np.where(left, d, b)
        new = np.where(left, b - _INV_PHI * (b - a), a + _INV_PHI * (b - a))
        fn = f(new)
        c, d, fc, fd = (
            np.where(left, new, d),
            np.where(left, c, new),
            np.where(left, fn, fd),
            np.where(left, fc, fn),
        )


def _descend(evaluate, params: np.ndarray, cfg: SearchConfig, best: FiberEstimate, clamp=None, step0: float = 0.1):
    """Evaluate a batch of parameter vectors, then run coordinate descent
    from the REFINE_KEEP best.  ``evaluate`` returns (values, xs, ys) with
    +inf marking infeasible rows."""
    vals, xs, ys = evaluate(params)
    best = _best(vals, xs, ys, best)
    order = np.argsort(vals, kind="stable")[:REFINE_KEEP]
    order = order[np.isfinite(vals[order])]
    if order.size == 0:
        return best
    cur_p, cur_v = params[order].copy(), vals[order].copy()
    m = params.shape[1]
    moves = np.concatenate([np.eye(m), -np.eye(m)])
    step = np.full(len(cur_p), step0)
    rows = np.arange(len(cur_p))
    for _ in range(cfg.refine_iters):
        if np.all(step < 1e-10):
            break
        trial = cur_p[:, None, :] + step[:, None, None] * moves[None]
        if clamp is not None:
            trial = clamp(trial)
        tv, tx, ty = evaluate(trial.reshape(-1, m))
        best = _best(tv, tx, ty, best)
        tv = tv.reshape(len(cur_p), -1)
        j = np.argmin(tv, axis=1)
        gain = tv[rows, j] < cur_v
        cur_p[gain] = trial[rows[gain], j[gain]]
        cur_v[gain] = tv[rows[gain], j[gain]]
        step = np.where(gain, step, 0.5 * step)
    return best


def _gauss_dirs(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _circle(theta: np.ndarray) -> np.ndarray:
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


# ------------------------------------------------------------ per variant


def _sphere_eq(fib: _Fiber, eps: float, cfg: SearchConfig) -> FiberEstimate:
    if fib.dim == 2:
        best = _NONE

        def phi(theta):
            nonlocal best
            x = fib.unit(_circle(theta))
            w = _circle(theta + 0.5 * math.pi)
            out = np.full(theta.shape, np.inf)
            for side in (w, -w):
                y = _eq_partner(fib, x, side, eps)
                v = fib.value(x, y)
                best = _best(v, x, y, best)
                out = np.minimum(out, v)
            return out

        theta = np.linspace(0.0, 2.0 * math.pi, cfg.grid_points, endpoint=False)
        vals = phi(theta)
        h = 2.0 * math.pi / cfg.grid_points
        is_min = (vals <= np.roll(vals, 1)) & (vals <= np.roll(vals, -1))
        idx = np.flatnonzero(is_min)
        idx = idx[np.argsort(vals[idx], kind="stable")][:GOLDEN_STARTS]
        if idx.size:
            _golden(phi, theta[idx] - h, theta[idx] + h, cfg.refine_iters)
        return best

    d = fib.dim
    rng = _rng_for(cfg.seed, fib.norm, d, eps, "eq")

    def evaluate(params):
        a, w = params[:, :d], params[:, d:]
        with np.errstate(all="ignore"):
            x = fib.unit(a)
            w = _orthogonalise(x, w)
            ok = (np.linalg.norm(a, axis=1) > 1e-8) & (np.linalg.norm(w, axis=1) > 1e-8)
            y = _eq_partner(fib, np.where(ok[:, None], x, 1.0), np.where(ok[:, None], w, 1.0), eps)
            vals = fib.value(x, y)
        return np.where(ok & np.isfinite(vals), vals, np.inf), x, y

    params = np.hstack([_gauss_dirs(rng, cfg.random_restarts, d), _gauss_dirs(rng, cfg.random_restarts, d)])
    return _descend(evaluate, params, cfg, _NONE)


def _sphere_geq(fib: _Fiber, eps: float, cfg: SearchConfig) -> FiberEstimate:
    best = _best_of(_antipodal(fib), _fiber_estimate(fib.norm, fib.dim, eps, Variant.EQ_SPHERE, cfg))
    floor = eps * (1.0 - FEAS_RTOL)
    if fib.dim == 2:
        theta = np.linspace(0.0, 2.0 * math.pi, cfg.grid_points, endpoint=False)
        offs = np.linspace(0.0, math.pi, min(cfg.grid_points, PAIR_OFFSETS) + 1)[1:]
        t, o = (m.ravel() for m in np.meshgrid(theta, offs, indexing="ij"))
        x = fib.unit(_circle(t))
        y = fib.unit(_circle(t + o))
        y[o == math.pi] = -x[o == math.pi]
    else:
        rng = _rng_for(cfg.seed, fib.norm, fib.dim, eps, "def")
        x = fib.unit(rng.standard_normal((cfg.random_restarts, fib.dim)))
        y = fib.unit(rng.standard_normal((cfg.random_restarts, fib.dim)))
    vals = np.where(fib.gap(x, y) >= floor, fib.value(x, y), np.inf)
    return _best(vals, x, y, best)


def _ball_search(fib: _Fiber, eps: float, cfg: SearchConfig, equality: bool) -> FiberEstimate:
    d = fib.dim
    rng = _rng_for(cfg.seed, fib.norm, d, eps, "ball-eq" if equality else "ball")
    n = cfg.random_restarts
    radius = lambda: np.where(rng.random(n) < 0.5, 1.0, rng.random(n))
    floor = eps * (1.0 - FEAS_RTOL)

    def clamp(p):
        p = p.copy()
        p[..., 0] = np.clip(p[..., 0], 0.0, 1.0)
        if not equality:
            p[..., d + 1] = np.clip(p[..., d + 1], 0.0, 1.0)
        return p

    def evaluate(p):
        with np.errstate(all="ignore"):
            x = p[:, :1] * fib.unit(p[:, 1 : d + 1])
            if equality:
                y = x - eps * fib.unit(p[:, d + 1 :])
                ok = fib.n(y) <= 1.0 + BALL_TOL
            else:
                y = p[:, d + 1 : d + 2] * fib.unit(p[:, d + 2 :])
                ok = fib.gap(x, y) >= floor
            vals = fib.value(x, y)
        return np.where(ok & np.isfinite(vals), vals, np.inf), x, y

    if equality:
        params = np.hstack([radius()[:, None], _gauss_dirs(rng, n, d), _gauss_dirs(rng, n, d)])
    else:
        params = np.hstack(
            [radius()[:, None], _gauss_dirs(rng, n, d), radius()[:, None], _gauss_dirs(rng, n, d)]
        )
    return _descend(evaluate, params, cfg, _NONE, clamp=clamp)


def _dim1(fib: _Fiber, eps: float, variant: Variant, cfg: SearchConfig) -> FiberEstimate:
    e = np.array([1.0]) / float(fib.n(np.array([1.0])))
    if variant is Variant.GEQ_SPHERE:
        return FiberEstimate(1.0, e, -e)
    if variant is Variant.EQ_SPHERE:
        # the only sphere pairs are (e, e), (e, -e) and their negatives
        if eps == 2.0:
            return FiberEstimate(1.0, e, -e)
        return FiberEstimate(1.0, empty=True)
    # ball pairs are scalars in [-1, 1]; x = 1, y = 1 - eps is the closed-form optimum
    xs = np.linspace(-1.0, 1.0, cfg.grid_points)[:, None] * e
    cand_x = np.vstack([e[None], xs])
    cand_y = cand_x - eps * e
    if not variant.equality:
        cand_y = np.vstack([cand_y, -cand_x[1:]])
        cand_x = np.vstack([cand_x, cand_x[1:]])
        ok = (fib.gap(cand_x, cand_y) >= eps * (1.0 - FEAS_RTOL)) & (fib.n(cand_y) <= 1.0 + BALL_TOL)
    else:
        ok = fib.n(cand_y) <= 1.0 + BALL_TOL
    vals = np.where(ok, fib.value(cand_x, cand_y), np.inf)
    return _best(vals, cand_x, cand_y, _NONE)


def _best_of(*estimates: FiberEstimate) -> FiberEstimate:
    out = estimates[0]
    for e in estimates[1:]:
        if e.value < out.value:
            out = e
    return out


@lru_cache(maxsize=1024)
def _fiber_estimate(norm: FiberNorm, dim: int, eps: float, variant: Variant, cfg: SearchConfig) -> FiberEstimate:
    fib = _Fiber(norm, dim)
    if dim == 1:
        est = _dim1(fib, eps, variant, cfg)
    elif variant is Variant.EQ_SPHERE:
        est = _sphere_eq(fib, eps, cfg)
    elif variant is Variant.GEQ_SPHERE:
        est = _sphere_geq(fib, eps, cfg)
    else:
        base = Variant.EQ_SPHERE if variant.equality else Variant.GEQ_SPHERE
        est = _best_of(_fiber_estimate(norm, dim, eps, base, cfg), _ball_search(fib, eps, cfg, variant.equality))
    if est.value == math.inf:
        return FiberEstimate(1.0, empty=True)
    # rounding can push 1 - ||m|| a hair outside [0, 1]
    est = FiberEstimate(min(max(est.value, 0.0), 1.0), est.x, est.y, est.empty)
    for arr in (est.x, est.y):
        if arr is not None:
            arr.flags.writeable = False
    return est


def fiber_modulus(norm: FiberNorm, dim: int, eps: float, variant: Variant | str, cfg: SearchConfig) -> FiberEstimate:
    """Estimated classical modulus of one fiber, with its witness pair."""
    variant = Variant(variant)
    eps = float(eps)
    if dim < 1:
        raise PreconditionError("the modulus is defined on fibers of dimension >= 1")
    if not 0.0 < eps <= 2.0:
        raise PreconditionError(f"eps must lie in (0, 2], got {eps!r}")
    return _fiber_estimate(norm, int(dim), eps, variant, cfg)


def modulus_estimate(
    spec: RnModuleSpec, q: ModulusQuery, cfg: SearchConfig, diagnostics: list[str] | None = None
) -> L0Real:
    """Atomwise modulus on D under the query's variant; 0 off D.

    Atoms where the feasible set is empty get 1 and a diagnostic line.
    """
    space = spec.space
    if q.D.space != space or q.eps.space != space:
        raise PreconditionError("query lives on a different space")
    if q.D.weight <= 0:
        raise PreconditionError("D must have positive probability")
    if not q.D <= spec.support():
        outside = sorted(q.D.members - spec.support().members)
        raise PreconditionError(f"D must lie inside the support; fiber dimension 0 at {outside}")
    variant = Variant(q.variant)
    out = np.zeros(len(space))
    for i in np.flatnonzero(q.D.mask):
        atom = space.atom_ids[i]
        eps = float(q.eps.values[i])
        if not 0.0 < eps <= 2.0:
            raise PreconditionError(f"eps = {eps!r} outside (0, 2] at atom {atom!r}")
        est = _fiber_estimate(spec.norms[i], spec.dims[i], eps, variant, cfg)
        out[i] = est.value
        if est.empty and diagnostics is not None:
            diagnostics.append(f"atom {atom}: empty feasible set at eps={eps!r}; value 1 by convention")
    return L0Real(space, out)


def direct_search(spec: RnModuleSpec, q: ModulusQuery, samples: int, seed: int) -> L0Real:
    """Non-decomposed cross-check: lattice infimum of the objective over
    randomly drawn whole-module pairs, each feasible on every atom of D.

    Only fibers of dimension >= 2 are supported.
    """
    space = spec.space
    idx = np.flatnonzero(q.D.mask)
    if any(spec.dims[i] < 2 for i in idx):
        raise PreconditionError("direct search needs D inside G(S)")
    if samples < 1:
        raise PreconditionError("samples must be >= 1")
    variant = Variant(q.variant)
    rng = np.random.default_rng(seed)
    xs = [np.zeros((samples, d)) for d in spec.dims]
    ys = [np.zeros((samples, d)) for d in spec.dims]
    for i in idx:
        fib = _Fiber(spec.norms[i], spec.dims[i])
        xs[i], ys[i] = _draw_pairs(fib, float(q.eps.values[i]), variant, rng, samples)
    half = L0Real.constant(space, 0.5)
    family = []
    for k in range(samples):
        x = ModuleElement(spec, [a[k] for a in xs])
        y = ModuleElement(spec, [b[k] for b in ys])
        obj = 1.0 - random_norm(module_scale(half, x + y)).values
        family.append(L0Real(space, np.where(q.D.mask, obj, 0.0)))
    return lattice_extrema(family, "inf")


def _draw_pairs(fib: _Fiber, eps: float, variant: Variant, rng: np.random.Generator, n: int):
    """n feasible pairs for one fiber; ball pairs by rejection."""
    d = fib.dim
    gap = np.full(n, eps) if variant.equality else rng.uniform(eps, 2.0, n)
    if variant.sphere:
        x = fib.unit(rng.standard_normal((n, d)))
        w = _orthogonalise(x, rng.standard_normal((n, d)))
        return x, _eq_partner(fib, x, w, gap)
    xs, ys = np.empty((n, d)), np.empty((n, d))
    todo = np.arange(n)
    while todo.size:
        m = todo.size
        r = np.where(rng.random(m) < 0.5, 1.0, rng.random(m))
        x = r[:, None] * fib.unit(rng.standard_normal((m, d)))
        y = x - gap[todo, None] * fib.unit(rng.standard_normal((m, d)))
        ok = fib.n(y) <= 1.0
        xs[todo[ok]], ys[todo[ok]] = x[ok], y[ok]
        todo = todo[~ok]
    return xs, ys


# ------------------------------------------------------------- constructions


def _check_sphere(spec: RnModuleSpec, v: ModuleElement, event: EventSet, what: str, tol: float = SPHERE_TOL):
    n = random_norm(v).values
    bad = np.flatnonzero(np.abs(n - event.mask.astype(float)) > tol)
    if bad.size:
        raise PreconditionError(f"||{what}|| must equal the indicator of its support; fails at atom {spec.space.atom_ids[bad[0]]!r}")


def _verify(cond: bool, message: str) -> None:
    if not cond:
        raise ConvergenceError(message)


def rotate_pair(x: ModuleElement, y: ModuleElement, E: EventSet) -> tuple[ModuleElement, ModuleElement]:
    """Rotate x towards y until the shifted copy lands on the sphere.

    Solves ||unit(cos a x + sin a y) - x + y|| = 1 on [0, 3pi/4] at each
    atom of E, then u = unit(cos a x + sin a y) and v = u - x + y on E.
    """
    spec = x.spec
    space = spec.space
    if y.spec != spec or E.space != space:
        raise PreconditionError("arguments belong to different modules")
    _, a_xy, _ = supports(x, y)
    _check_sphere(spec, x, a_xy, "x")
    if np.any(random_norm(y).values > 1.0 + SPHERE_TOL):
        raise PreconditionError("||y|| must be <= 1")
    if E.is_empty() or not E <= a_xy:
        raise PreconditionError("E must be a nonempty subset of A_xy")
    if not is_independent(x, y, E):
        raise PreconditionError("x and y must be independent on E")
    idx = np.flatnonzero(E.mask)

    def point(i, alpha):
        v = math.cos(alpha) * x.vectors[i] + math.sin(alpha) * y.vectors[i]
        return v / spec.norms[i].norm(v)

    def fn(alphas):
        out = np.zeros(len(space))
        for i in idx:
            out[i] = spec.norms[i].norm(point(i, alphas[i]) - x.vectors[i] + y.vectors[i])
        return out

    f = LocalFunction(space, fn)
    ind = indicator(E)
    eta = solve_ivt(f, L0Real.constant(space, 0.0), ind * (0.75 * math.pi), ind, IVT_TOL)
    us = [np.zeros(d) for d in spec.dims]
    vs = [np.zeros(d) for d in spec.dims]
    for i in idx:
        us[i] = point(i, eta.values[i])
        vs[i] = us[i] - x.vectors[i] + y.vectors[i]
    u, v = ModuleElement(spec, us), ModuleElement(spec, vs)
    _verify_pair(u, v, x, y, E)
    return u, v


def _verify_pair(u, v, x, y, E: EventSet) -> None:
    ind = E.mask.astype(float)
    nu, nv = random_norm(u).values, random_norm(v).values
    _verify(np.all(np.abs(nu - ind) <= CHECK_TOL), "||u|| != I_E after construction")
    _verify(np.all(np.abs(nv - ind) <= CHECK_TOL), "||v|| != I_E after construction")
    diff = u - v
    for i, (a, b, c) in enumerate(zip(diff.vectors, x.vectors, y.vectors)):
        target = (b - c) * ind[i]
        _verify(bool(np.all(np.abs(a - target) <= CHECK_TOL)), "u - v != I_E (x - y) after construction")


def prescribe_gap(x: ModuleElement, y: ModuleElement, D: EventSet, eps: L0Real) -> ModuleElement:
    """v on the sphere of D with ||x - v|| = eps on D.

    Swings unit(cos a x - sin a y) from x (a = 0) to -x (a = pi) and solves
    for the prescribed gap.
    """
    spec = x.spec
    space = spec.space
    if y.spec != spec or D.space != space or eps.space != space:
        raise PreconditionError("arguments belong to different modules")
    if D.is_empty():
        raise PreconditionError("D must be nonempty")
    _check_sphere(spec, x, D, "x")
    _check_sphere(spec, y, D, "y")
    if not is_independent(x, y, D):
        raise PreconditionError("x and y must be independent on D")
    idx = np.flatnonzero(D.mask)
    bad = [space.atom_ids[i] for i in idx if not 0.0 < eps.values[i] <= 2.0]
    if bad:
        raise PreconditionError(f"eps must lie in (0, 2] on D; fails at {bad[0]!r}")

    def point(i, alpha):
        w = math.cos(alpha) * x.vectors[i] - math.sin(alpha) * y.vectors[i]
        return w / spec.norms[i].norm(w)

    def fn(alphas):
        out = np.zeros(len(space))
        for i in idx:
            out[i] = spec.norms[i].norm(point(i, alphas[i]) - x.vectors[i])
        return out

    ind = indicator(D)
    eta = solve_ivt(LocalFunction(space, fn), L0Real.constant(space, 0.0), ind * math.pi, eps * ind, IVT_TOL)
    vs = [np.zeros(d) for d in spec.dims]
    for i in idx:
        vs[i] = -x.vectors[i].copy() if eta.values[i] == math.pi else point(i, eta.values[i])
    v = ModuleElement(spec, vs)
    nv = random_norm(v).values
    gap = random_norm(x - v).values
    _verify(np.all(np.abs(nv - ind.values) <= CHECK_TOL), "||v|| != I_D after construction")
    _verify(np.all(np.abs(gap - (eps * ind).values) <= CHECK_TOL), "||x - v|| != eps I_D after construction")
    return v


def _arc_roots(h: Callable[[np.ndarray], np.ndarray], lo: float, hi: float) -> list[float]:
    """All sign changes of h on a uniform scan of [lo, hi], each bisected."""
    t = np.linspace(lo, hi, SCAN_POINTS)
    g = h(t)
    roots = list(t[g == 0.0])
    brackets = np.flatnonzero((g[:-1] < 0) & (g[1:] > 0) | (g[:-1] > 0) & (g[1:] < 0))
    if brackets.size:
        s = np.sign(g[brackets + 1])
        a, b = bisect(lambda m: s * h(m), t[brackets], t[brackets + 1])
        roots.extend(np.where(np.abs(h(a)) < np.abs(h(b)), a, b))
    return sorted(float(r) for r in roots)


def _pick_root(norm: FiberNorm, make_u, d: np.ndarray, roots, floor: float):
    """Among candidate angles pick the one with the largest ||u + v||."""
    best = None
    for r in roots:
        u = make_u(r)
        v = u - d
        if abs(float(norm.norm(v)) - 1.0) > CHECK_TOL:
            continue
        s = float(norm.norm(u + v))
        if best is None or s > best[0] + 1e-12:
            best = (s, u, v)
    if best is None or best[0] < floor - CHECK_TOL:
        return None
    return best[1], best[2]


def equalize_pair(x: ModuleElement, y: ModuleElement) -> tuple[ModuleElement, ModuleElement]:
    """u, v on the sphere of A_xy with u - v = x - y there and
    ||u + v|| >= ||x + y||.

    Per atom: unchanged when ||y|| = 1; the rotation construction when x and
    y are independent; a placement in the plane of x and its companion
    direction when y is a multiple of x.
    """
    spec = x.spec
    space = spec.space
    if y.spec != spec:
        raise PreconditionError("arguments belong to different modules")
    _, a_xy, _ = supports(x, y)
    if a_xy.weight <= 0:
        raise PreconditionError("P(A_xy) must be positive")
    if not a_xy <= grand_stratum(spec):
        raise PreconditionError("A_xy must lie in G(S): fiber dimension >= 2 required")
    _check_sphere(spec, x, a_xy, "x")
    ny = random_norm(y).values
    if np.any(ny > 1.0 + SPHERE_TOL):
        raise PreconditionError("||y|| must be <= 1")

    us = [np.zeros(d) for d in spec.dims]
    vs = [np.zeros(d) for d in spec.dims]
    rotate = []
    for i in np.flatnonzero(a_xy.mask):
        xv, yv = x.vectors[i], y.vectors[i]
        if abs(ny[i] - 1.0) <= SPHERE_TOL:
            us[i], vs[i] = xv.copy(), yv.copy()
        elif fibers_independent(xv, yv):
            rotate.append(space.atom_ids[i])
        else:
            us[i], vs[i] = _equalize_dependent(spec.norms[i], xv, yv, space.atom_ids[i])

    if rotate:
        E = space.event(rotate)
        ru, rv = rotate_pair(x, y, E)
        for i in np.flatnonzero(E.mask):
            norm = spec.norms[i]
            xv, yv = x.vectors[i], y.vectors[i]
            floor = float(norm.norm(xv + yv))
            if float(norm.norm(ru.vectors[i] + rv.vectors[i])) >= floor - CHECK_TOL:
                us[i], vs[i] = ru.vectors[i], rv.vectors[i]
                continue
            us[i], vs[i] = _rescan_independent(norm, xv, yv, floor, space.atom_ids[i])

    u, v = ModuleElement(spec, us), ModuleElement(spec, vs)
    _verify_pair(u, v, x, y, a_xy)
    lhs = random_norm(u + v).values
    rhs = random_norm(x + y).values * a_xy.mask
    _verify(np.all(lhs >= rhs - CHECK_TOL), "||u + v|| < ||x + y|| after construction")
    return u, v


def _rescan_independent(norm: FiberNorm, xv, yv, floor: float, atom: str):
    d = xv - yv

    def make_u(a):
        w = math.cos(a) * xv + math.sin(a) * yv
        return w / norm.norm(w)

    def h(ts):
        w = np.cos(ts)[:, None] * xv + np.sin(ts)[:, None] * yv
        return norm.norm(w / norm.norm(w)[:, None] - d) - 1.0

    picked = _pick_root(norm, make_u, d, _arc_roots(h, 0.0, 0.75 * math.pi), floor)
    if picked is None:
        raise ConvergenceError(f"no rotation root satisfies the sum inequality at atom {atom!r}")
    return picked


def _equalize_dependent(norm: FiberNorm, xv, yv, atom: str):
    d = xv - yv
    w = companion_vector(xv, norm)
    floor = float(norm.norm(xv + yv))

    def make_u(a):
        p = math.sin(a) * xv + math.cos(a) * w
        return p / norm.norm(p)

    def h(ts):
        p = np.sin(ts)[:, None] * xv + np.cos(ts)[:, None] * w
        return norm.norm(p / norm.norm(p)[:, None] - d) - 1.0

    # the companion side first, then the opposite half of the plane
    roots = _arc_roots(h, -0.5 * math.pi, 0.5 * math.pi) + _arc_roots(h, 0.5 * math.pi, 1.5 * math.pi)
    picked = _pick_root(norm, make_u, d, roots, floor)
    if picked is None:
        raise ConvergenceError(f"no placement satisfies the sum inequality at atom {atom!r}")
    return picked


# ----------------------------------------------------------------- half bound


@dataclass(frozen=True)
class HalfboundRow:
    eps: float
    max_estimate: float
    max_excess: float  # max over G(S) of estimate - eps/2

    @property
    def passed(self) -> bool:
        return self.max_excess <= 1e-6


@dataclass(frozen=True)
class HalfboundReport:
    rows: tuple[HalfboundRow, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


def halfbound_check(spec: RnModuleSpec, eps_grid, cfg: SearchConfig) -> HalfboundReport:
    """Check modulus <= eps/2 on G(S) for every eps in the grid."""
    g = grand_stratum(spec)
    if g.weight <= 0:
        raise PreconditionError("G(S) is empty")
    rows = []
    for eps in eps_grid:
        eps = float(eps)
        if not 0.0 < eps <= 2.0:
            raise PreconditionError(f"eps must lie in (0, 2], got {eps!r}")
        q = ModulusQuery(g, L0Real.constant(spec.space, eps), Variant.GEQ_SPHERE)
        est = modulus_estimate(spec, q, cfg).values[g.mask]
        rows.append(HalfboundRow(eps, float(est.max()), float(np.max(est - 0.5 * eps))))
    return HalfboundReport(tuple(rows))
