"""The derived Banach space L^p(S) and its uniform-convexity audits.

With finitely many atoms L^p(S) is the finite-dimensional space of stacked
fiber vectors under ||x||_p = (sum_w P(w) ||x(w)||^p)^(1/p).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .convexity import FiberEstimate, SearchConfig, _descend, _float_bits, _gauss_dirs
from .errors import PreconditionError, SamplingError
from .ivt import bisect
from .module import ModuleElement, RnModuleSpec

REJECT_ROUNDS = 200
COLLINEAR_SHARE = 0.25


def _check_p(p: float) -> float:
    p = float(p)
    if not 1.0 < p < math.inf:
        raise PreconditionError(f"p must satisfy 1 < p < inf, got {p!r}")
    return p


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not 0.0 < eps <= 2.0:
        raise PreconditionError(f"eps must lie in (0, 2], got {eps!r}")
    return eps


def lp_norm(x: ModuleElement, p: float) -> float:
    p = _check_p(p)
    spec = x.spec
    fib = np.array([float(n.norm(v)) for n, v in zip(spec.norms, x.vectors)])
    return _weighted_pnorm(fib[None, :], spec.space.weight_array, p)[0]


def _weighted_pnorm(fib: np.ndarray, w: np.ndarray, p: float) -> np.ndarray:
    m = fib.max(axis=-1, keepdims=True)
    safe = np.where(m > 0, m, 1.0)
    return safe[..., 0] * np.sum(w * (fib / safe) ** p, axis=-1) ** (1.0 / p)


class _Flat:
    """Stacked coordinates of the module with the L^p(S) norm."""

    def __init__(self, spec: RnModuleSpec, p: float):
        self.spec = spec
        self.p = p
        self.w = spec.space.weight_array
        self.slices = []
        start = 0
        for d in spec.dims:
            self.slices.append(slice(start, start + d))
            start += d
        self.dim = start

    def fiber_norms(self, v: np.ndarray) -> np.ndarray:
        cols = [n.norm(v[..., s]) for n, s in zip(self.spec.norms, self.slices)]
        return np.stack(cols, axis=-1)

    def n(self, v: np.ndarray) -> np.ndarray:
        return _weighted_pnorm(self.fiber_norms(v), self.w, self.p)

    def unit(self, v: np.ndarray) -> np.ndarray:
        return v / self.n(v)[..., None]

    def value(self, x, y):
        return 1.0 - self.n(0.5 * (x + y))

    def gap(self, x, y):
        return self.n(x - y)


def _eq_partner(flat: _Flat, x: np.ndarray, w: np.ndarray, eps: float) -> np.ndarray:
    def arc(t):
        return flat.unit(np.cos(t)[:, None] * x + np.sin(t)[:, None] * w)

    n = x.shape[0]
    _, hi = bisect(lambda t: flat.gap(x, arc(t)) - eps, np.zeros(n), np.full(n, math.pi))
    y = arc(hi)
    y[hi == math.pi] = -x[hi == math.pi]
    return y


def _seed_rng(cfg: SearchConfig, p: float, eps: float) -> np.random.Generator:
    return np.random.default_rng([int(cfg.seed), _float_bits(p), _float_bits(eps)])


def _lp_search(spec: RnModuleSpec, p: float, eps: float, cfg: SearchConfig) -> FiberEstimate:
    flat = _Flat(spec, p)
    D = flat.dim
    if D == 0:
        raise PreconditionError("L^p(S) is the zero space")
    e = np.zeros(D)
    e[0] = 1.0
    x0 = e / flat.n(e)
    best = FiberEstimate(1.0, x0, -x0)
    if D == 1:
        return best
    rng = _seed_rng(cfg, p, eps)

    def evaluate(params):
        a, w = params[:, :D], params[:, D:]
        with np.errstate(all="ignore"):
            x = flat.unit(a)
            w = w - (np.sum(w * x, axis=1) / np.sum(x * x, axis=1))[:, None] * x
            ok = (np.linalg.norm(a, axis=1) > 1e-8) & (np.linalg.norm(w, axis=1) > 1e-8)
            y = _eq_partner(flat, np.where(ok[:, None], x, 1.0), np.where(ok[:, None], w, 1.0), eps)
            vals = flat.value(x, y)
        return np.where(ok & np.isfinite(vals), vals, np.inf), x, y

    n = cfg.random_restarts
    starts = [np.hstack([_gauss_dirs(rng, n, D), _gauss_dirs(rng, n, D)])]
    # pairs living on a single atom
    conc = np.zeros((n, 2 * D))
    pick = rng.integers(0, len(spec.dims), n)
    for k, s in enumerate(flat.slices):
        rows = np.flatnonzero(pick == k)
        if s.stop - s.start == 0 or rows.size == 0:
            continue
        d = s.stop - s.start
        conc[rows, s] = _gauss_dirs(rng, rows.size, d)
        conc[rows, D + s.start : D + s.stop] = _gauss_dirs(rng, rows.size, d)
    starts.append(conc[np.linalg.norm(conc[:, :D], axis=1) > 0])
    # coordinate pairs: these reach the flat faces of 1-norm fibers exactly
    eye = np.eye(D)
    i, j = np.meshgrid(np.arange(D), np.arange(D), indexing="ij")
    off = i.ravel() != j.ravel()
    starts.append(np.hstack([eye[i.ravel()[off]], eye[j.ravel()[off]]]))
    return _descend(evaluate, np.vstack(starts), cfg, best)


def lp_modulus_estimate(spec: RnModuleSpec, p: float, eps: float, cfg: SearchConfig) -> float:
    """Upper bound on the modulus of convexity of L^p(S) at eps."""
    return _clamp(_lp_search(spec, _check_p(p), _check_eps(eps), cfg).value)


def _clamp(v: float) -> float:
    return min(max(v, 0.0), 1.0)


def lp_modulus_report(spec: RnModuleSpec, p: float, eps: float, cfg: SearchConfig) -> dict:
    """Estimate at the given budget and at doubled budgets, with the delta."""
    p, eps = _check_p(p), _check_eps(eps)
    base = _clamp(_lp_search(spec, p, eps, cfg).value)
    doubled_cfg = replace(
        cfg, random_restarts=2 * cfg.random_restarts, refine_iters=2 * cfg.refine_iters
    )
    doubled = _clamp(_lp_search(spec, p, eps, doubled_cfg).value)
    return {
        "p": p,
        "eps": eps,
        "estimate": base,
        "doubled_budget_estimate": doubled,
        "budget_delta": abs(base - doubled),
        "seed": cfg.seed,
    }


# -------------------------------------------------------------------- audit


@dataclass(frozen=True)
class _Batch:
    ratio: float
    atom: str
    accepted: int
    rejected: int


def _ball_pairs(rng, norm, d, eps, n, scaled):
    """n pairs in the unit ball with ||x - y|| >= eps, by per-row rejection.

    A quarter of the proposals step from x along its own direction, which
    reaches the collinear pairs (antipodal ones included) that a generic
    direction never hits.  With ``scaled`` each pair is multiplied by a log-uniform factor in
    [1e-2, 1e2], giving pairs with ||x - y|| >= eps max(||x||, ||y||).
    Returns x, y, filled mask, number of rejected draws.
    """
    x = np.zeros((n, d))
    y = np.zeros((n, d))
    filled = np.zeros(n, dtype=bool)
    rejected = 0
    for _ in range(REJECT_ROUNDS):
        todo = np.flatnonzero(~filled)
        if todo.size == 0:
            break
        m = todo.size
        r = np.where(rng.random(m) < 0.5, 1.0, rng.random(m))
        a = rng.standard_normal((m, d))
        xa = r[:, None] * a / norm.norm(a)[:, None]
        c = rng.standard_normal((m, d))
        along = rng.random(m) < COLLINEAR_SHARE
        c[along] = a[along]
        g = rng.uniform(eps, 2.0, m)
        ya = xa - g[:, None] * c / norm.norm(c)[:, None]
        ny, nx = norm.norm(ya), norm.norm(xa)
        ok = (ny <= 1.0) & (ny > 0) & (nx > 0) & (norm.norm(xa - ya) >= eps)
        rejected += int((~ok).sum())
        x[todo[ok]], y[todo[ok]] = xa[ok], ya[ok]
        filled[todo[ok]] = True
    if scaled:
        lam = np.exp(rng.uniform(math.log(1e-2), math.log(1e2), n))
        x, y = lam[:, None] * x, lam[:, None] * y
    return x, y, filled, rejected


def _audit_once(spec: RnModuleSpec, p: float, eps: float, samples: int, rng: np.random.Generator) -> _Batch:
    space = spec.space
    support = [i for i, d in enumerate(spec.dims) if d >= 1]
    k = len(support)
    # D: random nonempty subset of the support per sample
    member = rng.random((samples, k)) < 0.5
    empty = ~member.any(axis=1)
    member[empty, rng.integers(0, k, int(empty.sum()))] = True
    accepted = np.ones(samples, dtype=bool)
    ratios = np.full((samples, k), -np.inf)
    rejected = 0
    for batch_scaled in (False, True):
        for col, i in enumerate(support):
            norm, d = spec.norms[i], spec.dims[i]
            x, y, filled, rej = _ball_pairs(rng, norm, d, eps, samples, batch_scaled)
            rejected += rej
            accepted &= filled | ~member[:, col]
            nx, ny, nm = norm.norm(x), norm.norm(y), norm.norm(0.5 * (x + y))
            with np.errstate(all="ignore"):
                r = nm**p / (0.5 * (nx**p + ny**p))
            r = np.where(member[:, col] & filled, r, -np.inf)
            ratios[:, col] = np.maximum(ratios[:, col], r)
    ratios = ratios[accepted]
    if ratios.size == 0:
        raise SamplingError(f"no feasible samples for eps={eps!r} after {REJECT_ROUNDS} rejection rounds")
    flat = int(np.argmax(ratios))
    col = flat % k
    return _Batch(float(ratios.flat[flat]), space.atom_ids[support[col]], int(accepted.sum()), rejected)


def uniform_convexity_audit(spec: RnModuleSpec, p: float, eps: float, samples: int, seed: int) -> dict:
    """Empirical constant in ||(x+y)/2||^p <= (1 - delta)(||x||^p + ||y||^p)/2.

    Two batches per seed: unit-ball pairs with ||x - y|| >= eps on D, and the
    same pairs rescaled atomwise so only ||x - y|| >= eps (||x|| v ||y||)
    holds.  The worst ratio r* over both gives delta_p = 1 - r*.  A second,
    independently seeded run measures stability.
    """
    p, eps = _check_p(p), _check_eps(eps)
    if samples < 1:
        raise PreconditionError("samples must be >= 1")
    if spec.support().is_empty():
        raise PreconditionError("support H(S) is empty")
    for i, (d, n) in enumerate(zip(spec.dims, spec.norms)):
        if d >= 1 and n.exponent <= 1.0:
            raise PreconditionError(
                f"atom {spec.space.atom_ids[i]!r} carries a 1-norm fiber, which is not uniformly convex"
            )
    streams = np.random.SeedSequence(int(seed)).spawn(2)
    main = _audit_once(spec, p, eps, samples, np.random.default_rng(streams[0]))
    other = _audit_once(spec, p, eps, samples, np.random.default_rng(streams[1]))
    delta, delta2 = 1.0 - main.ratio, 1.0 - other.ratio
    scale = max(abs(delta), abs(delta2))
    stability = abs(delta - delta2) / scale if scale > 0 else 0.0
    return {
        "p": p,
        "eps": eps,
        "delta_p": delta,
        "samples_accepted": main.accepted,
        "samples_rejected_draws": main.rejected,
        "seed": int(seed),
        "worst_atom": main.atom,
        "stability_delta": stability,
        # r* < 1 certifies a constant in (0, 1); delta_p = 1 when every midpoint vanishes
        "passed": bool(0.0 < delta <= 1.0 and stability < 0.25),
    }
