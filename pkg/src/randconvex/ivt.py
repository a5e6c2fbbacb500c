"""Stratified intermediate value solver for local functions on L0.

A local function on a finite atomic space acts atom by atom, so the
essential-infimum construction of a root collapses to an independent
bracketed bisection at each atom.  Atoms where f(Y1) > f(Y2) are solved on
the negated problem.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import ConvergenceError, DomainError, PreconditionError, UnboundNameError
from .expr import Expr, evaluate_array, free_constants
from .measure import FiniteProbSpace, L0Real, kyfan_distance

MAX_ITER = 200


class LocalFunction:
    """A map L0 -> L0 given by a function on the per-atom value array.

    Built from per-atom scalar maps or from an expression it is local by
    construction.  The raw array form exists so that non-local maps can be
    represented and caught by :func:`locality_audit`.
    """

    def __init__(self, space: FiniteProbSpace, fn: Callable[[np.ndarray], np.ndarray]):
        self.space = space
        self._fn = fn

    @classmethod
    def from_maps(cls, space: FiniteProbSpace, maps) -> "LocalFunction":
        """``maps`` is a sequence in atom order or a mapping atom id -> callable."""
        if isinstance(maps, Mapping):
            maps = [maps[a] for a in space.atom_ids]
        maps = list(maps)
        if len(maps) != len(space):
            raise PreconditionError("one scalar map per atom required")

        def fn(values: np.ndarray) -> np.ndarray:
            return np.array([float(m(float(v))) for m, v in zip(maps, values)])

        return cls(space, fn)

    @classmethod
    def from_expr(cls, space: FiniteProbSpace, ast: Expr, bindings: Mapping[str, L0Real]) -> "LocalFunction":
        missing = sorted(free_constants(ast) - set(bindings))
        if missing:
            raise UnboundNameError(f"unbound constant(s): {', '.join(missing)}")
        env = {}
        for name, val in bindings.items():
            if val.space != space:
                raise UnboundNameError(f"binding {name!r} lives on a different space")
            env[name] = val.values
        ids = space.atom_ids
        return cls(space, lambda values: evaluate_array(ast, env, values, ids))

    def values(self, arr: np.ndarray) -> np.ndarray:
        out = np.asarray(self._fn(np.asarray(arr, dtype=float)), dtype=float)
        if out.shape != (len(self.space),):
            raise PreconditionError("local function returned the wrong number of values")
        return out

    def __call__(self, x: L0Real) -> L0Real:
        if x.space != self.space:
            raise PreconditionError("argument lives on a different space")
        return L0Real(self.space, self.values(x.values))


def bisect(
    g: Callable[[np.ndarray], np.ndarray],
    lo: np.ndarray,
    hi: np.ndarray,
    max_iter: int = MAX_ITER,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised bisection for g(lo) <= 0 <= g(hi) elementwise.

    Runs until every interval has collapsed to adjacent floats or
    ``max_iter`` is hit.  Returns (lo, hi) of the final brackets.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(max_iter):
        mid = lo + 0.5 * (hi - lo)
        active = (mid > lo) & (mid < hi)
        if not active.any():
            break
        gm = g(mid)
        below = active & (gm <= 0)
        above = active & ~(gm <= 0)
        lo = np.where(below, mid, lo)
        hi = np.where(above, mid, hi)
    return lo, hi


def solve_ivt(f: LocalFunction, y1: L0Real, y2: L0Real, xi: L0Real, tol: float) -> L0Real:
    """Find eta with y1 <= eta <= y2 and |f(eta) - xi| <= tol at every atom."""
    space = f.space
    if not (y1.space == y2.space == xi.space == space):
        raise PreconditionError("arguments live on different spaces")
    if not tol > 0:
        raise PreconditionError("tol must be positive")
    ids = space.atom_ids
    a, b, target = y1.values, y2.values, xi.values
    bad = np.flatnonzero(a > b)
    if bad.size:
        raise PreconditionError(f"Y1 > Y2 at atom {ids[bad[0]]!r}")
    fa, fb = f.values(a), f.values(b)
    lower, upper = np.minimum(fa, fb), np.maximum(fa, fb)
    bad = np.flatnonzero((target < lower - tol) | (target > upper + tol))
    if bad.size:
        i = bad[0]
        raise PreconditionError(
            f"xi = {float(target[i])!r} lies outside [{float(lower[i])!r}, {float(upper[i])!r}] at atom {ids[i]!r}"
        )

    # per-atom orientation: +1 where f(Y1) <= f(Y2), -1 elsewhere
    sign = np.where(fa <= fb, 1.0, -1.0)
    done_a = np.abs(fa - target) <= tol
    done_b = ~done_a & (np.abs(fb - target) <= tol)
    open_ = ~(done_a | done_b)

    def g(t: np.ndarray) -> np.ndarray:
        return sign * (f.values(t) - target)

    lo, hi = bisect(g, a, np.where(open_, b, a))
    flo, fhi = f.values(lo), f.values(hi)
    pick_hi = np.abs(fhi - target) < np.abs(flo - target)
    eta = np.where(pick_hi, hi, lo)
    eta = np.where(done_a, a, np.where(done_b, b, eta))
    resid = np.abs(f.values(eta) - target)
    bad = np.flatnonzero(resid > tol)
    if bad.size:
        i = bad[0]
        raise ConvergenceError(
            f"residual {resid[i]:.3e} > tol at atom {ids[i]!r} "
            f"(bracket width {hi[i] - lo[i]:.3e}); is the map continuous there?"
        )
    return L0Real(space, eta)


@dataclass(frozen=True)
class LocalityReport:
    trials: int
    evaluated: int
    max_deviation: float
    worst_event: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return self.max_deviation <= 1e-12


def locality_audit(f: LocalFunction, trials: int, seed: int, scale: float = 2.0) -> LocalityReport:
    """Compare I_A f(x) with I_A f(I_A x) for random x and random events A.

    Trials whose evaluation hits an expression domain error are skipped and
    not counted in ``evaluated``.
    """
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    space = f.space
    n = len(space)
    worst, worst_event, evaluated = 0.0, (), 0
    for _ in range(trials):
        xs = rng.uniform(-scale, scale, n)
        mask = rng.random(n) < 0.5
        ind = mask.astype(float)
        try:
            lhs = ind * f.values(xs)
            rhs = ind * f.values(ind * xs)
        except DomainError:
            continue
        evaluated += 1
        dev = kyfan_distance(L0Real(space, lhs), L0Real(space, rhs))
        if dev > worst:
            worst = dev
            worst_event = tuple(a for a, m in zip(space.atom_ids, mask) if m)
    return LocalityReport(trials, evaluated, worst, worst_event)
