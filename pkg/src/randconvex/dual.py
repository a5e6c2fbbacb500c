"""Random conjugate space of a concrete module.

A functional is one dual vector per atom and acts by the atomwise dot
product.  The fiber dual of a p-norm is the q-norm with 1/p + 1/q = 1, so
dual norms and norming functionals are available in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .measure import L0Real
from .module import FiberNorm, ModuleElement, _Fibered, random_norm


class RandomFunctional(_Fibered):
    __slots__ = ()


def eval_functional(f: RandomFunctional, x: ModuleElement) -> L0Real:
    if f.spec != x.spec:
        raise PreconditionError("functional and element belong to different modules")
    return L0Real(f.spec.space, [float(np.dot(g, v)) for g, v in zip(f.vectors, x.vectors)])


def dual_norm(f: RandomFunctional) -> L0Real:
    return L0Real(f.spec.space, [float(n.dual_norm(g)) for n, g in zip(f.spec.norms, f.vectors)])


def norming_vector(norm: FiberNorm, v: np.ndarray) -> np.ndarray:
    """Unit-dual-norm g with g.v = ||v||; zero when v = 0.

    p = 1 uses sign(v) with sign(0) = 0.
    """
    v = np.asarray(v, dtype=float)
    nv = float(norm.norm(v))
    if nv == 0.0:
        return np.zeros_like(v)
    p = norm.exponent
    if p == 1:
        return np.sign(v)
    if p == 2:
        return v / nv
    return np.sign(v) * (np.abs(v) / nv) ** (p - 1)


def dual_witness(norm: FiberNorm, g: np.ndarray) -> np.ndarray:
    """Unit vector x with g.x = ||g||_*; zero when g = 0.

    For p = 1 (dual sup-norm) the mass sits on the first coordinate of
    maximal modulus.
    """
    g = np.asarray(g, dtype=float)
    ng = float(norm.dual_norm(g))
    if ng == 0.0:
        return np.zeros_like(g)
    q = norm.dual_exponent
    if math.isinf(q):
        k = int(np.argmax(np.abs(g)))
        x = np.zeros_like(g)
        x[k] = np.sign(g[k])
        return x
    if q == 1:
        return np.sign(g)
    return np.sign(g) * (np.abs(g) / ng) ** (q - 1)


def norm_attaining(x: ModuleElement) -> RandomFunctional:
    """g with g(x) = ||x|| and ||g||* = I_{A_x}."""
    spec = x.spec
    return RandomFunctional(spec, [norming_vector(n, v) for n, v in zip(spec.norms, x.vectors)])


def _random_unit(rng: np.random.Generator, norm: FiberNorm, dim: int, n: int) -> np.ndarray:
    if dim == 0:
        return np.zeros((n, 0))
    v = rng.standard_normal((n, dim))
    return v / norm.norm(v)[:, None]


@dataclass(frozen=True)
class SupFormulaReport:
    samples: int
    sampled_sup: L0Real  # max |f(x)| over sampled x in S(1), witness excluded
    with_witness: L0Real  # same maximum with the norming direction injected
    dual_norm: L0Real
    max_excess: float  # max over atoms of sampled sup - dual norm (should be <= 0)
    witness_gap: float  # max over atoms of |with_witness - dual_norm|
    bidual_sup: L0Real  # sup over sampled unit functionals of g(x)
    element_norm: L0Real
    bidual_excess: float
    bidual_witness_gap: float

    @property
    def passed(self) -> bool:
        return (
            self.max_excess <= 1e-12
            and self.witness_gap <= 1e-9
            and self.bidual_excess <= 1e-12
            and self.bidual_witness_gap <= 1e-12
        )


def sup_formula_check(
    f: RandomFunctional, samples: int, seed: int, x: ModuleElement | None = None
) -> SupFormulaReport:
    """Sampled check of the dual-norm and bidual sup formulas.

    Draws ``samples`` unit vectors per atom, compares max |f(x)| against the
    closed-form dual norm, then injects the exact maximiser.  The bidual half
    does the same for an element ``x`` (random when omitted) against sampled
    unit functionals, with ``norm_attaining(x)`` as the witness.
    """
    if samples < 1:
        raise PreconditionError("samples must be >= 1")
    spec = f.spec
    rng = np.random.default_rng(seed)
    if x is None:
        x = ModuleElement(spec, [rng.standard_normal(d) for d in spec.dims])
    elif x.spec != spec:
        raise PreconditionError("element and functional belong to different modules")

    sampled, injected, bidual = [], [], []
    for norm, d, g, v in zip(spec.norms, spec.dims, f.vectors, x.vectors):
        if d == 0:
            sampled.append(0.0)
            injected.append(0.0)
            bidual.append(0.0)
            continue
        us = _random_unit(rng, norm, d, samples)
        vals = np.abs(us @ g)
        s = float(vals.max())
        sampled.append(s)
        injected.append(max(s, abs(float(np.dot(dual_witness(norm, g), g)))))
        # unit functionals: sample dual directions normalised in the dual norm
        gs = rng.standard_normal((samples, d))
        gs = gs / norm.dual_norm(gs)[:, None]
        bidual.append(float((gs @ v).max()))

    space = spec.space
    sampled_l0 = L0Real(space, sampled)
    injected_l0 = L0Real(space, injected)
    dn = dual_norm(f)
    xn = random_norm(x)
    bidual_l0 = L0Real(space, bidual)
    witness_val = eval_functional(norm_attaining(x), x)
    bidual_with_witness = np.maximum(bidual_l0.values, witness_val.values)
    return SupFormulaReport(
        samples=samples,
        sampled_sup=sampled_l0,
        with_witness=injected_l0,
        dual_norm=dn,
        max_excess=float(np.max(sampled_l0.values - dn.values)),
        witness_gap=float(np.max(np.abs(injected_l0.values - dn.values))),
        bidual_sup=bidual_l0,
        element_norm=xn,
        bidual_excess=float(np.max(bidual_l0.values - xn.values)),
        bidual_witness_gap=float(np.max(np.abs(bidual_with_witness - xn.values))),
    )
