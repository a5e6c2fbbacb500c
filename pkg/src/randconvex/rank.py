"""L0-independence, the dependence stratum of a pair, G(S), and companions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .measure import EventSet, L0Real
from .module import ModuleElement, RnModuleSpec, random_norm, supports

RANK_TOL = 1e-10
COLLINEAR_TOL = 1e-10


def fibers_independent(a: np.ndarray, b: np.ndarray) -> bool:
    """Two vectors span a plane: largest 2x2 minor above RANK_TOL * |a| |b|."""
    if a.size < 2:
        return False
    scale = float(np.linalg.norm(a) * np.linalg.norm(b))
    if scale == 0.0:
        return False
    minors = np.outer(a, b) - np.outer(b, a)
    return float(np.max(np.abs(minors))) > RANK_TOL * scale


def is_independent(x: ModuleElement, y: ModuleElement, event: EventSet) -> bool:
    if event.is_empty():
        raise PreconditionError("independence is tested on a nonempty event")
    if x.spec != y.spec or event.space != x.spec.space:
        raise PreconditionError("arguments belong to different modules")
    return all(fibers_independent(x.vectors[i], y.vectors[i]) for i in np.flatnonzero(event.mask))


@dataclass(frozen=True)
class IndependencePart:
    F: EventSet  # dependence stratum inside A_xy
    xi: L0Real
    eta: L0Real
    a_xy: EventSet

    @property
    def independent(self) -> EventSet:
        """A_xy minus F."""
        return self.a_xy - self.F


def independent_part(x: ModuleElement, y: ModuleElement) -> IndependencePart:
    """Split A_xy into the stratum F where y = xi' x and its complement.

    On F the coefficients are xi = (x.y)/(x.x) and eta = -1, so
    xi x + eta y = 0 there; both vanish off F.
    """
    _, a_xy, _ = supports(x, y)
    if a_xy.weight <= 0:
        raise PreconditionError("P(A_xy) must be positive")
    space = x.spec.space
    xi = np.zeros(len(space))
    eta = np.zeros(len(space))
    dependent = []
    for i in np.flatnonzero(a_xy.mask):
        a, b = x.vectors[i], y.vectors[i]
        if not fibers_independent(a, b):
            dependent.append(space.atom_ids[i])
            xi[i] = float(np.dot(a, b) / np.dot(a, a))
            eta[i] = -1.0
    return IndependencePart(space.event(dependent), L0Real(space, xi), L0Real(space, eta), a_xy)


def grand_stratum(spec: RnModuleSpec) -> EventSet:
    """G(S): atoms whose fiber has dimension >= 2."""
    return spec.space.event(a for a, d in zip(spec.space.atom_ids, spec.dims) if d >= 2)


def companion_vector(u: np.ndarray, norm) -> np.ndarray:
    """Unit vector independent of u: the last basis vector not collinear with u,
    made orthogonal to u and normalised in the fiber norm."""
    uu = u / np.linalg.norm(u)
    for k in reversed(range(u.size)):
        e = np.zeros(u.size)
        e[k] = 1.0
        w = e - np.dot(e, uu) * uu
        if np.linalg.norm(w) > COLLINEAR_TOL:
            return w / norm.norm(w)
    raise PreconditionError("no independent direction exists in a fiber of dimension < 2")


def companion(u: ModuleElement) -> ModuleElement:
    """v with ||v|| = I_G(S) and u, v independent on G(S)."""
    spec = u.spec
    g = grand_stratum(spec)
    if g.weight <= 0:
        raise PreconditionError("G(S) is empty")
    n = random_norm(u).values
    target = g.mask.astype(float)
    bad = np.flatnonzero(np.abs(n - target) > 1e-12)
    if bad.size:
        atom = spec.space.atom_ids[bad[0]]
        raise PreconditionError(f"||u|| differs from I_G(S) at atom {atom!r}")
    vecs = []
    for i, (d, norm) in enumerate(zip(spec.dims, spec.norms)):
        vecs.append(companion_vector(u.vectors[i], norm) if g.mask[i] else np.zeros(d))
    return ModuleElement(spec, vecs)
