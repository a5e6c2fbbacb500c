"""Concrete random normed modules built from per-atom fiber spaces.

An element is one real vector per atom.  The random norm of an element is
the L0 variable whose value at an atom is the fiber norm of the vector
sitting there.  Atoms with fiber dimension 0 lie outside the support H(S).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import PreconditionError, SchemaError
from .measure import (
    EventSet,
    FiniteProbSpace,
    L0Real,
    _parse_atoms,
    kyfan_distance,
    strata_pos,
)

SPHERE_TOL = 1e-12


@dataclass(frozen=True)
class FiberNorm:
    """Euclidean norm or a finite p-norm (p >= 1) on one fiber."""

    kind: str = "euclid"
    p: float | None = None

    def __post_init__(self):
        if self.kind == "euclid":
            object.__setattr__(self, "p", None)
        elif self.kind == "pnorm":
            if self.p is None or not math.isfinite(self.p) or self.p < 1:
                raise SchemaError(f"p-norm exponent must be finite and >= 1, got {self.p}")
            object.__setattr__(self, "p", float(self.p))
        else:
            raise SchemaError(f"unknown fiber norm kind {self.kind!r}")

    @classmethod
    def euclidean(cls) -> "FiberNorm":
        return cls("euclid")

    @classmethod
    def pnorm(cls, p: float) -> "FiberNorm":
        return cls("pnorm", p)

    @property
    def exponent(self) -> float:
        return 2.0 if self.kind == "euclid" else self.p

    @property
    def dual_exponent(self) -> float:
        p = self.exponent
        return math.inf if p == 1 else p / (p - 1)

    def norm(self, v: np.ndarray) -> np.ndarray:
        """Norm along the last axis."""
        v = np.asarray(v, dtype=float)
        if v.shape[-1] == 0:
            return np.zeros(v.shape[:-1])
        return _pnorm(v, self.exponent)

    def dual_norm(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape[-1] == 0:
            return np.zeros(v.shape[:-1])
        return _pnorm(v, self.dual_exponent)

    def to_json(self) -> dict:
        return {"kind": "euclid"} if self.kind == "euclid" else {"kind": "pnorm", "p": self.p}

    @classmethod
    def from_json(cls, doc) -> "FiberNorm":
        if not isinstance(doc, Mapping) or "kind" not in doc:
            raise SchemaError('norm must be an object with a "kind"')
        if doc["kind"] == "euclid":
            return cls.euclidean()
        if doc["kind"] == "pnorm":
            p = doc.get("p")
            if isinstance(p, bool) or not isinstance(p, (int, float)):
                raise SchemaError("pnorm needs a numeric p")
            return cls.pnorm(float(p))
        raise SchemaError(f"unknown fiber norm kind {doc['kind']!r}")


SQUARE_SAFE_MIN = 1e-290


def _pnorm(v: np.ndarray, p: float) -> np.ndarray:
    a = np.abs(v)
    if p == 1:
        return np.sum(a, axis=-1)
    if math.isinf(p):
        return np.max(a, axis=-1)
    if p == 2:
        with np.errstate(over="ignore", under="ignore"):
            sq = np.sum(a * a, axis=-1)
        out = np.sqrt(sq)
        # the plain sum is only wrong when it lands in the subnormal range or overflows
        risky = (sq < SQUARE_SAFE_MIN) | np.isinf(sq)
        if np.any(risky):
            out = np.array(out, dtype=float)
            b = a[risky]
            m = np.max(b, axis=-1, keepdims=True)
            m = np.where(m > 0, m, 1.0)
            out[risky] = m[..., 0] * np.sqrt(np.sum((b / m) ** 2, axis=-1))
        return out
    m = np.max(a, axis=-1, keepdims=True)
    safe = np.where(m > 0, m, 1.0)
    # scale by the max entry so large exponents cannot overflow
    return safe[..., 0] * np.sum((a / safe) ** p, axis=-1) ** (1.0 / p)


@dataclass(frozen=True)
class RnModuleSpec:
    space: FiniteProbSpace
    dims: tuple[int, ...]
    norms: tuple[FiberNorm, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        norms = tuple(self.norms)
        if len(dims) != len(self.space) or len(norms) != len(self.space):
            raise SchemaError("one dimension and one norm per atom required")
        if any(d < 0 for d in dims):
            raise SchemaError("fiber dimensions must be >= 0")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "norms", norms)

    @classmethod
    def build(cls, atoms: Sequence[tuple[str, float, int, FiberNorm]]) -> "RnModuleSpec":
        space = FiniteProbSpace(tuple(a[0] for a in atoms), tuple(a[1] for a in atoms))
        return cls(space, tuple(a[2] for a in atoms), tuple(a[3] for a in atoms))

    def dim(self, atom: str) -> int:
        return self.dims[self.space.index(atom)]

    def norm_of(self, atom: str) -> FiberNorm:
        return self.norms[self.space.index(atom)]

    def support(self) -> EventSet:
        """H(S): atoms carrying a nonzero fiber."""
        return self.space.event(a for a, d in zip(self.space.atom_ids, self.dims) if d >= 1)

    def zero(self) -> "ModuleElement":
        return ModuleElement(self, [np.zeros(d) for d in self.dims])

    def element(self, values: Mapping[str, Sequence[float]]) -> "ModuleElement":
        """Element from an atom -> vector map; atoms left out get the zero vector."""
        vecs = []
        for a, d in zip(self.space.atom_ids, self.dims):
            vecs.append(np.asarray(values.get(a, np.zeros(d)), dtype=float))
        unknown = set(values) - set(self.space.atom_ids)
        if unknown:
            raise SchemaError(f"unknown atoms {sorted(unknown)}")
        return ModuleElement(self, vecs)

    def to_json(self) -> dict:
        return {
            "atoms": [
                {"id": a, "weight": w, "dim": d, "norm": n.to_json()}
                for a, w, d, n in zip(self.space.atom_ids, self.space.weights, self.dims, self.norms)
            ]
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "RnModuleSpec":
        ids, weights = _parse_atoms(doc)
        dims, norms = [], []
        for entry in doc["atoms"]:
            d = entry.get("dim")
            if isinstance(d, bool) or not isinstance(d, int):
                raise SchemaError(f"atom {entry['id']!r} needs an integer dim")
            dims.append(d)
            norms.append(FiberNorm.from_json(entry.get("norm", {"kind": "euclid"})))
        return cls(FiniteProbSpace(ids, tuple(weights)), tuple(dims), tuple(norms))


class _Fibered:
    """Shared storage for objects holding one vector per atom."""

    __slots__ = ("spec", "vectors")

    def __init__(self, spec: RnModuleSpec, vectors: Sequence):
        vecs = []
        for a, d, v in zip(spec.space.atom_ids, spec.dims, vectors):
            arr = np.array(v, dtype=float).reshape(-1)
            if arr.shape != (d,):
                raise SchemaError(f"vector at atom {a!r} has length {arr.size}, fiber dim is {d}")
            arr.flags.writeable = False
            vecs.append(arr)
        if len(vecs) != len(spec.space):
            raise SchemaError("one vector per atom required")
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "vectors", tuple(vecs))

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @classmethod
    def from_json(cls, spec: RnModuleSpec, doc: Mapping):
        if not isinstance(doc, Mapping) or not isinstance(doc.get("values"), Mapping):
            raise SchemaError('element document must be an object with a "values" map')
        values = doc["values"]
        missing = [a for a in spec.space.atom_ids if a not in values]
        if missing:
            raise SchemaError(f"missing atoms {missing}")
        vecs = []
        for a in spec.space.atom_ids:
            v = values[a]
            if not isinstance(v, list) or any(
                isinstance(c, bool) or not isinstance(c, (int, float)) for c in v
            ):
                raise SchemaError(f"value at atom {a!r} must be a list of numbers")
            vecs.append(v)
        return cls(spec, vecs)

    def to_json(self) -> dict:
        return {"values": {a: [float(c) for c in v] for a, v in zip(self.spec.space.atom_ids, self.vectors)}}

    def at(self, atom: str) -> np.ndarray:
        return self.vectors[self.spec.space.index(atom)]

    def _same(self, other) -> None:
        if type(other) is not type(self) or other.spec != self.spec:
            raise PreconditionError("operands belong to different modules")

    def __add__(self, other):
        self._same(other)
        return type(self)(self.spec, [a + b for a, b in zip(self.vectors, other.vectors)])

    def __sub__(self, other):
        self._same(other)
        return type(self)(self.spec, [a - b for a, b in zip(self.vectors, other.vectors)])

    def __neg__(self):
        return type(self)(self.spec, [-a for a in self.vectors])

    def __mul__(self, c: float):
        c = float(c)
        return type(self)(self.spec, [c * a for a in self.vectors])

    __rmul__ = __mul__

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self.spec == other.spec and all(
            np.array_equal(a, b) for a, b in zip(self.vectors, other.vectors)
        )

    __hash__ = None

    def allclose(self, other, atol: float) -> bool:
        self._same(other)
        return all(np.all(np.abs(a - b) <= atol) for a, b in zip(self.vectors, other.vectors))

    def __repr__(self) -> str:
        body = ", ".join(
            f"{a}: {np.array2string(v, precision=6)}" for a, v in zip(self.spec.space.atom_ids, self.vectors)
        )
        return f"{type(self).__name__}({{{body}}})"


class ModuleElement(_Fibered):
    __slots__ = ()


def random_norm(x: ModuleElement) -> L0Real:
    spec = x.spec
    return L0Real(spec.space, [float(n.norm(v)) for n, v in zip(spec.norms, x.vectors)])


def module_scale(xi: L0Real, x: ModuleElement) -> ModuleElement:
    if xi.space != x.spec.space:
        raise PreconditionError("scalar and element live on different spaces")
    return ModuleElement(x.spec, [c * v for c, v in zip(xi.values, x.vectors)])


def restrict(event: EventSet, x: ModuleElement) -> ModuleElement:
    """I_E x."""
    return module_scale(L0Real(event.space, event.mask.astype(float)), x)


def supports(x: ModuleElement, y: ModuleElement | None = None):
    """Return (A_x, A_xy, B_xy); the last two are None when y is omitted."""
    a_x = strata_pos(random_norm(x))
    if y is None:
        return a_x, None, None
    if y.spec != x.spec:
        raise PreconditionError("elements belong to different modules")
    a_xy = a_x & strata_pos(random_norm(y))
    b_xy = a_xy & strata_pos(random_norm(x - y))
    return a_x, a_xy, b_xy


def sphere_membership(x: ModuleElement, tol: float = SPHERE_TOL) -> EventSet | None:
    """A with ||x|| = I_A and P(A) > 0, or None when x is not in S(1)."""
    n = random_norm(x).values
    on = np.abs(n - 1.0) <= tol
    off = n <= tol
    if not np.all(on | off) or not on.any():
        return None
    return x.spec.space.event(a for a, flag in zip(x.spec.space.atom_ids, on) if flag)


def glue(pieces: Sequence[tuple[EventSet, ModuleElement]], spec: RnModuleSpec | None = None) -> ModuleElement:
    """Sum of I_{E_k} x_k over pairwise disjoint events."""
    if not pieces:
        if spec is None:
            raise PreconditionError("glue of an empty list needs the module spec")
        return spec.zero()
    spec = pieces[0][1].spec
    seen: set[str] = set()
    vecs = [np.zeros(d) for d in spec.dims]
    for event, x in pieces:
        if x.spec != spec or event.space != spec.space:
            raise PreconditionError("glued pieces belong to different modules")
        if seen & event.members:
            raise PreconditionError(f"events overlap on {sorted(seen & event.members)}")
        seen |= event.members
        for i in np.flatnonzero(event.mask):
            vecs[i] = x.vectors[i]
    return ModuleElement(spec, vecs)


def unit_section(spec: RnModuleSpec) -> ModuleElement:
    """Deterministic element with ||x|| = I_{H(S)}: normalised first basis vector."""
    if spec.support().is_empty():
        raise PreconditionError("support H(S) is empty")
    vecs = []
    for d, n in zip(spec.dims, spec.norms):
        v = np.zeros(d)
        if d:
            v[0] = 1.0
            v = v / n.norm(v)
        vecs.append(v)
    return ModuleElement(spec, vecs)


def module_distance(x: ModuleElement, y: ModuleElement) -> float:
    """E[min(||x - y||, 1)]."""
    if x.spec != y.spec:
        raise PreconditionError("elements belong to different modules")
    d = random_norm(x - y)
    return kyfan_distance(d, L0Real.constant(d.space, 0.0))
