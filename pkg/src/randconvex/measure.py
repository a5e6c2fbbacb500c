"""Finite atomic probability spaces, events and the L0 lattice algebra.

Every atom carries positive mass, so an event class has exactly one
representative and "almost surely" means "at every atom".  Essential
suprema and infima of finite families are therefore pointwise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import PreconditionError, SchemaError

WEIGHT_SUM_TOL = 1e-12
LOAD_WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class FiniteProbSpace:
    atom_ids: tuple[str, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        ids = tuple(str(a) for a in self.atom_ids)
        w = tuple(float(v) for v in self.weights)
        object.__setattr__(self, "atom_ids", ids)
        object.__setattr__(self, "weights", w)
        if not ids:
            raise SchemaError("probability space needs at least one atom")
        if len(ids) != len(w):
            raise SchemaError("atom_ids and weights differ in length")
        if len(set(ids)) != len(ids):
            raise SchemaError("atom ids must be distinct")
        for a, v in zip(ids, w):
            if not (math.isfinite(v) and 0.0 < v <= 1.0):
                raise SchemaError(f"weight of atom {a!r} must lie in (0, 1], got {v}")
        if abs(math.fsum(w) - 1.0) > WEIGHT_SUM_TOL:
            raise SchemaError(f"weights sum to {math.fsum(w)!r}, expected 1")

    @classmethod
    def uniform(cls, atom_ids: Sequence[str]) -> "FiniteProbSpace":
        n = len(atom_ids)
        return cls(tuple(atom_ids), (1.0 / n,) * n)

    @cached_property
    def weight_array(self) -> np.ndarray:
        arr = np.asarray(self.weights, dtype=float)
        arr.flags.writeable = False
        return arr

    @cached_property
    def _index(self) -> dict[str, int]:
        return {a: i for i, a in enumerate(self.atom_ids)}

    def __len__(self) -> int:
        return len(self.atom_ids)

    def index(self, atom: str) -> int:
        try:
            return self._index[atom]
        except KeyError:
            raise SchemaError(f"atom {atom!r} is not in the space") from None

    def omega(self) -> "EventSet":
        return EventSet(self, frozenset(self.atom_ids))

    def empty(self) -> "EventSet":
        return EventSet(self, frozenset())

    def event(self, members: Iterable[str]) -> "EventSet":
        return EventSet(self, frozenset(members))

    def to_json(self) -> dict:
        return {"atoms": [{"id": a, "weight": w} for a, w in zip(self.atom_ids, self.weights)]}

    @classmethod
    def from_json(cls, doc: Mapping) -> "FiniteProbSpace":
        ids, weights = _parse_atoms(doc)
        return cls(ids, tuple(weights))


def _parse_atoms(doc: Mapping) -> tuple[tuple[str, ...], list[float]]:
    """Validate the shared ``{"atoms": [...]}`` layout; weights renormalised."""
    if not isinstance(doc, Mapping) or not isinstance(doc.get("atoms"), list):
        raise SchemaError('space document must be an object with an "atoms" list')
    ids, weights = [], []
    for entry in doc["atoms"]:
        if not isinstance(entry, Mapping) or "id" not in entry or "weight" not in entry:
            raise SchemaError('each atom needs "id" and "weight"')
        w = entry["weight"]
        if isinstance(w, bool) or not isinstance(w, (int, float)):
            raise SchemaError(f"weight of atom {entry['id']!r} is not a number")
        ids.append(str(entry["id"]))
        weights.append(float(w))
    total = math.fsum(weights)
    if not ids:
        raise SchemaError("probability space needs at least one atom")
    if abs(total - 1.0) > LOAD_WEIGHT_SUM_TOL:
        raise SchemaError(f"weights sum to {total!r}, expected 1 within {LOAD_WEIGHT_SUM_TOL}")
    if any(not (v > 0) for v in weights):
        raise SchemaError("all weights must be strictly positive")
    return tuple(ids), [v / total for v in weights]


def load_json(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc


@dataclass(frozen=True)
class EventSet:
    space: FiniteProbSpace
    members: frozenset

    def __post_init__(self):
        members = frozenset(str(m) for m in self.members)
        for m in members:
            self.space.index(m)
        object.__setattr__(self, "members", members)

    @cached_property
    def mask(self) -> np.ndarray:
        m = np.array([a in self.members for a in self.space.atom_ids], dtype=bool)
        m.flags.writeable = False
        return m

    @property
    def weight(self) -> float:
        return float(self.space.weight_array[self.mask].sum())

    def ordered(self) -> list[str]:
        return [a for a in self.space.atom_ids if a in self.members]

    def is_empty(self) -> bool:
        return not self.members

    def _check(self, other: "EventSet") -> None:
        if other.space != self.space:
            raise PreconditionError("events live on different spaces")

    def __and__(self, other: "EventSet") -> "EventSet":
        self._check(other)
        return EventSet(self.space, self.members & other.members)

    def __or__(self, other: "EventSet") -> "EventSet":
        self._check(other)
        return EventSet(self.space, self.members | other.members)

    def __sub__(self, other: "EventSet") -> "EventSet":
        self._check(other)
        return EventSet(self.space, self.members - other.members)

    def complement(self) -> "EventSet":
        return EventSet(self.space, frozenset(self.space.atom_ids) - self.members)

    def __le__(self, other: "EventSet") -> bool:
        self._check(other)
        return self.members <= other.members

    def __contains__(self, atom: str) -> bool:
        return atom in self.members

    def __iter__(self):
        return iter(self.ordered())

    def __len__(self) -> int:
        return len(self.members)

    def __repr__(self) -> str:
        return "EventSet({" + ", ".join(self.ordered()) + "})"


class L0Real:
    """A random variable class: one real value per atom.

    Arithmetic is atomwise.  Instances are immutable; the value array is
    read-only.
    """

    __slots__ = ("space", "values")

    def __init__(self, space: FiniteProbSpace, values):
        arr = np.array(values, dtype=float).reshape(-1)
        if arr.shape != (len(space),):
            raise SchemaError(f"expected {len(space)} values, got {arr.size}")
        arr.flags.writeable = False
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("L0Real is immutable")

    @classmethod
    def constant(cls, space: FiniteProbSpace, c: float) -> "L0Real":
        return cls(space, np.full(len(space), float(c)))

    @classmethod
    def from_mapping(cls, space: FiniteProbSpace, values: Mapping[str, float]) -> "L0Real":
        missing = [a for a in space.atom_ids if a not in values]
        extra = [a for a in values if a not in space._index]
        if missing or extra:
            raise SchemaError(f"value map mismatch: missing {missing}, unknown {extra}")
        out = []
        for a in space.atom_ids:
            v = values[a]
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise SchemaError(f"value at atom {a!r} is not a number")
            out.append(float(v))
        return cls(space, out)

    @classmethod
    def from_json(cls, space: FiniteProbSpace, doc: Mapping) -> "L0Real":
        if not isinstance(doc, Mapping) or not isinstance(doc.get("values"), Mapping):
            raise SchemaError('L0 document must be an object with a "values" map')
        return cls.from_mapping(space, doc["values"])

    def to_json(self) -> dict:
        return {"values": {a: float(v) for a, v in zip(self.space.atom_ids, self.values)}}

    def __getitem__(self, atom: str) -> float:
        return float(self.values[self.space.index(atom)])

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, L0Real):
            if other.space != self.space:
                raise PreconditionError("random variables live on different spaces")
            return other.values
        return np.asarray(float(other))

    def __add__(self, other):
        return L0Real(self.space, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return L0Real(self.space, self.values - self._coerce(other))

    def __rsub__(self, other):
        return L0Real(self.space, self._coerce(other) - self.values)

    def __mul__(self, other):
        return L0Real(self.space, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return L0Real(self.space, self.values / self._coerce(other))

    def __neg__(self):
        return L0Real(self.space, -self.values)

    def __abs__(self):
        return L0Real(self.space, np.abs(self.values))

    def __eq__(self, other):
        if not isinstance(other, L0Real):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.space, self.values.tobytes()))

    def allclose(self, other: "L0Real", atol: float) -> bool:
        return bool(np.all(np.abs(self.values - self._coerce(other)) <= atol))

    def leq(self, other) -> bool:
        """Lattice order: ``self <= other`` at every atom."""
        return bool(np.all(self.values <= self._coerce(other)))

    def __repr__(self) -> str:
        body = ", ".join(f"{a}: {v:.6g}" for a, v in zip(self.space.atom_ids, self.values))
        return f"L0Real({{{body}}})"


def indicator(event: EventSet) -> L0Real:
    return L0Real(event.space, event.mask.astype(float))


def lattice_extrema(family: Sequence[L0Real], mode: str = "sup") -> L0Real:
    """Pointwise sup or inf of a nonempty finite family."""
    if not family:
        raise PreconditionError("lattice_extrema needs a nonempty family")
    space = family[0].space
    if any(f.space != space for f in family):
        raise PreconditionError("family members live on different spaces")
    stack = np.stack([f.values for f in family])
    if mode == "sup":
        return L0Real(space, stack.max(axis=0))
    if mode == "inf":
        return L0Real(space, stack.min(axis=0))
    raise PreconditionError(f"mode must be 'sup' or 'inf', got {mode!r}")


def strata_pos(xi: L0Real) -> EventSet:
    """The event ``[xi > 0]``; exact comparison."""
    return EventSet(xi.space, frozenset(a for a, v in zip(xi.space.atom_ids, xi.values) if v > 0))


def kyfan_distance(xi: L0Real, eta: L0Real) -> float:
    """E[min(|xi - eta|, 1)], a metric for convergence in probability."""
    if xi.space != eta.space:
        raise PreconditionError("random variables live on different spaces")
    gap = np.minimum(np.abs(xi.values - eta.values), 1.0)
    return float(np.dot(xi.space.weight_array, gap))


def leq_on(xi: L0Real, eta: L0Real, event: EventSet) -> bool:
    if xi.space != eta.space or event.space != xi.space:
        raise PreconditionError("arguments live on different spaces")
    m = event.mask
    return bool(np.all(xi.values[m] <= eta.values[m]))
