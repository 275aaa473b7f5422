"""Morphisms of sheaves along continuous maps and pushforward of assignments."""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .errors import (
    BaseMapNotContinuous,
    ChainMismatch,
    PartialAssignment,
    SheafMismatch,
    SquareViolation,
    StalkShapeMismatch,
)
from .finspace import is_continuous, preimage_mask
from .metricsheaf import DEFAULT_TOL, Assignment, MetricSheaf
from .stalks import (
    CollapseMap,
    MatrixMap,
    OnePoint,
    TableMap,
    compose,
    identity_map,
    map_deviation,
)


def _as_body(body):
    if isinstance(body, (MatrixMap, TableMap, CollapseMap)):
        return body
    if isinstance(body, tuple):
        return TableMap(body)
    return MatrixMap(body)


class SheafMorphism:
    """Base map ``f: X -> Y`` plus components ``m_U: S(f^-1 U) -> R(U)``.

    ``components`` is keyed by target open id. Use :func:`build_morphism`,
    which checks continuity and every commuting square.
    """

    def __init__(self, source: MetricSheaf, target: MetricSheaf, base_map: Mapping[str, str], components: Mapping[int, object]):
        self.source = source
        self.target = target
        self.base_map = dict(base_map)
        X, Y = source.space, target.space
        self.preimage = {
            u: X.id_of(preimage_mask(self.base_map, X, Y, Y.masks[u])) for u in range(len(Y))
        }
        comps = {}
        for u in range(len(Y)):
            body = components.get(u)
            if body is None:
                if isinstance(target.stalks[u], OnePoint):
                    body = CollapseMap()
                else:
                    raise StalkShapeMismatch(f"no component given for target open {u}")
            body = _as_body(body)
            body.check(source.stalks[self.preimage[u]], target.stalks[u])
            comps[u] = body
        self.components = comps
        self.lipschitz = {
            u: float(body.lipschitz(source.stalks[self.preimage[u]], target.stalks[u]))
            for u, body in comps.items()
        }

    @property
    def K(self) -> float:
        """Largest component Lipschitz constant."""
        return max(self.lipschitz.values(), default=0.0)

    def __repr__(self) -> str:
        return f"SheafMorphism({self.source!r} -> {self.target!r}, K={self.K:.6g})"

    def square_deviation(self, smaller: int, larger: int) -> float:
        """How far ``R(U<V) m_V`` is from ``m_U S(f^-1 U < f^-1 V)``."""
        left = compose(self.target.maps[(smaller, larger)], self.components[larger])
        right = compose(
            self.components[smaller],
            self.source.maps[(self.preimage[smaller], self.preimage[larger])],
        )
        return map_deviation(left, right)


def build_morphism(
    source: MetricSheaf,
    target: MetricSheaf,
    base_map: Mapping[str, str] | None,
    components: Mapping[int, object],
    tol: float = DEFAULT_TOL,
) -> SheafMorphism:
    """Validate continuity and the commuting square for every inclusion.

    ``base_map=None`` means the identity on a shared space.
    """
    X, Y = source.space, target.space
    if base_map is None:
        if X.points != Y.points:
            raise BaseMapNotContinuous("identity base map needs matching point sets")
        base_map = {p: p for p in X.points}
    missing = [p for p in X.points if p not in base_map]
    if missing or any(base_map[p] not in Y.index for p in X.points):
        raise BaseMapNotContinuous(f"base map is not a function into the target points (missing {missing})")
    if not is_continuous(base_map, X, Y):
        raise BaseMapNotContinuous("a target open has a non-open preimage")
    m = SheafMorphism(source, target, base_map, components)
    for (u, v) in Y.inclusions:
        if u == v or u == Y.empty_id:
            continue
        dev = m.square_deviation(u, v)
        exact = isinstance(m.components[u], TableMap)
        if (exact and dev > 0) or dev > tol:
            raise SquareViolation(u, v, dev)
    return m


def identity_morphism(sheaf: MetricSheaf) -> SheafMorphism:
    comps = {u: identity_map(sheaf.stalks[u]) for u in range(len(sheaf.space))}
    return build_morphism(sheaf, sheaf, None, comps)


def pushforward_assignment(m: SheafMorphism, a: Assignment) -> Assignment:
    """``b(V) = m_V(a(f^-1 V))`` on every target open."""
    if a.sheaf is not m.source:
        raise SheafMismatch("assignment is not on the morphism's source")
    needed = set(m.preimage.values())
    gap = a.missing(sorted(needed))
    if gap:
        raise PartialAssignment(gap)
    values = {u: body.apply(a.values[m.preimage[u]]) for u, body in m.components.items()}
    return Assignment(m.target, values)


def validate_shva(m: SheafMorphism, a: Assignment, b: Assignment, tol: float = DEFAULT_TOL) -> bool:
    """Whether ``b`` is the pushforward of ``a`` up to ``tol`` on every open."""
    if b.sheaf is not m.target or a.sheaf is not m.source:
        return False
    try:
        pushed = pushforward_assignment(m, a)
    except PartialAssignment:
        return False
    stalks = m.target.stalks
    for u in range(len(m.target.space)):
        if u not in b.values:
            return False
        if stalks[u].distance(pushed.values[u], b.values[u]) > tol:
            return False
    return True


def compose_morphisms(n: SheafMorphism, m: SheafMorphism, tol: float = DEFAULT_TOL) -> SheafMorphism:
    """``n`` after ``m``: base maps compose and ``(n m)_U = n_U m_{g^-1 U}``."""
    if m.target is not n.source:
        raise ChainMismatch("the first morphism does not land on the second's source")
    f, g = m.base_map, n.base_map
    base = {p: g[f[p]] for p in m.source.space.points}
    comps = {}
    for u, body in n.components.items():
        inner = m.components[n.preimage[u]]
        comps[u] = compose(body, inner)
    return build_morphism(m.source, n.target, base, comps, tol)


def scaled_morphism(sheaf: MetricSheaf, factor: float) -> SheafMorphism:
    """Endomorphism over the identity with every Euclidean component ``factor * I``."""
    comps = {}
    for u, stalk in enumerate(sheaf.stalks):
        body = identity_map(stalk)
        if isinstance(body, MatrixMap):
            body = MatrixMap(factor * np.eye(body.matrix.shape[0]))
        comps[u] = body
    return build_morphism(sheaf, sheaf, None, comps)
