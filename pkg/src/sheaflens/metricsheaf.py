"""Sheaves of pseudometric spaces on finite spaces and consistency measures."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    CommutativityViolation,
    PartialAssignment,
    SheafMismatch,
    StalkShapeMismatch,
)
from .finspace import FiniteSpace
from .stalks import (
    CollapseMap,
    Euclidean,
    FiniteTable,
    MatrixMap,
    OnePoint,
    TableMap,
    compose,
    identity_map,
    map_deviation,
)

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class RestrictionMap:
    source: int  # larger open
    target: int  # smaller open
    body: object
    lipschitz: float


class MetricSheaf:
    """Stalks on every open plus restriction maps on Hasse edges.

    Restrictions for every inclusion are composed at construction and the
    composite along any two Hasse paths must agree within ``tol`` (exactly for
    table stalks). Use :func:`build_sheaf` rather than the constructor.
    """

    def __init__(self, space: FiniteSpace, stalks: Mapping[int, object], generators: Mapping, tol: float = DEFAULT_TOL):
        self.space = space
        self.tol = float(tol)
        n = len(space)
        st = dict(stalks)
        st.setdefault(space.empty_id, OnePoint())
        missing = [u for u in range(n) if u not in st]
        if missing:
            raise StalkShapeMismatch(f"no stalk given for opens {missing}")
        if not isinstance(st[space.empty_id], OnePoint):
            raise StalkShapeMismatch("the stalk over the empty set must be the one point space")
        self.stalks = tuple(st[u] for u in range(n))

        gens = {}
        for (u, v) in space.hasse:
            body = generators.get((u, v))
            if body is None:
                if u == space.empty_id or isinstance(self.stalks[u], OnePoint):
                    body = CollapseMap()
                else:
                    raise StalkShapeMismatch(f"no restriction given for Hasse edge {v}>{u}")
            body.check(self.stalks[v], self.stalks[u])
            gens[(u, v)] = body
        extra = set(generators) - set(gens)
        if extra:
            raise StalkShapeMismatch(f"restrictions given on non-Hasse pairs {sorted(extra)}")
        self.generators = gens
        self._compose_all()
        self._lipschitz: dict = {}

    def _compose_all(self) -> None:
        space = self.space
        maps: dict = {}
        for v in space.size_order:
            maps[(v, v)] = identity_map(self.stalks[v])
            for u in space.subsets[v]:
                if u == v:
                    continue
                best = None
                via = None
                for w in space.hasse_down[v]:
                    if not space.contains(u, w):
                        continue
                    cand = compose(maps[(u, w)], self.generators[(w, v)])
                    if best is None:
                        best, via = cand, w
                        continue
                    dev = map_deviation(best, cand)
                    exact = isinstance(cand, TableMap)
                    if (exact and dev > 0) or dev > self.tol:
                        raise CommutativityViolation(
                            f"restriction {v}>{u} depends on the path: via {via} and via {w} "
                            f"differ by {dev:.3g}",
                            paths=((v, via, u), (v, w, u)),
                            deviation=dev,
                        )
                maps[(u, v)] = best
        self.maps = maps

    def restriction(self, smaller: int, larger: int):
        return self.maps[(smaller, larger)]

    def lipschitz(self, smaller: int, larger: int) -> float:
        key = (smaller, larger)
        if key not in self._lipschitz:
            self._lipschitz[key] = float(
                self.maps[key].lipschitz(self.stalks[larger], self.stalks[smaller])
            )
        return self._lipschitz[key]

    def restriction_map(self, smaller: int, larger: int) -> RestrictionMap:
        return RestrictionMap(larger, smaller, self.maps[(smaller, larger)], self.lipschitz(smaller, larger))

    def restrict(self, value, smaller: int, larger: int):
        return self.maps[(smaller, larger)].apply(value)

    def distance(self, open_id: int, x, y) -> float:
        return self.stalks[open_id].distance(x, y)

    def __repr__(self) -> str:
        return f"MetricSheaf({self.space!r})"


def build_sheaf(space: FiniteSpace, stalks: Mapping[int, object], generator_maps: Mapping, tol: float = DEFAULT_TOL) -> MetricSheaf:
    """Validate stalks and Hasse-edge restrictions and compose them.

    ``generator_maps`` is keyed by ``(smaller, larger)`` open ids; each value
    is a map body (``MatrixMap``, ``TableMap`` or ``CollapseMap``), a nested
    list read as a matrix, or a tuple read as a lookup table.
    """
    gens = {}
    for key, body in generator_maps.items():
        if isinstance(body, (MatrixMap, TableMap, CollapseMap)):
            gens[tuple(key)] = body
        elif isinstance(body, tuple):
            gens[tuple(key)] = TableMap(body)
        else:
            gens[tuple(key)] = MatrixMap(body)
    return MetricSheaf(space, stalks, gens, tol)


def constant_sheaf(space: FiniteSpace, dim: int, metric: str = "linf") -> MetricSheaf:
    stalk = Euclidean(dim, metric)
    stalks = {u: stalk for u in range(len(space)) if u != space.empty_id}
    gens = {(u, v): MatrixMap(np.eye(dim)) for (u, v) in space.hasse if u != space.empty_id}
    return MetricSheaf(space, stalks, gens)


# -- assignments --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Assignment:
    """One stalk value per open; ``support`` marks user-specified opens."""

    sheaf: MetricSheaf
    values: Mapping[int, object]
    support: frozenset = field(default=None)

    def __init__(self, sheaf: MetricSheaf, values: Mapping[int, object], support: Iterable[int] | None = None):
        vals = {}
        for u, x in values.items():
            u = int(u)
            if not 0 <= u < len(sheaf.space):
                raise StalkShapeMismatch(f"no open with id {u}")
            vals[u] = sheaf.stalks[u].element(x)
        vals[sheaf.space.empty_id] = None
        object.__setattr__(self, "sheaf", sheaf)
        object.__setattr__(self, "values", vals)
        if support is None:
            support = (u for u in vals if u != sheaf.space.empty_id)
        object.__setattr__(self, "support", frozenset(int(u) for u in support))

    def __getitem__(self, open_id: int):
        return self.values[open_id]

    def missing(self, opens: Iterable[int] | None = None) -> list[int]:
        opens = range(len(self.sheaf.space)) if opens is None else opens
        return [u for u in opens if u not in self.values]

    @property
    def is_total(self) -> bool:
        return not self.missing()

    def require_total(self, opens: Iterable[int] | None = None) -> None:
        gap = self.missing(opens)
        if gap:
            raise PartialAssignment(gap)

    def with_values(self, updates: Mapping[int, object], support: Iterable[int] | None = None) -> "Assignment":
        vals = dict(self.values)
        vals.update(updates)
        return Assignment(self.sheaf, vals, self.support if support is None else support)

    def restricted_to(self, opens: Iterable[int]) -> "Assignment":
        """Forget values outside ``opens``; the kept opens become the support."""
        keep = set(opens)
        return Assignment(self.sheaf, {u: x for u, x in self.values.items() if u in keep}, keep)


def _check(sheaf: MetricSheaf, a: Assignment) -> None:
    if a.sheaf is not sheaf:
        raise SheafMismatch("assignment belongs to a different sheaf")


def _pair(sheaf: MetricSheaf, a: Assignment, u: int, v: int) -> float:
    if u == v or u == sheaf.space.empty_id:
        return 0.0
    return sheaf.stalks[u].distance(sheaf.maps[(u, v)].apply(a.values[v]), a.values[u])


def critical_thresholds(sheaf: MetricSheaf, a: Assignment) -> list[tuple[int, int, float]]:
    """``(U, V, d_U(S(U<V) a(V), a(U)))`` for every proper inclusion with U nonempty."""
    _check(sheaf, a)
    a.require_total()
    space = sheaf.space
    return [
        (u, v, _pair(sheaf, a, u, v))
        for (u, v) in space.inclusions
        if u != v and u != space.empty_id
    ]


def consistency_radius(sheaf: MetricSheaf, a: Assignment) -> float:
    return max((t for _, _, t in critical_thresholds(sheaf, a)), default=0.0)


def consistency_radius_l2(sheaf: MetricSheaf, a: Assignment) -> float:
    return math.sqrt(sum(t * t for _, _, t in critical_thresholds(sheaf, a)))


def consistency_diameter(sheaf: MetricSheaf, a: Assignment) -> float:
    """Largest disagreement between two values restricted to a common open."""
    _check(sheaf, a)
    a.require_total()
    space = sheaf.space
    best = 0.0
    supersets: dict[int, list[int]] = {u: [] for u in range(len(space))}
    for (u, v) in space.inclusions:
        supersets[u].append(v)
    for u, over in supersets.items():
        if u == space.empty_id:
            continue
        stalk = sheaf.stalks[u]
        pushed = [sheaf.maps[(u, v)].apply(a.values[v]) for v in over]
        for i in range(len(pushed)):
            for j in range(i + 1, len(pushed)):
                best = max(best, stalk.distance(pushed[i], pushed[j]))
    return best


def local_consistency_radius(sheaf: MetricSheaf, a: Assignment, open_id: int) -> float:
    """Max critical threshold over inclusions V1 <= V2 inside the given open."""
    _check(sheaf, a)
    inside = sheaf.space.subsets[open_id]
    a.require_total(inside)
    best = 0.0
    for v2 in inside:
        for v1 in sheaf.space.subsets[v2]:
            best = max(best, _pair(sheaf, a, v1, v2))
    return best


def local_consistency_radii(sheaf: MetricSheaf, a: Assignment) -> list[float]:
    """Local consistency radius of every open, indexed by open id.

    Each open's value is the max of its own incoming thresholds and the
    values of its Hasse children, since every proper inclusion inside an
    open lies inside one of its maximal proper sub-opens.
    """
    _check(sheaf, a)
    a.require_total()
    space = sheaf.space
    local = [0.0] * len(space)
    for v in space.size_order:
        best = max((local[w] for w in space.hasse_down[v]), default=0.0)
        for u in space.subsets[v]:
            best = max(best, _pair(sheaf, a, u, v))
        local[v] = best
    return local


def star_consistency_radius(sheaf: MetricSheaf, a: Assignment, open_id: int) -> float:
    """Star-to-star lower bound for the local consistency radius.

    Only the values on stars of points of the open are read.
    """
    _check(sheaf, a)
    space = sheaf.space
    members = space.masks[open_id]
    pts = [i for i in range(len(space.points)) if members >> i & 1]
    star_id = {i: space.id_of(space.star_mask(1 << i)) for i in pts}
    a.require_total(set(star_id.values()))

    def pushed(z, y):
        return sheaf.maps[(star_id[z], star_id[y])].apply(a.values[star_id[y]])

    best = 0.0
    for y in pts:
        sy = space.masks[star_id[y]]
        for x in pts:
            if sy >> x & 1:
                best = max(best, _pair(sheaf, a, star_id[x], star_id[y]))
    for i, y in enumerate(pts):
        for x in pts[i + 1:]:
            common = space.masks[star_id[x]] & space.masks[star_id[y]]
            for z in pts:
                if common >> z & 1:
                    d = sheaf.stalks[star_id[z]].distance(pushed(z, y), pushed(z, x))
                    best = max(best, 0.5 * d)
    return best


def assignment_distance(a: Assignment, b: Assignment) -> float:
    if a.sheaf is not b.sheaf:
        raise SheafMismatch("assignments belong to different sheaves")
    a.require_total()
    b.require_total()
    sheaf = a.sheaf
    return max(
        (sheaf.stalks[u].distance(a.values[u], b.values[u]) for u in range(len(sheaf.space))),
        default=0.0,
    )


def is_global_section(sheaf: MetricSheaf, a: Assignment, tol: float = DEFAULT_TOL) -> bool:
    return all(t <= tol for _, _, t in critical_thresholds(sheaf, a))


def sheaf_lipschitz(sheaf: MetricSheaf) -> float:
    """Largest Lipschitz constant over composed proper restrictions."""
    space = sheaf.space
    return max(
        (
            sheaf.lipschitz(u, v)
            for (u, v) in space.inclusions
            if u != v and u != space.empty_id
        ),
        default=0.0,
    )


def section_from_top(sheaf: MetricSheaf, top_value) -> Assignment:
    """The global section obtained by restricting one value on the whole space."""
    whole = sheaf.space.whole_id
    x = sheaf.stalks[whole].element(top_value)
    values = {u: sheaf.maps[(u, whole)].apply(x) for u in range(len(sheaf.space))}
    return Assignment(sheaf, values)


__all__ = [
    "Assignment",
    "Euclidean",
    "FiniteTable",
    "MetricSheaf",
    "OnePoint",
    "RestrictionMap",
    "assignment_distance",
    "build_sheaf",
    "consistency_diameter",
    "consistency_radius",
    "consistency_radius_l2",
    "constant_sheaf",
    "critical_thresholds",
    "is_global_section",
    "local_consistency_radii",
    "local_consistency_radius",
    "section_from_top",
    "sheaf_lipschitz",
    "star_consistency_radius",
]
