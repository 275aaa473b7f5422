"""Finite topological spaces with explicit open sets.

Opens are stored as integer bitmasks over the point list; the open ids are
dense and stable (their position in the deduplicated open list).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Hashable, Iterable, Mapping, Sequence

from .errors import (
    CapExceeded,
    MissingEmptyOrWhole,
    NotClosedUnderIntersection,
    NotClosedUnderUnion,
    SpaceMismatch,
    TopologyError,
)


def _popcount(mask: int) -> int:
    return bin(mask).count("1")


@dataclass(frozen=True)
class OpenSet:
    id: int
    members: frozenset


class FiniteSpace:
    """A finite set of labelled points and a finite topology on it.

    Parameters
    ----------
    points : sequence of str
        Point labels; their order fixes the bit position of each point.
    open_masks : sequence of int
        Bitmasks of the open sets. Duplicates are dropped, keeping the first.
    validate : bool
        Check the topology axioms. Constructors that generate closed families
        by design skip this.
    """

    def __init__(self, points: Sequence[str], open_masks: Sequence[int], validate: bool = True):
        self.points = tuple(str(p) for p in points)
        if len(set(self.points)) != len(self.points):
            raise TopologyError("duplicate point labels")
        self.index = {p: i for i, p in enumerate(self.points)}
        self.full_mask = (1 << len(self.points)) - 1

        masks: list[int] = []
        seen: dict[int, int] = {}
        for m in open_masks:
            if m & ~self.full_mask:
                raise TopologyError("open set mentions a point outside the space")
            if m not in seen:
                seen[m] = len(masks)
                masks.append(m)
        self.masks = tuple(masks)
        self._id = seen

        if 0 not in seen or self.full_mask not in seen:
            raise MissingEmptyOrWhole("the empty set and the whole space must both be open")
        if validate:
            self._check_closure()

        self.empty_id = seen[0]
        self.whole_id = seen[self.full_mask]
        self._build_order()

    # -- construction helpers -------------------------------------------------

    def _check_closure(self) -> None:
        for a, b in combinations(self.masks, 2):
            if (a | b) not in self._id:
                raise NotClosedUnderUnion(self.labels(a), self.labels(b))
            if (a & b) not in self._id:
                raise NotClosedUnderIntersection(self.labels(a), self.labels(b))

    def _build_order(self) -> None:
        n = len(self.masks)
        order = sorted(range(n), key=lambda i: (_popcount(self.masks[i]), self.masks[i]))
        self.size_order = tuple(order)
        # subsets[v] lists every open contained in v (v included), smallest first
        rank = {u: k for k, u in enumerate(order)}
        subsets: list[tuple[int, ...]] = []
        for v in range(n):
            mv = self.masks[v]
            if 1 << _popcount(mv) < n:
                # walk the submasks of v; cheaper than scanning every open
                found, sub = [], mv
                while True:
                    if sub in self._id:
                        found.append(self._id[sub])
                    if sub == 0:
                        break
                    sub = (sub - 1) & mv
                subsets.append(tuple(sorted(found, key=rank.__getitem__)))
            else:
                subsets.append(tuple(u for u in order if self.masks[u] & ~mv == 0))
        self.subsets = tuple(subsets)

        down: list[list[int]] = [[] for _ in range(n)]
        up: list[list[int]] = [[] for _ in range(n)]
        for v in range(n):
            # largest first: anything inside a bigger proper subset sits inside an accepted one
            accepted: list[int] = []
            for u in reversed(subsets[v][:-1]):
                mu = self.masks[u]
                if not any(mu & ~a == 0 for a in accepted):
                    accepted.append(mu)
                    down[v].append(u)
                    up[u].append(v)
            down[v].reverse()
        self.hasse_down = tuple(tuple(d) for d in down)
        self.hasse_up = tuple(tuple(u) for u in up)
        self.hasse = tuple((u, v) for v in range(n) for u in self.hasse_down[v])
        self.inclusions = tuple((u, v) for v in order for u in subsets[v])

    # -- lookups --------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.masks)

    def __repr__(self) -> str:
        return f"FiniteSpace(points={len(self.points)}, opens={len(self.masks)})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteSpace):
            return NotImplemented
        return self.points == other.points and set(self.masks) == set(other.masks)

    def __hash__(self) -> int:
        return hash((self.points, frozenset(self.masks)))

    def mask(self, labels: Iterable[Hashable]) -> int:
        m = 0
        for p in labels:
            try:
                m |= 1 << self.index[str(p)]
            except KeyError:
                raise TopologyError(f"unknown point {p!r}") from None
        return m

    def labels(self, mask: int) -> frozenset:
        return frozenset(p for i, p in enumerate(self.points) if mask >> i & 1)

    def id_of(self, members) -> int:
        """Open id for a member set given as labels or as a bitmask."""
        m = members if isinstance(members, int) else self.mask(members)
        try:
            return self._id[m]
        except KeyError:
            raise TopologyError(f"{sorted(self.labels(m))} is not open") from None

    def is_open(self, members) -> bool:
        m = members if isinstance(members, int) else self.mask(members)
        return m in self._id

    def open(self, open_id: int) -> OpenSet:
        return OpenSet(open_id, self.labels(self.masks[open_id]))

    def contains(self, small: int, large: int) -> bool:
        """Whether open ``small`` is a subset of open ``large`` (ids)."""
        return self.masks[small] & ~self.masks[large] == 0

    def star_mask(self, mask: int) -> int:
        result = self.full_mask
        for m in self.masks:
            if mask & ~m == 0:
                result &= m
        return result


def build_explicit_topology(points: Sequence[str], open_list: Iterable[Iterable[str]]) -> FiniteSpace:
    """Validate an explicit list of open sets and build the space."""
    open_list = list(open_list)
    if not open_list:
        raise MissingEmptyOrWhole("open list is empty")
    labels = [str(p) for p in points]
    index = {p: i for i, p in enumerate(labels)}
    masks = []
    for members in open_list:
        m = 0
        for p in members:
            if str(p) not in index:
                raise TopologyError(f"open set mentions unknown point {p!r}")
            m |= 1 << index[str(p)]
        masks.append(m)
    return FiniteSpace(labels, masks)


def _preorder_closure(n: int, pairs: Iterable[tuple[int, int]]) -> list[int]:
    """below[y] = bitmask of all x with x <= y in the reflexive-transitive closure."""
    below = [1 << i for i in range(n)]
    for x, y in pairs:
        below[y] |= 1 << x
    changed = True
    while changed:
        changed = False
        for y in range(n):
            acc = below[y]
            m = acc
            while m:
                low = m & -m
                acc |= below[low.bit_length() - 1]
                m ^= low
            if acc != below[y]:
                below[y] = acc
                changed = True
    return below


def alexandrov_from_preorder(
    points: Sequence[str],
    leq_pairs: Iterable[tuple[str, str]],
    cap: int = 4096,
    orientation: str = "down",
) -> FiniteSpace:
    """Alexandrov topology of a preorder.

    With ``orientation="down"`` a pair ``(x, y)`` means x lies in every open
    containing y, so opens are the down-closed sets and ``star({y})`` is the
    principal down-set of y. ``orientation="up"`` flips the convention.
    Raises :class:`CapExceeded` instead of truncating.
    """
    if orientation not in ("down", "up"):
        raise ValueError("orientation must be 'down' or 'up'")
    labels = [str(p) for p in points]
    index = {p: i for i, p in enumerate(labels)}
    try:
        pairs = [(index[str(x)], index[str(y)]) for x, y in leq_pairs]
    except KeyError as exc:
        raise TopologyError(f"unknown point {exc.args[0]!r}") from None
    if orientation == "up":
        pairs = [(y, x) for x, y in pairs]
    generators = sorted(set(_preorder_closure(len(labels), pairs)))

    opens = {0}
    frontier = [0]
    while frontier:
        fresh = []
        for m in frontier:
            for g in generators:
                u = m | g
                if u not in opens:
                    opens.add(u)
                    if len(opens) > cap:
                        raise CapExceeded(f"Alexandrov topology has more than {cap} opens")
                    fresh.append(u)
        frontier = fresh
    full = (1 << len(labels)) - 1
    opens.add(full)
    ordered = sorted(opens, key=lambda m: (_popcount(m), m))
    return FiniteSpace(labels, ordered, validate=False)


def star(space: FiniteSpace, point_subset: Iterable[str]) -> OpenSet:
    """Smallest open set containing the given points."""
    m = space.star_mask(space.mask(point_subset))
    return space.open(space.id_of(m))


@dataclass(frozen=True)
class PartialCover:
    """A family of open sets of one space, stored as sorted bitmasks.

    ``space`` only needs ``points``; :class:`FiniteSpace` is the usual case,
    but star bases that are never closed under union also qualify.
    """

    space: object
    sets: tuple

    def __init__(self, space, sets: Iterable[int]):
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "sets", tuple(sorted(set(sets), key=lambda m: (_popcount(m), m))))

    def __len__(self) -> int:
        return len(self.sets)

    def __iter__(self):
        return iter(self.sets)

    def labels(self) -> list[frozenset]:
        pts = self.space.points
        return [frozenset(p for i, p in enumerate(pts) if m >> i & 1) for m in self.sets]

    def union(self) -> int:
        acc = 0
        for m in self.sets:
            acc |= m
        return acc

    @classmethod
    def from_labels(cls, space: FiniteSpace, families: Iterable[Iterable[str]]) -> "PartialCover":
        masks = []
        for members in families:
            m = space.mask(members)
            if not space.is_open(m):
                raise TopologyError(f"{sorted(members)} is not open")
            masks.append(m)
        return cls(space, masks)


def same_space(a, b) -> bool:
    return a is b or tuple(a.points) == tuple(b.points)


def refines(cover_v: PartialCover, cover_u: PartialCover) -> bool:
    """True iff every member of ``cover_v`` lies inside some member of ``cover_u``."""
    if not same_space(cover_v.space, cover_u.space):
        raise SpaceMismatch("covers live on different spaces")
    return all(any(v & ~u == 0 for u in cover_u.sets) for v in cover_v.sets)


def preimage_mask(f: Mapping[str, str], domain: FiniteSpace, codomain: FiniteSpace, mask: int) -> int:
    target = codomain.labels(mask)
    return domain.mask(p for p in domain.points if f[p] in target)


def is_continuous(f: Mapping[str, str], domain: FiniteSpace, codomain: FiniteSpace) -> bool:
    """Preimage of every codomain open is a domain open."""
    return all(domain.is_open(preimage_mask(f, domain, codomain, m)) for m in codomain.masks)
