"""Cech cohomology of partial covers and its persistence.

The nerve of a cover has one vertex per member (in the cover's fixed order)
and one k-simplex per (k+1)-subset with nonempty common intersection.
Cochains are simplicial cochains on the nerve, so alternating cochains are
handled by sorting vertex tuples and tracking the permutation sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import InfiniteMismatch, InvalidTau, NonComposable, NotARefinement
from .finspace import PartialCover, refines
from .linalg import column_basis, extend_basis, get_field, nullspace, rank, solve


# -- nerve ----------------------------------------------------------------------


@dataclass
class Nerve:
    """Nerve of a cover; ``simplices[k]`` holds sorted vertex tuples."""

    cover: PartialCover
    simplices: list
    index: list = dc_field(repr=False)

    @property
    def dimension(self) -> int:
        return len(self.simplices) - 1

    def count(self, k: int) -> int:
        return len(self.simplices[k]) if 0 <= k < len(self.simplices) else 0


def nerve(cover: PartialCover, max_dim: int | None = None) -> Nerve:
    members = list(cover.sets)
    n = len(members)
    top = n - 1 if max_dim is None else min(max_dim, n - 1)
    simplices: list[list[tuple]] = []
    if n:
        level = [((i,), members[i]) for i in range(n) if members[i]]
        simplices.append([s for s, _ in level])
        for _ in range(top):
            nxt = []
            for s, meet in level:
                for j in range(s[-1] + 1, n):
                    m = meet & members[j]
                    if m:
                        nxt.append((s + (j,), m))
            if not nxt:
                break
            simplices.append([s for s, _ in nxt])
            level = nxt
    index = [{s: i for i, s in enumerate(level_s)} for level_s in simplices]
    return Nerve(cover, simplices, index)


def coboundary(nv: Nerve, k: int, field) -> np.ndarray:
    """Matrix of the coboundary from k-cochains to (k+1)-cochains."""
    field = get_field(field)
    rows, cols = nv.count(k + 1), nv.count(k)
    d = field.zeros((rows, cols))
    if rows == 0 or cols == 0:
        return d
    idx = nv.index[k]
    for r, s in enumerate(nv.simplices[k + 1]):
        for i in range(len(s)):
            face = s[:i] + s[i + 1:]
            d[r, idx[face]] = field.sign(-1 if i % 2 else 1)
    return d


# -- cohomology -----------------------------------------------------------------


@dataclass
class CohomologyResult:
    """Cohomology ranks plus chosen cocycle representatives per degree.

    ``representatives[k]`` has one column per basis class of degree k.
    """

    field: object
    ranks: tuple
    representatives: list
    nerve: Nerve = dc_field(repr=False)
    _boundaries: list = dc_field(repr=False, default_factory=list)

    def coordinates(self, k: int, cocycles: np.ndarray) -> np.ndarray:
        """Coordinates of cocycle columns in the chosen basis of degree k."""
        basis = np.concatenate([self._boundaries[k], self.representatives[k]], axis=1)
        x = solve(basis, cocycles, self.field)
        return x[self._boundaries[k].shape[1]:, :]


def cech_cohomology(cover: PartialCover, field="f2", degree_cap: int | None = None) -> CohomologyResult:
    """Cech cohomology of the cover through degree ``degree_cap``.

    With ``degree_cap=None`` every degree up to the nerve dimension is computed.
    """
    fld = get_field(field)
    nv = nerve(cover, None if degree_cap is None else degree_cap + 1)
    top = max(nv.dimension, 0) if degree_cap is None else degree_cap
    ranks, reps, bounds = [], [], []
    prev = None  # coboundary into degree k
    for k in range(top + 1):
        nk = nv.count(k)
        if nk == 0:
            ranks.append(0)
            reps.append(fld.zeros((0, 0)))
            bounds.append(fld.zeros((0, 0)))
            prev = None
            continue
        delta = coboundary(nv, k, fld)
        cycles = nullspace(delta, fld) if delta.shape[0] else fld.eye(nk)
        if prev is None or prev.shape[1] == 0:
            bnd = fld.zeros((nk, 0))
        else:
            bnd = column_basis(prev, fld)
        h = extend_basis(bnd, cycles, fld)
        ranks.append(h.shape[1])
        reps.append(h)
        bounds.append(bnd)
        prev = delta
    return CohomologyResult(fld, tuple(ranks), reps, nv, bounds)


def _sort_sign(t: Sequence[int]) -> tuple[tuple, int]:
    arr = list(t)
    sign = 1
    for i in range(len(arr)):
        for j in range(len(arr) - 1 - i):
            if arr[j] > arr[j + 1]:
                arr[j], arr[j + 1] = arr[j + 1], arr[j]
                sign = -sign
    return tuple(arr), sign


def default_tau(fine: PartialCover, coarse: PartialCover) -> list[int]:
    """Lexicographically least refinement function as coarse member indices."""
    tau = []
    for v in fine.sets:
        for j, u in enumerate(coarse.sets):
            if v & ~u == 0:
                tau.append(j)
                break
        else:
            raise NotARefinement(f"member {sorted(fine.labels()[len(tau)])} lies in no coarse member")
    return tau


def _check_tau(fine: PartialCover, coarse: PartialCover, tau: Sequence[int]) -> list[int]:
    tau = [int(t) for t in tau]
    if len(tau) != len(fine.sets):
        raise InvalidTau(f"expected {len(fine.sets)} entries, got {len(tau)}")
    for i, (v, t) in enumerate(zip(fine.sets, tau)):
        if not 0 <= t < len(coarse.sets) or v & ~coarse.sets[t]:
            raise InvalidTau(sorted(fine.labels()[i]))
    return tau


def cochain_map(fine_nerve: Nerve, coarse_nerve: Nerve, tau: Sequence[int], k: int, field) -> np.ndarray:
    """Pullback of k-cochains along ``tau``; shape (fine k-simplices, coarse k-simplices)."""
    fld = get_field(field)
    rows, cols = fine_nerve.count(k), coarse_nerve.count(k)
    t = fld.zeros((rows, cols))
    if rows == 0 or cols == 0:
        return t
    idx = coarse_nerve.index[k]
    for r, s in enumerate(fine_nerve.simplices[k]):
        image = [tau[v] for v in s]
        if len(set(image)) < len(image):
            continue
        key, sign = _sort_sign(image)
        t[r, idx[key]] = fld.sign(sign)
    return t


def induced_maps(fine: CohomologyResult, coarse: CohomologyResult, tau: Sequence[int] | None = None) -> list[np.ndarray]:
    """Cohomology maps H(coarse) -> H(fine), one matrix per computed degree."""
    fc, cc = fine.nerve.cover, coarse.nerve.cover
    if not refines(fc, cc):
        raise NotARefinement("first cover does not refine the second")
    tau = default_tau(fc, cc) if tau is None else _check_tau(fc, cc, tau)
    fld = fine.field
    out = []
    for k in range(min(len(fine.ranks), len(coarse.ranks))):
        hf, hc = fine.ranks[k], coarse.ranks[k]
        if hf == 0 or hc == 0:
            out.append(fld.zeros((hf, hc)))
            continue
        t = cochain_map(fine.nerve, coarse.nerve, tau, k, fld)
        pulled = fld.matmul(t, coarse.representatives[k])
        out.append(fine.coordinates(k, pulled))
    return out


def refinement_map(fine_cover: PartialCover, coarse_cover: PartialCover, tau: Sequence[int] | None = None,
                   field="f2", degree_cap: int | None = None) -> list[np.ndarray]:
    """Per-degree matrices of the map H(coarse) -> H(fine) induced by refinement."""
    if not refines(fine_cover, coarse_cover):
        raise NotARefinement("first cover does not refine the second")
    if degree_cap is None:
        degree_cap = max(len(fine_cover), len(coarse_cover), 1) - 1
    fine = cech_cohomology(fine_cover, field, degree_cap)
    coarse = cech_cohomology(coarse_cover, field, degree_cap)
    return induced_maps(fine, coarse, tau)


# -- persistence ----------------------------------------------------------------


@dataclass
class PersistenceModule:
    """Cohomology along a coarsening filtration.

    Space ``i`` lives on the threshold interval ``(edges[i], edges[i+1]]``.
    ``maps[k][i]`` is the degree-k map from space ``i+1`` to space ``i``
    (contravariant: larger threshold to smaller).
    """

    field: object
    edges: tuple
    dims: list
    maps: list

    @property
    def length(self) -> int:
        return len(self.edges) - 1

    def check(self) -> None:
        for k, (dims, maps) in enumerate(zip(self.dims, self.maps)):
            if len(dims) != self.length or len(maps) != max(self.length - 1, 0):
                raise NonComposable(f"degree {k}: wrong number of spaces or maps")
            for i, m in enumerate(maps):
                if m.shape != (dims[i], dims[i + 1]):
                    raise NonComposable(
                        f"degree {k}: map {i + 1}->{i} has shape {m.shape}, "
                        f"expected {(dims[i], dims[i + 1])}"
                    )


def persistence_module_from_filtration(filtration, field="f2", degree_cap: int = 1) -> PersistenceModule:
    fld = get_field(field)
    results = [cech_cohomology(c, fld, degree_cap) for c in filtration.covers]
    dims = [[r.ranks[k] for r in results] for k in range(degree_cap + 1)]
    maps: list[list] = [[] for _ in range(degree_cap + 1)]
    for i in range(len(results) - 1):
        step = induced_maps(results[i], results[i + 1])
        for k in range(degree_cap + 1):
            maps[k].append(step[k])
    edges = (0.0,) + tuple(filtration.breakpoints) + (math.inf,)
    return PersistenceModule(fld, edges, dims, maps)


def interval_multiplicities(dims: Sequence[int], maps: Sequence[np.ndarray], field="f2",
                            direction: str = "down") -> dict[tuple[int, int], int]:
    """Interval decomposition of a finite persistence module by rank inclusion-exclusion.

    ``maps[i]`` joins spaces ``i`` and ``i+1``; ``direction="down"`` means it maps
    space i+1 to space i, ``"up"`` the reverse. Returns ``{(i, j): multiplicity}``
    for the closed index interval ``[i, j]``.
    """
    fld = get_field(field)
    n = len(dims)
    if len(maps) != max(n - 1, 0):
        raise NonComposable("need exactly one map between consecutive spaces")
    down = []
    for i, m in enumerate(maps):
        m = np.asarray(m) if fld.name == "f2" else m
        if direction == "up":
            m = m.T
        if m.shape != (dims[i], dims[i + 1]):
            raise NonComposable(f"map between {i} and {i + 1} has shape {m.shape}")
        down.append(m)

    r = {}
    for j in range(n):
        comp = fld.eye(dims[j])
        r[(j, j)] = dims[j]
        for i in range(j - 1, -1, -1):
            comp = fld.matmul(down[i], comp)
            r[(i, j)] = rank(comp, fld)

    def rk(i, j):
        if i < 0 or j >= n:
            return 0
        return r[(i, j)]

    out = {}
    for i in range(n):
        for j in range(i, n):
            m = rk(i, j) - rk(i - 1, j) - rk(i, j + 1) + rk(i - 1, j + 1)
            if m:
                out[(i, j)] = m
    return out


@dataclass
class PersistenceDiagram:
    """``bars[k]`` is a sorted list of ``(birth, death)`` pairs, repeated by multiplicity."""

    bars: dict

    def degree(self, k: int) -> list:
        return self.bars.get(k, [])

    def to_records(self, exact: bool = False) -> list[dict]:
        records = []
        for k in sorted(self.bars):
            counts: dict = {}
            for bar in self.bars[k]:
                counts[bar] = counts.get(bar, 0) + 1
            for (b, d), m in sorted(counts.items()):
                records.append({
                    "degree": k,
                    "birth": _num(b, exact),
                    "death": "inf" if math.isinf(d) else _num(d, exact),
                    "multiplicity": m,
                })
        return records

    @classmethod
    def from_records(cls, records: Iterable[Mapping]) -> "PersistenceDiagram":
        bars: dict = {}
        for rec in records:
            b = _parse_num(rec["birth"])
            d = math.inf if rec["death"] in ("inf", "Infinity", None) else _parse_num(rec["death"])
            bars.setdefault(int(rec["degree"]), []).extend([(b, d)] * int(rec.get("multiplicity", 1)))
        return cls({k: sorted(v) for k, v in bars.items()})


def _num(x: float, exact: bool):
    if exact:
        f = Fraction(x)
        return [f.numerator, f.denominator]
    return float(f"{x:.12g}")


def _parse_num(x) -> float:
    if isinstance(x, (list, tuple)):
        return float(Fraction(int(x[0]), int(x[1])))
    return float(x)


def barcode(module: PersistenceModule) -> PersistenceDiagram:
    """Interval decomposition reported in threshold coordinates.

    A class supported on spaces ``i..j`` becomes the bar
    ``(edges[i], edges[j+1])``: it is present for thresholds just above the
    birth and up to the death (``inf`` for the last space).
    """
    module.check()
    bars = {}
    for k, (dims, maps) in enumerate(zip(module.dims, module.maps)):
        found = []
        for (i, j), m in interval_multiplicities(dims, maps, module.field, "down").items():
            found.extend([(module.edges[i], module.edges[j + 1])] * m)
        bars[k] = sorted(found)
    return PersistenceDiagram(bars)


# -- bottleneck -----------------------------------------------------------------


def _perfect_matching(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    if n == 0:
        return True
    match = maximum_bipartite_matching(csr_matrix(adj.astype(np.int8)), perm_type="column")
    return bool(np.all(match >= 0))


def bottleneck(d1: Sequence[tuple[float, float]], d2: Sequence[tuple[float, float]], strict: bool = False) -> float:
    """Exact bottleneck distance between two single-degree diagrams.

    Points match under the sup-norm or go to the diagonal at half their
    persistence. Infinite bars only match infinite bars (by birth); unequal
    counts give ``inf``, or raise :class:`InfiniteMismatch` when ``strict``.
    """
    fin1 = [(float(b), float(d)) for b, d in d1 if not math.isinf(d)]
    fin2 = [(float(b), float(d)) for b, d in d2 if not math.isinf(d)]
    inf1 = sorted(float(b) for b, d in d1 if math.isinf(d))
    inf2 = sorted(float(b) for b, d in d2 if math.isinf(d))
    if len(inf1) != len(inf2):
        if strict:
            raise InfiniteMismatch(f"{len(inf1)} infinite bars against {len(inf2)}")
        return math.inf
    inf_cost = max((abs(a - b) for a, b in zip(inf1, inf2)), default=0.0)

    n1, n2 = len(fin1), len(fin2)
    if n1 == 0 and n2 == 0:
        return inf_cost
    pairs = np.array(
        [[max(abs(b1 - b2), abs(e1 - e2)) for (b2, e2) in fin2] for (b1, e1) in fin1]
    ).reshape(n1, n2)
    diag1 = np.array([(e - b) / 2 for b, e in fin1])
    diag2 = np.array([(e - b) / 2 for b, e in fin2])
    candidates = np.unique(np.concatenate([pairs.ravel(), diag1, diag2, [0.0]]))

    size = n1 + n2

    def feasible(delta: float) -> bool:
        adj = np.zeros((size, size), dtype=bool)
        adj[:n1, :n2] = pairs <= delta
        adj[:n1, n2:] = False
        for i in range(n1):
            adj[i, n2 + i] = diag1[i] <= delta
        for j in range(n2):
            adj[n1 + j, j] = diag2[j] <= delta
        adj[n1:, n2:] = True
        return _perfect_matching(adj)

    lo, hi = 0, len(candidates) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(candidates[mid]):
            hi = mid
        else:
            lo = mid + 1
    return max(float(candidates[lo]), inf_cost)
