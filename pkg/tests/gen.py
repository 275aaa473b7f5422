"""Random instances and independent oracles shared by the test modules."""

from __future__ import annotations

import itertools
import math

import numpy as np

from sheaflens import (
    Assignment,
    Euclidean,
    FiniteSpace,
    PartialCover,
    build_explicit_topology,
    build_morphism,
    build_sheaf,
)
from sheaflens.stalks import MatrixMap


def fix_abc(r: float = 1.0, metric: str = "linf"):
    """The three-point worked example; returns (space, ids, sheaf)."""
    sp = build_explicit_topology("ABC", ["", "A", "AB", "AC", "ABC"])
    ids = {k: sp.id_of(set(k)) for k in ("A", "AB", "AC", "ABC")}
    E = Euclidean(1, metric)
    sheaf = build_sheaf(
        sp,
        {ids[k]: E for k in ids},
        {
            (ids["AB"], ids["ABC"]): [[2 * r]],
            (ids["AC"], ids["ABC"]): [[r]],
            (ids["A"], ids["AB"]): [[0.5]],
            (ids["A"], ids["AC"]): [[1.0]],
        },
    )
    return sp, ids, sheaf


def fix_abc_assignment(sheaf, ids, r: float = 1.0) -> Assignment:
    return Assignment(sheaf, {ids["AB"]: 0, ids["AC"]: 1, ids["A"]: 0.5, ids["ABC"]: 1 / (3 * r)})


def chain2():
    sp = build_explicit_topology("pq", ["", "p", "pq"])
    from sheaflens import constant_sheaf

    return sp, constant_sheaf(sp, 1)


# -- random topologies and sheaves -------------------------------------------------


def random_space(rng, max_opens: int = 6, max_points: int = 4) -> FiniteSpace:
    """Union/intersection closure of a few random subsets, retried until small."""
    while True:
        n = int(rng.integers(1, max_points + 1))
        full = (1 << n) - 1
        fam = {0, full}
        for _ in range(int(rng.integers(0, 4))):
            fam.add(int(rng.integers(1, full + 1)))
        changed = True
        while changed:
            changed = False
            for a, b in itertools.combinations(list(fam), 2):
                for c in (a | b, a & b):
                    if c not in fam:
                        fam.add(c)
                        changed = True
        if len(fam) <= max_opens:
            points = [chr(ord("a") + i) for i in range(n)]
            return FiniteSpace(points, sorted(fam, key=lambda m: (bin(m).count("1"), m)))


def random_sheaf(rng, space: FiniteSpace | None = None, max_dim: int = 3, metric=None, scale: float = 1.0):
    """Commuting restrictions ``R_UV = G_U pinv(G_V)`` with injective ``G_V``.

    Every ``G`` has the top stalk's dimension as its number of columns, so
    ``pinv(G_V) G_V = I`` and composites do not depend on the path.
    """
    space = space or random_space(rng)
    top = space.whole_id
    d_top = int(rng.integers(1, max_dim + 1))
    G, stalks = {}, {}
    for u in range(len(space)):
        if u == space.empty_id:
            continue
        d = d_top if u == top else int(rng.integers(d_top, max_dim + 1))
        m = metric or ("linf" if rng.random() < 0.7 else "l2")
        stalks[u] = Euclidean(d, m)
        if u == top:
            G[u] = np.eye(d)
        else:
            while True:
                g = rng.normal(size=(d, d_top)) * scale
                if np.linalg.matrix_rank(g) == d_top:
                    break
            G[u] = g
    gens = {}
    for (u, v) in space.hasse:
        if u == space.empty_id:
            continue
        gens[(u, v)] = MatrixMap(G[u] @ np.linalg.pinv(G[v]))
    return build_sheaf(space, stalks, gens, tol=1e-7), G


def random_assignment(rng, sheaf, spread: float = 1.0) -> Assignment:
    vals = {}
    for u, st in enumerate(sheaf.stalks):
        if u == sheaf.space.empty_id:
            continue
        vals[u] = rng.normal(size=st.dim) * spread
    return Assignment(sheaf, vals)


def random_morphism(rng, source, G):
    """Conjugated copy of ``source`` with invertible components over the identity."""
    space = source.space
    T = {}
    for u, st in enumerate(source.stalks):
        if u == space.empty_id:
            continue
        while True:
            t = rng.normal(size=(st.dim, st.dim))
            if abs(np.linalg.det(t)) > 0.2:
                break
        T[u] = t
    gens = {}
    for (u, v) in space.hasse:
        if u == space.empty_id:
            continue
        gens[(u, v)] = MatrixMap(T[u] @ source.maps[(u, v)].matrix @ np.linalg.inv(T[v]))
    target = build_sheaf(space, dict(enumerate(source.stalks)), gens, tol=1e-6)
    comps = {u: MatrixMap(t) for u, t in T.items()}
    return build_morphism(source, target, None, comps, tol=1e-6)


# -- brute-force interval decomposition ------------------------------------------------


def _gl2(d: int) -> list[tuple[int, ...]]:
    """All invertible d x d matrices over GF(2) as tuples of column bitmasks."""
    out = []
    for cols in itertools.product(range(1, 1 << d), repeat=d):
        span = {0}
        ok = True
        for c in cols:
            if c in span:
                ok = False
                break
            span |= {s ^ c for s in span}
        if ok:
            out.append(cols)
    return out


_GL_CACHE: dict[int, list] = {}


def _apply(cols: tuple[int, ...], vec: int) -> int:
    out = 0
    for j, c in enumerate(cols):
        if vec >> j & 1:
            out ^= c
    return out


def _inverse(cols: tuple[int, ...], d: int) -> tuple[int, ...]:
    table = {}
    for v in range(1 << d):
        table[_apply(cols, v)] = v
    return tuple(table[1 << i] for i in range(d))


def _columns(m: np.ndarray) -> tuple[int, ...]:
    return tuple(sum(int(m[i, j]) << i for i in range(m.shape[0])) for j in range(m.shape[1]))


def brute_force_intervals(dims, maps) -> dict[tuple[int, int], int]:
    """Interval multiplicities by searching for bases that make every map a matching.

    ``maps[i]`` sends space ``i+1`` to space ``i``. A depth-first search over
    GL(d, F2) at each index, with memoised dead ends, finds bases in which every
    map has at most one 1 per row and column; chains of matched basis vectors
    are the intervals.
    """
    n = len(dims)
    M = [_columns(np.asarray(m) % 2) for m in maps]
    for d in set(dims):
        if d not in _GL_CACHE:
            _GL_CACHE[d] = _gl2(d) if d else [()]
    dead: set = set()

    def is_matching(cols: tuple[int, ...]) -> bool:
        seen = 0
        for c in cols:
            if c == 0:
                continue
            if c & (c - 1) or c & seen:
                return False
            seen |= c
        return True

    def search(i: int, basis: tuple[int, ...], chosen: list):
        if i == n - 1:
            return chosen
        if (i, basis) in dead:
            return None
        inv = _inverse(basis, dims[i]) if dims[i] else ()
        for nxt in _GL_CACHE[dims[i + 1]]:
            # map i+1 -> i in the new bases: inv(B_i) M_i B_{i+1}
            cols = tuple(_apply(inv, _apply(M[i], c)) for c in nxt)
            if is_matching(cols):
                found = search(i + 1, nxt, chosen + [cols])
                if found is not None:
                    return found
        dead.add((i, basis))
        return None

    result = None
    for b0 in _GL_CACHE[dims[0]]:
        result = search(0, b0, [])
        if result is not None:
            break
    if result is None:
        raise AssertionError("no matching bases found; interval decomposition must exist")
    # link (i+1, b) -> (i, a) when the map has a 1 at row a, column b
    up = {}
    for i, cols in enumerate(result):
        for b, c in enumerate(cols):
            if c:
                up[(i + 1, b)] = (i, c.bit_length() - 1)
    has_above = {v: k for k, v in up.items()}
    out: dict = {}
    for i in range(n):
        for a in range(dims[i]):
            if (i, a) in up:
                continue
            # nothing below (i, a): it starts a chain, walk upward to its end
            j, b = i, a
            while (j, b) in has_above:
                j, b = has_above[(j, b)]
            out[(i, j)] = out.get((i, j), 0) + 1
    return out


def random_module(rng, max_len: int = 5, max_dim: int = 3):
    n = int(rng.integers(1, max_len + 1))
    dims = [int(rng.integers(0, max_dim + 1)) for _ in range(n)]
    maps = [rng.integers(0, 2, size=(dims[i], dims[i + 1])).astype(np.uint8) for i in range(n - 1)]
    return dims, maps


# -- refinement pairs ----------------------------------------------------------------


def random_refinement_pair(rng, space: FiniteSpace):
    """A fine and a coarse partial cover of nonempty opens with two valid tau choices."""
    opens = [m for m in space.masks if m]
    for _ in range(200):
        coarse = sorted({opens[int(i)] for i in rng.integers(0, len(opens), int(rng.integers(1, 4)))})
        below = [m for m in opens if any(m & ~c == 0 for c in coarse)]
        fine = sorted({below[int(i)] for i in rng.integers(0, len(below), int(rng.integers(1, 5)))})
        taus = [[j for j, c in enumerate(coarse) if f & ~c == 0] for f in fine]
        if any(len(t) >= 2 for t in taus):
            return PartialCover(space, fine), PartialCover(space, coarse)
    return None


# -- bottleneck by permutations ---------------------------------------------------------


def bottleneck_bruteforce(d1, d2) -> float:
    """Minimise over all matchings after padding with diagonal projections."""
    inf1 = sorted(b for b, d in d1 if math.isinf(d))
    inf2 = sorted(b for b, d in d2 if math.isinf(d))
    if len(inf1) != len(inf2):
        return math.inf
    base = max((abs(a - b) for a, b in zip(inf1, inf2)), default=0.0)
    f1 = [p for p in d1 if not math.isinf(p[1])]
    f2 = [p for p in d2 if not math.isinf(p[1])]
    A = f1 + [None] * len(f2)
    B = f2 + [None] * len(f1)
    best = math.inf
    for perm in itertools.permutations(range(len(B))):
        cost = 0.0
        for i, j in enumerate(perm):
            p, q = A[i], B[j]
            if p is None and q is None:
                c = 0.0
            elif p is None:
                c = (q[1] - q[0]) / 2
            elif q is None:
                c = (p[1] - p[0]) / 2
            else:
                c = max(abs(p[0] - q[0]), abs(p[1] - q[1]))
            cost = max(cost, c)
            if cost >= best:
                break
        best = min(best, cost)
    return max(best, base)
