"""Point clouds as partial assignments to a constant sheaf on the simplex poset.

Simplices of the full simplex on the cloud's points are indexed by their
vertex bitmask (``index = mask - 1``). Opens are down-closed families of
simplices, so the star of a simplex is its closure and the star of a vertex
is the vertex alone. Two closures meet exactly when the simplices share a
vertex, which makes the nerve of a family of closures the complex they span.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CapExceeded, EmptyInput
from .filtration import CoarseningFiltration, consistency_filtration
from .finspace import FiniteSpace, PartialCover, alexandrov_from_preorder
from .metricsheaf import Assignment, MetricSheaf, constant_sheaf, local_consistency_radii
from .cech import PersistenceDiagram

DEFAULT_CAP = 8
FULL_SPACE_OPENS_CAP = 4096
#: radii closer than this (relative) are treated as one breakpoint
MERGE_TOL = 1e-12


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def contains(self, p, slack: float = 1e-12) -> bool:
        return float(np.linalg.norm(np.asarray(p) - self.center)) <= self.radius + slack * max(1.0, self.radius)


class PointCloud:
    def __init__(self, points, cap: int = DEFAULT_CAP):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1) if pts.size else pts.reshape(0, 1)
        if pts.shape[0] == 0:
            raise EmptyInput("a point cloud needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        if pts.shape[0] > cap:
            raise CapExceeded(f"{pts.shape[0]} points exceed the cap of {cap}")
        self.points = pts
        self.cap = cap

    @property
    def N(self) -> int:
        return self.points.shape[0]

    @property
    def M(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.N

    def __repr__(self) -> str:
        return f"PointCloud(N={self.N}, M={self.M})"

    def subset(self, vmask: int) -> np.ndarray:
        return self.points[[i for i in range(self.N) if vmask >> i & 1]]


def load_cloud(path, cap: int = DEFAULT_CAP) -> PointCloud:
    """Read a CSV file (one point per row) or a JSON list of points."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        data = json.loads(text)
        if isinstance(data, dict):
            data = data["points"]
        return PointCloud(data, cap)
    rows = [[float(x) for x in row] for row in csv.reader(text.splitlines()) if row and any(x.strip() for x in row)]
    return PointCloud(rows, cap)


# -- miniball -------------------------------------------------------------------


def _circumball(boundary: list[np.ndarray]) -> Ball:
    """Smallest ball with every boundary point on its sphere (affine hull center)."""
    p0 = boundary[0]
    if len(boundary) == 1:
        return Ball(p0.copy(), 0.0)
    D = np.array([p - p0 for p in boundary[1:]])
    G = D @ D.T
    rhs = 0.5 * np.einsum("ij,ij->i", D, D)
    lam = np.linalg.lstsq(G, rhs, rcond=None)[0]
    c = p0 + lam @ D
    r = max(float(np.linalg.norm(p - c)) for p in boundary)
    return Ball(c, r)


def _welzl(points: list[np.ndarray], boundary: list[np.ndarray], dim: int) -> Ball | None:
    if not points or len(boundary) == dim + 1:
        return _circumball(boundary) if boundary else None
    p = points[-1]
    ball = _welzl(points[:-1], boundary, dim)
    if ball is not None and ball.contains(p):
        return ball
    return _welzl(points[:-1], boundary + [p], dim)


def miniball(points) -> Ball:
    """Smallest enclosing ball of a nonempty finite point set."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise EmptyInput("miniball of an empty set")
    # deduplicate so repeated points cannot make the boundary system singular
    uniq = list(np.unique(pts, axis=0))
    ball = _welzl(uniq, [], pts.shape[1])
    return ball


def miniball_radii(cloud: PointCloud) -> dict[int, float]:
    """Radius for every nonempty vertex mask."""
    return {m: miniball(cloud.subset(m)).radius for m in range(1, 1 << cloud.N)}


def _merge(values) -> dict[float, float]:
    """Map each value to the largest value of its near-equal cluster."""
    out = {}
    cluster: list[float] = []
    for v in sorted(set(values)):
        if cluster and v - cluster[-1] > MERGE_TOL * max(1.0, abs(v)):
            rep = cluster[-1]
            out.update((w, rep) for w in cluster)
            cluster = []
        cluster.append(v)
    if cluster:
        out.update((w, cluster[-1]) for w in cluster)
    return out


# -- the sheaf and its filtration --------------------------------------------------


def simplex_label(vmask: int) -> str:
    return ",".join(str(i) for i in range(vmask.bit_length()) if vmask >> i & 1)


class SimplexBasis:
    """The simplices of the full simplex, used as the point set of covers."""

    def __init__(self, n: int):
        self.n = n
        self.points = tuple(simplex_label(m) for m in range(1, 1 << n))

    def __repr__(self) -> str:
        return f"SimplexBasis(n={self.n})"

    def closure_mask(self, vmask: int) -> int:
        out = 0
        sub = vmask
        while sub:
            out |= 1 << (sub - 1)
            sub = (sub - 1) & vmask
        return out


@dataclass
class CloudSheaf:
    cloud: PointCloud
    space: FiniteSpace
    sheaf: MetricSheaf
    partial: Assignment
    vertex_open: dict  # vertex index -> open id


def build_cloud_sheaf(cloud: PointCloud, cap: int = FULL_SPACE_OPENS_CAP) -> CloudSheaf:
    """Full simplex-poset space, constant sheaf and the vertex-supported assignment.

    Every subcomplex is an open, so the space grows very quickly; past ``cap``
    opens this raises :class:`CapExceeded` (in practice N <= 4).
    """
    n = cloud.N
    masks = list(range(1, 1 << n))
    labels = [simplex_label(m) for m in masks]
    leq = [
        (simplex_label(t), simplex_label(s))
        for s in masks for t in masks
        if t != s and t & s == t
    ]
    space = alexandrov_from_preorder(labels, leq, cap=cap, orientation="down")
    sheaf = constant_sheaf(space, cloud.M, "l2")
    vertex_open = {i: space.id_of({simplex_label(1 << i)}) for i in range(n)}
    partial = Assignment(sheaf, {vertex_open[i]: cloud.points[i] for i in range(n)})
    return CloudSheaf(cloud, space, sheaf, partial, vertex_open)


def circumcenter_extension(bundle: CloudSheaf) -> Assignment:
    """Miniball center of the vertices present in each open."""
    space, cloud = bundle.space, bundle.cloud
    values = {}
    for u, m in enumerate(space.masks):
        if u == space.empty_id:
            continue
        vm = 0
        for i, oid in bundle.vertex_open.items():
            if m & space.masks[oid]:
                vm |= 1 << i
        if vm == 0:
            raise ValueError("every nonempty subcomplex contains a vertex")
        values[u] = miniball(cloud.subset(vm)).center
    return Assignment(bundle.sheaf, values, bundle.partial.support)


def cloud_consistency_filtration(cloud: PointCloud) -> CoarseningFiltration:
    """Maximal simplex closures whose miniball radius is below the threshold."""
    basis = SimplexBasis(cloud.N)
    radii = miniball_radii(cloud)
    merged = _merge(radii.values())
    radii = {m: merged[r] for m, r in radii.items()}
    breakpoints = sorted({r for r in radii.values() if r > 0})
    uppers = breakpoints + [math.inf]
    covers = []
    for i, top in enumerate(uppers):
        # the interval ending at ``top``: simplices with radius below it
        live = [m for m, r in radii.items() if r < top]
        maximal = [m for m in live if not any(o != m and o & m == m for o in live)]
        covers.append(PartialCover(basis, [basis.closure_mask(m) for m in maximal]))
    return CoarseningFiltration(basis, breakpoints, covers)


# -- brute-force oracle -------------------------------------------------------------


def _ball_through(boundary: np.ndarray) -> tuple[np.ndarray, float] | None:
    p0 = boundary[0]
    if len(boundary) == 1:
        return p0, 0.0
    D = boundary[1:] - p0
    G = D @ D.T
    if abs(np.linalg.det(G)) < 1e-14 * max(1.0, float(np.abs(G).max())) ** len(G):
        return None
    lam = np.linalg.solve(G, 0.5 * np.einsum("ij,ij->i", D, D))
    c = p0 + lam @ D
    return c, float(np.linalg.norm(p0 - c))


def enclosing_radius_bruteforce(points) -> float:
    """Smallest enclosing radius by trying every candidate boundary set."""
    pts = np.unique(np.atleast_2d(np.asarray(points, dtype=float)), axis=0)
    best = math.inf
    for k in range(1, min(len(pts), pts.shape[1] + 1) + 1):
        for combo in itertools.combinations(range(len(pts)), k):
            ball = _ball_through(pts[list(combo)])
            if ball is None:
                continue
            c, r = ball
            if np.all(np.linalg.norm(pts - c, axis=1) <= r * (1 + 1e-12) + 1e-12):
                best = min(best, r)
    return best


def cech_complex_oracle(cloud: PointCloud, eps: float, max_dim: int | None = None) -> list[tuple[int, ...]]:
    """Simplices whose points fit in a ball of radius strictly below ``eps``."""
    top = cloud.N - 1 if max_dim is None else min(max_dim, cloud.N - 1)
    out = []
    for k in range(top + 1):
        for simplex in itertools.combinations(range(cloud.N), k + 1):
            if enclosing_radius_bruteforce(cloud.points[list(simplex)]) < eps:
                out.append(simplex)
    return out


def oracle_diagram(cloud: PointCloud, max_degree: int = 1) -> PersistenceDiagram:
    """Persistent homology of the full Čech filtration by column reduction."""
    simplices = []
    for k in range(min(max_degree + 1, cloud.N - 1) + 1):
        for s in itertools.combinations(range(cloud.N), k + 1):
            simplices.append((s, enclosing_radius_bruteforce(cloud.points[list(s)])))
    merged = _merge(r for _, r in simplices)
    simplices = [(s, merged[r]) for s, r in simplices]
    simplices.sort(key=lambda t: (t[1], len(t[0]), t[0]))
    index = {s: i for i, (s, _) in enumerate(simplices)}
    columns = []
    for s, _ in simplices:
        col = 0
        if len(s) > 1:
            for face in itertools.combinations(s, len(s) - 1):
                col |= 1 << index[face]
        columns.append(col)
    low_owner: dict[int, int] = {}
    paired = set()
    bars: dict[int, list] = {k: [] for k in range(max_degree + 1)}
    for j, col in enumerate(columns):
        while col:
            low = col.bit_length() - 1
            if low not in low_owner:
                break
            col ^= columns[low_owner[low]]
        columns[j] = col
        if col:
            low = col.bit_length() - 1
            low_owner[low] = j
            paired.update((low, j))
            deg = len(simplices[low][0]) - 1
            birth, death = simplices[low][1], simplices[j][1]
            if death > birth and deg <= max_degree:
                bars[deg].append((birth, death))
    for i, (s, r) in enumerate(simplices):
        deg = len(s) - 1
        if i not in paired and columns[i] == 0 and deg <= max_degree:
            bars[deg].append((r, math.inf))
    return PersistenceDiagram({k: sorted(v) for k, v in bars.items()})


def cloud_diagram(cloud: PointCloud, field="f2", max_degree: int = 1) -> PersistenceDiagram:
    """Barcode through the consistency filtration and persistent Čech cohomology."""
    from .cech import barcode, persistence_module_from_filtration

    filt = cloud_consistency_filtration(cloud)
    return barcode(persistence_module_from_filtration(filt, field, max_degree))


@dataclass
class CrossCheck:
    simplex: str
    miniball_radius: float
    engine_radius: float


def cross_check(cloud: PointCloud) -> tuple[list[CrossCheck], bool]:
    """Compare ball-criterion radii with the general engine on small clouds.

    Returns one row per simplex (the miniball radius next to the local
    consistency radius of its closure under the circumcenter extension) and
    whether the general-engine filtration has the same covers as
    :func:`cloud_consistency_filtration`.
    """
    bundle = build_cloud_sheaf(cloud)
    ext = circumcenter_extension(bundle)
    local = local_consistency_radii(bundle.sheaf, ext)
    space = bundle.space
    rows = []
    for m in range(1, 1 << cloud.N):
        closure = [simplex_label(t) for t in range(1, m + 1) if t & m == t]
        u = space.id_of(set(closure))
        rows.append(CrossCheck(simplex_label(m), miniball(cloud.subset(m)).radius, local[u]))
    engine = consistency_filtration(bundle.sheaf, ext)
    star = cloud_consistency_filtration(cloud)
    marks = sorted(_merge(engine.breakpoints + star.breakpoints).values())
    marks = [m for i, m in enumerate(marks) if i == 0 or m - marks[i - 1] > 1e-9]
    probes = [m / 2 for m in marks[:1]] + [(a + b) / 2 for a, b in zip(marks, marks[1:])]
    probes.append(marks[-1] + 1.0 if marks else 1.0)
    same = all(
        any(abs(a - b) <= 1e-9 for b in star.breakpoints) for a in engine.breakpoints
    ) and all(
        sorted(map(sorted, engine(t).labels())) == sorted(map(sorted, star(t).labels()))
        for t in probes
    )
    return rows, same


def same_diagram(d1: PersistenceDiagram, d2: PersistenceDiagram, tol: float = 1e-9, degrees=(0, 1)) -> bool:
    """Same bars with the same multiplicities, endpoints matched within ``tol``."""
    for k in degrees:
        a, b = sorted(d1.degree(k)), sorted(d2.degree(k))
        if len(a) != len(b):
            return False
        for (b1, e1), (b2, e2) in zip(a, b):
            if abs(b1 - b2) > tol:
                return False
            if math.isinf(e1) or math.isinf(e2):
                if e1 != e2:
                    return False
            elif abs(e1 - e2) > tol:
                return False
    return True
