"""Consistent collections, consistency filtrations and their interleavings."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .errors import SpaceMismatch
from .finspace import PartialCover, refines, same_space
from .metricsheaf import Assignment, MetricSheaf, local_consistency_radii


class CoarseningFiltration:
    """Piecewise-constant map from thresholds to partial covers.

    ``covers[i]`` holds on the interval ``(breakpoints[i-1], breakpoints[i]]``
    with the conventions ``breakpoints[-1] = 0`` and ``breakpoints[k] = inf``.
    At thresholds ``t <= 0`` the filtration is the empty cover.
    """

    def __init__(self, space, breakpoints: Sequence[float], covers: Sequence[PartialCover], check: bool = True):
        self.space = space
        self.breakpoints = tuple(float(t) for t in breakpoints)
        self.covers = tuple(covers)
        if len(self.covers) != len(self.breakpoints) + 1:
            raise ValueError("need exactly one more cover than breakpoints")
        if any(b <= a for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if self.breakpoints and self.breakpoints[0] <= 0:
            raise ValueError("breakpoints must be positive")
        if check:
            for i, (fine, coarse) in enumerate(zip(self.covers, self.covers[1:])):
                if not refines(fine, coarse):
                    raise ValueError(f"cover {i} does not refine cover {i + 1}")

    def __call__(self, t: float) -> PartialCover:
        if t <= 0:
            return PartialCover(self.space, ())
        return self.covers[bisect.bisect_left(self.breakpoints, t)]

    def __repr__(self) -> str:
        return f"CoarseningFiltration(breakpoints={list(self.breakpoints)}, covers={len(self.covers)})"

    def to_records(self) -> list[dict]:
        """Interval-by-interval description with member labels."""
        edges = (0.0,) + self.breakpoints + (math.inf,)
        out = []
        for i, cover in enumerate(self.covers):
            out.append({
                "from": edges[i],
                "to": edges[i + 1],
                "cover": [sorted(m) for m in cover.labels()],
            })
        return out

    def shifted(self, delta: float) -> "CoarseningFiltration":
        """Same covers with every breakpoint moved by ``delta``."""
        return CoarseningFiltration(self.space, [b + delta for b in self.breakpoints], self.covers, check=False)


def epsilon_consistent_opens(sheaf: MetricSheaf, a: Assignment, eps: float, radii: Sequence[float] | None = None) -> list[int]:
    """Ids of opens whose local consistency radius is strictly below ``eps``."""
    radii = local_consistency_radii(sheaf, a) if radii is None else radii
    return [u for u, r in enumerate(radii) if r < eps]


def _maximal(space, ids: Sequence[int]) -> list[int]:
    masks = space.masks
    keep = []
    for u in ids:
        if masks[u] == 0:
            continue
        if not any(v != u and masks[u] & ~masks[v] == 0 for v in ids):
            keep.append(u)
    return keep


def maximal_consistent_collection(sheaf: MetricSheaf, a: Assignment, eps: float,
                                  radii: Sequence[float] | None = None) -> PartialCover:
    """Inclusion-maximal eps-consistent opens (the empty set never reported)."""
    ids = epsilon_consistent_opens(sheaf, a, eps, radii)
    space = sheaf.space
    return PartialCover(space, [space.masks[u] for u in _maximal(space, ids)])


def consistency_filtration(sheaf: MetricSheaf, a: Assignment) -> CoarseningFiltration:
    radii = local_consistency_radii(sheaf, a)
    breakpoints = sorted({r for r in radii if r > 0})
    probes = [min(breakpoints[0], 1.0) / 2 if breakpoints else 1.0]
    probes += [b * 2 if i == len(breakpoints) - 1 else (b + breakpoints[i + 1]) / 2
               for i, b in enumerate(breakpoints)]
    # a probe in each interval; the strict inequality makes the cover
    # constant on (t_i, t_{i+1}]
    covers = [maximal_consistent_collection(sheaf, a, p, radii) for p in probes]
    return CoarseningFiltration(sheaf.space, breakpoints, covers)


# -- interleavings --------------------------------------------------------------


class MonotoneMap:
    """Continuous, strictly increasing piecewise-linear map of the real line.

    Defined by knots ``(xs, ys)`` and the slopes used beyond the first and
    last knot.
    """

    def __init__(self, xs: Sequence[float], ys: Sequence[float], left_slope: float = 1.0, right_slope: float = 1.0):
        self.xs = tuple(float(x) for x in xs)
        self.ys = tuple(float(y) for y in ys)
        if not self.xs or len(self.xs) != len(self.ys):
            raise ValueError("need matching, nonempty knot lists")
        if any(b <= a for a, b in zip(self.xs, self.xs[1:])) or any(b <= a for a, b in zip(self.ys, self.ys[1:])):
            raise ValueError("knots must be strictly increasing")
        if left_slope <= 0 or right_slope <= 0:
            raise ValueError("end slopes must be positive")
        self.left_slope = float(left_slope)
        self.right_slope = float(right_slope)

    @classmethod
    def shift(cls, delta: float) -> "MonotoneMap":
        return cls([0.0], [delta])

    @classmethod
    def scale(cls, factor: float) -> "MonotoneMap":
        return cls([0.0], [0.0], factor, factor)

    @classmethod
    def identity(cls) -> "MonotoneMap":
        return cls.shift(0.0)

    def __call__(self, t: float) -> float:
        return _pl_eval(self.xs, self.ys, self.left_slope, self.right_slope, t)

    def inverse(self, t: float) -> float:
        """The unique preimage, which is also ``inf phi^-1(t)``."""
        return _pl_eval(self.ys, self.xs, 1 / self.left_slope, 1 / self.right_slope, t)

    def max_displacement(self) -> float:
        """``sup_t |phi(t) - t|``; infinite unless both end slopes are 1."""
        if self.left_slope != 1.0 or self.right_slope != 1.0:
            return math.inf
        return max(abs(y - x) for x, y in zip(self.xs, self.ys))

    def __repr__(self) -> str:
        return f"MonotoneMap(xs={list(self.xs)}, ys={list(self.ys)})"


def _pl_eval(xs, ys, left, right, t):
    if math.isinf(t):
        return t
    if t <= xs[0]:
        return ys[0] + left * (t - xs[0])
    if t >= xs[-1]:
        return ys[-1] + right * (t - xs[-1])
    i = bisect.bisect_right(xs, t) - 1
    x0, x1, y0, y1 = xs[i], xs[i + 1], ys[i], ys[i + 1]
    return y0 + (y1 - y0) * (t - x0) / (x1 - x0)


@dataclass
class InterleavingCandidate:
    """Shift maps and base maps proposed as an eps-interleaving.

    ``f`` maps the points of the first filtration's space to the second's,
    ``g`` the reverse; ``None`` means the identity on a shared space.
    """

    phi: MonotoneMap
    psi: MonotoneMap
    eps: float
    f: Mapping[str, str] | None = None
    g: Mapping[str, str] | None = None

    @classmethod
    def pure_shift(cls, delta: float, eps: float) -> "InterleavingCandidate":
        return cls(MonotoneMap.shift(delta), MonotoneMap.shift(delta), eps)


@dataclass
class InterleavingReport:
    ok: bool
    condition: str | None = None
    threshold: float | None = None

    def __bool__(self) -> bool:
        return self.ok


def _pullback(cover: PartialCover, f: Mapping[str, str] | None, domain) -> PartialCover:
    if f is None:
        return PartialCover(domain, cover.sets)
    target_pts = cover.space.points
    index = {p: i for i, p in enumerate(domain.points)}
    out = []
    for m in cover.sets:
        members = {target_pts[i] for i in range(len(target_pts)) if m >> i & 1}
        pre = 0
        for p in domain.points:
            if f[p] in members:
                pre |= 1 << index[p]
        out.append(pre)
    return PartialCover(domain, out)


def _test_points(F: CoarseningFiltration, G: CoarseningFiltration, maps: Sequence[Callable[[float], float]]) -> list[float]:
    base = {0.0, *F.breakpoints, *G.breakpoints}
    pts = set(base)
    for m in maps:
        pts.update(m(b) for b in base)
    pts = sorted(p for p in pts if math.isfinite(p))
    out = list(pts)
    out += [(a + b) / 2 for a, b in zip(pts, pts[1:])]
    out += [pts[0] - 1.0, pts[-1] + 1.0]
    return sorted(out)


def check_interleaving(F: CoarseningFiltration, G: CoarseningFiltration, candidate: InterleavingCandidate) -> InterleavingReport:
    """Check the shift bounds, both round-trip refinements and both morphisms.

    All conditions are piecewise constant in t with jumps only at images of
    breakpoints under the candidate maps, so evaluating at those images and
    at midpoints between them decides every condition.
    """
    phi, psi, eps = candidate.phi, candidate.psi, candidate.eps
    if not phi.max_displacement() < eps:
        return InterleavingReport(False, "|phi(t) - t| < eps", None)
    if not psi.max_displacement() < eps:
        return InterleavingReport(False, "|psi(t) - t| < eps", None)
    if candidate.f is None and not same_space(F.space, G.space):
        raise SpaceMismatch("identity base maps need a shared space")

    def phi_psi(t):
        return phi(psi(t))

    def psi_phi(t):
        return psi(phi(t))

    points = _test_points(F, G, [phi, psi, phi_psi, psi_phi])
    for t in points:
        if not refines(F(phi.inverse(psi.inverse(t))), F(t)):
            return InterleavingReport(False, "V(inf (psi o phi)^-1(t)) refines V(t)", t)
        if not refines(G(psi.inverse(phi.inverse(t))), G(t)):
            return InterleavingReport(False, "U(inf (phi o psi)^-1(t)) refines U(t)", t)
        if not refines(F(phi.inverse(t)), _pullback(G(t), candidate.f, F.space)):
            return InterleavingReport(False, "V(s) refines f^-1(U(t)) for s in phi^-1(t)", t)
        if not refines(G(psi.inverse(t)), _pullback(F(t), candidate.g, G.space)):
            return InterleavingReport(False, "U(s) refines g^-1(V(t)) for s in psi^-1(t)", t)
    return InterleavingReport(True)


def interleaving_upper_bound(F: CoarseningFiltration, G: CoarseningFiltration) -> float:
    """Least pure shift giving identity-map morphisms both ways.

    A shift ``s`` that works is an eps-interleaving for every ``eps > s``, so
    ``s`` bounds the interleaving distance from above. Returns ``inf`` when no
    shift works.
    """
    if not same_space(F.space, G.space):
        raise SpaceMismatch("filtrations live on different spaces")
    pts_f = (0.0,) + F.breakpoints
    pts_g = (0.0,) + G.breakpoints
    cands = {0.0}
    for group in (pts_f, pts_g):
        cands.update(abs(a - b) for a in group for b in group)
    cands.update(abs(a - b) for a in pts_f for b in pts_g)
    # the set of working shifts only changes at candidate values; gaps that
    # agree up to rounding are merged so 0.6 - 0.5 and 0.1 count as one
    merged: list[float] = []
    for s in sorted(cands):
        if merged and s - merged[-1] <= 1e-12 * max(1.0, s):
            merged[-1] = s
        else:
            merged.append(s)
    probes = []
    for i, s in enumerate(merged):
        nxt = merged[i + 1] if i + 1 < len(merged) else s + 1.0
        probes.append((s, s))
        probes.append((s, (s + nxt) / 2))
    for reported, s in probes:
        if check_interleaving(F, G, InterleavingCandidate.pure_shift(s, s + 1.0)):
            return reported
    return math.inf
