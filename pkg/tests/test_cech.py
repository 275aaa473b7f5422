import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gen import bottleneck_bruteforce, random_module, random_space
from sheaflens import FiniteSpace, PartialCover
from sheaflens.cech import (
    PersistenceDiagram,
    PersistenceModule,
    barcode,
    bottleneck,
    cech_cohomology,
    coboundary,
    interval_multiplicities,
    nerve,
    refinement_map,
)
from sheaflens.errors import InfiniteMismatch, InvalidTau, NonComposable, NotARefinement
from sheaflens.linalg import get_field


def discrete(n):
    return FiniteSpace([str(i) for i in range(n)], list(range(1 << n)))


def cover_of(space, families):
    return PartialCover(space, [sum(1 << p for p in fam) for fam in families])


@pytest.mark.parametrize("field", ["f2", "q"])
def test_hollow_and_filled_triangles(field):
    sp = discrete(4)
    hollow = cover_of(sp, [(0, 1), (1, 2), (2, 0)])
    assert cech_cohomology(hollow, field).ranks == (1, 1)
    assert cech_cohomology(hollow, field, degree_cap=2).ranks == (1, 1, 0)
    filled = cover_of(sp, [(0, 1, 3), (1, 2, 3), (2, 0, 3)])
    assert cech_cohomology(filled, field).ranks == (1, 0, 0)


@pytest.mark.parametrize("field", ["f2", "q"])
def test_hollow_tetrahedron(field):
    # points are the four faces; the open for vertex i holds the faces touching i
    sp = discrete(4)
    fams = [[f for f in range(4) if f != i] for i in range(4)]
    assert cech_cohomology(cover_of(sp, fams), field).ranks == (1, 0, 1)


def test_disconnected_cover_and_degree_cap():
    sp = discrete(3)
    res = cech_cohomology(cover_of(sp, [(0,), (1,), (2,)]), "f2", degree_cap=1)
    assert res.ranks == (3, 0)
    assert cech_cohomology(PartialCover(sp, ()), "f2", degree_cap=1).ranks == (0, 0)


def _random_cover(rng, space, k=None):
    opens = [m for m in space.masks if m]
    k = k or int(rng.integers(1, min(6, len(opens)) + 1))
    return PartialCover(space, sorted({opens[int(i)] for i in rng.integers(0, len(opens), k)}))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["f2", "q"]))
def test_coboundary_squares_to_zero_and_euler(seed, field):
    rng = np.random.default_rng(seed)
    sp = discrete(int(rng.integers(2, 6)))
    cover = _random_cover(rng, sp)
    nv = nerve(cover)
    fld = get_field(field)
    for k in range(nv.dimension):
        prod = fld.matmul(coboundary(nv, k + 1, fld), coboundary(nv, k, fld))
        assert not np.any(prod != 0)
    ranks = cech_cohomology(cover, field).ranks
    euler_cells = sum((-1) ** k * nv.count(k) for k in range(nv.dimension + 1))
    assert sum((-1) ** k * r for k, r in enumerate(ranks)) == euler_cells


def test_refinement_maps_and_tau_errors():
    sp = discrete(3)
    fine = cover_of(sp, [(0,), (1,), (0, 1)])
    coarse = cover_of(sp, [(0, 1), (0, 1, 2)])
    maps = refinement_map(fine, coarse, field="f2", degree_cap=1)
    assert maps[0].shape == (1, 1) and maps[0][0, 0] == 1
    with pytest.raises(InvalidTau):
        refinement_map(fine, coarse, [0, 0], "f2", 1)
    with pytest.raises(InvalidTau):
        refinement_map(cover_of(sp, [(2,)]), coarse, [0], "f2", 1)
    with pytest.raises(NotARefinement):
        refinement_map(coarse, fine, None, "f2", 1)


@pytest.mark.parametrize("field", ["f2", "q"])
def test_self_refinement_is_the_identity(field):
    rng = np.random.default_rng(4)
    for _ in range(20):
        sp = random_space(rng, max_opens=12, max_points=5)
        cover = _random_cover(rng, sp)
        for k, m in enumerate(refinement_map(cover, cover, None, field, degree_cap=2)):
            assert np.array_equal(np.asarray(m, dtype=object), np.eye(m.shape[0], dtype=int).astype(object))


def test_interval_directions_agree():
    rng = np.random.default_rng(5)
    for _ in range(50):
        dims, maps = random_module(rng)
        down = interval_multiplicities(dims, maps, "f2", "down")
        up = interval_multiplicities(dims, [m.T for m in maps], "f2", "up")
        assert down == up
        total = {i: 0 for i in range(len(dims))}
        for (i, j), m in down.items():
            for t in range(i, j + 1):
                total[t] += m
        assert [total[i] for i in range(len(dims))] == dims


def test_module_shape_errors():
    with pytest.raises(NonComposable):
        interval_multiplicities([1, 1], [], "f2")
    with pytest.raises(NonComposable):
        interval_multiplicities([1, 2], [np.zeros((2, 1), dtype=np.uint8)], "f2")
    mod = PersistenceModule(get_field("f2"), (0.0, 1.0, math.inf), [[1, 1]], [[np.zeros((1, 2), dtype=np.uint8)]])
    with pytest.raises(NonComposable):
        barcode(mod)


def test_barcode_uses_threshold_edges():
    one = np.ones((1, 1), dtype=np.uint8)
    mod = PersistenceModule(get_field("f2"), (0.0, 0.5, 2.0, math.inf), [[1, 1, 1]], [[one, np.zeros((1, 1), dtype=np.uint8)]])
    assert barcode(mod).degree(0) == [(0.0, 2.0), (2.0, math.inf)]


def test_diagram_records_round_trip():
    d = PersistenceDiagram({0: [(0.0, 0.1), (0.0, 0.1), (0.25, math.inf)], 1: [(1 / 3, 0.5)]})
    for exact in (False, True):
        back = PersistenceDiagram.from_records(d.to_records(exact))
        if exact:
            assert back.bars == d.bars
        else:
            for k in d.bars:
                flat = [x for bar in back.degree(k) for x in bar]
                assert flat == pytest.approx([x for bar in d.degree(k) for x in bar], rel=1e-11)
    recs = d.to_records()
    assert recs[0]["multiplicity"] == 2


def _random_diagram(rng, n):
    out = []
    for _ in range(n):
        b = float(rng.uniform(0, 1))
        out.append((b, math.inf if rng.random() < 0.2 else b + float(rng.uniform(0, 1))))
    return out


def test_bottleneck_matches_permutation_oracle():
    rng = np.random.default_rng(6)
    for _ in range(60):
        d1, d2 = _random_diagram(rng, int(rng.integers(0, 4))), _random_diagram(rng, int(rng.integers(0, 4)))
        assert bottleneck(d1, d2) == pytest.approx(bottleneck_bruteforce(d1, d2), abs=1e-12)


def test_bottleneck_infinite_mismatch():
    assert bottleneck([(0.0, math.inf)], []) == math.inf
    with pytest.raises(InfiniteMismatch):
        bottleneck([(0.0, math.inf)], [], strict=True)
    assert bottleneck([(0.0, math.inf)], [(0.5, math.inf)]) == 0.5
    assert bottleneck([], []) == 0


def test_bottleneck_is_a_metric_on_samples():
    rng = np.random.default_rng(7)
    for _ in range(40):
        a, b, c = (_random_diagram(rng, 3) for _ in range(3))
        a = [p for p in a if not math.isinf(p[1])]
        b = [p for p in b if not math.isinf(p[1])]
        c = [p for p in c if not math.isinf(p[1])]
        assert bottleneck(a, a) == 0
        assert bottleneck(a, b) == pytest.approx(bottleneck(b, a))
        assert bottleneck(a, c) <= bottleneck(a, b) + bottleneck(b, c) + 1e-12


def test_nerve_counts_on_a_full_family():
    sp = discrete(3)
    cover = cover_of(sp, [(0, 1, 2)] * 1 + [(0,), (0, 1)])
    nv = nerve(cover)
    # all three members share point 0
    assert [nv.count(k) for k in range(3)] == [3, 3, 1]
    assert all(len(s) == k + 1 for k in range(3) for s in nv.simplices[k])
    assert list(itertools.chain.from_iterable(nv.simplices[0])) == [0, 1, 2]
