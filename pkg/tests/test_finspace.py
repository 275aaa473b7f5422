import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gen import random_space
from sheaflens import FiniteSpace, PartialCover, build_explicit_topology
from sheaflens.errors import (
    CapExceeded,
    MissingEmptyOrWhole,
    NotClosedUnderIntersection,
    NotClosedUnderUnion,
    SpaceMismatch,
    TopologyError,
)
from sheaflens.finspace import alexandrov_from_preorder, is_continuous, preimage_mask, refines, star


def abc():
    return build_explicit_topology("ABC", ["", "A", "AB", "AC", "ABC"])


def test_explicit_topology_basics():
    sp = abc()
    assert len(sp) == 5
    assert sp.labels(sp.masks[sp.whole_id]) == frozenset("ABC")
    assert sp.masks[sp.empty_id] == 0
    assert sp.is_open({"A", "B"})
    assert not sp.is_open({"B"})
    with pytest.raises(TopologyError):
        sp.id_of({"B"})


def test_missing_empty_or_whole():
    with pytest.raises(MissingEmptyOrWhole):
        build_explicit_topology("AB", ["A", "AB"])
    with pytest.raises(MissingEmptyOrWhole):
        build_explicit_topology("AB", ["", "A"])


def test_closure_failures_name_the_pair():
    with pytest.raises(NotClosedUnderUnion):
        build_explicit_topology("ABC", ["", "A", "B", "ABC"])
    with pytest.raises(NotClosedUnderIntersection):
        build_explicit_topology("ABC", ["", "AB", "BC", "ABC"])


def test_unknown_point():
    with pytest.raises(TopologyError):
        build_explicit_topology("AB", ["", "Z", "AB"])


def test_hasse_diagram_of_abc():
    sp = abc()
    named = {(frozenset(sp.labels(sp.masks[u])), frozenset(sp.labels(sp.masks[v]))) for u, v in sp.hasse}
    expected = {
        (frozenset(), frozenset("A")),
        (frozenset("A"), frozenset("AB")),
        (frozenset("A"), frozenset("AC")),
        (frozenset("AB"), frozenset("ABC")),
        (frozenset("AC"), frozenset("ABC")),
    }
    assert named == expected


def test_star_is_smallest_open_superset():
    sp = abc()
    assert star(sp, {"B"}).members == frozenset("AB")
    assert star(sp, {"B", "C"}).members == frozenset("ABC")
    assert star(sp, set()).members == frozenset()


def test_alexandrov_down_by_default_and_up_on_request():
    # x <= y puts x in every open containing y
    chain = alexandrov_from_preorder("ab", [("a", "b")])
    assert sorted(chain.masks) == [0, 0b01, 0b11]
    assert star(chain, {"b"}).members == frozenset("ab")
    down = alexandrov_from_preorder("xyz", [("x", "y"), ("y", "z")])
    assert sorted(down.masks) == [0, 0b001, 0b011, 0b111]
    up = alexandrov_from_preorder("xyz", [("x", "y"), ("y", "z")], orientation="up")
    assert sorted(up.masks) == [0, 0b100, 0b110, 0b111]
    assert len(alexandrov_from_preorder("ab", [])) == 4
    with pytest.raises(ValueError):
        alexandrov_from_preorder("xy", [], orientation="sideways")


def test_alexandrov_cap_raises_instead_of_truncating():
    pts = [f"p{i}" for i in range(13)]
    with pytest.raises(CapExceeded):
        alexandrov_from_preorder(pts, [], cap=4096)
    assert len(alexandrov_from_preorder(pts[:12], [], cap=4096)) == 4096
    with pytest.raises(CapExceeded):
        alexandrov_from_preorder([str(i) for i in range(20)], [], cap=1000)


def test_alexandrov_matches_brute_force():
    rng = np.random.default_rng(1)
    for _ in range(30):
        n = int(rng.integers(1, 6))
        pts = [str(i) for i in range(n)]
        pairs = [(pts[a], pts[b]) for a, b in itertools.product(range(n), repeat=2) if rng.random() < 0.2]
        sp = alexandrov_from_preorder(pts, pairs)
        leq = {(int(a), int(b)) for a, b in pairs} | {(i, i) for i in range(n)}
        for _ in range(n):
            leq |= {(a, d) for a, b in leq for c, d in leq if b == c}
        down_sets = {
            m for m in range(1 << n)
            if all(m >> a & 1 for a, b in leq if m >> b & 1)
        }
        assert set(sp.masks) == down_sets
        up_sets = {((1 << n) - 1) ^ m for m in down_sets}
        assert set(alexandrov_from_preorder(pts, pairs, orientation="up").masks) == up_sets


def test_partial_cover_and_refinement():
    sp = abc()
    fine = PartialCover.from_labels(sp, ["A", "AB"])
    coarse = PartialCover.from_labels(sp, ["AB", "AC"])
    assert refines(fine, coarse)
    assert not refines(coarse, fine)
    other = build_explicit_topology("AB", ["", "A", "AB"])
    with pytest.raises(SpaceMismatch):
        refines(fine, PartialCover.from_labels(other, ["A"]))


def test_continuity_and_preimages():
    sp = abc()
    two = build_explicit_topology("pq", ["", "p", "pq"])
    f = {"A": "p", "B": "p", "C": "q"}
    assert is_continuous(f, sp, two)
    assert preimage_mask(f, sp, two, two.mask({"p"})) == sp.mask("AB")
    g = {"A": "q", "B": "p", "C": "p"}
    assert not is_continuous(g, sp, two)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_spaces_are_topologies(seed):
    sp = random_space(np.random.default_rng(seed), max_opens=10, max_points=5)
    masks = set(sp.masks)
    for a, b in itertools.combinations(masks, 2):
        assert a | b in masks and a & b in masks
    # the star of any point set is open and is the intersection of its open supersets
    for m in range(1 << len(sp.points)):
        s = sp.star_mask(m)
        assert s in masks
        inter = sp.full_mask
        for o in masks:
            if m & ~o == 0:
                inter &= o
        assert s == inter


def test_reordered_opens_give_equal_spaces():
    a = FiniteSpace("AB", [0, 1, 3])
    b = FiniteSpace("AB", [3, 0, 1])
    assert a == b
