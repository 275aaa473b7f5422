import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gen import fix_abc, fix_abc_assignment, random_assignment, random_morphism, random_sheaf
from sheaflens import (
    Assignment,
    build_explicit_topology,
    build_morphism,
    build_sheaf,
    local_consistency_radius,
    pushforward_assignment,
)
from sheaflens.errors import BaseMapNotContinuous, ChainMismatch, SheafMismatch, SquareViolation
from sheaflens.morphism import compose_morphisms, identity_morphism, scaled_morphism, validate_shva
from sheaflens.stalks import Euclidean, MatrixMap


def test_scaled_endomorphism():
    sp, ids, sheaf = fix_abc()
    half = scaled_morphism(sheaf, 0.5)
    assert half.K == pytest.approx(0.5)
    a = fix_abc_assignment(sheaf, ids)
    b = pushforward_assignment(half, a)
    assert b[ids["AC"]][0] == pytest.approx(0.5)
    assert validate_shva(half, a, b)
    quarter = compose_morphisms(half, half)
    assert quarter.components[ids["AB"]].matrix[0, 0] == pytest.approx(0.25)


def test_identity_morphism_fixes_assignments():
    sp, ids, sheaf = fix_abc()
    a = fix_abc_assignment(sheaf, ids)
    m = identity_morphism(sheaf)
    b = pushforward_assignment(m, a)
    assert all(np.array_equal(a[u], b[u]) for u in ids.values())
    assert m.K == 1


def test_non_commuting_component_is_rejected():
    sp, ids, sheaf = fix_abc()
    comps = {u: MatrixMap([[1.0]]) for u in ids.values()}
    comps[ids["A"]] = MatrixMap([[2.0]])
    with pytest.raises(SquareViolation) as info:
        build_morphism(sheaf, sheaf, None, comps)
    assert info.value.deviation == pytest.approx(0.5)


def test_discontinuous_base_map_is_rejected():
    sp, ids, sheaf = fix_abc()
    two = build_explicit_topology("pq", ["", "p", "pq"])
    E = Euclidean(1)
    target = build_sheaf(two, {1: E, 2: E}, {(two.id_of({"p"}), two.whole_id): [[1.0]]})
    with pytest.raises(BaseMapNotContinuous):
        build_morphism(sheaf, target, {"A": "q", "B": "p", "C": "p"}, {1: [[1.0]], 2: [[1.0]]})
    with pytest.raises(BaseMapNotContinuous):
        build_morphism(sheaf, target, {"A": "p"}, {1: [[1.0]], 2: [[1.0]]})
    with pytest.raises(BaseMapNotContinuous):
        build_morphism(sheaf, target, None, {1: [[1.0]], 2: [[1.0]]})


def test_collapse_onto_a_point():
    sp, ids, sheaf = fix_abc()
    pt = build_explicit_topology("*", ["", "*"])
    target = build_sheaf(pt, {pt.whole_id: Euclidean(1)}, {})
    m = build_morphism(sheaf, target, {"A": "*", "B": "*", "C": "*"}, {pt.whole_id: [[3.0]]})
    assert m.preimage[pt.whole_id] == ids["ABC"]
    a = fix_abc_assignment(sheaf, ids)
    assert pushforward_assignment(m, a)[pt.whole_id][0] == pytest.approx(1.0)


def test_chain_and_sheaf_mismatches():
    _, ids, s1 = fix_abc()
    _, _, s2 = fix_abc()
    m1, m2 = identity_morphism(s1), identity_morphism(s2)
    with pytest.raises(ChainMismatch):
        compose_morphisms(m2, m1)
    with pytest.raises(SheafMismatch):
        pushforward_assignment(m2, fix_abc_assignment(s1, ids))
    a = fix_abc_assignment(s1, ids)
    assert not validate_shva(m1, a, Assignment(s1, {}))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pushforward_respects_the_local_bound(seed):
    rng = np.random.default_rng(seed)
    source, G = random_sheaf(rng)
    m = random_morphism(rng, source, G)
    a = random_assignment(rng, source)
    b = pushforward_assignment(m, a)
    for u in range(len(m.target.space)):
        lhs = local_consistency_radius(m.target, b, u)
        assert lhs <= m.K * local_consistency_radius(source, a, m.preimage[u]) + 1e-9
