from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kanskew.errors import NotHyperbolic, NotUnimodular, ParallelLeaves
from kanskew.torus import (
    STABLE,
    UNSTABLE,
    LeafSegment,
    TorusPoint,
    analyze_automorphism,
    fixed_points_exact,
    lattice_points_in_leaf_box,
    leaf_intersection,
    leaf_offset,
    torus_delta,
)

KAN = ((3, 1), (2, 1))


def test_kan_eigendata():
    A = analyze_automorphism(KAN)
    # eigenvalues 2 +- sqrt(3)
    assert A.eigenvalue_u == pytest.approx(2 + 3 ** 0.5, rel=1e-15)
    assert A.eigenvalue_s == pytest.approx(2 - 3 ** 0.5, rel=1e-14)
    M = np.array(KAN, float)
    for lam, d in ((A.eigenvalue_u, A.dir_u), (A.eigenvalue_s, A.dir_s)):
        assert np.allclose(M @ d, lam * np.asarray(d), atol=1e-14)
        assert np.linalg.norm(d) == pytest.approx(1.0)
    sv = np.linalg.svd(M, compute_uv=False)
    assert A.norm == pytest.approx(sv[0])
    assert A.conorm == pytest.approx(0.25878, abs=5e-6)
    assert A.norm == pytest.approx(3.86433, abs=5e-6)


def test_fixed_points_exact():
    A = analyze_automorphism(KAN)
    assert fixed_points_exact(A) == [(Fraction(0), Fraction(0)), (Fraction(1, 2), Fraction(0))]
    # (A - I) x integral for each, and det(A - I) = -2 fixed points in total
    for x1, x2 in fixed_points_exact(A):
        assert ((3 * x1 + x2 - x1) % 1, (2 * x1 + x2 - x2) % 1) == (0, 0)


def test_cat_map_has_one_fixed_point():
    A = analyze_automorphism(((2, 1), (1, 1)))
    assert len(A.fixed_points) == 1


def test_rejections():
    with pytest.raises(NotUnimodular):
        analyze_automorphism(((2, 0), (0, 1)))
    with pytest.raises(NotHyperbolic):
        analyze_automorphism(((1, 1), (0, 1)))
    with pytest.raises(NotHyperbolic):
        analyze_automorphism(((0, -1), (1, 0)))
    with pytest.raises(ValueError):
        analyze_automorphism(((1.5, 1), (1, 1)))


def test_power_and_apply():
    A = analyze_automorphism(KAN)
    assert A.power(2) == ((11, 4), (8, 3))
    assert A.power(-1) == ((1, -1), (-2, 3))
    x = TorusPoint(0.1, 0.7)
    y = A.apply(A.apply(x), -1)
    assert np.allclose(torus_delta(x.as_array(), y.as_array()), 0.0, atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True),
       st.floats(-0.4, 0.4), st.floats(-0.4, 0.4))
def test_leaf_intersection_lies_on_both_leaves(a1, a2, s, u):
    A = analyze_automorphism(KAN)
    b1 = TorusPoint(a1, a2)
    z = TorusPoint(*(b1.as_array() + s * np.asarray(A.dir_s)))
    b2 = TorusPoint(*(z.as_array() - u * np.asarray(A.dir_u)))
    r = leaf_intersection(A, LeafSegment(b1, STABLE, 0.5), LeafSegment(b2, UNSTABLE, 0.5))
    assert r is not None
    _, across1 = leaf_offset(A, b1, r, STABLE)
    _, across2 = leaf_offset(A, b2, r, UNSTABLE)
    assert abs(across1) < 1e-10 and abs(across2) < 1e-10


def test_parallel_leaves():
    A = analyze_automorphism(KAN)
    seg = LeafSegment(TorusPoint(0, 0), STABLE, 0.1)
    with pytest.raises(ParallelLeaves):
        leaf_intersection(A, seg, seg)


def test_stable_leaf_contracts():
    A = analyze_automorphism(KAN)
    x = TorusPoint(0.3, 0.2)
    y = TorusPoint(*(x.as_array() + 0.05 * np.asarray(A.dir_s)))
    along, across = leaf_offset(A, A.apply(x), A.apply(y), STABLE)
    assert along == pytest.approx(0.05 * A.eigenvalue_s, rel=1e-9)
    assert abs(across) < 1e-12


def test_lattice_points_brute_force():
    A = analyze_automorphism(KAN)
    rng = np.random.default_rng(0)
    for _ in range(20):
        off = rng.random(2) - 0.5
        hs, hu = rng.random(2) * 1.5
        got = lattice_points_in_leaf_box(A, off, hs, hu)
        want = []
        for n1 in range(-6, 7):
            for n2 in range(-6, 7):
                sig, bet = A.to_leaf(off + np.array([n1, n2]))
                if abs(sig) <= hs and abs(bet) <= hu:
                    want.append((n1, n2))
        assert got == want
