import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from convbody.bodies import Ball, Box, CrossPolytope, Ellipsoid, HPolytope, VPolytope, cube_vertices
from convbody.errors import EmptyBodyError, InvalidArgumentError, NonConvergenceError
from convbody.intersection import (
    ShiftedIntersection, infconv_support, lens_support, lp_support, support_intersection, support_values,
)
from conftest import random_directions

E1 = np.array([1.0, 0.0, 0.0])


def test_zero_shift_ball():
    S = ShiftedIntersection(Ball(3), Ball(3), np.zeros(3))
    assert support_intersection(S, [0.3, 0.4, 0.5]).value == pytest.approx(1.0)


def test_box_shift_example():
    S = ShiftedIntersection(Box.cube(3), Box.cube(3), 0.5 * E1)
    r = support_intersection(S, -E1)
    assert r.method == "closed-box"
    assert r.value == pytest.approx(-(-0.5))


def test_lens_rim_example():
    S = ShiftedIntersection(Ball(2), Ball(2), [1.0, 0.0])
    r = support_intersection(S, [0.0, 1.0])
    assert r.method == "closed-lens"
    assert r.value == pytest.approx(math.sqrt(3) / 2, rel=1e-15)


def test_lens_support_examples():
    assert lens_support(1.0, 1.0) == 1.0
    assert lens_support(1.0, -1.0) == 0.0
    assert lens_support(1.0, 0.0) == pytest.approx(math.sqrt(3) / 2, rel=1e-15)
    with pytest.raises(EmptyBodyError):
        lens_support(2.1, 0.0)


@given(st.floats(0.0, 2.0))
def test_lens_continuity_at_kinks(lam):
    h = lam / 2
    for c in (h, -h):
        left, right = lens_support(lam, np.nextafter(c, -2)), lens_support(lam, np.nextafter(c, 2))
        assert abs(left - right) <= 1e-12
    assert lens_support(lam, h) == pytest.approx(1.0, abs=1e-12)
    assert lens_support(lam, -h) == pytest.approx(1.0 - lam * lam / 2, abs=1e-12)


def test_lens_case_one_identity(rng):
    # where the shifted ball's own witness is feasible, h_λ = h - |<t, u>|
    lam = 0.7
    t = lam * E1
    U = random_directions(rng, 500, 3)
    S = ShiftedIntersection(Ball(3), Ball(3), t)
    vals = support_values(S, U)
    far = U @ E1 <= -lam / 2
    np.testing.assert_allclose(vals[far], 1.0 - np.abs(U[far] @ t), rtol=0, atol=4e-16)


@pytest.mark.parametrize("K", [Ball(3), Box([1.0, 0.5, 2.0]), Ellipsoid([1.0, 1.5, 2.0]), HPolytope.cube(3)])
def test_monotone_bound(K, rng):
    t = 0.4 * K.radius_bounds()[0] * np.array([1.0, -1.0, 0.5])
    S = ShiftedIntersection(K, K, t)
    U = random_directions(rng, 100, 3)
    vals = support_values(S, U, tol=1e-9)
    h = K.support_points(U)[0]
    assert np.all(vals <= np.minimum(h, h + U @ t) + 1e-9)


def test_lp_support_examples():
    A = np.vstack([np.eye(2), -np.eye(2)])
    r = lp_support(A, np.ones(4), [1.0, 0.0])
    assert r.value == pytest.approx(1.0) and r.witness[0] == pytest.approx(1.0)
    # cube ∩ (0.5 e1 + cube)
    A2 = np.vstack([A, A])
    b2 = np.concatenate([np.ones(4), np.ones(4) + A @ [0.5, 0.0]])
    assert lp_support(A2, b2, [-1.0, 0.0]).value == pytest.approx(-(-0.5))


def test_lp_support_infeasible():
    A = np.array([[1.0], [-1.0]])
    with pytest.raises(EmptyBodyError):
        lp_support(A, [-1.0, -1.0], [1.0])


def test_box_vs_simplex(rng):
    K = Box([1.0, 0.5, 2.0])
    H, V = HPolytope(*K.h_rep()), VPolytope(cube_vertices(3) * K.half_sides)
    for _ in range(30):
        t = rng.uniform(-1.5, 1.5, 3) * K.half_sides
        u = random_directions(rng, 1, 3)[0]
        ref = support_intersection(ShiftedIntersection(K, K, t), u).value
        for L in (H, V):
            r = support_intersection(ShiftedIntersection(H, L, t), u)
            assert r.method == "simplex"
            assert r.value == pytest.approx(ref, abs=1e-9)


@pytest.mark.parametrize("method,tol", [("ellipsoid", 1e-6), ("subgradient", 5e-3)])
def test_infconv_ball_lens(method, tol):
    S = ShiftedIntersection(Ellipsoid([1.0, 1.0, 1.0]), Ellipsoid([1.0, 1.0, 1.0]), 0.5 * E1)
    u = np.array([0.2, 0.9, -0.3])
    u /= np.linalg.norm(u)
    r = infconv_support(S, u, tol=tol, method=method)
    assert r.value == pytest.approx(lens_support(0.5, u[0]), abs=tol)
    assert r.certified_gap <= 10 * tol
    assert np.all(S.K.contains(r.witness[None], 1e-8)) and np.all(S.L.contains((r.witness - S.t)[None], 1e-8))


def test_infconv_own_cap_exact():
    S = ShiftedIntersection(Ellipsoid([1.0, 1.0, 1.0]), Ellipsoid([1.0, 1.0, 1.0]), 0.5 * E1)
    assert infconv_support(S, E1).value == pytest.approx(1.0, abs=1e-12)


def test_infconv_box_pair(rng):
    # force the generic path on a polytope pair by wrapping the cube as an ellipsoid-free body
    K = CrossPolytope(3, 1.0)
    S = ShiftedIntersection(K, Ellipsoid([1.0, 1.0, 1.0]), 0.3 * E1)
    for u in random_directions(rng, 20, 3):
        r = infconv_support(S, u, tol=1e-8)
        assert r.value <= min(K.support_points(u)[0][0], 1.0 + 0.3 * u[0]) + 1e-9
        assert r.certified_gap <= 1e-7


def test_infconv_cube_matches_box(rng):
    # the generic solver on two boxes, compared with the closed form
    from convbody.intersection import _infconv_batch

    K = Box.cube(3)
    S = ShiftedIntersection(K, K, 0.3 * E1)
    U = random_directions(rng, 50, 3)
    vals = _infconv_batch(S, U, tol=1e-9)[0]
    np.testing.assert_allclose(vals, support_values(S, U), atol=1e-8)


def test_infconv_zero_shift(rng):
    E = Ellipsoid([1.0, 2.0, 0.5])
    S = ShiftedIntersection(E, E, np.zeros(3))
    for u in random_directions(rng, 5, 3):
        assert infconv_support(S, u).value == pytest.approx(E.support_points(u)[0][0], abs=1e-9)


def test_infconv_ellipsoid_1d():
    E = Ellipsoid([2.0])
    S = ShiftedIntersection(E, E, [1.0])
    assert infconv_support(S, [-1.0]).value == pytest.approx(1.0)
    assert infconv_support(S, [1.0]).value == pytest.approx(2.0)


def test_infconv_iteration_cap_raises():
    E = Ellipsoid([1.0, 1.5, 2.0])
    S = ShiftedIntersection(E, E, 0.5 * E1)  # u = e2 is a rim direction
    with pytest.raises(NonConvergenceError) as info:
        infconv_support(S, [0.0, 1.0, 0.0], tol=1e-14, max_iter=5)
    assert info.value.best_value is not None


def test_empty_intersections():
    with pytest.raises(EmptyBodyError):
        ShiftedIntersection(Ball(3), Ball(3), 2.1 * E1)
    with pytest.raises(EmptyBodyError):
        support_intersection(ShiftedIntersection(Box.cube(2), Box([0.1, 0.1]), [2.0, 0.0]), [1.0, 0.0])
    with pytest.raises(InvalidArgumentError):
        ShiftedIntersection(Ball(2), Ball(3), np.zeros(2))
