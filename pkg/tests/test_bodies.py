import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from convbody.bodies import (
    Ball, Box, CrossPolytope, Ellipsoid, HPolytope, VPolytope, body_from_spec, cube_vertices, gauge,
    gauge_bisect, membership, support,
)
from convbody.errors import InvalidArgumentError
from conftest import random_directions


def all_bodies():
    return [
        Ball(3, 1.5),
        Box([1.0, 0.5, 2.0]),
        Ellipsoid([2.0, 1.0, 0.5]),
        CrossPolytope(3, 1.2),
        HPolytope.cube(3, 0.7),
        VPolytope(cube_vertices(3)),
        VPolytope(CrossPolytope(3, 2.0).vertices()),
    ]


BODIES = all_bodies()
IDS = [b.kind for b in BODIES]


def test_support_examples():
    u = np.array([0.6, 0.0, 0.8])
    r = support(Ball(3), u)
    assert r.value == 1.0
    np.testing.assert_allclose(r.witness, u)
    assert support(Box.cube(3), np.ones(3) / math.sqrt(3)).value == pytest.approx(math.sqrt(3), rel=1e-15)
    assert support(Ellipsoid([2.0, 1.0]), [1.0, 0.0]).value == 2.0


def test_support_closed_forms(rng):
    U = random_directions(rng, 50, 3)
    s = np.array([1.0, 0.5, 2.0])
    np.testing.assert_allclose(Box(s).support_points(U)[0], np.abs(U) @ s)
    a = np.array([2.0, 1.0, 0.5])
    np.testing.assert_allclose(Ellipsoid(a).support_points(U)[0], np.sqrt((U**2) @ a**2))
    np.testing.assert_allclose(CrossPolytope(3, 1.2).support_points(U)[0], 1.2 * np.abs(U).max(axis=1))


def test_membership_examples():
    assert membership(Ball(3), np.zeros(3))
    assert not membership(Box.cube(3), [1.0000001, 0.0, 0.0])
    assert membership(CrossPolytope(2, 1.0), [0.5, 0.5])
    assert membership(VPolytope(cube_vertices(3)), [1.0, 1.0, 0.999])
    assert not membership(VPolytope(cube_vertices(3)), [1.0, 1.0, 1.0001])


def test_gauge_examples():
    assert gauge(Box.cube(3), [2.0, 0.0, 0.0]) == 2.0
    assert gauge(Ball(2, 2.0), [1.0, 0.0]) == 0.5
    assert gauge(HPolytope.cube(3), [1.0, 1.0, 1.0]) == pytest.approx(1.0, rel=1e-12)
    assert gauge_bisect(HPolytope.cube(3), [1.0, 1.0, 1.0]) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(InvalidArgumentError):
        gauge(Ball(2), [0.0, 0.0])


@pytest.mark.parametrize("body", BODIES, ids=IDS)
def test_witness_contract(body, rng):
    U = random_directions(rng, 30, 3)
    vals, W = body.support_points(U)
    np.testing.assert_allclose(np.einsum("ij,ij->i", W, U), vals, atol=1e-9)
    assert np.all(body.contains(W, tol=1e-9))


@pytest.mark.parametrize("body", BODIES, ids=IDS)
def test_support_symmetric(body, rng):
    U = random_directions(rng, 30, 3)
    np.testing.assert_allclose(body.support_points(U)[0], body.support_points(-U)[0], rtol=1e-12)


@pytest.mark.parametrize("body", BODIES, ids=IDS)
def test_subadditive(body, rng):
    U, V = rng.standard_normal((2, 30, 3))
    h = lambda X: body.support_points(X)[0]
    assert np.all(h(U + V) <= h(U) + h(V) + 1e-12)


@pytest.mark.parametrize("body", BODIES, ids=IDS)
def test_gauge_boundary(body, rng):
    X = 3.0 * rng.standard_normal((10, 3))
    g = body.gauge_of(X)
    B = X / g[:, None]
    assert np.all(body.contains(B * (1 - 1e-9)))
    assert not np.any(body.contains(B * (1 + 1e-6)))


@pytest.mark.parametrize("body", BODIES, ids=IDS)
def test_radius_bounds_sandwich(body, rng):
    inner, outer = body.radius_bounds()
    U = random_directions(rng, 200, 3)
    h = body.support_points(U)[0]
    assert np.all(h >= inner - 1e-12) and np.all(h <= outer + 1e-12)


@pytest.mark.parametrize("body", BODIES, ids=IDS)
def test_spec_round_trip(body, rng):
    clone = body_from_spec(body.to_spec())
    U = random_directions(rng, 10, 3)
    np.testing.assert_allclose(clone.support_points(U)[0], body.support_points(U)[0])


@pytest.mark.parametrize("body", BODIES, ids=IDS)
def test_scaling(body, rng):
    U = random_directions(rng, 10, 3)
    np.testing.assert_allclose(body.scaled(2.5).support_points(U)[0], 2.5 * body.support_points(U)[0], rtol=1e-12)


def test_hpolytope_cube_matches_box(rng):
    U = random_directions(rng, 1000, 3)
    np.testing.assert_allclose(HPolytope.cube(3).support_points(U)[0], Box.cube(3).support_points(U)[0], atol=1e-9)


def test_hpolytope_matches_vertex_enumeration(rng):
    # random symmetric H-polytope; vertices from all n-subsets of active rows
    A = rng.standard_normal((5, 3))
    A = np.vstack([A, -A])
    b = rng.uniform(0.5, 1.5, 5)
    b = np.concatenate([b, b])
    P = HPolytope(A, b)
    verts = []
    for rows in itertools.combinations(range(10), 3):
        M = A[list(rows)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        y = np.linalg.solve(M, b[list(rows)])
        if np.all(A @ y <= b + 1e-9):
            verts.append(y)
    Q = VPolytope(np.array(verts))
    U = random_directions(rng, 100, 3)
    np.testing.assert_allclose(P.support_points(U)[0], Q.support_points(U)[0], atol=1e-9)


@pytest.mark.parametrize("bad", [
    lambda: Ball(3, 0.0),
    lambda: Ball(0, 1.0),
    lambda: Box([1.0, -1.0]),
    lambda: Ellipsoid([1.0, 0.0]),
    lambda: CrossPolytope(2, -1.0),
    lambda: HPolytope([[1.0, 0.0], [0.0, 1.0]], [1.0, 1.0]),  # not symmetric
    lambda: HPolytope([[1.0, 0.0], [-1.0, 0.0]], [1.0, 1.0]),  # unbounded slab
    lambda: HPolytope([[1.0], [-1.0]], [0.0, 0.0]),
    lambda: VPolytope([[1.0, 0.0], [0.0, 1.0]]),
    lambda: VPolytope([[1.0, 1.0], [-1.0, -1.0]]),  # flat
])
def test_invalid_bodies_rejected(bad):
    with pytest.raises(InvalidArgumentError):
        bad()


@pytest.mark.parametrize("spec", [
    {"type": "ball"},
    {"type": "sphere", "dim": 3},
    {"type": "box", "dim": 2, "half_sides": [1.0, 1.0, 1.0]},
    {"type": "ellipsoid", "dim": 3},
])
def test_bad_specs(spec):
    with pytest.raises(InvalidArgumentError):
        body_from_spec(spec)


def test_dimension_mismatch():
    with pytest.raises(InvalidArgumentError):
        support(Ball(3), [1.0, 0.0])
    with pytest.raises(InvalidArgumentError):
        membership(Box.cube(2), [0.0, 0.0, 0.0])


@given(arrays(np.float64, 3, elements=st.floats(-5, 5)).filter(lambda x: np.linalg.norm(x) > 1e-3))
def test_cross_polytope_gauge_is_l1(x):
    assert CrossPolytope(3, 2.0).gauge_of(x)[0] == pytest.approx(np.abs(x).sum() / 2.0, rel=1e-12)


@given(arrays(np.float64, 3, elements=st.floats(-5, 5)).filter(lambda x: np.linalg.norm(x) > 1e-3))
def test_vpolytope_gauge_matches_box(x):
    assert VPolytope(cube_vertices(3)).gauge_of(x)[0] == pytest.approx(np.abs(x).max(), rel=1e-10)
