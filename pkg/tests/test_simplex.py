import numpy as np
import pytest

from convbody.errors import EmptyBodyError, NumericalFailureError
from convbody.simplex import solve_lp


def test_box_lp():
    A = np.vstack([np.eye(2), -np.eye(2)])
    r = solve_lp([1.0, 2.0], A, np.ones(4))
    assert r.value == pytest.approx(3.0, abs=1e-12)
    np.testing.assert_allclose(r.x, [1.0, 1.0])
    assert r.dual_gap < 1e-12
    assert r.max_reduced_cost <= 1e-10


def test_negative_rhs_needs_phase_one():
    # x >= 1, y >= 2, x + y <= 5; max x
    A = np.array([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]])
    r = solve_lp([1.0, 0.0], A, [-1.0, -2.0, 5.0])
    assert r.value == pytest.approx(3.0)


def test_equality_constraints_and_nonneg():
    r = solve_lp([1.0, 1.0, 0.0], A_eq=[[1.0, 2.0, 1.0]], b_eq=[4.0], nonneg=[True, True, True])
    assert r.value == pytest.approx(4.0)


def test_infeasible_raises_empty_body():
    A = np.array([[1.0], [-1.0]])
    with pytest.raises(EmptyBodyError):
        solve_lp([1.0], A, [-1.0, -1.0])


def test_unbounded_raises():
    with pytest.raises(NumericalFailureError):
        solve_lp([1.0, 0.0], [[0.0, 1.0]], [1.0])


def test_degenerate_vertex_terminates():
    # many constraints active at the optimum (0, 1); Bland's rule must not cycle
    A = np.array([[1.0, 1.0], [-1.0, 1.0], [0.0, 1.0], [0.5, 1.0], [-0.5, 1.0], [0.0, -1.0]])
    r = solve_lp([0.0, 1.0], A, [1.0, 1.0, 1.0, 1.0, 1.0, 0.0])
    assert r.value == pytest.approx(1.0)


def test_random_lps_agree_with_scipy(rng):
    from scipy.optimize import linprog

    for _ in range(30):
        n, m = rng.integers(2, 5), rng.integers(4, 12)
        A = rng.standard_normal((m, n))
        A = np.vstack([A, -A])
        b = rng.uniform(0.5, 2.0, m)
        b = np.concatenate([b, b])
        c = rng.standard_normal(n)
        ref = linprog(-c, A_ub=A, b_ub=b, bounds=[(None, None)] * n, method="highs")
        if ref.status == 3:
            with pytest.raises(NumericalFailureError):
                solve_lp(c, A, b)
            continue
        ours = solve_lp(c, A, b)
        assert ours.value == pytest.approx(-ref.fun, abs=1e-9)
