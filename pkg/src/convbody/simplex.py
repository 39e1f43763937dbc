"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Problem sizes here are tiny (a few dozen rows), so a dense tableau is
simpler and more predictable than anything clever.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyBodyError, NumericalFailureError

REDUCED_COST_TOL = 1e-10
PIVOT_TOL = 1e-12
FEASIBILITY_TOL = 1e-11


@dataclass
class LPResult:
    x: np.ndarray
    value: float
    iterations: int
    dual_gap: float
    max_reduced_cost: float


def _pivot(T: np.ndarray, basis: list[int], row: int, col: int) -> None:
    T[row] /= T[row, col]
    col_vals = T[:, col].copy()
    col_vals[row] = 0.0
    T -= np.outer(col_vals, T[row])
    T[:, col] = 0.0
    T[row, col] = 1.0
    basis[row] = col


def _reduced_costs(T, basis, cost):
    # r_j = c_j - c_B^T B^{-1} A_j, with B^{-1}A already stored in T
    return cost - cost[basis] @ T[:, :-1]


def _run_simplex(T, basis, cost, allowed, max_iter):
    """Maximize ``cost`` over the tableau in place; return iteration count."""
    for it in range(max_iter):
        r = _reduced_costs(T, basis, cost)
        r[~allowed] = 0.0
        entering = np.flatnonzero(r > REDUCED_COST_TOL)
        if entering.size == 0:
            return it
        col = int(entering[0])
        column = T[:, col]
        candidates = np.flatnonzero(column > PIVOT_TOL)
        if candidates.size == 0:
            raise NumericalFailureError("LP is unbounded", {"entering": col})
        ratios = T[candidates, -1] / column[candidates]
        best = ratios.min()
        ties = candidates[ratios <= best + 1e-12 * max(1.0, abs(best))]
        row = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, basis, row, col)
    raise NumericalFailureError("simplex iteration cap reached", {"max_iter": max_iter})


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, nonneg=None, max_iter=None) -> LPResult:
    """Maximize ``c @ x`` subject to ``A_ub x <= b_ub`` and ``A_eq x = b_eq``.

    Variables are free unless flagged in the boolean mask ``nonneg``.
    Raises :class:`EmptyBodyError` when infeasible and
    :class:`NumericalFailureError` when unbounded.
    """
    c = np.asarray(c, dtype=float)
    k = c.size
    A_ub = np.zeros((0, k)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, k)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, k)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, k)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    nonneg = np.zeros(k, dtype=bool) if nonneg is None else np.asarray(nonneg, dtype=bool)

    # x_free = p - q; nonnegative variables keep a single column
    free_idx = np.flatnonzero(~nonneg)
    var_cols = np.concatenate([np.eye(k), -np.eye(k)[:, free_idx]], axis=1)  # x = var_cols @ z
    n_struct = var_cols.shape[1]
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq
    n_cols = n_struct + m_ub + m  # structural, slacks, artificials

    A = np.zeros((m, n_cols))
    A[:m_ub, :n_struct] = A_ub @ var_cols
    A[m_ub:, :n_struct] = A_eq @ var_cols
    A[:m_ub, n_struct:n_struct + m_ub] = np.eye(m_ub)
    rhs = np.concatenate([b_ub, b_eq])
    flip = rhs < 0
    A[flip] *= -1.0
    rhs = np.abs(rhs)

    art0 = n_struct + m_ub
    basis = []
    for i in range(m):
        if i < m_ub and not flip[i]:
            basis.append(n_struct + i)
        else:
            A[i, art0 + i] = 1.0
            basis.append(art0 + i)
    T = np.hstack([A, rhs[:, None]])
    max_iter = max_iter or 50 * (m + n_cols + 10)

    is_art = np.zeros(n_cols, dtype=bool)
    is_art[art0:] = True
    iterations = 0
    if any(b >= art0 for b in basis):
        phase1 = np.where(is_art, -1.0, 0.0)
        iterations += _run_simplex(T, basis, phase1, np.ones(n_cols, dtype=bool), max_iter)
        infeas = T[:, -1] @ is_art[basis].astype(float)
        if infeas > FEASIBILITY_TOL * max(1.0, np.abs(rhs).max(initial=0.0)):
            raise EmptyBodyError(f"LP infeasible (phase-1 residual {infeas:.3e})")
        # drive zero-level artificials out of the basis; drop redundant rows
        keep = []
        for i in range(m):
            if is_art[basis[i]]:
                cand = np.flatnonzero((np.abs(T[i, :art0]) > 1e-9))
                if cand.size:
                    _pivot(T, basis, i, int(cand[0]))
                    keep.append(i)
            else:
                keep.append(i)
        T = T[keep]
        basis = [basis[i] for i in keep]
        rows_kept = keep
    else:
        rows_kept = list(range(m))

    cost = np.zeros(n_cols)
    cost[:n_struct] = c @ var_cols
    allowed = ~is_art
    iterations += _run_simplex(T, basis, cost, allowed, max_iter)

    z = np.zeros(n_cols)
    z[basis] = T[:, -1]
    x = var_cols @ z[:n_struct]
    value = float(c @ x)

    r = _reduced_costs(T, basis, cost)
    r[~allowed] = -np.inf
    max_rc = float(r.max(initial=-np.inf))
    # dual certificate: B^T y = c_B on the original (sign-fixed) rows
    B = A[rows_kept][:, basis]
    try:
        y = np.linalg.solve(B.T, cost[basis])
        gap = abs(float(rhs[rows_kept] @ y) - value)
    except np.linalg.LinAlgError:
        gap = float("nan")
    return LPResult(x=x, value=value, iterations=iterations, dual_gap=gap, max_reduced_cost=max_rc)
