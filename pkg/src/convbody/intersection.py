"""Support function of K ∩ (t + L).

Dispatch order is closed form, then LP, then the generic infimal-convolution
solver::

    box / box        -> closed-box   (intersection of two boxes is a box)
    ball / ball      -> closed-lens  (equal radii)
    polytope pairs   -> simplex
    anything else    -> infconv      h(u) = min_v h_K(u - v) + h_L(v) + <t, v>
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .bodies import Ball, Body, Box, polytope_rep
from .errors import EmptyBodyError, InvalidArgumentError, NonConvergenceError, NumericalFailureError
from .geom import as_direction, as_vector
from .simplex import solve_lp

log = logging.getLogger(__name__)

FEASIBILITY_SLACK = 1e-8
INFCONV_MAX_ITER = 10_000


@dataclass(frozen=True)
class SupportSolveReport:
    value: float
    witness: np.ndarray
    method: str
    iterations: int = 0
    certified_gap: float = 0.0


@dataclass(frozen=True)
class ShiftedIntersection:
    """The body K ∩ (t + L)."""

    K: Body
    L: Body
    t: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.K.dim != self.L.dim:
            raise InvalidArgumentError("K and L have different dimensions")
        t = as_vector(self.t, self.K.dim, "shift")
        t.setflags(write=False)
        object.__setattr__(self, "t", t)
        if np.any(t) and self.same_bodies and self.K.gauge_of(t)[0] > 2.0:
            raise EmptyBodyError("K ∩ (t + K) is empty: ||t||_K > 2")

    @property
    def dim(self) -> int:
        return self.K.dim

    @property
    def same_bodies(self) -> bool:
        return self.K is self.L or self.K.to_spec() == self.L.to_spec()

    def center(self) -> np.ndarray:
        """A point of K ∩ (t + L), interior unless the intersection is degenerate.

        Picks z = θ t balancing ||z||_K and ||z - t||_L.
        """
        if not np.any(self.t):
            return np.zeros(self.dim)
        gk, gl = self.K.gauge_of(self.t)[0], self.L.gauge_of(self.t)[0]
        theta = gl / (gk + gl)
        if theta * gk > 1.0 + 1e-12:
            raise EmptyBodyError("no interior point found along the shift segment")
        return theta * self.t

    def method(self) -> str:
        K, L = self.K, self.L
        if isinstance(K, Box) and isinstance(L, Box):
            return "closed-box"
        if isinstance(K, Ball) and isinstance(L, Ball) and K.radius == L.radius:
            return "closed-lens"
        if polytope_rep(K) is not None and polytope_rep(L) is not None:
            return "simplex"
        return "infconv"


# ---------------------------------------------------------------- closed forms

def lens_support(lam, c):
    """Support of B_n ∩ (lam·x + B_n) in a unit direction u with c = <x, u>.

    Works elementwise on arrays. Three regimes: the cap of the unshifted ball
    (c >= lam/2), the cap of the shifted ball (c <= -lam/2), and the rim circle
    in between.
    """
    lam = np.asarray(lam, dtype=float)
    c = np.clip(np.asarray(c, dtype=float), -1.0, 1.0)
    if np.any(lam < 0):
        raise InvalidArgumentError("lens shift must be non-negative")
    if np.any(lam > 2.0):
        raise EmptyBodyError("lens is empty for shift > 2")
    half = 0.5 * lam
    rim = half * c + np.sqrt(np.maximum(1.0 - half * half, 0.0)) * np.sqrt(np.maximum(1.0 - c * c, 0.0))
    out = np.where(c >= half, 1.0, np.where(c <= -half, 1.0 + lam * c, rim))
    return float(out) if out.ndim == 0 else out


def _lens_batch(r, t, U):
    """Values and witnesses for rB ∩ (t + rB) on rows of U (any lengths)."""
    norms = np.linalg.norm(U, axis=1)
    tn = np.linalg.norm(t)
    if tn == 0:
        safe = np.where(norms > 0, norms, 1.0)
        return r * norms, r * U / safe[:, None]
    x = t / tn
    lam = tn / r
    safe = np.where(norms > 0, norms, 1.0)
    Uh = U / safe[:, None]
    c = Uh @ x
    vals = r * norms * lens_support(lam, c)
    perp = Uh - c[:, None] * x
    pn = np.linalg.norm(perp, axis=1)
    perp = perp / np.where(pn > 0, pn, 1.0)[:, None]
    rim = r * (0.5 * lam * x + np.sqrt(max(1.0 - lam * lam / 4.0, 0.0)) * perp)
    W = np.where((c >= lam / 2)[:, None], r * Uh, np.where((c <= -lam / 2)[:, None], t + r * Uh, rim))
    return vals, W


def _box_bounds(S):
    sk, sl = S.K.half_sides, S.L.half_sides
    lo = np.maximum(-sk, -sl + S.t)
    hi = np.minimum(sk, sl + S.t)
    if np.any(lo > hi):
        raise EmptyBodyError("box intersection is empty")
    return lo, hi


def _box_batch(S, U):
    lo, hi = _box_bounds(S)
    W = np.where(U > 0, hi, np.where(U < 0, lo, 0.5 * (lo + hi)))
    return np.einsum("ij,ij->i", W, U), W


# ---------------------------------------------------------------- LP path

def lp_support(A, b, u) -> SupportSolveReport:
    """max <y, u> subject to A y <= b, solved exactly by the dense simplex."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    u = as_vector(u, A.shape[1], "u")
    res = solve_lp(u, A_ub=A, b_ub=b)
    return SupportSolveReport(res.value, res.x, "simplex", res.iterations, res.dual_gap)


def _pair_lp(S, u):
    """LP over y (free) plus convex weights for V-represented factors."""
    n = S.dim
    reps = [(polytope_rep(S.K), np.zeros(n)), (polytope_rep(S.L), S.t)]
    n_mu = sum(rep[1].shape[0] for rep, _ in reps if rep[0] == "v")
    k = n + n_mu
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    off = n
    for rep, shift in reps:
        if rep[0] == "h":
            _, A, b = rep
            A_ub.append(np.hstack([A, np.zeros((A.shape[0], n_mu))]))
            b_ub.append(b + A @ shift)
        else:
            V = rep[1]
            nv = V.shape[0]
            block = np.zeros((n + 1, k))
            block[:n, :n] = np.eye(n)
            block[:n, off:off + nv] = -V.T
            block[n, off:off + nv] = 1.0
            A_eq.append(block)
            b_eq.append(np.concatenate([shift, [1.0]]))
            off += nv
    c = np.concatenate([u, np.zeros(n_mu)])
    nonneg = np.concatenate([np.zeros(n, dtype=bool), np.ones(n_mu, dtype=bool)])
    res = solve_lp(
        c,
        A_ub=np.vstack(A_ub) if A_ub else None,
        b_ub=np.concatenate(b_ub) if b_ub else None,
        A_eq=np.vstack(A_eq) if A_eq else None,
        b_eq=np.concatenate(b_eq) if b_eq else None,
        nonneg=nonneg,
    )
    return SupportSolveReport(res.value, res.x[:n], "simplex", res.iterations, res.dual_gap)


# ---------------------------------------------------------------- infconv path

def _shrink_to_feasible(S, Y, z):
    """Largest s in [0, 1] with z + s (y - z) in K and in t + L, per row."""
    D = Y - z
    lo = np.zeros(Y.shape[0])
    hi = np.ones(Y.shape[0])

    def ok(s):
        P = z + s[:, None] * D
        return S.K.contains(P) & S.L.contains(P - S.t)

    done = ok(hi)
    lo[done] = 1.0
    for _ in range(60):
        if np.all(done | (hi - lo <= 1e-15)):
            break
        mid = 0.5 * (lo + hi)
        good = ok(mid)
        lo = np.where(good, mid, lo)
        hi = np.where(good, hi, mid)
    return z + lo[:, None] * D


def _infconv_1d(S, U):
    lo = max(-S.K.support_points([[-1.0]])[0][0], S.t[0] - S.L.support_points([[-1.0]])[0][0])
    hi = min(S.K.support_points([[1.0]])[0][0], S.t[0] + S.L.support_points([[1.0]])[0][0])
    if lo > hi:
        raise EmptyBodyError("interval intersection is empty")
    W = np.where(U > 0, hi, np.where(U < 0, lo, 0.5 * (lo + hi)))
    return np.einsum("ij,ij->i", W, U), W


def _search_radius(S, U):
    rk, Rk = S.K.radius_bounds()
    rl, _ = S.L.radius_bounds()
    un = np.linalg.norm(U, axis=1)
    denom = rk + rl - np.linalg.norm(S.t)
    if denom > 0.05 * (rk + rl):
        bound = (Rk + rk) * un / denom
    else:
        bound = 100.0 * (Rk + S.L.radius_bounds()[1]) * un
    return bound + 0.5 * un


class _InfconvObjective:
    """phi(v) = h_K(u - v) + h_L(v) + <t, v> and a subgradient, for rows of U."""

    def __init__(self, S, U):
        self.S, self.U = S, U

    def __call__(self, V, rows):
        U = self.U[rows]
        hk, wk = self.S.K.support_points(U - V)
        hl, wl = self.S.L.support_points(V)
        y2 = self.S.t + wl
        phi = hk + hl + V @ self.S.t
        return phi, y2 - wk, wk, y2


def _certify(S, U, best_y1, best_y2, best_phi, rows, z):
    Y = _shrink_to_feasible(S, 0.5 * (best_y1[rows] + best_y2[rows]), z)
    lower = np.einsum("ij,ij->i", Y, U[rows])
    return Y, np.maximum(best_phi[rows] - lower, 0.0)


def _bundle_point(Y1, Y2):
    """Midpoint of sum a_i y1_i and sum a_i y2_i, with a on the simplex
    minimizing |sum a_i (y2_i - y1_i)|.

    At a kink of a polytope the witnesses jump between vertices and no single
    pair is close; a convex combination of recent pairs is.
    """
    from scipy.optimize import nnls

    G = (Y2 - Y1).T
    weight = 1e3 * max(1.0, float(np.abs(G).max()))
    A = np.vstack([G, np.full((1, G.shape[1]), weight)])
    b = np.zeros(A.shape[0])
    b[-1] = weight
    a, _ = nnls(A, b)
    a /= a.sum()
    return 0.5 * (a @ Y1 + a @ Y2)


def _certify_bundle(S, U, hist_y1, hist_y2, n_hist, best_phi, rows, z):
    B = hist_y1.shape[1]
    mids = np.array([_bundle_point(hist_y1[i, :min(n_hist[i], B)], hist_y2[i, :min(n_hist[i], B)]) for i in rows])
    Y = _shrink_to_feasible(S, mids, z)
    lower = np.einsum("ij,ij->i", Y, U[rows])
    return Y, np.maximum(best_phi[rows] - lower, 0.0)


def _infconv_rim(S, U, tol, max_iter, method):
    """Iterative solve for rows where neither single-body witness is feasible."""
    m, n = U.shape
    obj = _InfconvObjective(S, U)
    z = S.center()
    V = 0.5 * U.copy()
    best_phi = np.full(m, np.inf)
    best_g = np.full(m, np.inf)
    best_y1 = np.zeros((m, n))
    best_y2 = np.zeros((m, n))
    lower_e = np.full(m, -np.inf)
    witness = np.zeros((m, n))
    gap = np.full(m, np.inf)
    iters = np.zeros(m, dtype=int)
    active = np.ones(m, dtype=bool)

    if method == "ellipsoid":
        R = _search_radius(S, U)
        P = (R**2)[:, None, None] * np.eye(n)
        hist = max(8, 4 * n)
        hist_y1 = np.zeros((m, hist, n))
        hist_y2 = np.zeros((m, hist, n))
        n_hist = np.zeros(m, dtype=int)
    elif method == "subgradient":
        step_scale = S.K.radius_bounds()[1]
        avg_y = np.zeros((m, n))
    else:
        raise InvalidArgumentError(f"unknown infconv method {method!r}")

    check_every = 10 if method == "ellipsoid" else 200
    for k in range(1, max_iter + 1):
        rows = np.flatnonzero(active)
        if rows.size == 0:
            break
        iters[rows] = k
        Vr = V[rows]
        phi, g, y1, y2 = obj(Vr, rows)
        best_phi[rows] = np.minimum(best_phi[rows], phi)
        gnorm = np.linalg.norm(g, axis=1)
        # the primal certificate only needs a small witness mismatch, not a small phi
        closer = gnorm < best_g[rows]
        cr = rows[closer]
        best_g[cr], best_y1[cr], best_y2[cr] = gnorm[closer], y1[closer], y2[closer]
        stationary = gnorm == 0.0

        if method == "ellipsoid":
            slot = n_hist[rows] % hist
            hist_y1[rows, slot], hist_y2[rows, slot] = y1, y2
            n_hist[rows] += 1
            Pr = P[rows]
            Pg = np.einsum("ijk,ik->ij", Pr, g)
            gPg = np.maximum(np.einsum("ij,ij->i", g, Pg), 0.0)
            sq = np.sqrt(gPg)
            lower_e[rows] = np.maximum(lower_e[rows], phi - sq)
            lower_e[rows[stationary]] = phi[stationary]
            move = (sq > 1e-300) & ~stationary
            if n > 1:
                b = Pg[move] / sq[move, None]
                V[rows[move]] = Vr[move] - b / (n + 1)
                P[rows[move]] = (n * n / (n * n - 1.0)) * (
                    Pr[move] - (2.0 / (n + 1)) * np.einsum("ij,ik->ijk", b, b)
                )
            ready = (best_phi[rows] - lower_e[rows] <= 0.5 * tol) | ~move
        else:
            avg_y[rows] += (0.5 * (y1 + y2) - avg_y[rows]) / k
            step = step_scale / np.sqrt(k)
            mv = ~stationary
            V[rows[mv]] = Vr[mv] - step * g[mv] / gnorm[mv, None]
            ready = stationary | np.full(rows.size, True)

        if k % check_every == 0 or k == max_iter or np.any(ready & stationary):
            cand = rows[ready]
            if cand.size:
                if method == "ellipsoid":
                    Y, gp = _certify(S, U, best_y1, best_y2, best_phi, cand, z)
                    # converged by the ellipsoid bound but not certified: nonsmooth optimum
                    kink = gp > tol
                    if np.any(kink):
                        Yb, gb = _certify_bundle(S, U, hist_y1, hist_y2, n_hist, best_phi, cand[kink], z)
                        better = gb < gp[kink]
                        ki = np.flatnonzero(kink)[better]
                        Y[ki], gp[ki] = Yb[better], gb[better]
                else:
                    Y = _shrink_to_feasible(S, avg_y[cand], z)
                    gp = np.maximum(best_phi[cand] - np.einsum("ij,ij->i", Y, U[cand]), 0.0)
                improved = gp < gap[cand]
                ci = cand[improved]
                gap[ci], witness[ci] = gp[improved], Y[improved]
                active[cand[gp <= tol]] = False
    return best_phi, witness, gap, iters


def _infconv_batch(S, U, tol=1e-8, max_iter=INFCONV_MAX_ITER, method="ellipsoid", strict=True):
    """Vectorized infconv over rows of U; returns values, witnesses, gaps, iterations."""
    U = np.asarray(U, dtype=float)
    m, n = U.shape
    if n == 1:
        vals, W = _infconv_1d(S, U)
        return vals, W, np.zeros(m), np.zeros(m, dtype=int)
    S.center()  # raises when the intersection is obviously empty
    vals = np.empty(m)
    W = np.empty((m, n))
    gaps = np.zeros(m)
    iters = np.zeros(m, dtype=int)

    # single-body witnesses: optimal v is 0 or u and the value is exact
    hk, wk = S.K.support_points(U)
    own = S.L.contains(wk - S.t, 1e-15)
    vals[own], W[own] = hk[own], wk[own]
    rest = np.flatnonzero(~own)
    if rest.size:
        hl, wl = S.L.support_points(U[rest])
        y = S.t + wl
        shifted = S.K.contains(y, 1e-15)
        sr = rest[shifted]
        vals[sr] = hl[shifted] + U[sr] @ S.t
        W[sr] = y[shifted]
        rest = rest[~shifted]
    if rest.size:
        v, w, g, it = _infconv_rim(S, U[rest], tol, max_iter, method)
        vals[rest], W[rest], gaps[rest], iters[rest] = v, w, g, it
        bad = g > 10 * tol
        if strict and np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise NonConvergenceError(
                f"infconv stopped with certified gap {g[i]:.3e} > 10*tol",
                best_value=float(v[i]),
                gap=float(g[i]),
                diagnostics={"direction": U[rest][i].tolist()},
            )
    return vals, W, gaps, iters


def infconv_support(S: ShiftedIntersection, u, tol: float = 1e-8, max_iter: int = INFCONV_MAX_ITER,
                    method: str = "ellipsoid") -> SupportSolveReport:
    """Support of K ∩ (t + L) from the two support oracles alone.

    Minimizes the convex function phi(v) = h_K(u - v) + h_L(v) + <t, v> whose
    minimum is the support value. Support witnesses give subgradients.
    ``method="ellipsoid"`` runs central-cut ellipsoid iterations,
    ``"subgradient"`` uses normalized steps R/sqrt(k) from v = u/2. The
    reported gap is certified by a primal point feasible for both bodies.
    """
    u = as_vector(u, S.dim, "u")
    vals, W, gaps, iters = _infconv_batch(S, u[None, :], tol, max_iter, method)
    return SupportSolveReport(float(vals[0]), W[0], "infconv", int(iters[0]), float(gaps[0]))


# ---------------------------------------------------------------- dispatch

def support_intersection(S: ShiftedIntersection, u, tol: float = 1e-8) -> SupportSolveReport:
    """Support value of K ∩ (t + L) in direction ``u`` with its witness."""
    u = as_direction(u, S.dim)
    method = S.method()
    if method == "closed-box":
        vals, W = _box_batch(S, u[None, :])
        return SupportSolveReport(float(vals[0]), W[0], method)
    if method == "closed-lens":
        vals, W = _lens_batch(S.K.radius, S.t, u[None, :])
        return SupportSolveReport(float(vals[0]), W[0], method)
    if method == "simplex":
        return _pair_lp(S, u)
    return infconv_support(S, u, tol)


def support_values(S: ShiftedIntersection, U, tol: float = 1e-8) -> np.ndarray:
    """Support values on every row of U via the dispatched method."""
    U = np.asarray(U, dtype=float)
    method = S.method()
    if method == "closed-box":
        return _box_batch(S, U)[0]
    if method == "closed-lens":
        return _lens_batch(S.K.radius, S.t, U)[0]
    if method == "simplex":
        out = np.empty(U.shape[0])
        for i, u in enumerate(U):
            try:
                out[i] = _pair_lp(S, u).value
            except NumericalFailureError as exc:
                raise NumericalFailureError(f"{exc} (direction {u.tolist()})", exc.diagnostics) from exc
        return out
    return _infconv_batch(S, U, tol)[0]
