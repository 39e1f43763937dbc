"""Convex, origin-symmetric bodies described only through oracles.

Every body exposes batched ``support_points`` (values and maximizers),
``contains`` and ``gauge_of`` methods working on ``(m, n)`` arrays. The
module-level :func:`support`, :func:`membership` and :func:`gauge` wrap them
for single vectors with argument checking.

JSON body specs::

    {"type": "ball",          "dim": n, "radius": r}
    {"type": "box",           "dim": n, "half_sides": [s_1, ..., s_n]}   # or "half_side": s
    {"type": "ellipsoid",     "dim": n, "semi_axes": [a_1, ..., a_n]}
    {"type": "hpolytope",     "dim": n, "A": [[...], ...], "b": [...]}
    {"type": "vpolytope",     "dim": n, "vertices": [[...], ...]}
    {"type": "crosspolytope", "dim": n, "scale": s}
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import EmptyBodyError, InvalidArgumentError, NumericalFailureError
from .geom import as_vector
from .simplex import solve_lp

GAUGE_RTOL = 1e-12


@dataclass(frozen=True)
class SupportResult:
    value: float
    witness: np.ndarray


def _as_batch(U, n):
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[None, :]
    if U.ndim != 2 or U.shape[1] != n:
        raise InvalidArgumentError(f"expected vectors of dimension {n}, got shape {U.shape}")
    return U


class Body:
    """Common interface; subclasses fill in the oracles."""

    kind = "body"
    dim: int

    def support_points(self, U):
        raise NotImplementedError

    def contains(self, Y, tol=0.0):
        return self.gauge_of(Y) <= 1.0 + tol

    def gauge_of(self, X):
        raise NotImplementedError

    def radius_bounds(self):
        """(inner, outer) radii: B(inner) ⊆ K ⊆ B(outer)."""
        raise NotImplementedError

    def scaled(self, s: float) -> "Body":
        raise NotImplementedError

    def to_spec(self) -> dict:
        raise NotImplementedError

    def _check(self, U):
        return _as_batch(U, self.dim)


class Ball(Body):
    kind = "ball"

    def __init__(self, dim: int, radius: float = 1.0):
        if dim < 1 or not radius > 0:
            raise InvalidArgumentError("ball needs dim >= 1 and radius > 0")
        self.dim, self.radius = int(dim), float(radius)

    def support_points(self, U):
        U = self._check(U)
        norms = np.linalg.norm(U, axis=1)
        safe = np.where(norms > 0, norms, 1.0)
        return self.radius * norms, self.radius * U / safe[:, None]

    def gauge_of(self, X):
        return np.linalg.norm(self._check(X), axis=1) / self.radius

    def contains(self, Y, tol=0.0):
        Y = self._check(Y)
        return np.einsum("ij,ij->i", Y, Y) <= (self.radius * (1.0 + tol)) ** 2

    def radius_bounds(self):
        return self.radius, self.radius

    def scaled(self, s):
        return Ball(self.dim, self.radius * s)

    def to_spec(self):
        return {"type": "ball", "dim": self.dim, "radius": self.radius}


class Box(Body):
    kind = "box"

    def __init__(self, half_sides):
        s = as_vector(half_sides, name="half_sides")
        if np.any(s <= 0):
            raise InvalidArgumentError("box half-sides must be positive")
        self.half_sides = s
        self.half_sides.setflags(write=False)
        self.dim = s.size

    @classmethod
    def cube(cls, dim: int, half_side: float = 1.0) -> "Box":
        return cls(np.full(dim, float(half_side)))

    def support_points(self, U):
        U = self._check(U)
        return np.abs(U) @ self.half_sides, np.sign(U) * self.half_sides

    def gauge_of(self, X):
        return np.max(np.abs(self._check(X)) / self.half_sides, axis=1)

    def contains(self, Y, tol=0.0):
        return np.all(np.abs(self._check(Y)) <= self.half_sides * (1.0 + tol), axis=1)

    def radius_bounds(self):
        return float(self.half_sides.min()), float(np.linalg.norm(self.half_sides))

    def h_rep(self):
        eye = np.eye(self.dim)
        return np.vstack([eye, -eye]), np.concatenate([self.half_sides, self.half_sides])

    def scaled(self, s):
        return Box(self.half_sides * s)

    def to_spec(self):
        return {"type": "box", "dim": self.dim, "half_sides": self.half_sides.tolist()}


class Ellipsoid(Body):
    """Axis-aligned ellipsoid sum (y_j / a_j)^2 <= 1."""

    kind = "ellipsoid"

    def __init__(self, semi_axes):
        a = as_vector(semi_axes, name="semi_axes")
        if np.any(a <= 0):
            raise InvalidArgumentError("ellipsoid semi-axes must be positive")
        self.semi_axes = a
        self.semi_axes.setflags(write=False)
        self.dim = a.size

    def support_points(self, U):
        U = self._check(U)
        a2u = U * self.semi_axes**2
        h = np.sqrt(np.einsum("ij,ij->i", a2u, U))
        safe = np.where(h > 0, h, 1.0)
        return h, a2u / safe[:, None]

    def gauge_of(self, X):
        return np.linalg.norm(self._check(X) / self.semi_axes, axis=1)

    def contains(self, Y, tol=0.0):
        Z = self._check(Y) / self.semi_axes
        return np.einsum("ij,ij->i", Z, Z) <= (1.0 + tol) ** 2

    def radius_bounds(self):
        return float(self.semi_axes.min()), float(self.semi_axes.max())

    def scaled(self, s):
        return Ellipsoid(self.semi_axes * s)

    def to_spec(self):
        return {"type": "ellipsoid", "dim": self.dim, "semi_axes": self.semi_axes.tolist()}


class CrossPolytope(Body):
    """s · B_{l1}: the convex hull of ±s e_j."""

    kind = "crosspolytope"

    def __init__(self, dim: int, scale: float = 1.0):
        if dim < 1 or not scale > 0:
            raise InvalidArgumentError("cross-polytope needs dim >= 1 and scale > 0")
        self.dim, self.scale = int(dim), float(scale)

    def support_points(self, U):
        U = self._check(U)
        j = np.argmax(np.abs(U), axis=1)
        rows = np.arange(U.shape[0])
        W = np.zeros_like(U)
        W[rows, j] = self.scale * np.sign(U[rows, j])
        return self.scale * np.abs(U[rows, j]), W

    def gauge_of(self, X):
        return np.abs(self._check(X)).sum(axis=1) / self.scale

    def radius_bounds(self):
        return self.scale / np.sqrt(self.dim), self.scale

    def vertices(self):
        eye = self.scale * np.eye(self.dim)
        return np.vstack([eye, -eye])

    def scaled(self, s):
        return CrossPolytope(self.dim, self.scale * s)

    def to_spec(self):
        return {"type": "crosspolytope", "dim": self.dim, "scale": self.scale}


def _closed_under_negation(P, atol=1e-12):
    for p in P:
        if not np.any(np.all(np.abs(P + p) <= atol * max(1.0, np.abs(p).max()), axis=1)):
            return False
    return True


class HPolytope(Body):
    """{y : A y <= b} with a symmetric row set and b > 0."""

    kind = "hpolytope"

    def __init__(self, A, b):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).ravel()
        if A.shape[0] != b.size or A.shape[0] == 0:
            raise InvalidArgumentError("A and b must have the same number of rows")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise InvalidArgumentError("non-finite constraint data")
        if np.any(b <= 0):
            raise InvalidArgumentError("offsets must be positive (origin interior)")
        if not _closed_under_negation(A / b[:, None], atol=1e-10):
            raise InvalidArgumentError("constraint set is not symmetric")
        self.A, self.b = A, b
        self.A.setflags(write=False)
        self.b.setflags(write=False)
        self.dim = A.shape[1]
        # boundedness: every coordinate direction must have a finite support value
        eye = np.eye(self.dim)
        try:
            self._axis_support = np.array([self._lp(e).value for e in eye])
        except NumericalFailureError as exc:
            raise InvalidArgumentError("constraint set is unbounded") from exc

    @classmethod
    def cube(cls, dim: int, half_side: float = 1.0) -> "HPolytope":
        eye = np.eye(dim)
        return cls(np.vstack([eye, -eye]), np.full(2 * dim, float(half_side)))

    def _lp(self, u):
        return solve_lp(u, A_ub=self.A, b_ub=self.b)

    def support_points(self, U):
        U = self._check(U)
        vals = np.empty(U.shape[0])
        W = np.empty_like(U)
        for i, u in enumerate(U):
            res = self._lp(u)
            vals[i], W[i] = res.value, res.x
        return vals, W

    def gauge_of(self, X):
        X = self._check(X)
        return np.max(X @ self.A.T / self.b, axis=1)

    def contains(self, Y, tol=0.0):
        Y = self._check(Y)
        return np.all(Y @ self.A.T <= self.b * (1.0 + tol), axis=1)

    def radius_bounds(self):
        inner = float(np.min(self.b / np.linalg.norm(self.A, axis=1)))
        return inner, float(np.linalg.norm(self._axis_support))

    def h_rep(self):
        return self.A, self.b

    def scaled(self, s):
        return HPolytope(self.A, self.b * s)

    def to_spec(self):
        return {"type": "hpolytope", "dim": self.dim, "A": self.A.tolist(), "b": self.b.tolist()}


class VPolytope(Body):
    """Convex hull of a vertex list closed under negation."""

    kind = "vpolytope"

    def __init__(self, vertices):
        V = np.atleast_2d(np.asarray(vertices, dtype=float))
        if V.shape[0] == 0 or not np.all(np.isfinite(V)):
            raise InvalidArgumentError("vertex list must be non-empty and finite")
        if not _closed_under_negation(V):
            raise InvalidArgumentError("vertex set is not closed under negation")
        if np.linalg.matrix_rank(V) < V.shape[1]:
            raise InvalidArgumentError("vertices do not span the space (origin not interior)")
        self.V = V
        self.V.setflags(write=False)
        self.dim = V.shape[1]

    def support_points(self, U):
        U = self._check(U)
        scores = U @ self.V.T
        j = np.argmax(scores, axis=1)
        return scores[np.arange(U.shape[0]), j], self.V[j].copy()

    def _member(self, y):
        k = self.V.shape[0]
        A_eq = np.vstack([self.V.T, np.ones((1, k))])
        b_eq = np.concatenate([y, [1.0]])
        try:
            solve_lp(np.zeros(k), A_eq=A_eq, b_eq=b_eq, nonneg=np.ones(k, dtype=bool))
        except EmptyBodyError:
            return False
        return True

    def contains(self, Y, tol=0.0):
        Y = self._check(Y)
        return np.array([self._member(y / (1.0 + tol)) for y in Y])

    def gauge_of(self, X):
        X = self._check(X)
        return np.array([gauge_bisect(self, x) for x in X])

    def radius_bounds(self):
        outer = float(np.linalg.norm(self.V, axis=1).max())
        if self.dim == 1:
            return outer, outer
        # inradius of a symmetric polytope = smallest facet offset (unit normals)
        from scipy.spatial import ConvexHull

        inner = float(-ConvexHull(self.V).equations[:, -1].max())
        return inner, outer

    def vertices(self):
        return self.V

    def scaled(self, s):
        return VPolytope(self.V * s)

    def to_spec(self):
        return {"type": "vpolytope", "dim": self.dim, "vertices": self.V.tolist()}


def gauge_bisect(body: Body, x, rtol: float = GAUGE_RTOL) -> float:
    """Minkowski functional by bisection on the membership oracle alone."""
    x = as_vector(x, body.dim, "x")
    if not np.any(x):
        raise InvalidArgumentError("gauge of the zero vector is excluded")
    member = lambda s: bool(body.contains(x / s)[0])  # noqa: E731
    hi = 1.0
    while not member(hi):
        hi *= 2.0
    lo = hi / 2.0
    while member(lo):
        hi, lo = lo, lo / 2.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if member(mid):
            hi = mid
        else:
            lo = mid
    return hi


def polytope_rep(body: Body):
    """('h', A, b) or ('v', V) for polytopal bodies, else None."""
    if isinstance(body, (Box, HPolytope)):
        A, b = body.h_rep()
        return ("h", A, b)
    if isinstance(body, (VPolytope, CrossPolytope)):
        return ("v", body.vertices())
    return None


def support(body: Body, u) -> SupportResult:
    """Support value h_K(u) together with a maximizer on the body."""
    u = as_vector(u, body.dim, "u")
    vals, W = body.support_points(u)
    return SupportResult(float(vals[0]), W[0])


def membership(body: Body, y, tol: float = 0.0) -> bool:
    y = as_vector(y, body.dim, "y")
    return bool(body.contains(y, tol)[0])


def gauge(body: Body, x) -> float:
    """Minkowski functional ||x||_K; the zero vector is rejected."""
    x = as_vector(x, body.dim, "x")
    if not np.any(x):
        raise InvalidArgumentError("gauge of the zero vector is excluded")
    return float(body.gauge_of(x)[0])


def _dim_check(spec, n):
    if spec.get("dim") is not None and int(spec["dim"]) != n:
        raise InvalidArgumentError(f"'dim' is {spec['dim']} but parameters imply {n}")


def body_from_spec(spec: dict) -> Body:
    """Build a body from its JSON description (see module docstring)."""
    try:
        kind = spec["type"]
        if kind == "ball":
            return Ball(int(spec["dim"]), float(spec.get("radius", 1.0)))
        if kind == "box":
            if "half_sides" in spec:
                body = Box(spec["half_sides"])
                _dim_check(spec, body.dim)
                return body
            return Box.cube(int(spec["dim"]), float(spec.get("half_side", 1.0)))
        if kind == "ellipsoid":
            body = Ellipsoid(spec["semi_axes"])
            _dim_check(spec, body.dim)
            return body
        if kind == "hpolytope":
            body = HPolytope(spec["A"], spec["b"])
            _dim_check(spec, body.dim)
            return body
        if kind == "vpolytope":
            body = VPolytope(spec["vertices"])
            _dim_check(spec, body.dim)
            return body
        if kind == "crosspolytope":
            return CrossPolytope(int(spec["dim"]), float(spec.get("scale", 1.0)))
    except (KeyError, TypeError) as exc:
        raise InvalidArgumentError(f"malformed body spec: {exc!r}") from exc
    raise InvalidArgumentError(f"unknown body type {spec.get('type')!r}")


def cube_vertices(dim: int, half_side: float = 1.0) -> np.ndarray:
    """All 2^dim sign vectors scaled by ``half_side``."""
    return half_side * np.array(list(itertools.product((-1.0, 1.0), repeat=dim)))
