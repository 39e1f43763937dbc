"""Estimators of M*(K) = ∫ h_K dν, the half mean width under the normalized sphere measure.

``mean_width_mc`` averages support values over a :class:`SphereSample`;
the same sample may be reused across calls (common random numbers).
Deterministic reductions exist for the ball lens and for boxes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betaln

from .bodies import Body
from .errors import EmptyBodyError, InvalidArgumentError, NumericalFailureError
from .geom import SphereSample, as_vector, cn_closed_form
from .intersection import ShiftedIntersection, lens_support, support_values
from .quadrature import integrate

LENS_ABS_TOL = 1e-14


@dataclass(frozen=True)
class MeanWidthEstimate:
    value: float
    std_error: float
    n_samples: int
    seed: int | None
    method: str


def _support_on(obj, U, tol):
    if isinstance(obj, ShiftedIntersection):
        return support_values(obj, U, tol)
    if isinstance(obj, Body):
        return obj.support_points(U)[0]
    raise InvalidArgumentError(f"cannot take the support function of {type(obj).__name__}")


def _pair_means(values, sample: SphereSample):
    if sample.antithetic:
        return 0.5 * (values[0::2] + values[1::2])
    return values


def _mean_and_se(x):
    k = x.size
    se = float(np.std(x, ddof=1) / math.sqrt(k)) if k > 1 else 0.0
    return float(np.sum(x) / k), se


def mean_width_mc(obj, sample: SphereSample, tol: float = 1e-8) -> MeanWidthEstimate:
    """Monte Carlo M* of a body or a shifted intersection.

    Antithetic pairs are averaged first; the standard error comes from the
    pair-level spread, so a constant integrand gets ``std_error == 0``.
    """
    if sample.dim != obj.dim:
        raise InvalidArgumentError(f"sample dimension {sample.dim} != body dimension {obj.dim}")
    try:
        vals = _support_on(obj, sample.directions, tol)
    except NumericalFailureError as exc:
        raise NumericalFailureError(f"support evaluation failed: {exc}", exc.diagnostics) from exc
    value, se = _mean_and_se(_pair_means(vals, sample))
    return MeanWidthEstimate(value, se, len(sample), sample.seed, "mc")


def deficit_mc(K: Body, t, sample: SphereSample, control_variate: bool = False,
               tol: float = 1e-8, base_values=None) -> tuple[float, float]:
    """Pathwise M*(K) - M*(K ∩ (t + K)) on one sample, with its standard error.

    With ``control_variate`` the per-pair term |<t, u>|/2, whose exact mean
    is c_n |t| / 2, is subtracted and its mean added back. Away from the rim
    of the intersection this term equals the deficit exactly, so the
    estimator keeps only the rim contribution as noise.
    """
    t = as_vector(t, K.dim, "shift")
    U = sample.directions
    base = K.support_points(U)[0] if base_values is None else base_values
    shifted = support_values(ShiftedIntersection(K, K, t), U, tol)
    d = _pair_means(base - shifted, sample)
    if control_variate:
        cv = 0.5 * np.abs(U @ t)
        if sample.antithetic:
            cv = cv[0::2]
        d = d - cv
    value, se = _mean_and_se(d)
    if control_variate:
        value += 0.5 * cn_closed_form(K.dim) * float(np.linalg.norm(t))
    return value, se


# ---------------------------------------------------------------- lens (K = L = B_n)

def _lens_deficit_rim(lam, c):
    # 1 - (lam/2) c - sqrt(1 - lam^2/4) sqrt(1 - c^2), without cancellation near c = 0
    ab2 = (1.0 - 0.25 * lam * lam) * (1.0 - c * c)
    ab = np.sqrt(np.maximum(ab2, 0.0))
    return (1.0 - ab2) / (1.0 + ab) - 0.5 * lam * c


def lens_deficit_quadrature(n: int, lam: float, abs_tol: float = LENS_ABS_TOL) -> float:
    """1 - M*(B_n ∩ (lam x + B_n)), integrated over the angle θ = arccos<x, u>.

    In θ the sphere density is sin^{n-2}θ / B(1/2, (n-1)/2), smooth on each
    panel once split at the kinks θ = arccos(±lam/2).
    """
    if n < 1:
        raise InvalidArgumentError("dimension must be >= 1")
    if lam < 0:
        raise InvalidArgumentError("shift must be non-negative")
    if lam > 2.0:
        raise EmptyBodyError("lens is empty for shift > 2")
    if lam == 0.0:
        return 0.0
    if n == 1:
        return 0.5 * lam
    norm = math.exp(-betaln(0.5, 0.5 * (n - 1)))
    p = n - 2

    def f(theta):
        c = np.cos(theta)
        w = norm * np.sin(theta) ** p
        return w * np.where(c <= -0.5 * lam, -lam * c, _lens_deficit_rim(lam, c))

    t1 = math.acos(0.5 * lam)
    t2 = math.pi - t1
    value, _ = integrate(f, t1, math.pi, breakpoints=(t2,), abs_tol=abs_tol)
    return value


def lens_mean_width_quadrature(n: int, lam: float, abs_tol: float = LENS_ABS_TOL) -> MeanWidthEstimate:
    """Deterministic M* of the lens B_n ∩ (lam x + B_n), |x| = 1."""
    if n < 2:
        raise InvalidArgumentError("lens quadrature needs n >= 2")
    return MeanWidthEstimate(1.0 - lens_deficit_quadrature(n, lam, abs_tol), 0.0, 0, None, "lens-quadrature")


def lens_support_mean_reference(n: int, lam: float) -> float:
    """Slow direct c-space integral of the lens support, for cross-checks only."""
    from scipy.integrate import quad

    norm = math.exp(-betaln(0.5, 0.5 * (n - 1)))
    dens = lambda c: norm * (1.0 - c * c) ** (0.5 * (n - 3))  # noqa: E731
    pts = sorted({-1.0, -0.5 * lam, 0.5 * lam, 1.0})
    return sum(quad(lambda c: lens_support(lam, c) * dens(c), a, b, epsabs=1e-13, limit=200)[0]
               for a, b in zip(pts[:-1], pts[1:]) if b > a)


# ---------------------------------------------------------------- boxes

def box_intersection_bounds(s, t):
    s = as_vector(s, name="half_sides")
    t = as_vector(t, s.size, "shift")
    if np.any(np.abs(t) > 2.0 * s):
        raise EmptyBodyError("box intersection is empty: |t_j| > 2 s_j")
    return np.maximum(-s, t - s), np.minimum(s, t + s)


def box_mean_width_closed(s, t) -> MeanWidthEstimate:
    """M* of Π[a_j, b_j] = box(s) ∩ (t + box(s)): (c_n / 2) Σ_j (b_j - a_j)."""
    lo, hi = box_intersection_bounds(s, t)
    value = 0.5 * cn_closed_form(lo.size) * float(np.sum(hi - lo))
    return MeanWidthEstimate(value, 0.0, 0, None, "box-closed")


def box_deficit_closed(s, t) -> float:
    """M*(box) - M*(box ∩ (t + box)) = (c_n / 2) ||t||_1 while nonempty."""
    lo, _ = box_intersection_bounds(s, t)
    return 0.5 * cn_closed_form(lo.size) * float(np.sum(np.abs(t)))
