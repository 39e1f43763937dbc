"""The δ-M* convolution body C(δ) = {x : M*(K ∩ (x + K)) >= δ M*(K)}.

Its radial function in a unit direction x is the root λ* of

    g(λ) = M*(K ∩ (λx + K)) - δ M*(K),

and C(δ)/(1 - δ) has radius ρ(x) = λ*/(1 - δ). Internally g is written as
(1 - δ) M*(K) - D(λ), with D the pathwise deficit, so the root is found
without cancelling two nearly equal mean widths.

Deficit back-ends ("mw methods"):

* ``lens-quadrature`` - K a Euclidean ball (adaptive Gauss-Legendre),
* ``box-closed``      - K a box, D(λ) = (c_n/2) λ ||x||_1,
* ``mc``              - any body, one shared :class:`SphereSample` per solve.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .bodies import Ball, Body, Box
from .errors import InvalidArgumentError, NumericalFailureError, OutOfRangeError
from .geom import SphereSample, as_direction, as_vector, cn_closed_form, sample_sphere
from .meanwidth import box_deficit_closed, deficit_mc, lens_deficit_quadrature, mean_width_mc

log = logging.getLogger(__name__)

DEFAULT_SAMPLES = 2**16
VALIDITY_LIMIT = 4.0 / 27.0
# bisection stops at this fraction of λ_max; MC noise makes anything finer pointless
XTOL_REL = {"mc": 1e-10, "lens-quadrature": 1e-15, "box-closed": 1e-15}


@dataclass(frozen=True)
class RadialSolve:
    direction: np.ndarray
    delta: float
    lambda_star: float
    bracket: tuple[float, float]
    residual: float
    evals: int
    mw_method: str
    lambda_max: float
    saturated: bool = False
    history: list = field(default_factory=list, repr=False, compare=False)


@dataclass(frozen=True)
class DeviationReport:
    delta: float
    entries: list
    sup_dev: float
    n_directions: int


@dataclass(frozen=True)
class RateFit:
    deltas: list
    sup_devs: list
    slope: float
    intercept: float
    r_squared: float
    constant: float
    validity_ok: bool
    converging: bool


@dataclass(frozen=True)
class ProbeReport:
    passed: bool
    trials: int
    violations: int
    details: list = field(default_factory=list, repr=False)


def choose_method(K: Body, method: str = "auto") -> str:
    """Resolve ``auto``/``deterministic``/``mc`` to a concrete mw method."""
    det = "lens-quadrature" if isinstance(K, Ball) else "box-closed" if isinstance(K, Box) else None
    if method in ("auto", "deterministic"):
        if det is None:
            if method == "deterministic":
                raise InvalidArgumentError(f"no deterministic mean-width path for {K.kind}")
            return "mc"
        return det
    if method in ("mc", "lens-quadrature", "box-closed"):
        if method != "mc" and method != det:
            raise InvalidArgumentError(f"method {method} does not apply to {K.kind}")
        return method
    raise InvalidArgumentError(f"unknown method {method!r}")


class DeficitModel:
    """M*(K) and λ -> D(λ) = M*(K) - M*(K ∩ (λx + K)) for one body and direction."""

    def __init__(self, K: Body, method: str = "auto", sample: SphereSample | None = None,
                 n_samples: int = DEFAULT_SAMPLES, seed: int = 0, control_variate: bool = True,
                 tol: float = 1e-8):
        self.K = K
        self.method = choose_method(K, method)
        self.sample = None
        self.std_error = 0.0
        self.control_variate = control_variate
        self.tol = tol
        if self.method == "lens-quadrature":
            self.mstar = K.radius
        elif self.method == "box-closed":
            self.mstar = cn_closed_form(K.dim) * float(np.sum(K.half_sides))
        else:
            self.sample = sample if sample is not None else sample_sphere(K.dim, n_samples, seed)
            if self.sample.dim != K.dim:
                raise InvalidArgumentError("sample dimension does not match the body")
            self._base = K.support_points(self.sample.directions)[0]
            est = mean_width_mc(K, self.sample)
            self.mstar, self.std_error = est.value, est.std_error

    @property
    def eval_error(self) -> float:
        """Bound on the solver error of one deficit evaluation (not the MC noise).

        Common random numbers make g monotone only up to this; the infconv
        path certifies each support value to 10 tol.
        """
        if self.method == "mc" and not isinstance(self.K, Box):
            return 10.0 * self.tol
        return 1e-14 * self.mstar

    def deficit(self, t) -> tuple[float, float]:
        """(D, standard error) at shift vector t."""
        if self.method == "lens-quadrature":
            r = self.K.radius
            lam = float(np.linalg.norm(t)) / r
            if 2.0 < lam <= 2.0 * (1.0 + 1e-14):
                lam = 2.0
            return r * lens_deficit_quadrature(self.K.dim, lam), 0.0
        if self.method == "box-closed":
            return box_deficit_closed(self.K.half_sides, t), 0.0
        return deficit_mc(self.K, t, self.sample, self.control_variate, self.tol, self._base)

    def first_order_slope(self, x) -> float:
        """Slope s with D(λ) >= λ s along x, exact for this model.

        Pointwise h_λ(u) <= h(u) - λ max(0, -<x, u>). The exact mean is
        c_n |x| / 2; without the control variate the MC estimate only obeys
        the bound for its own sample mean.
        """
        x = np.asarray(x, dtype=float)
        if self.method == "mc" and not self.control_variate:
            return float(np.mean(np.maximum(0.0, -(self.sample.directions @ x))))
        return 0.5 * cn_closed_form(self.K.dim) * float(np.linalg.norm(x))


def radial_lambda(K: Body, x, delta: float, method: str = "auto", *, model: DeficitModel | None = None,
                  sample: SphereSample | None = None, n_samples: int = DEFAULT_SAMPLES, seed: int = 0,
                  xtol_rel: float | None = None, ftol: float = 0.0, control_variate: bool = True,
                  tol: float = 1e-8, max_evals: int = 200) -> RadialSolve:
    """Bisect g(λ) = (1-δ) M*(K) - D(λ) on [0, λ_max], λ_max = 2 / ||x||_K.

    The upper end is first tightened to 2 (1-δ) M*(K) / c_n (for unit x),
    which bounds the root for every symmetric body.

    If g(λ_max) >= 0 the whole segment up to the end of K ∩ (λx + K) ≠ ∅
    belongs to C(δ); the solve is then flagged ``saturated`` and
    λ* = λ_max.
    """
    if not 0.0 < delta < 1.0:
        raise InvalidArgumentError(f"delta must lie in (0, 1), got {delta}")
    x = as_direction(x, K.dim)
    if model is None:
        model = DeficitModel(K, method, sample, n_samples, seed, control_variate, tol)
    target = (1.0 - delta) * model.mstar
    lam_max = 2.0 / float(K.gauge_of(x)[0])
    xtol = (XTOL_REL[model.method] if xtol_rel is None else xtol_rel) * lam_max
    evals = 0

    def g(lam):
        nonlocal evals
        evals += 1
        return target - model.deficit(lam * x)[0]

    # D(λ) >= λ s bounds the root by target / s and keeps the iterative
    # solvers away from the degenerate end λ_max
    lam_ub = target / model.first_order_slope(x) * (1.0 + 1e-12)
    hi = lam_max
    if lam_ub < lam_max:
        hi = lam_ub
        g_hi = g(hi)
    if hi == lam_max or g_hi > 0.0:
        # the intersection degenerates at λ_max; stay a hair inside for the iterative solvers
        hi = lam_max if model.method != "mc" else lam_max * (1.0 - 1e-9)
        g_hi = g(hi)
        if g_hi >= 0.0:
            return RadialSolve(x, delta, lam_max, (lam_max, lam_max), g_hi, evals, model.method, lam_max, True)
    slack = model.eval_error
    lo, g_lo = 0.0, target
    history = [(lo, hi, g_lo, g_hi)]
    mid, g_mid = hi, g_hi
    while hi - lo > xtol and evals < max_evals:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        g_mid = g(mid)
        if g_mid > g_lo + slack or g_mid < g_hi - slack:
            raise NumericalFailureError(
                "g(λ) is not monotone on the bracket",
                {"lo": lo, "mid": mid, "hi": hi, "g_lo": g_lo, "g_mid": g_mid, "g_hi": g_hi},
            )
        if abs(g_mid) <= ftol:
            lo = hi = mid
            break
        if g_mid > 0.0:
            lo, g_lo = mid, g_mid
        else:
            hi, g_hi = mid, g_mid
        history.append((lo, hi, g_lo, g_hi))
        log.debug("bisect lo=%.17g hi=%.17g g_lo=%.3e g_hi=%.3e", lo, hi, g_lo, g_hi)
    lam = 0.5 * (lo + hi)
    residual = g_mid if lam == mid else g(lam)
    return RadialSolve(x, delta, lam, (lo, hi), residual, evals, model.method, lam_max, False, history)


def normalized_radial(solve: RadialSolve) -> float:
    """Radius of C(δ)/(1-δ) in the solve's direction."""
    return solve.lambda_star / (1.0 - solve.delta)


def limit_radius(n: int, mstar: float) -> float:
    """Radius 2 M*(K) / c_n of the Euclidean ball that C(δ)/(1-δ) tends to.

    For small λ only the half of the sphere facing away from x loses support
    (by λ|<x, u>|), so D(λ) = λ c_n / 2 + O(λ^3) for smooth K.
    """
    return 2.0 * mstar / cn_closed_form(n)


def deviation_T(K: Body, delta: float, directions, method: str = "auto", *,
                model: DeficitModel | None = None, **solve_kw) -> DeviationReport:
    """T(x) = ||x||_{C(δ)/(1-δ)} · limit_radius = limit_radius / ρ(x); sup_dev = max |T - 1|.

    T ≡ 1 exactly when C(δ)/(1-δ) is the ball of radius 2 M*(K)/c_n.
    """
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    if model is None:
        model = DeficitModel(K, method, **{k: solve_kw.pop(k) for k in
                                           ("sample", "n_samples", "seed", "control_variate", "tol")
                                           if k in solve_kw})
    rho_lim = limit_radius(K.dim, model.mstar)
    entries = []
    for x in directions:
        rho = normalized_radial(radial_lambda(K, x, delta, model=model, **solve_kw))
        entries.append((as_direction(x), rho_lim / rho))
    devs = [abs(T - 1.0) for _, T in entries]
    return DeviationReport(delta, entries, max(devs), len(entries))


def in_validity_region(n: int, delta: float, constant: float = 1.0) -> bool:
    """constant · n (1-δ)^2 <= 4/27."""
    return constant * n * (1.0 - delta) ** 2 <= VALIDITY_LIMIT


def fit_loglog(deltas, sup_devs):
    """Least-squares line through (log(1-δ), log sup_dev): (slope, intercept, r²)."""
    xs = np.log1p(-np.asarray(deltas, dtype=float))
    ys = np.log(np.asarray(sup_devs, dtype=float))
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else float("nan")
    return float(slope), float(intercept), r2


def rate_fit(K: Body, deltas, directions=None, method: str = "auto", *,
             model: DeficitModel | None = None, **solve_kw) -> RateFit:
    """Fit log sup_dev against log(1-δ) over the δ inside n(1-δ)^2 <= 4/27.

    ``constant`` is the smallest C with sup_dev <= C (M* n (1-δ))^2 at every
    fitted point; ``validity_ok`` re-checks C (M*/c_n) n (1-δ)^2 <= 4/27 with it.
    ``converging`` is False when the deviation does not decay (slope < 1/2),
    as for the cube.
    """
    n = K.dim
    kept = sorted((d for d in deltas if in_validity_region(n, d)))
    if len(kept) < 3:
        raise InvalidArgumentError("need at least 3 deltas inside the validity region")
    if directions is None:
        directions = sample_sphere(n, 8, 12345, antithetic=False).directions
    if model is None:
        model = DeficitModel(K, method)
    sup = [deviation_T(K, d, directions, model=model, **solve_kw).sup_dev for d in kept]
    return fit_rate(n, model.mstar, kept, sup)


def fit_rate(n: int, mstar: float, deltas, sup_devs) -> RateFit:
    """Log-log fit plus fitted constant for sup_devs already restricted to the validity region."""
    slope, intercept, r2 = fit_loglog(deltas, sup_devs)
    scale = (mstar * n) ** 2
    constant = max(s / (scale * (1 - d) ** 2) for d, s in zip(deltas, sup_devs))
    cn = cn_closed_form(n)
    validity_ok = all(in_validity_region(n, d, constant * mstar / cn) for d in deltas)
    return RateFit(list(deltas), list(sup_devs), slope, intercept, r2, constant, validity_ok, slope >= 0.5)


def cube_radial_closed(n: int, x, delta: float, half_sides=1.0) -> float:
    """Radius of C(δ)/(1-δ) for a box, from the closed-form deficit.

    ρ(x) = 2 Σ_j s_j / ||x̂||_1 for unit x̂, i.e. C(δ)/(1-δ) = 2 Σ s_j · B_{l1};
    for the cube [-1, 1]^n the constant is 2n. Raises OutOfRangeError when
    λ* |x̂_j| would exceed 2 s_j (the box formula no longer applies).
    """
    if not 0.0 < delta < 1.0:
        raise InvalidArgumentError(f"delta must lie in (0, 1), got {delta}")
    s = np.broadcast_to(np.asarray(half_sides, dtype=float), (n,))
    xh = as_direction(as_vector(x, n, "x"), n)
    rho = 2.0 * float(np.sum(s)) / float(np.sum(np.abs(xh)))
    lam = rho * (1.0 - delta)
    if np.any(lam * np.abs(xh) >= 2.0 * s):
        raise OutOfRangeError(
            f"delta={delta} too small for direction {xh.tolist()}: λ*|x_j| reaches 2 s_j"
        )
    return rho


def cube_delta_threshold(x, half_sides=1.0) -> float:
    """Smallest δ for which ``cube_radial_closed`` is valid in direction x."""
    xh = as_direction(x)
    s = np.broadcast_to(np.asarray(half_sides, dtype=float), xh.shape)
    rho = 2.0 * float(np.sum(s)) / float(np.sum(np.abs(xh)))
    with np.errstate(over="ignore"):
        return 1.0 - float(np.min(2.0 * s[xh != 0] / np.abs(xh[xh != 0]))) / rho


def l1_alt_constant(n: int) -> float:
    """n^{3/2} |S^{n-1}| (unnormalized sphere area), for comparison with 2n."""
    return n**1.5 * 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def convexity_probe(K: Body, delta: float, trials: int = 100, seed: int = 0, method: str = "auto", *,
                    model: DeficitModel | None = None, **solve_kw) -> ProbeReport:
    """Midpoints of pairs of boundary points of C(δ) must stay in C(δ).

    The membership test allows 3 standard errors (MC) plus 1e-12 relative.
    """
    if model is None:
        model = DeficitModel(K, method, seed=seed)
    rng = np.random.Generator(np.random.Philox(seed))
    target = (1.0 - delta) * model.mstar
    violations, details = 0, []
    for i in range(trials):
        x1, x2 = rng.standard_normal((2, K.dim))
        if i == 0:
            x2 = x1.copy()  # degenerate pair: midpoint is a boundary point
        p1 = radial_lambda(K, x1, delta, model=model, **solve_kw)
        p2 = radial_lambda(K, x2, delta, model=model, **solve_kw)
        m = 0.5 * (p1.lambda_star * p1.direction + p2.lambda_star * p2.direction)
        if not np.any(m):
            continue
        if K.gauge_of(m)[0] > 2.0:
            ok, d, se = False, math.inf, 0.0
        else:
            d, se = model.deficit(m)
            ok = d <= target + 3.0 * se + 1e-12 * model.mstar
        if not ok:
            violations += 1
            details.append({"x1": x1.tolist(), "x2": x2.tolist(), "deficit": d, "target": target, "se": se})
    return ProbeReport(violations == 0, trials, violations, details)


def monotonicity_probe(K: Body, delta1: float, delta2: float, directions, method: str = "auto", *,
                       model: DeficitModel | None = None, atol: float | None = None, **solve_kw) -> ProbeReport:
    """λ*(x, δ2) <= λ*(x, δ1) + tolerance for δ1 <= δ2: larger δ shrinks C(δ)."""
    if not 0.0 < delta1 <= delta2 < 1.0:
        raise InvalidArgumentError("need 0 < delta1 <= delta2 < 1")
    if model is None:
        model = DeficitModel(K, method)
    violations, details = 0, []
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    for x in directions:
        s1 = radial_lambda(K, x, delta1, model=model, **solve_kw)
        s2 = radial_lambda(K, x, delta2, model=model, **solve_kw)
        slack = atol if atol is not None else 2.0 * max(s1.bracket[1] - s1.bracket[0],
                                                         s2.bracket[1] - s2.bracket[0], 1e-15 * s1.lambda_max)
        if s2.lambda_star > s1.lambda_star + slack:
            violations += 1
            details.append({"x": x.tolist(), "lambda1": s1.lambda_star, "lambda2": s2.lambda_star})
    return ProbeReport(violations == 0, len(directions), violations, details)
