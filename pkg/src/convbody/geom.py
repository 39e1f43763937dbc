"""Sphere sampling and the constant c_n = E|<x, u>| on the unit sphere."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError

_TINY_NORM = 1e-300


def as_vector(x, n: int | None = None, name: str = "vector") -> np.ndarray:
    """Return ``x`` as a finite 1-D float array, optionally checking its length."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidArgumentError(f"{name} must be a non-empty 1-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} has non-finite entries")
    if n is not None and arr.size != n:
        raise InvalidArgumentError(f"{name} has dimension {arr.size}, expected {n}")
    return arr


def as_direction(u, n: int | None = None) -> np.ndarray:
    """Normalize ``u`` to unit length; zero vectors are rejected."""
    arr = as_vector(u, n, "direction")
    norm = np.linalg.norm(arr)
    if norm < _TINY_NORM:
        raise InvalidArgumentError("direction must be non-zero")
    return arr / norm


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator (Philox); substreams via ``jumped``/``spawn`` stay reproducible."""
    if seed < 0 or seed >= 2**64:
        raise InvalidArgumentError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.Philox(int(seed)))


@dataclass(frozen=True)
class SphereSample:
    """Directions on S^{n-1}; with ``antithetic`` set, rows 2k and 2k+1 are u and -u."""

    directions: np.ndarray = field(repr=False)
    seed: int
    antithetic: bool

    def __post_init__(self):
        self.directions.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    def __len__(self) -> int:
        return self.directions.shape[0]


def _gaussian_directions(rng: np.random.Generator, n: int, count: int) -> np.ndarray:
    out = np.empty((count, n))
    filled = 0
    while filled < count:
        g = rng.standard_normal((count - filled, n))
        norms = np.linalg.norm(g, axis=1)
        keep = norms >= _TINY_NORM
        k = int(keep.sum())
        out[filled:filled + k] = g[keep] / norms[keep, None]
        filled += k
    return out


def sample_sphere(n: int, count: int, seed: int, antithetic: bool = True) -> SphereSample:
    """Draw ``count`` uniform directions on S^{n-1} by normalizing Gaussians.

    With ``antithetic=True`` (the default) ``count`` must be even and the
    directions are emitted as consecutive pairs ``(u, -u)``. The output is a
    pure function of ``(n, count, seed, antithetic)``.
    """
    if n < 1:
        raise InvalidArgumentError(f"dimension must be >= 1, got {n}")
    if count < 1:
        raise InvalidArgumentError(f"count must be positive, got {count}")
    if antithetic and count % 2:
        raise InvalidArgumentError("antithetic sampling needs an even count")
    rng = make_rng(seed)
    if antithetic:
        half = _gaussian_directions(rng, n, count // 2)
        dirs = np.empty((count, n))
        dirs[0::2] = half
        dirs[1::2] = -half
    else:
        dirs = _gaussian_directions(rng, n, count)
    return SphereSample(dirs, int(seed), bool(antithetic))


# below this dimension the two-step recurrence is exact enough (error ~ n ulp)
# and reproduces the rational values c_1 = 1, c_3 = 1/2, ... exactly
_CN_RECURRENCE_MAX = 64


def cn_closed_form(n: int) -> float:
    """Mean of |<x, u>| over the uniform measure on S^{n-1}, x a unit vector.

    Equals Gamma(n/2) / (sqrt(pi) Gamma((n+1)/2)). Small n use
    c_{n+2} = c_n n / (n+1) from c_1 = 1, c_2 = 2/pi; larger n go through
    log-gamma.
    """
    if n < 1:
        raise InvalidArgumentError(f"dimension must be >= 1, got {n}")
    if n <= _CN_RECURRENCE_MAX:
        c, k = (1.0, 1) if n % 2 else (2.0 / math.pi, 2)
        while k < n:
            c *= k / (k + 1)
            k += 2
        return c
    return math.exp(math.lgamma(n / 2) - math.lgamma((n + 1) / 2)) / math.sqrt(math.pi)
