import math

import numpy as np
import pytest

from convbody.quadrature import integrate


def test_polynomial_exact():
    v, err = integrate(lambda x: 3 * x**2, 0.0, 2.0)
    assert v == pytest.approx(8.0, abs=1e-14)
    assert err <= 1e-13


def test_kink_split():
    v, _ = integrate(np.abs, -1.0, 2.0, breakpoints=(0.0,))
    assert v == pytest.approx(2.5, abs=1e-14)


def test_sqrt_endpoint_singularity():
    v, _ = integrate(np.sqrt, 0.0, 1.0, abs_tol=1e-12)
    assert v == pytest.approx(2.0 / 3.0, abs=1e-11)


def test_oscillatory():
    v, _ = integrate(lambda x: np.sin(20 * x), 0.0, math.pi / 2)
    assert v == pytest.approx((1 - math.cos(10 * math.pi)) / 20, abs=1e-13)


def test_breakpoints_outside_interval_ignored():
    v, _ = integrate(lambda x: x, 0.0, 1.0, breakpoints=(-1.0, 0.5, 3.0))
    assert v == pytest.approx(0.5, abs=1e-15)
