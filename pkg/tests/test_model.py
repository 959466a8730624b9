import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotorlab.errors import ConfigurationError
from rotorlab.model import (
    SystemParams,
    kick_force,
    kick_potential,
    quasi_linear_coefficients,
)

lam = st.floats(0.0, 5.0, allow_nan=False)
angle = st.floats(0.0, 2 * math.pi, exclude_max=True, allow_nan=False)
params_st = st.builds(SystemParams, lam, lam, lam, lam)


def test_zero_params_is_free_rotor():
    p = SystemParams()
    assert p.is_free
    assert kick_potential(p, 1.3, 4.1) == 0.0
    assert kick_force(p, 1.3, 4.1) == (0.0, 0.0)


@pytest.mark.parametrize(
    "kw",
    [dict(alpha1=0.0), dict(alpha2=-1.0), dict(lambda1=float("nan")), dict(lambda3=float("inf")), dict(lambda4=-0.1)],
)
def test_invalid_params_rejected(kw):
    with pytest.raises(ConfigurationError):
        SystemParams(**kw)


def test_potential_examples():
    assert kick_potential(SystemParams(lambda1=1.0), 0.0, 0.0) == 1.0
    assert kick_potential(SystemParams(lambda3=2.0), math.pi / 3, math.pi / 3) == pytest.approx(0.5, abs=1e-15)


def test_force_examples():
    p = SystemParams(lambda4=1.0)
    for th in (0.0, 0.7, 3.0):
        assert kick_force(p, th, th) == (0.0, 0.0)
    f1, _ = kick_force(SystemParams(lambda1=0.5), math.pi / 2, 0.0)
    assert f1 == 0.5


def test_force_matches_map_terms():
    # term by term against the written-out kick map
    p = SystemParams(0.3, 0.7, 1.1, 1.9)
    t1, t2 = 0.4, 2.5
    f1, f2 = kick_force(p, t1, t2)
    assert f1 == pytest.approx(0.3 * math.sin(t1) + 1.1 * math.sin(t1) * math.cos(t2) + 1.9 * math.sin(t1 - t2))
    assert f2 == pytest.approx(0.7 * math.sin(t2) + 1.1 * math.cos(t1) * math.sin(t2) - 1.9 * math.sin(t1 - t2))


def test_gradient_consistency_finite_difference():
    rng = np.random.default_rng(11)
    h = 1e-5
    for _ in range(1000):
        p = SystemParams(*rng.uniform(0, 3, size=4))
        t1, t2 = rng.uniform(0, 2 * np.pi, size=2)
        fd1 = -(kick_potential(p, t1 + h, t2) - kick_potential(p, t1 - h, t2)) / (2 * h)
        fd2 = -(kick_potential(p, t1, t2 + h) - kick_potential(p, t1, t2 - h)) / (2 * h)
        f1, f2 = kick_force(p, t1, t2)
        scale = max(1.0, abs(f1), abs(f2))
        # relative to the force scale: the finite difference of an O(1) function
        # carries ~1e-11 rounding, so tiny components are compared absolutely
        assert abs(f1 - fd1) / scale < 1e-6
        assert abs(f2 - fd2) / scale < 1e-6


@given(params_st, angle, angle)
def test_potential_swap_symmetry(p, t1, t2):
    assert kick_potential(p, t1, t2) == pytest.approx(kick_potential(p.swapped(), t2, t1), abs=1e-12)


def test_quasi_linear_examples():
    q = quasi_linear_coefficients(SystemParams(0.5, 0.5, 3.0, 3.0))
    assert q.d1_0 == 11.375 and q.d2_0 == 11.375
    q = quasi_linear_coefficients(SystemParams())
    assert (q.d1_0, q.d2_0) == (0.0, 0.0)
    assert quasi_linear_coefficients(SystemParams(lambda4=1.0)).d1_0 == 0.5
    # single rotor limit K²/4 with the K = λ convention of the map: λ²/2
    assert quasi_linear_coefficients(SystemParams(lambda1=1.7)).d1_0 == pytest.approx(1.7**2 / 2)


@given(params_st)
def test_quasi_linear_identities(p):
    q = quasi_linear_coefficients(p)
    assert q.d1_0 >= 0 and q.d2_0 >= 0
    assert q.d1_0 - q.d2_0 == pytest.approx((p.lambda1**2 - p.lambda2**2) / 2, abs=1e-9)
    if p.lambda1 == p.lambda2:
        assert q.d1_0 == q.d2_0


@settings(max_examples=25, deadline=None)
@given(params_st)
def test_quasi_linear_matches_quadrature(p):
    # uniform-angle average of the squared impulses, by a trapezoid rule that is
    # exact for trigonometric polynomials of this low degree
    th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    f1, f2 = kick_force(p, th[:, None], th[None, :])
    q = quasi_linear_coefficients(p)
    assert np.mean(f1**2) == pytest.approx(q.d1_0, rel=1e-12, abs=1e-12)
    assert np.mean(f2**2) == pytest.approx(q.d2_0, rel=1e-12, abs=1e-12)
