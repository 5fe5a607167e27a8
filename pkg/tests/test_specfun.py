import cmath

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import airy as scipy_airy

from osgevrey import DomainError, a0, airy
from osgevrey.specfun import a0_derivatives, airy_method, check_airy_ratio_bounds, sector_samples

AI0 = 0.3550280538878172
AIP0 = -0.2588194037928068
AI1 = 0.1352924163128814


def test_airy_values_at_frozen_points():
    assert abs(airy(0.0)[0] - AI0) < 1e-14
    assert abs(airy(0.0)[1] - AIP0) < 1e-14
    assert abs(airy(1.0)[0] - AI1) < 1e-14


@pytest.mark.parametrize("z", [0.5 + 0.5j, -2.0 + 1.0j, 4.0 - 3.0j, 8.0 + 6.0j, -10.0 + 0.1j,
                               15.0 + 2.0j, -20.0 - 5.0j, 3.0j])
def test_airy_against_mpmath(z):
    ai, aip = airy(z)
    ref = complex(mpmath.airyai(z))
    refp = complex(mpmath.airyai(z, derivative=1))
    assert abs(ai - ref) <= 1e-11 * max(abs(ref), 1e-300)
    assert abs(aip - refp) <= 1e-11 * max(abs(refp), 1e-300)


def test_all_three_branches_used():
    assert set(airy_method(np.array([1.0, 6.0, 20.0]))) == {"series", "continuation", "asymptotic"}


def test_scaled_airy_matches_unscaled():
    z = np.array([2.0 + 1.0j, 9.0 - 2.0j, 30.0 + 5.0j])
    s, sp = airy(z, scaled=True)
    u, up = airy(z)
    zeta = 2.0 / 3.0 * z ** 1.5
    assert np.allclose(s * np.exp(-zeta), u, rtol=1e-12)


def test_airy_domain():
    with pytest.raises(DomainError):
        airy(2e4)
    with pytest.raises(OverflowError):
        airy(-800.0 + 500j)


def test_a0_at_zero_is_one_third():
    assert abs(a0(0.0) - 1.0 / 3.0) < 1e-10


def test_a0_against_quadrature():
    z = 1.0 + 0.5j
    u = cmath.exp(1j * cmath.pi / 6) * z
    ref = complex(mpmath.quad(lambda s: mpmath.airyai(u + s), [0, 5, 20, mpmath.inf]))
    assert abs(a0(z) - ref) < 1e-10 * abs(ref)


def test_a0_derivative_identity():
    z, h = 1.0 + 0.5j, 1e-4
    fd = (a0(z + h) - a0(z - h)) / (2 * h)
    assert abs(fd - a0_derivatives(z)[0]) < 1e-7


def test_log_derivative_at_zero():
    r = a0_derivatives(0.0)[0] / a0(0.0)
    assert r.real == pytest.approx(-0.9224, abs=1e-3)


def test_ratio_reports_on_sector():
    reps = check_airy_ratio_bounds(sector_samples(40, 6.0))
    assert len(reps) == 120
    assert all(np.isfinite(r.ratio) for r in reps)
    with pytest.raises(DomainError):
        check_airy_ratio_bounds([1.0 + 1.0j])


@settings(max_examples=60, deadline=None)
@given(st.floats(-25, 25), st.floats(-25, 25))
def test_airy_matches_scipy(x, y):
    z = complex(x, y)
    try:
        ai, aip = airy(z)
    except OverflowError:
        return
    ref, refp, _, _ = scipy_airy(z)
    assert abs(ai - ref) <= 1e-9 * abs(ref) + 1e-300
    assert abs(aip - refp) <= 1e-9 * abs(refp) + 1e-300


@settings(max_examples=40, deadline=None)
@given(st.floats(-6, 6), st.floats(-6, 6))
def test_airy_solves_its_ode(x, y):
    z, h = complex(x, y), 1e-3
    ai = airy(z)[0]
    second = (airy(z + h)[1] - airy(z - h)[1]) / (2 * h)
    assert abs(second - z * ai) <= 1e-5 * (1 + abs(z * ai))
