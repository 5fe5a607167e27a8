import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from osgevrey import (ConfigError, ConsistencyError, DomainError, ZNormParams, build_grid,
                      check_convolution_bound, nonlinear_term, simulate)
from osgevrey.nonlinear import (beta_exponent, convective_term, convective_term_bruteforce,
                                gevrey_initial_state, initial_norm, leray_mode, linear_reference,
                                state_distance, state_from_modes, z_components, zero_state)

NU = 1e-3
GAMMA = 0.75
ZN = ZNormParams(GAMMA, 2.0, 5 - 3 * GAMMA + 0.5, 0.5)


@pytest.fixture(scope="module")
def grid():
    return build_grid(32)


@pytest.fixture(scope="module")
def state(grid):
    return gevrey_initial_state(grid, NU, 4, ZN, 1.0, seed=3)


def test_exponents():
    assert ZN.q == pytest.approx(1.5)
    assert beta_exponent(0.75) == pytest.approx(0.45933, abs=1e-5)
    assert ZN.T_max == pytest.approx(0.5)
    with pytest.raises(ConfigError):
        ZNormParams(GAMMA, 2.0, 1.5, 0.5)


def test_initial_state_properties(state):
    assert initial_norm(state, ZN) == pytest.approx(1.0, rel=1e-12)
    assert state.divergence_gap() < 1e-8
    assert state.mean[0] == 0.0
    for n in range(1, 5):
        u1, u2 = state.mode(n)
        assert abs(u1[0]) < 1e-10 and abs(u2[0]) < 1e-12


def test_state_round_trip(grid, state):
    again = state_from_modes(grid, NU, {n: state.mode(n) for n in range(5)}, 4)
    assert state_distance(again, state) < 1e-10


def test_state_from_modes_rejects_bad_mean(grid):
    Y = grid.nodes
    with pytest.raises(DomainError):
        state_from_modes(grid, NU, {0: (np.exp(-Y), np.zeros(grid.N))}, 2)
    with pytest.raises(DomainError):
        state_from_modes(grid, NU, {0: (Y * np.exp(-Y), np.exp(-Y))}, 2)


def test_zero_state_has_zero_nonlinearity(grid):
    z = zero_state(grid, NU, 3)
    for p1, p2 in nonlinear_term(z).values():
        assert not np.any(p1) and not np.any(p2)


def test_zero_norm_with_nonzero_nonlinearity_is_inconsistent(state, monkeypatch):
    import osgevrey.nonlinear as nl
    monkeypatch.setattr(nl, "z_components", lambda *a, **k: {"Z": 0.0})
    with pytest.raises(ConsistencyError):
        check_convolution_bound(state, ZN, NU, 0.1)


def test_padded_transform_matches_direct_convolution(state):
    fast, slow = convective_term(state), convective_term_bruteforce(state)
    scale = max(np.abs(slow[n][0]).max() for n in slow)
    for n in slow:
        assert np.abs(fast[n][0] - slow[n][0]).max() <= 1e-12 * scale
        assert np.abs(fast[n][1] - slow[n][1]).max() <= 1e-12 * scale


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 2 * math.pi))
def test_translation_covariance(shift):
    g = build_grid(24)
    s = gevrey_initial_state(g, NU, 3, ZN, 1.0, seed=1)
    moved = s.copy()
    for n in moved.coeffs:
        moved.coeffs[n] = moved.coeffs[n] * np.exp(1j * n * shift)
    a, b = nonlinear_term(s), nonlinear_term(moved)
    scale = max(max(np.abs(p).max() for p in a[n]) for n in a)
    for n in a:
        ph = np.exp(1j * n * shift)
        assert np.abs(b[n][0] - ph * a[n][0]).max() <= 1e-10 * scale
        assert np.abs(b[n][1] - ph * a[n][1]).max() <= 1e-10 * scale


def test_nonlinearity_is_quadratic(state):
    big = state.copy()
    big.mean = 3 * big.mean
    for n in big.coeffs:
        big.coeffs[n] = 3 * big.coeffs[n]
    a, b = nonlinear_term(state), nonlinear_term(big)
    scale = max(max(np.abs(p).max() for p in a[n]) for n in a)
    for n in a:
        for p, q in zip(a[n], b[n]):
            assert np.abs(q - 9 * p).max() <= 1e-10 * 9 * scale


def test_leray_projection_is_idempotent_and_divergence_free(grid, state):
    for n, (p1, p2) in nonlinear_term(state).items():
        q1, q2 = leray_mode(grid, NU, n, p1, p2)
        scale = max(np.abs(p1).max(), np.abs(p2).max(), 1e-300)
        assert np.abs(q1 - p1).max() <= 1e-10 * scale
        if n:
            div = 1j * n * math.sqrt(NU) * p1 + grid.D1 @ p2
            assert np.abs(div).max() <= 1e-8 * scale


def test_convolution_bound_report(state):
    rep = check_convolution_bound(state, ZN, NU, 0.1)
    assert rep.inequality_id == "convolution-bound" and math.isfinite(rep.ratio)
    with pytest.raises(ConfigError):
        check_convolution_bound(state, ZN, NU, 0.0)


def test_z_norm_components(state):
    z = z_components(state, ZN, 0.0)
    assert z["Z"] == pytest.approx(z["X"] + NU**0.25 * z["Y"])


def test_short_simulation_runs_and_matches_linear_evolution(exp_profile, grid):
    amp = 1e-8 * NU ** (0.5 + ZN.beta_value)
    a = gevrey_initial_state(grid, NU, 3, ZN, amp, seed=2)
    res = simulate(exp_profile, a, NU, ZN, 0.05, max_dt=0.02, linear=False)
    assert res.stop_reason == "completed" and res.stable
    assert res.state.time == pytest.approx(0.05)
    ref = linear_reference(exp_profile, a, GAMMA, res.state.time)
    assert state_distance(res.state, ref) < 1e-4
    assert res.state.divergence_gap() < 1e-8
    assert res.energy_excess < 1e-6


def test_simulation_is_deterministic(exp_profile, grid):
    a = gevrey_initial_state(grid, NU, 2, ZN, 1e-3, seed=4)
    r1 = simulate(exp_profile, a, NU, ZN, 0.02)
    r2 = simulate(exp_profile, a, NU, ZN, 0.02)
    assert [h["Z"] for h in r1.history] == [h["Z"] for h in r2.history]


def test_simulation_rejects_mismatched_nu(exp_profile, state):
    with pytest.raises(ConfigError):
        simulate(exp_profile, state, 2 * NU, ZN, 0.1)
