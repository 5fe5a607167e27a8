import math

import numpy as np
import pytest

from osgevrey import (ConfigError, DomainError, MethodError, ModeGenerator, apply_semigroup,
                      build_contour, build_grid, check_stokes, make_context,
                      verify_semigroup_bounds)
from osgevrey.reports import summarize
from osgevrey.resolvent import THETA_DEFAULT
from osgevrey.semigroup import (contour_apply, contour_converged, contour_corners, expm_apply,
                                fit_growth, random_stream, stokes_energy_gap, tau_threshold,
                                timestep_apply)

NU = 1e-3
DELTAS = dict(delta1=0.1, delta2=0.1, delta_star=0.1, delta=0.1)


@pytest.fixture(scope="module")
def setup(exp_profile):
    g = build_grid(48)
    ctx = make_context(exp_profile, NU, 20, mu=0.0, **DELTAS)
    gen = ModeGenerator(exp_profile, ctx, g)
    x0 = gen.state_from_stream(random_stream(g, np.random.default_rng(5)))
    return g, ctx, gen, x0


def test_identity_at_time_zero(exp_profile, setup):
    g, ctx, gen, x0 = setup
    psi = gen.stream(x0)
    out = apply_semigroup(exp_profile, ctx, g, psi, 0.0, "expm")
    assert np.allclose(out.phi, psi, atol=1e-14)
    assert np.allclose(timestep_apply(gen, x0, 0.0), x0)


def test_states_are_nonslip(setup):
    g, ctx, gen, x0 = setup
    phi = gen.stream(x0)
    assert abs(phi[0]) < 1e-13 and abs((g.D1 @ phi)[0]) < 1e-10


def test_contour_geometry(setup):
    g, ctx, gen, x0 = setup
    tau = 2 * tau_threshold(ctx)
    c = build_contour(ctx, THETA_DEFAULT, tau=tau)
    assert c.continuity_gap() == 0.0
    re0, h = contour_corners(ctx, THETA_DEFAULT)
    l0 = [s for s in c.segments if s.name == "l0"][0]
    assert re0 == pytest.approx(math.sqrt(NU) * 20 ** (2 / 3) / 0.1)
    expected_h = (math.sqrt(NU) * 20 + abs(math.tan(THETA_DEFAULT)) * 20 ** (2 / 3) * math.sqrt(NU)) / 0.1
    assert l0.start == pytest.approx(complex(re0, -expected_h))
    assert l0.end == pytest.approx(complex(re0, expected_h))
    with pytest.raises(ConfigError):
        build_contour(ctx, 0.3, tau=tau)


def test_contour_matches_expm(exp_profile, setup):
    g, ctx, gen, x0 = setup
    tau = 2 * tau_threshold(ctx)
    ref = expm_apply(gen, x0, tau)
    out, _ = contour_converged(exp_profile, ctx, g, x0, tau, gen=gen)
    assert np.linalg.norm(out - ref) <= 1e-6 * np.linalg.norm(ref)


def test_contour_truncation_converged(exp_profile, setup):
    g, ctx, gen, x0 = setup
    tau = tau_threshold(ctx)
    counts = {k: 16 for k in ("Gamma-", "l-", "l0", "l+", "Gamma+")}
    short = contour_apply(exp_profile, ctx, g, x0, tau, build_contour(ctx, tau=tau,
                                                                      node_counts=counts), gen)
    # building for tau/2 doubles the ray truncation length
    wide = build_contour(ctx, tau=tau / 2, node_counts=counts)
    long = contour_apply(exp_profile, ctx, g, x0, tau, wide, gen)
    assert np.linalg.norm(short - long) <= 1e-10 * np.linalg.norm(long)


def test_contour_threshold_enforced(exp_profile, setup):
    g, ctx, gen, x0 = setup
    with pytest.raises(MethodError):
        apply_semigroup(exp_profile, ctx, g, gen.stream(x0), 0.5 * tau_threshold(ctx), "contour")
    with pytest.raises(DomainError):
        apply_semigroup(exp_profile, ctx, g, gen.stream(x0), -1.0)


def test_expm_resolution_limit(exp_profile):
    g = build_grid(128)
    ctx = make_context(exp_profile, NU, 20, mu=0.0, **DELTAS)
    with pytest.raises(MethodError):
        apply_semigroup(exp_profile, ctx, g, g.nodes**2 * np.exp(-g.nodes), 1.0, "expm")


def test_timestep_matches_expm(setup):
    g, ctx, gen, x0 = setup
    tau = 2 * tau_threshold(ctx)
    ref = expm_apply(gen, x0, tau)
    assert np.linalg.norm(timestep_apply(gen, x0, tau) - ref) <= 1e-6 * np.linalg.norm(ref)


def test_composition(setup):
    g, ctx, gen, x0 = setup
    a = expm_apply(gen, expm_apply(gen, x0, 1.5), 2.5)
    b = expm_apply(gen, x0, 4.0)
    assert np.linalg.norm(a - b) <= 1e-8 * np.linalg.norm(b)


def test_velocity_input_equivalent_to_stream(exp_profile, setup):
    g, ctx, gen, x0 = setup
    psi = gen.stream(x0)
    v = (-(g.D1 @ psi), 1j * ctx.k * psi)
    a = apply_semigroup(exp_profile, ctx, g, psi, 3.0)
    b = apply_semigroup(exp_profile, ctx, g, v, 3.0)
    assert np.allclose(a.phi, b.phi, atol=1e-10 * np.abs(a.phi).max())


@pytest.mark.parametrize("t", [0.1, 1.0])
def test_high_regime_decay(exp_profile, t):
    nu, n = 1e-2, 300
    g = build_grid(48)
    ctx = make_context(exp_profile, nu, n, mu=0.0)
    gen = ModeGenerator(exp_profile, ctx, g)
    x0 = gen.state_from_stream(random_stream(g, np.random.default_rng(2)))
    x1 = timestep_apply(gen, x0, t / math.sqrt(nu))
    assert gen.field(x1).l2() <= math.exp(-nu * n * n * t / 4) * gen.field(x0).l2()


def test_bound_reports(exp_profile):
    g = build_grid(48)
    sweep = [make_context(exp_profile, NU, n, mu=0.0, **DELTAS) for n in (3, 40, 3000)]
    reps = verify_semigroup_bounds(exp_profile, sweep, g, [0.01, 0.05], draws=2)
    ids = set(summarize(reps))
    assert {"semigroup-L2-low", "semigroup-L2-middle-small", "semigroup-L2-high",
            "semigroup-H1Linf-middle-small"} <= ids
    assert all(math.isfinite(r.ratio) for r in reps)


def test_bound_reports_reject_gamma(exp_profile):
    g = build_grid(48)
    ctx = make_context(exp_profile, NU, 40, mu=0.0, gamma=0.5, **DELTAS)
    with pytest.raises(ConfigError):
        verify_semigroup_bounds(exp_profile, [ctx], g, [0.1])


def test_growth_fit_recovers_exponential():
    t = np.array([0.1, 0.5, 1.0])
    C, c = fit_growth(t, 2.5 * np.exp(0.7 * t))
    assert C == pytest.approx(2.5) and c == pytest.approx(0.7)


def test_stokes_energy_identity(exp_profile):
    g = build_grid(96)
    ctx = make_context(exp_profile, NU, 20, mu=0.0)
    psi = random_stream(g, np.random.default_rng(3))
    for tau in (1.0, 10.0):
        assert stokes_energy_gap(exp_profile, ctx, g, psi, tau) <= 1e-8


def test_stokes_methods_agree(exp_profile):
    g = build_grid(64)
    ctx = make_context(exp_profile, NU, 20, mu=0.0)
    psi = random_stream(g, np.random.default_rng(4))
    a = check_stokes(exp_profile, ctx, g, psi, [0.05])
    b = check_stokes(exp_profile, ctx, g, psi, [0.05], method="expm")
    assert [r.inequality_id for r in a] == ["stokes-H1-Linf", "stokes-L2-Linf", "stokes-gradient"]
    for x, y in zip(a, b):
        assert x.lhs == pytest.approx(y.lhs, rel=1e-8)
    with pytest.raises(MethodError):
        check_stokes(exp_profile, ctx, g, psi, [0.05], method="rk4")
