"""Acceptance criteria; each test prints one PASS/FAIL line (also collected at the end of the run)."""
import math
import time

import mpmath
import numpy as np
import pytest

from conftest import record_acceptance
from osgevrey import (INEQUALITY_IDS, RhsSpec, ZNormParams, a0, admissible_sweep, airy,
                      assemble_nonslip, build_corrector, build_grid, check_interpolation,
                      check_sc, check_stokes, make_builtin_profile, make_context, simulate,
                      solve_os_navier, solve_os_nonslip, verify_inequality)
from osgevrey.nonlinear import gevrey_initial_state, linear_reference, state_distance
from osgevrey.numerics import norm, rho_weight
from osgevrey.ossolve import boundary_identity_gap
from osgevrey.reports import summarize
from osgevrey.resolvent import laguerre_basis, random_wall_function, rayleigh_trick_gap
from osgevrey.semigroup import (ModeGenerator, contour_converged, expm_apply, random_stream,
                                stokes_energy_gap, tau_threshold, timestep_apply)

DELTAS = dict(delta1=0.1, delta2=0.1, delta_star=0.1, delta=0.1)


@pytest.fixture(scope="module")
def profile():
    return make_builtin_profile("exp")


def test_criterion_1_boundary_identity():
    start = time.perf_counter()
    # the map scale has to cover the decay length 1/alpha of the Poisson solution
    grids = {2.0: build_grid(128), 20.0: build_grid(128, scale=20.0)}
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(100):
        alpha = float(np.exp(rng.uniform(np.log(0.01), np.log(5.0))))
        g = grids[2.0 if alpha >= 0.1 else 20.0]
        B = laguerre_basis(g, (1.0, 0.3), 8)
        w = B @ (rng.standard_normal(B.shape[1]) + 1j * rng.standard_normal(B.shape[1]))
        w /= norm(g, w)
        lhs, rhs = boundary_identity_gap(g, w, alpha)
        worst = max(worst, abs(lhs - rhs))
    g = grids[2.0]
    lhs, _ = boundary_identity_gap(g, np.exp(-g.nodes), 1.0)
    closed = abs(-lhs + 0.5)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and closed <= 1e-9 and elapsed < 10
    record_acceptance(1, ok, f"boundary identity max gap {worst:.2e}, closed form gap "
                             f"{closed:.2e}, {elapsed:.1f}s")
    assert ok


def test_criterion_2_airy(profile):
    start = time.perf_counter()
    mpmath.mp.dps = 30
    ai0 = 1 / (mpmath.power(3, mpmath.mpf(2) / 3) * mpmath.gamma(mpmath.mpf(2) / 3))
    aip0 = -1 / (mpmath.power(3, mpmath.mpf(1) / 3) * mpmath.gamma(mpmath.mpf(1) / 3))
    a0_ref = mpmath.quad(mpmath.airyai, [0, mpmath.inf])
    mpmath.mp.dps = 15
    vals = airy(0.0)
    errs = [abs(vals[0] - float(ai0)), abs(vals[1] - float(aip0)), abs(a0(0.0) - float(a0_ref))]
    g = build_grid(128)
    worst = 0.0
    points = 0
    for nu in (1e-3, 1e-4):
        sweep = admissible_sweep("musmall", profile, nu=nu, ns=[20, 40, 60, 80, 100], count=15,
                                 seed=2, **DELTAS)
        for ctx in sweep:
            b = build_corrector(profile, ctx, g)
            worst = max(worst, b.diagnostics["Wa_residual"])
            points += 1
    elapsed = time.perf_counter() - start
    ok = max(errs) <= 1e-10 and worst <= 1e-7 and points == 30 and elapsed < 30
    record_acceptance(2, ok, f"Ai(0), Ai'(0), A0(0) errors {max(errs):.1e}; W_a residual max "
                             f"{worst:.1e} over {points} points, {elapsed:.1f}s")
    assert ok


def test_criterion_3_solver_equivalence(profile):
    start = time.perf_counter()
    g = build_grid(96)
    Y = g.nodes
    sweep = admissible_sweep("musmall", profile, nu=1e-3, ns=[20, 40, 60, 80, 100], count=20,
                             seed=3, **DELTAS)
    rng = np.random.default_rng(3)
    worst = 0.0
    for ctx in sweep:
        c = rng.standard_normal(4)
        rhs = RhsSpec(f1=(c[0] + c[1] * Y) * np.exp(-Y), f2=(c[2] + c[3] * Y) * np.exp(-2 * Y))
        direct = solve_os_nonslip(profile, ctx, rhs, g)
        asm = assemble_nonslip(solve_os_navier(profile, ctx, rhs, g, decompose=False),
                               build_corrector(profile, ctx, g))
        diff = norm(g, asm.phi - direct.phi, "H1-pair", alpha=ctx.alpha)
        worst = max(worst, diff / direct.pair_norm())
    # manufactured phi = Y^2 e^-Y; k-th derivative (-1)^k (Y^2 - 2kY + k(k-1)) e^-Y
    e = np.exp(-Y)
    phi, d2, d4 = Y**2 * e, (Y**2 - 4 * Y + 2) * e, (Y**2 - 8 * Y + 12) * e
    V, _, V2, _ = profile.derivatives(Y)
    man = 0.0
    for ctx in sweep[:5]:
        a2 = ctx.alpha**2
        w = d2 - a2 * phi
        F = ((ctx.mu + 1j * ctx.k * V) * w - 1j * ctx.k * V2 * phi
             - math.sqrt(ctx.nu) * (d4 - 2 * a2 * d2 + a2 * a2 * phi))
        sol = solve_os_nonslip(profile, ctx, RhsSpec(F=F), g)
        man = max(man, np.abs(sol.phi - phi).max())
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and man <= 1e-6 and elapsed < 120
    record_acceptance(3, ok, f"assembled vs direct max relative gap {worst:.1e} over "
                             f"{len(sweep)} cases; manufactured error {man:.1e}; {elapsed:.1f}s")
    assert ok


def test_criterion_4_resolvent_estimates(profile):
    start = time.perf_counter()
    grids = (build_grid(64), build_grid(128))
    failures, worst_drift, smallest = [], 0.0, math.inf
    for i, iid in enumerate(INEQUALITY_IDS):
        sweep = admissible_sweep(iid, profile, nu=1e-3, ns=[20, 40, 60, 80, 100], count=50,
                                 seed=i, **DELTAS)
        sups = []
        for g in grids:
            reps, summ, rejected = verify_inequality(iid, sweep, g, profile, seed=0)
            smallest = min(smallest, len(reps))
            sups.append(summ[iid]["sup_ratio"] if iid in summ else math.nan)
        drift = abs(sups[1] - sups[0]) / sups[0] if sups[0] > 0 else math.inf
        worst_drift = max(worst_drift, drift)
        if not (all(math.isfinite(s) for s in sups) and drift < 0.10):
            failures.append((iid, sups, drift))
    elapsed = time.perf_counter() - start
    ok = not failures and smallest >= 50 and elapsed < 15 * 60
    record_acceptance(4, ok, f"{len(INEQUALITY_IDS)} displays, >= {smallest} points each, max "
                             f"drift N=64->128 {100 * worst_drift:.2f}%, failures {failures}, "
                             f"{elapsed:.0f}s")
    assert ok


def test_criterion_5_rayleigh_trick_sign(profile):
    start = time.perf_counter()
    g = build_grid(96)
    sweep = admissible_sweep("GMMray-first", profile, nu=1e-3, ns=[10, 20, 40, 80, 160, 320],
                             count=200, seed=5, **DELTAS)
    rng = np.random.default_rng(5)
    worst = math.inf
    for ctx in sweep:
        phi = random_wall_function(g, rng)
        phi /= norm(g, phi, "H1-pair", alpha=ctx.alpha)
        worst = min(worst, rayleigh_trick_gap(profile, g, ctx.lam, ctx.alpha, phi))
    elapsed = time.perf_counter() - start
    ok = worst >= -1e-8 and len(sweep) == 200 and elapsed < 60
    record_acceptance(5, ok, f"smallest gap {worst:.3e} over {len(sweep)} draws, {elapsed:.1f}s")
    assert ok


def test_criterion_6_semigroup_cross_validation(profile):
    start = time.perf_counter()
    g = build_grid(48)
    rng = np.random.default_rng(6)
    nu = 1e-3
    agree, comp = 0.0, 0.0
    for n in (20, 30, 40, 60, 80):
        ctx = make_context(profile, nu, n, mu=0.0, **DELTAS)
        gen = ModeGenerator(profile, ctx, g)
        x0 = gen.state_from_stream(random_stream(g, rng))
        tau = 2 * tau_threshold(ctx)
        a = expm_apply(gen, x0, tau)
        b = timestep_apply(gen, x0, tau)
        c, _ = contour_converged(profile, ctx, g, x0, tau, gen=gen)
        ref = np.linalg.norm(a)
        agree = max(agree, np.linalg.norm(a - b) / ref, np.linalg.norm(a - c) / ref,
                    np.linalg.norm(b - c) / ref)
        twice = expm_apply(gen, expm_apply(gen, x0, tau / 2), tau / 2)
        comp = max(comp, np.linalg.norm(twice - a) / ref)
    nu_h, n_h = 1e-2, 300
    ctx = make_context(profile, nu_h, n_h, mu=0.0)
    gen = ModeGenerator(profile, ctx, g)
    x0 = gen.state_from_stream(random_stream(g, rng))
    f0 = gen.field(x0).l2()
    decay_ok = True
    for t in (0.1, 1.0):
        ft = gen.field(timestep_apply(gen, x0, t / math.sqrt(nu_h))).l2()
        decay_ok &= ft <= math.exp(-nu_h * n_h**2 * t / 4) * f0
    elapsed = time.perf_counter() - start
    ok = agree <= 1e-6 and comp <= 1e-8 and decay_ok and elapsed < 300
    record_acceptance(6, ok, f"max pairwise disagreement {agree:.1e}, composition {comp:.1e}, "
                             f"high-regime decay {'observed' if decay_ok else 'violated'}, "
                             f"{elapsed:.1f}s")
    assert ok


def test_criterion_7_stokes_and_interpolation(profile):
    start = time.perf_counter()
    nu = 1e-3
    sups, energy = {}, 0.0
    for N in (96, 192):
        g = build_grid(N)
        rng = np.random.default_rng(7)
        reps = []
        for d in range(50):
            n = (5, 20, 80)[d % 3]
            ctx = make_context(profile, nu, n, mu=0.0)
            psi = random_stream(g, rng)
            reps += check_stokes(profile, ctx, g, psi, [0.0, 0.05, 0.5])
            if d < 10:
                energy = max(energy, stokes_energy_gap(profile, ctx, g, psi, 0.5 / math.sqrt(nu)))
        rng = np.random.default_rng(17)
        for d in range(50):
            n = (5, 20, 80)[d % 3]
            alpha = math.sqrt(nu) * n
            phi = random_wall_function(g, rng)
            w = g.D2 @ phi - alpha**2 * phi
            reps.append(check_interpolation(g, phi, w, rho_weight(n, 2 / 3, 0.1), alpha))
        sups[N] = {k: v["sup_ratio"] for k, v in summarize(reps).items()}
    drift = {k: abs(sups[192][k] / sups[96][k] - 1) for k in sups[96]}
    elapsed = time.perf_counter() - start
    ok = energy <= 1e-8 and len(drift) == 4 and max(drift.values()) < 0.10 and elapsed < 120
    record_acceptance(7, ok, f"energy identity gap {energy:.1e}; ratios {sups[96]}; max drift "
                             f"{100 * max(drift.values()):.3f}%, {elapsed:.1f}s")
    assert ok


def test_criterion_8_nonlinear_stability(profile):
    start = time.perf_counter()
    nu, gamma = 1e-3, 0.75
    z = ZNormParams(gamma, 2.0, 5 - 3 * gamma + 0.5, 0.5)
    amp = 1e-2 * nu ** (0.5 + z.beta_value)
    fitted, stable = {}, True
    for nx, N in ((16, 96), (32, 192)):
        g = build_grid(N)
        a = gevrey_initial_state(g, nu, nx, z, amp, seed=8, n_init=16)
        res = simulate(profile, a, nu, z, z.T_max)
        fitted[(nx, N)] = res.fitted_C
        stable &= res.stable and res.stop_reason == "completed"
    drift = abs(fitted[(32, 192)] / fitted[(16, 96)] - 1)
    g = build_grid(96)
    tiny = gevrey_initial_state(g, nu, 16, z, 1e-8 * nu ** (0.5 + z.beta_value), seed=8)
    res = simulate(profile, tiny, nu, z, z.T_max)
    lin = state_distance(res.state, linear_reference(profile, tiny, gamma, res.state.time))
    elapsed = time.perf_counter() - start
    ok = stable and drift < 0.15 and lin <= 1e-4
    record_acceptance(8, ok, f"fitted C {fitted[(16, 96)]:.4f} -> {fitted[(32, 192)]:.4f} "
                             f"(drift {100 * drift:.1f}%), linear consistency {lin:.1e}, "
                             f"{elapsed:.0f}s")
    assert ok


def test_criterion_9_sc_gatekeeping(profile):
    start = time.perf_counter()
    nodes = np.linspace(0.0, 40.0, 4001)
    rep = check_sc(profile, nodes)
    bad = check_sc(make_builtin_profile("tanh"), nodes)
    elapsed = time.perf_counter() - start
    ok = (rep.passed and abs(rep.minimal_M - 2.0) <= 0.02 and not bad.passed
          and bad.witness is not None and bad.witness < 0.5 and elapsed < 1)
    record_acceptance(9, ok, f"exp minimal M {rep.minimal_M:.4f}; tanh witness Y = {bad.witness}, "
                             f"{elapsed * 1000:.0f}ms")
    assert ok
