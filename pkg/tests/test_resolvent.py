import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from osgevrey import (INEQUALITY_IDS, ConfigError, HypothesisViolation, admissible_sweep,
                      build_grid, classify, evaluate_display, in_resolvent_region,
                      make_builtin_profile, make_context, resolvent_norm, verify_inequality)
from osgevrey.resolvent import random_wall_function, rayleigh_trick_gap

DELTAS = dict(delta1=0.1, delta2=0.1, delta_star=0.1, delta=0.1)


@pytest.mark.parametrize("n, regime", [(100, "middle-small"), (1, "low"), (10**6, "high"),
                                       (8000, "middle-large")])
def test_frequency_regimes(exp_profile, n, regime):
    assert classify(exp_profile, 1e-4, n, 2.0 / 3.0).frequency == regime


def test_regime_thresholds_from_delta0(exp_profile):
    d0 = exp_profile.delta0
    assert 1 / d0 == pytest.approx(8.943, abs=1e-3)
    assert classify(exp_profile, 1e-4, 8, 2 / 3).frequency == "low"
    assert classify(exp_profile, 1e-4, 9, 2 / 3).frequency != "low"


def test_zero_mu_in_no_region(exp_profile):
    assert in_resolvent_region(make_context(exp_profile, 1e-3, 20, mu=0.0, **DELTAS)) == ()


def test_o_line_is_closed(exp_profile):
    ctx = make_context(exp_profile, 1e-3, 20, mu=0.0, **DELTAS)
    ctx = ctx.with_mu(complex(ctx.remu_threshold, 0.1 * ctx.remu_threshold))
    assert "O-disc-line" in in_resolvent_region(ctx)


def test_theta_range_checked(exp_profile):
    ctx = make_context(exp_profile, 1e-3, 20, mu=1.0, **DELTAS)
    with pytest.raises(ConfigError):
        in_resolvent_region(ctx, theta=0.5)


def test_large_mu_resolvent_decays_like_inverse(exp_profile, grid64):
    vals = []
    for mu in (200.0, 400.0):
        ctx = make_context(exp_profile, 1e-3, 20, mu=mu, **DELTAS)
        vals.append(mu * resolvent_norm(exp_profile, ctx, grid64, "L2->L2"))
    assert vals[1] == pytest.approx(vals[0], rel=0.05)
    assert vals[0] <= 1.5


def test_subspace_norm_is_lower_bound(exp_profile, grid64):
    ctx = make_context(exp_profile, 1e-3, 20, mu=1.0 + 0.5j, **DELTAS)
    full = resolvent_norm(exp_profile, ctx, grid64, "L2->L2", "grid")
    sub = resolvent_norm(exp_profile, ctx, grid64, "L2->L2", "subspace")
    assert sub <= full * (1 + 1e-10)


def test_all_ids_have_admissible_points(exp_profile, grid64):
    assert len(INEQUALITY_IDS) == len(set(INEQUALITY_IDS))
    for i, iid in enumerate(INEQUALITY_IDS):
        sweep = admissible_sweep(iid, exp_profile, nu=1e-3, ns=[20, 60], count=2, seed=i,
                                 **DELTAS)
        reps, summary, rejected = verify_inequality(iid, sweep, grid64, exp_profile)
        assert not rejected and len(reps) == 2
        assert math.isfinite(summary[iid]["sup_ratio"])


def test_hypothesis_violation_names_clause(exp_profile, grid64):
    ctx = make_context(exp_profile, 1e-3, 20, mu=0.0, **DELTAS)
    with pytest.raises(HypothesisViolation) as info:
        evaluate_display("musmall", exp_profile, ctx, grid64)
    assert "Re mu" in info.value.clause


def test_sweep_rejections_recorded(exp_profile, grid64):
    bad = [make_context(exp_profile, 1e-3, 20, mu=0.0, **DELTAS)]
    reps, summary, rejected = verify_inequality("musmall", bad, grid64, exp_profile)
    assert reps == [] and len(rejected) == 1


def test_unknown_id(exp_profile, grid64):
    with pytest.raises(ConfigError):
        admissible_sweep("nope", exp_profile, nu=1e-3, ns=[20], count=1)


def test_reports_are_deterministic(exp_profile, grid64):
    sweep = admissible_sweep("musmall", exp_profile, nu=1e-3, ns=[20], count=3, **DELTAS)
    a = verify_inequality("musmall", sweep, grid64, exp_profile, seed=3)[0]
    b = verify_inequality("musmall", sweep, grid64, exp_profile, seed=3)[0]
    assert [r.to_dict() for r in a] == [r.to_dict() for r in b]


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.5, 1.5), st.floats(0.05, 2.0), st.floats(0.01, 2.0), st.integers(0, 2**31))
def test_rayleigh_trick_sign(lr, li, alpha, seed):
    prof = make_builtin_profile("exp")
    g = build_grid(64)
    phi = random_wall_function(g, np.random.default_rng(seed))
    gap = rayleigh_trick_gap(prof, g, complex(lr, li), alpha, phi)
    assert gap >= -1e-8
