"""Scenario configs, runners and report aggregation."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError, SchemaVersionError
from .numerics import build_grid
from .profiles import ShearProfile, check_sc, load_profile_csv, make_builtin_profile
from .reports import SCHEMA_VERSION, EstimateReport, _plain, summarize

KINDS = ("profile-check", "os-solve", "corrector", "resolvent-sweep", "semigroup-check",
         "stokes-check", "nonlinear-sim", "airy-check")
FORMATS = ("jsonl", "json", "csv")

NUMERICS_DEFAULTS = {"N": 64, "mapping": "algebraic", "scale": 2.0, "tolerance": 1e-8}

PARAM_DEFAULTS = {
    "profile-check": {"nodes": 4001, "length": 40.0, "expect_pass": True},
    "os-solve": {"nu": 1e-3, "n": 20, "lam": [0.3, 0.2], "gamma": 2.0 / 3.0, "bc": "nonslip",
                 "rhs": "exp"},
    "corrector": {"nu": 1e-3, "n": 20, "lam": [0.3, 0.2], "gamma": 2.0 / 3.0, "form": "raw"},
    "resolvent-sweep": {"ids": "all", "nu": 1e-3, "ns": [20, 40, 60, 80, 100], "count": 10,
                        "gamma": 2.0 / 3.0, "delta": 0.1, "delta1": 0.1, "delta2": 0.1,
                        "delta_star": 0.1, "lam_cap": None, "theta": None,
                        "method": "subspace", "compare_N": None, "max_drift": 0.10},
    "semigroup-check": {"nu": 1e-3, "ns": [20, 30], "gamma": 2.0 / 3.0, "delta": 0.1,
                        "delta1": 0.1, "delta2": 0.1, "delta_star": 0.1, "tau_factor": 2.0,
                        "times": [0.005, 0.01, 0.02], "theta": None, "agreement": 1e-6},
    "stokes-check": {"nu": 1e-3, "ns": [5, 20], "times": [0.01, 0.05], "draws": 10,
                     "energy_tol": 1e-8},
    "nonlinear-sim": {"nu": 1e-3, "gamma": 0.75, "d": None, "K": 2.0, "delta": 0.5,
                      "n_max": 16, "epsilon": 1e-2, "T": 1.0, "max_dt": 0.02, "c_accept": 10.0,
                      "output_every": 10},
    "airy-check": {"count": 200, "radius": 10.0, "sector_height": 0.1, "max_rel_error": 1e-10},
}


@dataclass
class Scenario:
    kind: str
    profile: str = "exp"
    seed: int = 0
    numerics: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    source: str | None = None


def _field_error(path, msg):
    return ConfigError(f"{path}: {msg}")


def _positive(value, path):
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0:
        raise _field_error(path, f"must be a positive number, got {value!r}")


def parse_complex(value, path="value") -> complex:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    try:
        return complex(value.replace(" ", "") if isinstance(value, str) else value)
    except (TypeError, ValueError):
        raise _field_error(path, f"not a complex number: {value!r}") from None


def validate_config(data, source: str | None = None) -> Scenario:
    where = source or "config"
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: top level must be a mapping")
    allowed = {"schema_version", "kind", "profile", "seed", "numerics", "params", "output"}
    extra = set(data) - allowed
    if extra:
        raise _field_error(where, f"unknown fields {sorted(extra)}")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"{where}: schema_version {version} != {SCHEMA_VERSION}")
    if "kind" not in data:
        raise _field_error(where, "missing required field 'kind'")
    kind = data["kind"]
    if kind not in KINDS:
        raise _field_error(f"{where}.kind", f"must be one of {list(KINDS)}, got {kind!r}")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise _field_error(f"{where}.seed", "must be a nonnegative integer")
    profile = data.get("profile", "exp")
    if not isinstance(profile, str):
        raise _field_error(f"{where}.profile", "must be a catalogue name or CSV path")

    numerics = dict(NUMERICS_DEFAULTS)
    given = data.get("numerics") or {}
    if not isinstance(given, dict):
        raise _field_error(f"{where}.numerics", "must be a mapping")
    bad = set(given) - set(NUMERICS_DEFAULTS)
    if bad:
        raise _field_error(f"{where}.numerics", f"unknown fields {sorted(bad)}")
    numerics.update(given)
    if not isinstance(numerics["N"], int) or numerics["N"] < 16:
        raise _field_error(f"{where}.numerics.N", "must be an integer >= 16")
    _positive(numerics["scale"], f"{where}.numerics.scale")
    _positive(numerics["tolerance"], f"{where}.numerics.tolerance")

    params = dict(PARAM_DEFAULTS[kind])
    given = data.get("params") or {}
    if not isinstance(given, dict):
        raise _field_error(f"{where}.params", "must be a mapping")
    bad = set(given) - set(PARAM_DEFAULTS[kind])
    if bad:
        raise _field_error(f"{where}.params", f"unknown fields for {kind}: {sorted(bad)}")
    params.update(given)
    for key in ("nu", "tolerance", "energy_tol", "agreement", "max_rel_error", "epsilon", "T",
                "max_dt", "radius", "length", "K", "delta1", "delta2", "delta_star", "c_accept",
                "tau_factor", "max_drift", "sector_height"):
        if key in params and params[key] is not None:
            _positive(params[key], f"{where}.params.{key}")
    if "delta" in params and params["delta"] is not None:
        _positive(params["delta"], f"{where}.params.delta")
    if "lam" in params:
        parse_complex(params["lam"], f"{where}.params.lam")

    output = {"dir": "out", "formats": list(FORMATS)}
    given = data.get("output") or {}
    if not isinstance(given, dict):
        raise _field_error(f"{where}.output", "must be a mapping")
    bad = set(given) - set(output)
    if bad:
        raise _field_error(f"{where}.output", f"unknown fields {sorted(bad)}")
    output.update(given)
    for fmt in output["formats"]:
        if fmt not in FORMATS:
            raise _field_error(f"{where}.output.formats", f"unknown format {fmt!r}")
    return Scenario(kind, profile, seed, numerics, params, output, source)


def load_config(path) -> Scenario:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: no such config file")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        raise ConfigError(f"{where}: {getattr(exc, 'problem', exc)}") from None
    return validate_config(data, str(path))


def resolve_profile(name: str, base: Path | None = None) -> ShearProfile:
    if name.endswith(".csv"):
        p = Path(name)
        if not p.is_absolute() and base is not None:
            p = base / p
        if not p.exists():
            raise ConfigError(f"profile file {p} does not exist")
        return load_profile_csv(p)
    return make_builtin_profile(name)


# Outputs

@dataclass
class RunOutcome:
    passed: bool
    summary: dict
    reports: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)     # name -> (header, rows)


def _dump(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, default=_jsonable)


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    return str(value)


def write_reports(path, reports) -> None:
    with open(path, "w") as fh:
        for rep in reports:
            fh.write(_dump(rep.to_dict()) + "\n")


def read_reports(path) -> list[EstimateReport]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            data = json.loads(line)
            version = data.get("schema_version")
            if version != SCHEMA_VERSION:
                raise SchemaVersionError(f"{path}:{lineno}: schema_version {version} "
                                         f"!= {SCHEMA_VERSION}")
            out.append(EstimateReport.from_dict(data))
    return out


def write_table(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])


def emit(outcome: RunOutcome, scenario: Scenario, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fmts = scenario.output["formats"]
    if "jsonl" in fmts:
        write_reports(out / "reports.jsonl", outcome.reports)
    if "json" in fmts:
        summary = {"schema_version": SCHEMA_VERSION, "kind": scenario.kind,
                   "profile": scenario.profile, "seed": scenario.seed,
                   "numerics": scenario.numerics, "params": scenario.params,
                   "passed": outcome.passed, "result": outcome.summary,
                   "estimates": summarize(outcome.reports)}
        (out / "summary.json").write_text(
            json.dumps(_plain(summary), sort_keys=True, indent=2, default=_jsonable) + "\n")
    if "csv" in fmts:
        for name, (header, rows) in outcome.tables.items():
            write_table(out / f"{name}.csv", header, rows)
    return out


# Runners

def _grid(scn: Scenario, N=None):
    num = scn.numerics
    return build_grid(int(N or num["N"]), num["mapping"], float(num["scale"]))


def _run_profile_check(scn, profile):
    p = scn.params
    rep = check_sc(profile, np.linspace(0.0, p["length"], int(p["nodes"])),
                   limit_length=p["length"])
    summary = dict(rep.to_dict(), profile_norm=profile.profile_norm, delta0=profile.delta0)
    return RunOutcome(rep.passed == bool(p["expect_pass"]), summary)


def _context(scn, profile):
    from .ossolve import make_context
    p = scn.params
    return make_context(profile, p["nu"], int(p["n"]), lam=parse_complex(p["lam"]),
                        gamma=p["gamma"])


def _run_os_solve(scn, profile):
    from .ossolve import RhsSpec, solve_os_navier, solve_os_nonslip
    p = scn.params
    grid = _grid(scn)
    ctx = _context(scn, profile)
    Y = grid.nodes
    shapes = {"exp": np.exp(-Y), "bump": Y * np.exp(-Y), "gauss": np.exp(-Y * Y)}
    if p["rhs"] not in shapes:
        raise ConfigError(f"params.rhs must be one of {sorted(shapes)}")
    rhs = RhsSpec(F=shapes[p["rhs"]])
    if p["bc"] == "nonslip":
        sol = solve_os_nonslip(profile, ctx, rhs, grid)
    elif p["bc"] == "navier":
        sol = solve_os_navier(profile, ctx, rhs, grid, decompose=False)
    else:
        raise ConfigError("params.bc must be nonslip or navier")
    tol = scn.numerics["tolerance"]
    summary = {"residual": sol.residual_norm, "sigma_ratio": sol.sigma_ratio,
               "pair_norm": sol.pair_norm(), "boundary": [complex(b) for b in sol.boundary],
               "context": ctx.snapshot()}
    rows = [(y, a.real, a.imag, b.real, b.imag) for y, a, b in zip(Y, sol.phi, sol.w)]
    return RunOutcome(sol.residual_norm <= tol * max(1.0, sol.pair_norm()), summary, [],
                      {"solution": (["Y", "Re_phi", "Im_phi", "Re_w", "Im_w"], rows)})


def _run_corrector(scn, profile):
    from .ossolve import build_corrector
    grid = _grid(scn)
    ctx = _context(scn, profile)
    b = build_corrector(profile, ctx, grid, scn.params["form"])
    summary = {"J": b.J, "A": b.A, "diagnostics": b.diagnostics, "context": ctx.snapshot()}
    tol = scn.numerics["tolerance"]
    passed = b.diagnostics["J_gap"] <= max(tol, 1e-6)
    rows = [(y, w.real, w.imag) for y, w in zip(grid.nodes, b.W_b)]
    return RunOutcome(passed, summary, [], {"corrector": (["Y", "Re_Wb", "Im_Wb"], rows)})


def _deltas(p):
    return {k: p[k] for k in ("delta1", "delta2", "delta_star", "delta")}


def _run_resolvent_sweep(scn, profile):
    from .resolvent import INEQUALITY_IDS, THETA_DEFAULT, admissible_sweep, verify_inequality
    p = scn.params
    ids = list(INEQUALITY_IDS) if p["ids"] == "all" else list(p["ids"])
    theta = THETA_DEFAULT if p["theta"] is None else p["theta"]
    grids = [_grid(scn)]
    if p["compare_N"]:
        grids.append(_grid(scn, p["compare_N"]))
    reports, rows, ok = [], [], True
    per_id = {}
    for idx, iid in enumerate(ids):
        sweep = admissible_sweep(iid, profile, nu=p["nu"], ns=p["ns"], count=int(p["count"]),
                                 gamma=p["gamma"], lam_cap=p["lam_cap"],
                                 seed=scn.seed + idx, theta=theta, **_deltas(p))
        sups = []
        for grid in grids:
            reps, summ, rejected = verify_inequality(iid, sweep, grid, profile, scn.seed,
                                                     p["method"], theta)
            reports.extend(reps)
            sup = summ[iid]["sup_ratio"] if iid in summ else 0.0
            sups.append(sup)
            rows.append((iid, grid.N, sup, len(reps), len(rejected)))
        drift = abs(sups[-1] - sups[0]) / sups[0] if len(sups) > 1 and sups[0] > 0 else 0.0
        good = all(math.isfinite(s) for s in sups) and drift < p["max_drift"]
        ok &= good
        per_id[iid] = {"sup_ratio": sups, "drift": drift, "pass": good}
    return RunOutcome(ok, {"ids": per_id}, reports,
                      {"sweep": (["inequality_id", "N", "sup_ratio", "count", "rejected"], rows)})


def _run_semigroup_check(scn, profile):
    from .ossolve import make_context
    from .resolvent import THETA_DEFAULT
    from .semigroup import (ModeGenerator, contour_converged, expm_apply, random_stream,
                            tau_threshold, timestep_apply, verify_semigroup_bounds)
    p = scn.params
    grid = _grid(scn)
    theta = THETA_DEFAULT if p["theta"] is None else p["theta"]
    rng = np.random.default_rng(scn.seed)
    rows, worst = [], 0.0
    sweep = []
    for n in p["ns"]:
        ctx = make_context(profile, p["nu"], int(n), mu=0.0, gamma=p["gamma"], **_deltas(p))
        sweep.append(ctx)
        gen = ModeGenerator(profile, ctx, grid)
        x0 = gen.state_from_stream(random_stream(grid, rng))
        tau = p["tau_factor"] * tau_threshold(ctx)
        a = expm_apply(gen, x0, tau) if grid.N <= 96 else None
        b = timestep_apply(gen, x0, tau)
        c, _ = contour_converged(profile, ctx, grid, x0, tau, theta, gen=gen)
        ref = np.linalg.norm(b)
        gaps = [np.linalg.norm(c - b) / ref]
        if a is not None:
            gaps += [np.linalg.norm(a - b) / ref, np.linalg.norm(a - c) / ref]
        worst = max(worst, max(gaps))
        rows.append((n, tau, *gaps))
    reports = verify_semigroup_bounds(profile, sweep, grid, p["times"], seed=scn.seed,
                                      method="expm" if grid.N <= 96 else "timestep")
    passed = worst <= p["agreement"] and all(math.isfinite(r.ratio) for r in reports)
    header = ["n", "tau", "contour_vs_timestep"] + (["expm_vs_timestep", "expm_vs_contour"]
                                                    if grid.N <= 96 else [])
    return RunOutcome(passed, {"max_disagreement": worst}, reports,
                      {"agreement": (header, rows)})


def _run_stokes_check(scn, profile):
    from .ossolve import make_context
    from .semigroup import check_stokes, random_stream, stokes_energy_gap
    p = scn.params
    grid = _grid(scn)
    rng = np.random.default_rng(scn.seed)
    reports, rows, worst = [], [], 0.0
    for n in p["ns"]:
        ctx = make_context(profile, p["nu"], int(n), mu=0.0)
        for _ in range(int(p["draws"])):
            psi = random_stream(grid, rng)
            for t in p["times"]:
                gap = stokes_energy_gap(profile, ctx, grid, psi, t / math.sqrt(p["nu"]))
                worst = max(worst, gap)
                rows.append((n, t, gap))
            reports.extend(check_stokes(profile, ctx, grid, psi, p["times"]))
    return RunOutcome(worst <= p["energy_tol"], {"max_energy_gap": worst}, reports,
                      {"energy": (["n", "t", "relative_gap"], rows)})


def _run_nonlinear_sim(scn, profile):
    from .nonlinear import ZNormParams, gevrey_initial_state, history_rows, simulate
    p = scn.params
    grid = _grid(scn)
    d = 5 - 3 * p["gamma"] + 0.5 if p["d"] is None else p["d"]
    z = ZNormParams(p["gamma"], p["K"], d, p["delta"])
    amp = p["epsilon"] * p["nu"] ** (0.5 + z.beta_value)
    a = gevrey_initial_state(grid, p["nu"], int(p["n_max"]), z, amp, seed=scn.seed)
    res = simulate(profile, a, p["nu"], z, p["T"], max_dt=p["max_dt"], c_accept=p["c_accept"],
                   output_every=int(p["output_every"]))
    summary = {"fitted_C": res.fitted_C, "initial_norm": res.initial_norm, "stable": res.stable,
               "stop_reason": res.stop_reason, "rejected_steps": res.rejected_steps,
               "energy_excess": res.energy_excess, "q": z.q, "beta": z.beta_value,
               "final_time": res.state.time, "divergence_gap": res.state.divergence_gap()}
    report = EstimateReport("nonlinear-Z-history", max(h["Z"] for h in res.history),
                            res.initial_norm, {"nu": p["nu"], "gamma": p["gamma"], "d": d,
                                               "K": p["K"], "n_max": p["n_max"]}, grid.N)
    passed = res.stable and res.stop_reason == "completed"
    return RunOutcome(passed, summary, [report],
                      {"history": (["t", "X", "Y", "gradient", "Z"], history_rows(res.history))})


def _run_airy_check(scn, profile):
    from scipy.special import airy as scipy_airy
    from .specfun import airy, check_airy_ratio_bounds, sector_samples
    p = scn.params
    z = sector_samples(int(p["count"]), p["radius"], p["sector_height"], scn.seed)
    ai, aip = airy(z)
    ref_ai, ref_aip, _, _ = scipy_airy(z)
    err = float(max(np.max(np.abs(ai - ref_ai) / np.maximum(np.abs(ref_ai), 1e-300)),
                    np.max(np.abs(aip - ref_aip) / np.maximum(np.abs(ref_aip), 1e-300))))
    reports = check_airy_ratio_bounds(z, p["sector_height"])
    rows = [(zz.real, zz.imag, a.real, a.imag) for zz, a in zip(z, ai)]
    return RunOutcome(err <= p["max_rel_error"], {"max_rel_error_vs_scipy": err}, reports,
                      {"airy": (["Re_z", "Im_z", "Re_Ai", "Im_Ai"], rows)})


RUNNERS = {
    "profile-check": _run_profile_check,
    "os-solve": _run_os_solve,
    "corrector": _run_corrector,
    "resolvent-sweep": _run_resolvent_sweep,
    "semigroup-check": _run_semigroup_check,
    "stokes-check": _run_stokes_check,
    "nonlinear-sim": _run_nonlinear_sim,
    "airy-check": _run_airy_check,
}


def scale_resolution(scn: Scenario, factor: float) -> Scenario:
    num = dict(scn.numerics, N=max(16, int(round(scn.numerics["N"] * factor))))
    params = dict(scn.params)
    if params.get("compare_N"):
        params["compare_N"] = max(16, int(round(params["compare_N"] * factor)))
    return Scenario(scn.kind, scn.profile, scn.seed, num, params, scn.output, scn.source)


def execute(scn: Scenario) -> RunOutcome:
    base = Path(scn.source).parent if scn.source else None
    profile = resolve_profile(scn.profile, base)
    return RUNNERS[scn.kind](scn, profile)


def run_scenario(path, out_dir=None, seed: int | None = None,
                 resolution_scale: float | None = None) -> tuple[int, RunOutcome | None]:
    """Load, validate, run and emit.  Exit status 0 pass, 1 acceptance failure,
    2 config error, 3 computational failure (written into the summary)."""
    scn = load_config(path)
    if seed is not None:
        scn.seed = int(seed)
    if resolution_scale is not None:
        scn = scale_resolution(scn, resolution_scale)
    out = out_dir or scn.output["dir"]
    try:
        outcome = execute(scn)
    except ConfigError:
        raise
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        outcome = RunOutcome(False, {"error": type(exc).__name__, "message": str(exc)})
        emit(outcome, scn, out)
        return 3, outcome
    emit(outcome, scn, out)
    return (0 if outcome.passed else 1), outcome


# Aggregation

def aggregate(paths) -> dict:
    """Merged max-reduction per id plus a resolution trend (drift in percent)."""
    reports = []
    for p in paths:
        reports.extend(read_reports(p))
    if not reports:
        return {}
    merged = summarize(reports)
    trend = {}
    for rep in reports:
        t = trend.setdefault(rep.inequality_id, {})
        key = rep.resolution if rep.resolution is not None else -1
        t[key] = max(t.get(key, 0.0), rep.ratio)
    rows = []
    for iid, by_res in sorted(trend.items()):
        keys = sorted(by_res)
        lo, hi = by_res[keys[0]], by_res[keys[-1]]
        drift = 100.0 * abs(hi - lo) / lo if len(keys) > 1 and lo > 0 else 0.0
        rows.append({"inequality_id": iid, "resolutions": {str(k): by_res[k] for k in keys},
                     "drift_percent": drift})
    return {"schema_version": SCHEMA_VERSION, "ids": merged, "trend": rows}
