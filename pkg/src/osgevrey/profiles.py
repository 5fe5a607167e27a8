"""Boundary-layer shear profiles and the strong-concavity check."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar
from scipy.special import erf

from .errors import ConfigError

TRUNCATION_LENGTH = 40.0
SC_MARGIN = 1.01


@dataclass(frozen=True)
class SCReport:
    passed: bool
    minimal_M: float
    certified_M: float
    witness: float | None
    reason: str

    def to_dict(self):
        return {"pass": self.passed, "minimal_M": self.minimal_M,
                "certified_M": self.certified_M, "witness": self.witness,
                "reason": self.reason}


@dataclass(frozen=True, eq=False)
class ShearProfile:
    """Immutable profile with analytic derivatives up to third order."""
    name: str
    eval_k: Callable = field(repr=False)
    profile_norm: float = 0.0
    concavity_M: float | None = None
    certified: bool = True
    ratio_fn: Callable | None = field(default=None, repr=False)
    tail_bounds: tuple = field(default=(0.0, 0.0, 0.0), repr=False)

    @property
    def delta0(self) -> float:
        return 1.0 / (2.0 * (1.0 + self.profile_norm))

    def derivatives(self, Y):
        """(V, V', V'', V''') as arrays."""
        return self.eval_k(np.asarray(Y, dtype=float))

    def ratios(self, Y):
        """(V''/V', V'''/V') evaluated without forming V' in a denominator where it underflows."""
        if self.ratio_fn is not None:
            return self.ratio_fn(np.asarray(Y, dtype=float))
        _, v1, v2, v3 = self.derivatives(Y)
        with np.errstate(divide="ignore", invalid="ignore"):
            r2 = np.where(v1 != 0, v2 / v1, 0.0)
            r3 = np.where(v1 != 0, v3 / v1, 0.0)
        return r2, r3

    @property
    def slope_at_wall(self) -> float:
        return float(self.derivatives(np.array([0.0]))[1][0])


def _exp_eval(Y):
    e = np.exp(-Y)
    return 1.0 - e, e, -e, e


def _exp_ratio(Y):
    return -np.ones_like(Y), np.ones_like(Y)


def _tanh_eval(Y):
    t = np.tanh(Y)
    s2 = 1.0 - t * t
    return t, s2, -2.0 * t * s2, s2 * (6.0 * t * t - 2.0)


def _tanh_ratio(Y):
    t = np.tanh(Y)
    s2 = 1.0 - t * t
    return -2.0 * t, 4.0 * t * t - 2.0 * s2


def _erf_eval(Y):
    g = 2.0 / math.sqrt(math.pi) * np.exp(-Y * Y)
    return erf(Y), g, -2.0 * Y * g, (4.0 * Y * Y - 2.0) * g


def _erf_ratio(Y):
    return -2.0 * Y, 4.0 * Y * Y - 2.0


def _tails(name, L):
    # sup over [L, inf) of (1+Y)^k |V^(k)| for k = 0, 1, 2 (monotone decreasing there)
    if name == "exp":
        return (1.0, (1 + L) * math.exp(-L), (1 + L) ** 2 * math.exp(-L))
    if name == "tanh":
        return (1.0, (1 + L) * 4 * math.exp(-2 * L), (1 + L) ** 2 * 8 * math.exp(-2 * L))
    if name == "erf":
        g = 2 / math.sqrt(math.pi) * math.exp(-L * L)
        return (1.0, (1 + L) * g, (1 + L) ** 2 * 2 * L * g)
    raise ConfigError(name)


def compute_profile_norm(eval_k, L=TRUNCATION_LENGTH, tails=(0.0, 0.0, 0.0)) -> float:
    """Sum over k=0,1,2 of sup (1+Y)^k |V^(k)| on [0, L], refined by bounded optimisation."""
    Y = np.linspace(0.0, L, 40001)
    vals = eval_k(Y)
    total = 0.0
    for k in range(3):
        g = (1.0 + Y) ** k * np.abs(vals[k])
        j = int(np.argmax(g))
        best = float(g[j])
        lo, hi = Y[max(j - 1, 0)], Y[min(j + 1, len(Y) - 1)]
        if hi > lo:
            def neg(y, k=k):
                return -(1.0 + y) ** k * abs(float(np.asarray(eval_k(np.array([y]))[k])[0]))
            res = minimize_scalar(neg, bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-12})
            best = max(best, -float(res.fun))
        total += max(best, tails[k])
    return total


def check_sc(profile: ShearProfile, nodes: Sequence[float], tol: float = 1e-8,
             limit_length: float = TRUNCATION_LENGTH, max_M: float = 1e6) -> SCReport:
    """Strong-concavity check at the given nodes.

    Passes iff V(0)=0, V(L)=1 within tol, V' > 0 and V'' < 0 at every node, and the
    ratios (V')^2/(-V''), |V'''/V''| + |V''/V'| stay below max_M.  The minimal M is
    the largest ratio seen; certified_M adds a 1% margin.
    """
    Y = np.sort(np.asarray(nodes, dtype=float))
    ends = profile.derivatives(np.array([0.0, limit_length]))
    if abs(ends[0][0]) > tol:
        return SCReport(False, math.inf, math.inf, 0.0, "V(0) != 0")
    if abs(ends[0][1] - 1.0) > tol:
        return SCReport(False, math.inf, math.inf, limit_length, "V does not tend to 1")
    if Y.size == 0:
        return SCReport(True, 0.0, 0.0, None, "no nodes")
    v, v1, v2, v3 = profile.derivatives(Y)
    r2, r3 = profile.ratios(Y)
    # nodes where V' has underflowed and V is already 1 are treated as saturated tail
    tail = (v1 == 0) & (np.abs(1.0 - v) <= tol)
    live = ~tail
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio1 = np.where(r2 < 0, v1 / np.abs(r2), np.inf)
        ratio2 = np.where(r2 != 0, np.abs(r3 / r2), np.inf) + np.abs(r2)
    worst = np.where(live, np.maximum(ratio1, ratio2), 0.0)
    fails = [
        (live & (v1 <= 0), "V' <= 0 (not increasing)"),
        (live & (v1 > 0) & (v2 >= 0), "V'' >= 0 with V' > 0"),
        (live & ~(worst <= max_M), "concavity ratio unbounded"),
    ]
    first = None
    for mask, reason in fails:
        idx = np.nonzero(mask)[0]
        if idx.size and (first is None or Y[idx[0]] < first[0]):
            first = (float(Y[idx[0]]), reason)
    if first is not None:
        return SCReport(False, math.inf, math.inf, first[0], first[1])
    m = float(worst.max())
    return SCReport(True, m, SC_MARGIN * m, None, "ok")


def _builtin(name, eval_k, ratio_fn):
    tails = _tails(name, TRUNCATION_LENGTH)
    pnorm = compute_profile_norm(eval_k, tails=tails)
    prof = ShearProfile(name, eval_k, pnorm, None, True, ratio_fn, tails)
    rep = check_sc(prof, np.linspace(0.0, TRUNCATION_LENGTH, 4001))
    if rep.passed:
        prof = ShearProfile(name, eval_k, pnorm, rep.certified_M, True, ratio_fn, tails)
    return prof


_CATALOGUE = {
    "exp": (_exp_eval, _exp_ratio),
    "tanh": (_tanh_eval, _tanh_ratio),
    "erf": (_erf_eval, _erf_ratio),
}


def make_builtin_profile(name: str) -> ShearProfile:
    """Catalogue: exp (1 - e^-Y), tanh, erf."""
    if name not in _CATALOGUE:
        raise ConfigError(f"unknown profile {name!r}; catalogue has {sorted(_CATALOGUE)}")
    return _builtin(name, *_CATALOGUE[name])


def load_profile_csv(path, name: str | None = None) -> ShearProfile:
    """Tabulated profile with columns Y, V, V', V'', V'''; cubic splines fill the gaps.

    Marked uncertified: the SC check on a spline is not a statement about the
    underlying profile.
    """
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].strip().startswith("#"):
                continue
            try:
                rows.append([float(x) for x in rec[:5]])
            except ValueError:
                continue  # header line
    data = np.array(rows)
    if data.ndim != 2 or data.shape[1] < 5 or data.shape[0] < 4:
        raise ConfigError(f"{path}: need at least 4 rows of Y, V, V', V'', V'''")
    order = np.argsort(data[:, 0])
    data = data[order]
    y_end = data[-1, 0]
    splines = [CubicSpline(data[:, 0], data[:, k]) for k in range(1, 5)]
    far = [data[-1, 1], 0.0, 0.0, 0.0]

    def eval_k(Y):
        Y = np.asarray(Y, dtype=float)
        inside = Y <= y_end
        Yc = np.clip(Y, data[0, 0], y_end)
        return tuple(np.where(inside, s(Yc), far[k]) for k, s in enumerate(splines))

    pnorm = compute_profile_norm(eval_k, L=y_end)
    prof = ShearProfile(name or str(path), eval_k, pnorm, None, False, None)
    rep = check_sc(prof, data[:, 0], limit_length=y_end, tol=1e-6)
    if rep.passed:
        prof = ShearProfile(prof.name, eval_k, pnorm, rep.certified_M, False, None)
    return prof
