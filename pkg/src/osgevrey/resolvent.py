"""Regime classification, resolvent-set geometry, resolvent norms and estimate checks.

Operator norms are evaluated on quadrature-weighted discrete spaces.  The
"grid" method takes every nodal vector as input; the "subspace" method
restricts the input to a resolution-independent span of Laguerre functions
(scales 1 and the Airy scale |n|^(-1/3)), which gives a lower bound for the
grid value that does not drift with N.  Estimates are checked by evaluating
both sides at candidate inputs (top singular directions plus seeded random
draws) and keeping the worst ratio.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.polynomial import laguerre

from .errors import ConfigError, HypothesisViolation, MethodError
from .numerics import HalfLineGrid, WeightSpec, norm, rho_lambda_weight, rho_weight, sup_norm
from .ossolve import (ModeContext, ModeOperator, build_corrector,
                      make_context, rayleigh_solve_many, solve_weighted_b3)
from .profiles import ShearProfile
from .reports import EstimateReport, summarize

THETA_DEFAULT = math.pi / 2 + 0.1
BASIS_SIZE = 16
RANDOM_DRAWS = 5
LINE_TOL = 1e-9


# Regimes

@dataclass(frozen=True)
class RegimeTag:
    frequency: str
    spectral: tuple = ()


def frequency_regime(profile: ShearProfile, nu: float, n: int, gamma: float) -> str:
    d0 = profile.delta0
    m = abs(n)
    if m <= 1.0 / d0:
        return "low"
    if m > nu ** -0.75 / d0:
        return "high"
    return "middle-small" if m**gamma * math.sqrt(nu) < 1.0 else "middle-large"


def classify(profile: ShearProfile, nu: float, n: int, gamma: float) -> RegimeTag:
    """Frequency regime of mode n; ties go to the lower regime."""
    if not nu > 0:
        raise ConfigError("nu must be positive")
    return RegimeTag(frequency_regime(profile, nu, n, gamma))


def _s_threshold(ctx: ModeContext, theta: float) -> tuple[float, float]:
    sq, m = math.sqrt(ctx.nu), abs(ctx.n)
    t = math.tan(theta)
    d1 = ctx.deltas.delta1
    return t * ctx.mu.real + (sq * m + abs(t) * m**ctx.gamma * sq) / d1, sq * m / d1


def in_s_sector(ctx: ModeContext, theta: float = THETA_DEFAULT) -> bool:
    im_bound, mod_bound = _s_threshold(ctx, theta)
    return abs(ctx.mu.imag) >= im_bound and abs(ctx.mu) >= mod_bound


def in_o_disc(ctx: ModeContext) -> bool:
    sq, m = math.sqrt(ctx.nu), abs(ctx.n)
    return abs(ctx.mu) <= m * sq / ctx.deltas.delta1 and ctx.resolvent_admissible


def on_o_line(ctx: ModeContext) -> bool:
    thr = ctx.remu_threshold
    return abs(ctx.mu.real - thr) <= LINE_TOL * thr


def in_im_large(ctx: ModeContext) -> bool:
    return ctx.mu.real + ctx.n**2 * ctx.nu**1.5 >= 1.0 / ctx.deltas.delta2


def in_resolvent_region(ctx: ModeContext, theta: float = THETA_DEFAULT) -> tuple:
    """Tags among S-sector, O-disc-line, Im-large; exploratory if none apply but flagged."""
    if not math.pi / 2 < theta < math.pi:
        raise ConfigError("theta must lie in (pi/2, pi)")
    tags = []
    if in_s_sector(ctx, theta):
        tags.append("S-sector")
    if in_o_disc(ctx):
        tags.append("O-disc-line")
    if in_im_large(ctx):
        tags.append("Im-large")
    if not tags and ctx.exploratory:
        tags.append("exploratory")
    return tuple(tags)


def regime_tag(profile: ShearProfile, ctx: ModeContext, theta: float = THETA_DEFAULT) -> RegimeTag:
    return RegimeTag(frequency_regime(profile, ctx.nu, ctx.n, ctx.gamma),
                     in_resolvent_region(ctx, theta))


# Hypotheses per display family

def _require(ok: bool, clause: str):
    if not ok:
        raise HypothesisViolation(clause)


def _middle(profile, ctx):
    _require(frequency_regime(profile, ctx.nu, ctx.n, ctx.gamma).startswith("middle"),
             "middle frequency: 1/delta0 < |n| <= nu^(-3/4)/delta0")


def _gamma_range(ctx, lo):
    _require(lo <= ctx.gamma <= 1.0, f"gamma in [{lo:g}, 1]")


def _remu(ctx):
    _require(ctx.resolvent_admissible, "Re mu >= nu^(1/2) |n|^gamma / delta")


def check_hypotheses(family: str, profile: ShearProfile, ctx: ModeContext,
                     theta: float = THETA_DEFAULT):
    """Raise HypothesisViolation naming the first failed clause."""
    ds = ctx.deltas
    lam = ctx.lam
    if family == "lambda-large":
        _gamma_range(ctx, 0.0)
        _require(abs(lam) >= 1.0 / ds.delta1, "|lambda| >= 1/delta1")
        _require(ctx.delta <= ds.delta1, "delta <= delta1")
        _remu(ctx)
    elif family == "immu-large":
        _require(ctx.alpha * ctx.lam_i + math.sqrt(ctx.nu) * ctx.alpha**2 >= 1.0 / ds.delta2,
                 "alpha lambda_i + nu^(1/2) alpha^2 >= 1/delta2")
    elif family == "small":
        _middle(profile, ctx)
        _gamma_range(ctx, 2.0 / 3.0)
        _require(ctx.delta <= ds.delta_star, "delta <= delta_star")
        _require(abs(lam) <= 1.0 / ds.delta1, "|lambda| <= 1/delta1")
        _remu(ctx)
    elif family == "rayleigh":
        _require(ctx.lam_i > 0, "Im lambda > 0")
    elif family == "rayleigh-right":
        _require(ctx.lam_i > 0, "Im lambda > 0")
        _require(ctx.lam_r >= 1.0, "Re lambda >= 1")
    elif family == "S-sector":
        _middle(profile, ctx)
        _require(ctx.delta <= ds.delta_star, "delta <= delta_star")
        _remu(ctx)
        _require(in_s_sector(ctx, theta), "mu in S(theta)")
    elif family == "Im-large":
        _require(abs(ctx.n) >= 1.0 / ds.delta0, "|n| >= 1/delta0")
        _require(ctx.delta <= ds.delta_star, "delta <= delta_star")
        _remu(ctx)
        _require(in_im_large(ctx), "Re mu + n^2 nu^(3/2) >= 1/delta2")
    elif family == "O-line":
        _middle(profile, ctx)
        _gamma_range(ctx, 2.0 / 3.0)
        _require(ctx.delta <= ds.delta_star, "delta <= delta_star")
        _require(on_o_line(ctx), "Re mu = nu^(1/2) |n|^gamma / delta (on the line)")
        _require(abs(ctx.mu) <= abs(ctx.n) * math.sqrt(ctx.nu) / ds.delta1,
                 "|mu| <= |n| nu^(1/2) / delta1")
        _require(ctx.mu.real + ctx.n**2 * ctx.nu**1.5 <= 1.0 / ds.delta2,
                 "Re mu + n^2 nu^(3/2) <= 1/delta2")
    else:
        raise ConfigError(f"unknown hypothesis family {family!r}")


# Discrete norm factors: matrices R with ||R v||_2 equal to the norm of v

def _sqrt_w(grid):
    return np.sqrt(grid.quad_weights)


def l2_factor(grid):
    return np.diag(_sqrt_w(grid))


def pair_factor(grid, alpha):
    s = _sqrt_w(grid)[:, None]
    return np.vstack([s * grid.D1, alpha * s * np.eye(grid.N)])


def gradient_rows(grid, alpha, phi, w):
    """Rows whose 2-norm is ||grad v|| for v = (-phi', i k phi).

    phi'' is taken as w + alpha^2 phi: the solver ties w to phi on interior rows
    only, so the wall row of D2 phi is not controlled.
    """
    s = _sqrt_w(grid)[:, None]
    return np.vstack([s * (w + alpha**2 * phi), math.sqrt(2.0) * alpha * s * (grid.D1 @ phi),
                      alpha**2 * s * phi])


_WEIGHTED_CACHE: dict = {}


def weighted_factor(grid: HalfLineGrid, weight: WeightSpec):
    """Factor of the Hermitian form v -> weighted_l2_sq(grid, v, weight)."""
    key = (id(grid), weight)
    hit = _WEIGHTED_CACHE.get(key)
    if hit is not None and hit[0] is grid:
        return hit[1]
    Q = np.diag(grid.quad_weights).astype(float)
    b = weight.breakpoint
    if b > 0:
        Y, wt, C = grid.segment_quadrature(b)
        d = wt * (1.0 - np.minimum(Y / b, 1.0))
        Q = Q - C.T @ (d[:, None] * C)
    ev, U = np.linalg.eigh(0.5 * (Q + Q.T))
    R = np.sqrt(np.clip(ev, 0.0, None))[:, None] * U.T
    if len(_WEIGHTED_CACHE) > 64:
        _WEIGHTED_CACHE.clear()
    _WEIGHTED_CACHE[key] = (grid, R)
    return R


# Input spaces

def laguerre_basis(grid: HalfLineGrid, scales: Sequence[float], size: int = BASIS_SIZE,
                   vanish_at_wall: bool = False) -> np.ndarray:
    """Columns exp(-Y/s) L_j(2Y/s), j < size, for each scale s (times Y/s if vanishing)."""
    Y = grid.nodes
    cols = []
    for s in scales:
        x = 2.0 * Y / s
        base = np.exp(-Y / s) * (Y / s if vanish_at_wall else 1.0)
        for j in range(size):
            c = np.zeros(j + 1)
            c[j] = 1.0
            cols.append(laguerre.lagval(x, c) * base)
    return np.array(cols).T


def basis_scales(ctx: ModeContext) -> tuple:
    return (1.0, max(abs(ctx.n) ** (-1.0 / 3.0), 0.05))


@dataclass
class InputSpace:
    """Coefficient space with the map to right-hand sides and its norm factor."""
    kind: str
    F: np.ndarray              # coefficients -> forcing F (or h, or h-tilde)
    norm_factor: np.ndarray    # ||norm_factor c|| = input norm
    parts: dict                # named component maps used by custom right sides

    @property
    def dim(self):
        return self.F.shape[1]


def pair_space(grid, ctx, basis=None) -> InputSpace:
    """(f1, f2) with F = -d f1 + i k f2 and norm ||(f1, f2)||."""
    N = grid.N
    B = np.eye(N) if basis is None else basis
    Z = np.zeros_like(B)
    B1, B2 = np.hstack([B, Z]), np.hstack([Z, B])
    F = -grid.D1 @ B1 + 1j * ctx.k * B2
    s = _sqrt_w(grid)[:, None]
    return InputSpace("pair", F, np.vstack([s * B1, s * B2]), {"f1": B1, "f2": B2})


def divfree_space(grid, ctx, basis=None) -> InputSpace:
    """f = (-psi', i k psi), psi(0) = 0; F = curl f = (d^2 - alpha^2) psi, norm ||f||."""
    N = grid.N
    B = np.eye(N)[:, 1:] if basis is None else basis
    F = grid.D2 @ B - ctx.alpha**2 * B
    return InputSpace("divfree", F.astype(complex), pair_factor(grid, ctx.alpha) @ B, {"psi": B})


def scalar_space(grid, basis=None) -> InputSpace:
    B = np.eye(grid.N) if basis is None else basis
    return InputSpace("scalar", B.astype(complex), l2_factor(grid) @ B, {"h": B})


def rayleigh_space(profile, grid, alpha, basis=None) -> InputSpace:
    """(h1, h2, h3) with h-tilde = V' h1 + d h2 + i alpha h3."""
    B = np.eye(grid.N) if basis is None else basis
    Z = np.zeros_like(B)
    H1, H2, H3 = np.hstack([B, Z, Z]), np.hstack([Z, B, Z]), np.hstack([Z, Z, B])
    V1 = profile.derivatives(grid.nodes)[1]
    F = V1[:, None] * H1 + grid.D1 @ H2 + 1j * alpha * H3
    s = _sqrt_w(grid)[:, None]
    return InputSpace("rayleigh", F.astype(complex), np.vstack([s * H1, s * H2, s * H3]),
                      {"h1": H1, "h2": H2, "h3": H3})


def _orthonormal(space: InputSpace, rtol=1e-10):
    U, s, Vh = np.linalg.svd(space.norm_factor, full_matrices=False)
    keep = s > rtol * s[0]
    return Vh[keep].conj().T / s[keep]


# Solution maps

def _solve(profile, ctx, grid, bc, F):
    op = ModeOperator(profile, ctx, grid, bc)
    return op.solve_F(F)


def resolvent_norm(profile: ShearProfile, ctx: ModeContext, grid: HalfLineGrid,
                   which: str = "L2->L2", method: str = "grid") -> float:
    """Norm of the divergence-free velocity resolvent for one mode (nonslip).

    which: L2->L2 (velocity), L2->gradient (velocity gradient), L2->weighted-curl
    (rho^(1/2) times the vorticity, rho built from n, gamma, delta).
    method: "grid" (all nodal inputs) or "subspace" (smooth Laguerre span).
    """
    if method == "grid":
        space = divfree_space(grid, ctx)
    elif method == "subspace":
        space = divfree_space(grid, ctx, laguerre_basis(grid, basis_scales(ctx),
                                                        vanish_at_wall=True))
    else:
        raise MethodError(f"unknown method {method!r}")
    phi, w = _solve(profile, ctx, grid, "nonslip", space.F)
    if which == "L2->L2":
        out = pair_factor(grid, ctx.alpha) @ phi
    elif which == "L2->gradient":
        out = gradient_rows(grid, ctx.alpha, phi, w)
    elif which == "L2->weighted-curl":
        out = weighted_factor(grid, rho_weight(ctx.n, ctx.gamma, ctx.delta)) @ w
    else:
        raise ConfigError(f"unknown norm pairing {which!r}")
    T = _orthonormal(space)
    return float(np.linalg.svd(out @ T, compute_uv=False)[0])


# Displays

@dataclass
class _Display:
    family: str
    kind: str          # "operator", "fixed", "rayleigh-trick"
    evaluate: Callable
    rhs_shape: Callable | None = None


def _sup_candidates(space: InputSpace, terms, rhs_fn, rng, draws=RANDOM_DRAWS):
    """max over candidates of sum_j c_j ||R_j x|| / rhs_fn(x); returns (lhs, rhs)."""
    T = _orthonormal(space)
    mats = [(c, R @ T) for c, R in terms]
    cands = []
    for _, M in mats:
        cands.append(T @ np.linalg.svd(M, full_matrices=False)[2][0].conj())
    if len(mats) > 1:
        stacked = np.vstack([c * M for c, M in mats])
        cands.append(T @ np.linalg.svd(stacked, full_matrices=False)[2][0].conj())
    for _ in range(draws):
        cands.append(rng.standard_normal(space.dim) + 1j * rng.standard_normal(space.dim))
    best = (0.0, 1.0, -1.0)
    for x in cands:
        xn = np.linalg.norm(space.norm_factor @ x)
        if xn == 0:
            continue
        x = x / xn
        lhs = sum(c * float(np.linalg.norm(R @ x)) for c, R in terms)
        rhs = rhs_fn(x)
        r = lhs / rhs if rhs > 0 else math.inf
        if r > best[2]:
            best = (lhs, rhs, r)
    return best[0], best[1]


def _nonslip_pair(profile, ctx, grid, basis):
    space = pair_space(grid, ctx, basis)
    phi, w = _solve(profile, ctx, grid, "nonslip", space.F)
    return space, phi, w


def _op_lambda_large(which):
    def run(profile, ctx, grid, rng, basis):
        space, phi, w = _nonslip_pair(profile, ctx, grid, basis)
        R = pair_factor(grid, ctx.alpha) @ phi if which == "pair" else l2_factor(grid) @ w
        return [(1.0, R)], space
    return run


def _op_immu(which):
    def run(profile, ctx, grid, rng, basis):
        space, phi, w = _nonslip_pair(profile, ctx, grid, basis)
        s = l2_factor(grid)
        if which == "pair":
            return [(1.0, s @ grid.D1 @ phi), (ctx.alpha, s @ phi)], space
        return [(1.0, s @ w)], space
    return run


def _op_b3res(profile, ctx, grid, rng, basis):
    space = pair_space(grid, ctx, basis)
    phi, w = _solve(profile, ctx, grid, "navier", space.F)
    a, li, nu = ctx.alpha, ctx.lam_i, ctx.nu
    return [(nu**0.25 * a**0.5 * li**-0.5, l2_factor(grid) @ w),
            (a * li, pair_factor(grid, a) @ phi)], space


def _op_resb3(which):
    def run(profile, ctx, grid, rng, basis):
        space = scalar_space(grid, basis)
        phi, u, du = solve_weighted_b3(profile, ctx, space.F, grid)
        a, li, nu = ctx.alpha, ctx.lam_i, ctx.nu
        s = l2_factor(grid)
        if which == "phi":
            return [(a * li, pair_factor(grid, a) @ phi)], space
        grad = np.vstack([s @ du, a * (s @ u)])
        return [(nu**0.25 * (a * li) ** 0.5, grad), (a * li, s @ u)], space
    return run


def _op_resdrsmall(which):
    def run(profile, ctx, grid, rng, basis):
        space, phi, w = _nonslip_pair(profile, ctx, grid, basis)
        if which == "pair":
            R = pair_factor(grid, ctx.alpha) @ phi
        elif which == "w":
            R = l2_factor(grid) @ w
        else:
            R = weighted_factor(grid, rho_lambda_weight(ctx.n, ctx.lam_i)) @ w
        return [(1.0, R)], space
    return run


def _op_theorem(which):
    def run(profile, ctx, grid, rng, basis):
        vb = None if basis is None else laguerre_basis(grid, basis_scales(ctx),
                                                        vanish_at_wall=True)
        space = divfree_space(grid, ctx, vb)
        phi, w = _solve(profile, ctx, grid, "nonslip", space.F)
        if which == "L2":
            R = pair_factor(grid, ctx.alpha) @ phi
        elif which == "gradient":
            R = gradient_rows(grid, ctx.alpha, phi, w)
        else:
            R = weighted_factor(grid, rho_weight(ctx.n, ctx.gamma, ctx.delta)) @ w
        return [(1.0, R)], space
    return run


def _op_gmmray1(profile, ctx, grid, rng, basis):
    space = rayleigh_space(profile, grid, ctx.alpha, basis)
    phi = rayleigh_solve_many(profile, grid, ctx.lam, ctx.alpha, space.F)
    return [(1.0, pair_factor(grid, ctx.alpha) @ phi)], space


def _gmmray1_rhs(ctx, grid, space):
    s = l2_factor(grid)
    li = ctx.lam_i

    def rhs(x):
        h1 = np.linalg.norm(s @ (space.parts["h1"] @ x))
        h23 = math.hypot(np.linalg.norm(s @ (space.parts["h2"] @ x)),
                         np.linalg.norm(s @ (space.parts["h3"] @ x)))
        return h1 / li + h23 / li**2
    return rhs


def _corrector_values(profile, ctx, grid):
    b = build_corrector(profile, ctx, grid)
    a, li, A = ctx.alpha, ctx.lam_i, ctx.A
    m = abs(ctx.n)
    rho = rho_lambda_weight(ctx.n, li)
    pair = lambda f: norm(grid, f, "H1-pair", alpha=a)
    w_rho = lambda f: norm(grid, f, "weighted-L2", weight=rho)
    return {
        "Webounds-energy": (ctx.nu**0.25 * a**0.5 * li**-0.5 * norm(grid, b.W_e)
                            + a * li * pair(b.Phi_e), a / li * A**-3.5),
        "Webounds-sup": (sup_norm(grid, grid.D1 @ b.Phi_e), m ** (-1 / 3) * (A * li) ** -1.75),
        "Wnorms-pair": (pair(b.Phi), A**-1.5),
        "Wnorms-w": (norm(grid, b.W), A**-0.5),
        "Wnorms-rho": (w_rho(b.W), m**0.25 * li**0.75 / A),
        "lowerJ": (1.0 / A, abs(b.J)),
        "Wbnorms-pair": (pair(b.Phi_b), A**-0.5),
        "Wbnorms-w": (norm(grid, b.W_b), A**0.5),
        "Wbnorms-rho": (w_rho(b.W_b), m**0.25 * li**0.75),
    }


def rayleigh_trick_sides(profile: ShearProfile, grid: HalfLineGrid, lam: complex, alpha: float,
                         phi, M: float | None = None, form: str = "first"):
    """(left, right) of the Rayleigh-trick lower bound for phi with phi(0) = 0.

    left = Re((1 - lam)/(i lam_i) int R phi conj(phi)/(V - lam)) for form "first",
    -Re(int R phi conj(phi)/(V - lam)) for form "second";
    right = ||(phi', alpha phi)||^2 + ||(1-V)^(1/2) V' phi/(V - lam)||^2 / M.
    """
    lam = complex(lam)
    if lam.imag <= 0:
        raise ConfigError("Rayleigh trick needs Im lambda > 0")
    if M is None:
        M = profile.concavity_M
    if M is None:
        raise ConfigError("profile has no strong-concavity constant")
    phi = np.asarray(phi, dtype=complex)
    V, V1, V2, _ = profile.derivatives(grid.nodes)
    lap = grid.D2 @ phi - alpha**2 * phi
    Rphi = (V - lam) * lap - V2 * phi
    integral = grid.integrate(Rphi * np.conj(phi) / (V - lam))
    if form == "first":
        left = float(np.real((1.0 - lam) / (1j * lam.imag) * integral))
    elif form == "second":
        left = float(-np.real(integral))
    else:
        raise ConfigError(f"unknown form {form!r}")
    extra = float(np.real(grid.integrate((1.0 - V) * np.abs(V1 * phi / (V - lam)) ** 2)))
    right = norm(grid, phi, "H1-pair", alpha=alpha) ** 2 + extra / M
    return left, right


def rayleigh_trick_gap(profile, grid, lam, alpha, phi, M=None, form="first") -> float:
    left, right = rayleigh_trick_sides(profile, grid, lam, alpha, phi, M, form)
    return left - right


def random_wall_function(grid: HalfLineGrid, rng, scales=(1.0, 0.3), size: int = 8):
    """Smooth decaying function with phi(0) = 0 from random Laguerre coefficients."""
    B = laguerre_basis(grid, scales, size, vanish_at_wall=True)
    c = rng.standard_normal(B.shape[1]) + 1j * rng.standard_normal(B.shape[1])
    c /= np.arange(1, B.shape[1] + 1) ** 0.5
    return B @ c


def _sq(x):
    return math.sqrt(x)


# id -> display; rhs_shape(ctx) is the right side with the constant and the input norm stripped
DISPLAYS: dict[str, _Display] = {
    "lambda-large-L2": _Display("lambda-large", "operator", _op_lambda_large("pair"),
                                lambda c: 1.0 / (c.alpha * abs(c.lam))),
    "lambda-large-Linfinity": _Display("lambda-large", "operator", _op_lambda_large("w"),
                                       lambda c: 1.0 / (c.nu**0.25 * _sq(c.alpha * abs(c.lam)))),
    "Immu-large1": _Display("immu-large", "operator", _op_immu("pair"),
                            lambda c: 1.0 / (c.alpha * c.lam_i + _sq(c.nu) * c.alpha**2)),
    "Immu-large2": _Display("immu-large", "operator", _op_immu("w"),
                            lambda c: 1.0 / (c.nu**0.25
                                             * _sq(c.alpha * c.lam_i + _sq(c.nu) * c.alpha**2))),
    "B3resH-1": _Display("small", "operator", _op_b3res, lambda c: 1.0 / c.lam_i),
    "resB3-phi": _Display("small", "operator", _op_resb3("phi"), lambda c: 1.0),
    "resB3-weighted": _Display("small", "operator", _op_resb3("weighted"), lambda c: 1.0),
    "GMMray-first": _Display("rayleigh", "rayleigh-trick", None),
    "GMMray-second": _Display("rayleigh-right", "rayleigh-trick", None),
    "GMMray1": _Display("rayleigh", "operator", _op_gmmray1, None),
    "Webounds-energy": _Display("small", "fixed", None),
    "Webounds-sup": _Display("small", "fixed", None),
    "Wnorms-pair": _Display("small", "fixed", None),
    "Wnorms-w": _Display("small", "fixed", None),
    "Wnorms-rho": _Display("small", "fixed", None),
    "lowerJ": _Display("small", "fixed", None),
    "Wbnorms-pair": _Display("small", "fixed", None),
    "Wbnorms-w": _Display("small", "fixed", None),
    "Wbnorms-rho": _Display("small", "fixed", None),
    "resdrsmall-pair": _Display("small", "operator", _op_resdrsmall("pair"),
                                lambda c: 1.0 / (c.alpha * c.lam_i**2)),
    "resdrsmall-w": _Display("small", "operator", _op_resdrsmall("w"),
                             lambda c: c.nu**-0.25 * c.alpha**-0.5 * c.lam_i**-1.25),
    "resdrsmall-rho": _Display("small", "operator", _op_resdrsmall("rho"),
                               lambda c: c.nu**-0.25 * c.alpha**-0.5 * c.lam_i**-0.5),
    "mularge": _Display("S-sector", "operator", _op_theorem("L2"), lambda c: 1.0 / abs(c.mu)),
    "mularge-nabla": _Display("S-sector", "operator", _op_theorem("gradient"),
                              lambda c: 1.0 / (c.nu**0.25 * _sq(abs(c.mu)))),
    "Immularge": _Display("Im-large", "operator", _op_theorem("L2"), lambda c: 1.0 / c.mu.real),
    "Immularge-na": _Display("Im-large", "operator", _op_theorem("gradient"),
                             lambda c: 1.0 / (c.nu**0.25 * _sq(c.mu.real))),
    "musmall": _Display("O-line", "operator", _op_theorem("L2"),
                        lambda c: abs(c.n) ** (1 - c.gamma) / c.mu.real),
    "musmall-nabla": _Display("O-line", "operator", _op_theorem("gradient"),
                              lambda c: abs(c.n) ** (0.5 + 0.25 * (1 - c.gamma)) / c.mu.real),
    "musmall-weighted": _Display("O-line", "operator", _op_theorem("weighted"),
                                 lambda c: 1.0 / (c.nu**0.25 * _sq(c.mu.real))),
}

INEQUALITY_IDS = tuple(DISPLAYS)


def evaluate_display(inequality_id: str, profile: ShearProfile, ctx: ModeContext,
                     grid: HalfLineGrid, rng=None, method: str = "subspace",
                     theta: float = THETA_DEFAULT) -> EstimateReport:
    """Check the hypotheses of one display at ctx and evaluate both sides."""
    if inequality_id not in DISPLAYS:
        raise ConfigError(f"unknown inequality id {inequality_id!r}")
    disp = DISPLAYS[inequality_id]
    check_hypotheses(disp.family, profile, ctx, theta)
    rng = np.random.default_rng(0) if rng is None else rng
    params = ctx.snapshot()
    if disp.kind == "fixed":
        lhs, rhs = _corrector_values(profile, ctx, grid)[inequality_id]
    elif disp.kind == "rayleigh-trick":
        form = "first" if inequality_id == "GMMray-first" else "second"
        best = (0.0, 1.0, -math.inf, 0.0)
        for _ in range(RANDOM_DRAWS):
            phi = random_wall_function(grid, rng)
            left, right = rayleigh_trick_sides(profile, grid, ctx.lam, ctx.alpha, phi, form=form)
            scale = right
            r = right / left if left > 0 else math.inf
            if r > best[2]:
                best = (right / scale, max(left, 0.0) / scale, r, (left - right) / scale)
        lhs, rhs = best[0], best[1]
        params["relative_gap"] = best[3]
    else:
        if method == "subspace":
            basis = laguerre_basis(grid, basis_scales(ctx))
        elif method == "grid":
            basis = None
        else:
            raise MethodError(f"unknown method {method!r}")
        terms, space = disp.evaluate(profile, ctx, grid, rng, basis)
        if disp.rhs_shape is None:
            rhs_fn = _gmmray1_rhs(ctx, grid, space)
        else:
            shape = disp.rhs_shape(ctx)
            rhs_fn = lambda x, shape=shape: shape * float(np.linalg.norm(space.norm_factor @ x))
        lhs, rhs = _sup_candidates(space, terms, rhs_fn, rng)
    return EstimateReport(inequality_id, lhs, rhs, params, grid.N)


def verify_inequality(inequality_id: str, sweep: Iterable[ModeContext], grid: HalfLineGrid,
                      profile: ShearProfile, seed: int = 0, method: str = "subspace",
                      theta: float = THETA_DEFAULT, cross_check: bool = False):
    """Evaluate one display over a sweep.

    Returns (reports, summary, rejected) where rejected lists (ctx snapshot, clause)
    for sweep entries that fail the display's hypotheses.  With cross_check, operator
    displays also record the full-grid ratio in params["grid_ratio"].
    """
    reports, rejected = [], []
    for i, ctx in enumerate(sweep):
        rng = np.random.default_rng([seed, i])
        try:
            rep = evaluate_display(inequality_id, profile, ctx, grid, rng, method, theta)
        except HypothesisViolation as exc:
            rejected.append((ctx.snapshot(), exc.clause))
            continue
        if cross_check and DISPLAYS[inequality_id].kind == "operator" and method != "grid":
            full = evaluate_display(inequality_id, profile, ctx, grid,
                                    np.random.default_rng([seed, i]), "grid", theta)
            rep.params["grid_ratio"] = full.ratio
        reports.append(rep)
    return reports, summarize(reports), rejected


# Admissible sweeps

def admissible_sweep(inequality_id: str, profile: ShearProfile, *, nu: float,
                     ns: Sequence[int], count: int, gamma: float = 2.0 / 3.0,
                     delta1=None, delta2=None, delta_star=None, delta=None,
                     lam_cap: float | None = None, seed: int = 0,
                     theta: float = THETA_DEFAULT) -> list[ModeContext]:
    """Random parameter points satisfying the hypotheses of the given display.

    lam_cap limits |lambda| (or lambda_i) from above to keep boundary layers resolvable.
    """
    if inequality_id not in DISPLAYS:
        raise ConfigError(f"unknown inequality id {inequality_id!r}")
    family = DISPLAYS[inequality_id].family
    rng = np.random.default_rng(seed)
    out: list[ModeContext] = []
    ns = list(ns)
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > 200 * max(count, 1):
            raise ConfigError(f"could not find {count} admissible points for {inequality_id}")
        n = int(ns[len(out) % len(ns)])
        base = make_context(profile, nu, n, lam=1j, gamma=gamma, delta=delta, delta1=delta1,
                            delta2=delta2, delta_star=delta_star)
        ds = base.deltas
        a = base.alpha
        li_min = abs(n) ** (gamma - 1.0) / base.delta
        if family == "lambda-large":
            top = lam_cap or 8.0 / ds.delta1
            mod = math.exp(rng.uniform(math.log(1.0 / ds.delta1), math.log(max(top, 1.0 / ds.delta1))))
            li = rng.uniform(min(li_min, mod), mod)
            lr = math.sqrt(max(mod**2 - li**2, 0.0)) * rng.choice([-1.0, 1.0])
            lam = complex(lr, li)
        elif family == "immu-large":
            lo = max((1.0 / ds.delta2 - math.sqrt(nu) * a**2) / a, 1e-3)
            li = rng.uniform(lo, lam_cap or 4.0 * lo)
            lam = complex(rng.uniform(-1.0, 2.0), li)
        elif family == "small":
            top = min(1.0 / ds.delta1, lam_cap or math.inf)
            li = rng.uniform(li_min, top)
            lam = complex(rng.uniform(-0.5, 1.5), li)
        elif family in ("rayleigh", "rayleigh-right"):
            lo_r = 1.0 if family == "rayleigh-right" else -0.5
            lam = complex(rng.uniform(lo_r, lo_r + 1.5), rng.uniform(0.2, lam_cap or 2.0))
        elif family == "S-sector":
            im_bound, mod_bound = _s_threshold(base.with_mu(0.0), theta)
            re = rng.uniform(1.0, 3.0) * base.remu_threshold
            mod_im = max(math.tan(theta) * re + im_bound, mod_bound, 0.0)
            im = rng.uniform(1.0, lam_cap or 3.0) * mod_im * rng.choice([-1.0, 1.0])
            lam = 1j * complex(re, im) / a
        elif family == "Im-large":
            lo = max(1.0 / ds.delta2 - n**2 * nu**1.5, base.remu_threshold)
            re = lo * math.exp(rng.uniform(0.0, math.log(lam_cap or 10.0)))
            im = rng.uniform(-2.0, 2.0) * re
            lam = 1j * complex(re, im) / a
        elif family == "O-line":
            re = base.remu_threshold
            cap = math.sqrt(max((abs(n) * math.sqrt(nu) / ds.delta1) ** 2 - re**2, 0.0))
            im = rng.uniform(-cap, cap)
            lam = 1j * complex(re, im) / a
        else:
            raise ConfigError(family)
        ctx = make_context(profile, nu, n, lam=lam, gamma=gamma, delta=delta, delta1=delta1,
                           delta2=delta2, delta_star=delta_star)
        if family == "O-line":
            ctx = ctx.with_mu(complex(ctx.remu_threshold, ctx.mu.imag))
        try:
            check_hypotheses(family, profile, ctx, theta)
        except HypothesisViolation:
            continue
        out.append(ctx)
    return out
