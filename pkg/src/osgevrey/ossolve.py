"""Orr-Sommerfeld and Rayleigh mode solves, Navier-slip decomposition, Airy corrector.

For one Fourier mode with signed rescaled wavenumber k = n sqrt(nu) and
alpha = |k|, the velocity is v = (-phi', i k phi) and the vorticity
w = (d^2 - alpha^2) phi.  The resolvent problem (mu + L) v = f becomes

    -sqrt(nu) (d^2 - alpha^2) w + i k ((V - lam_s) w - V'' phi) = F,
    F = -d F1 + i k F2,

with lam_s = i mu / k (equal to lambda = i mu/(|n| sqrt(nu)) for n > 0).
Unknowns are stacked as [phi; w] on the grid nodes; row 0 of each block
carries a boundary condition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .errors import (ConfigError, DegenerateCorrectorError, DomainError,
                     NearSingularError)
from .numerics import HalfLineGrid, norm, rho_lambda_weight
from .profiles import ShearProfile
from .specfun import airy

SINGULAR_THRESHOLD = 1e-12


@dataclass(frozen=True)
class DeltaFamily:
    delta0: float
    delta1: float
    delta2: float
    delta_star: float

    @classmethod
    def from_profile(cls, profile: ShearProfile, delta1=None, delta2=None, delta_star=None):
        d0 = profile.delta0
        d1 = d0 / 4.0 if delta1 is None else delta1
        d2 = d0 / 4.0 if delta2 is None else delta2
        ds = d1 / 4.0 if delta_star is None else delta_star
        return cls(d0, d1, d2, ds)


@dataclass(frozen=True)
class ModeContext:
    """Parameters of one mode: viscosity, mode number, spectral parameter mu."""
    nu: float
    n: int
    mu: complex
    gamma: float
    delta: float
    deltas: DeltaFamily
    slope0: float = 1.0
    exploratory: bool = False

    def __post_init__(self):
        if not self.nu > 0:
            raise ConfigError("nu must be positive")
        if self.n == 0:
            raise ConfigError("mode n = 0 has no Orr-Sommerfeld problem")

    @property
    def k(self) -> float:
        return math.sqrt(self.nu) * self.n

    @property
    def alpha(self) -> float:
        return math.sqrt(self.nu) * abs(self.n)

    @property
    def lam(self) -> complex:
        return 1j * self.mu / (abs(self.n) * math.sqrt(self.nu))

    @property
    def lam_signed(self) -> complex:
        return 1j * self.mu / self.k

    @property
    def lam_nu(self) -> complex:
        return self.lam + 1j * math.sqrt(self.nu) * self.alpha

    @property
    def lam_i(self) -> float:
        return self.lam.imag

    @property
    def lam_r(self) -> float:
        return self.lam.real

    @property
    def A(self) -> float:
        m = abs(self.n) ** (1.0 / 3.0)
        return m * math.sqrt(1.0 + m * abs(self.lam_nu))

    @property
    def d_shift(self) -> complex:
        return -self.lam_nu / self.slope0

    @property
    def remu_threshold(self) -> float:
        return math.sqrt(self.nu) * abs(self.n) ** self.gamma / self.delta

    @property
    def resolvent_admissible(self) -> bool:
        return self.mu.real >= self.remu_threshold * (1.0 - 1e-12)

    def with_mu(self, mu) -> "ModeContext":
        return replace(self, mu=complex(mu))

    def snapshot(self) -> dict:
        return {"nu": self.nu, "n": self.n, "mu": self.mu, "lambda": self.lam,
                "alpha": self.alpha, "gamma": self.gamma, "delta": self.delta,
                "delta0": self.deltas.delta0, "delta1": self.deltas.delta1,
                "delta2": self.deltas.delta2, "delta_star": self.deltas.delta_star,
                "A": self.A}


def make_context(profile: ShearProfile, nu: float, n: int, *, mu=None, lam=None,
                 gamma: float = 2.0 / 3.0, delta: float | None = None,
                 delta1=None, delta2=None, delta_star=None, exploratory=False) -> ModeContext:
    """Build a ModeContext from either mu or lambda (mu = -i alpha lambda)."""
    if (mu is None) == (lam is None):
        raise ConfigError("give exactly one of mu, lam")
    deltas = DeltaFamily.from_profile(profile, delta1, delta2, delta_star)
    if mu is None:
        mu = -1j * math.sqrt(nu) * abs(n) * complex(lam)
    return ModeContext(float(nu), int(n), complex(mu), float(gamma),
                       float(deltas.delta_star if delta is None else delta), deltas,
                       profile.slope_at_wall, exploratory)


@dataclass
class RhsSpec:
    """Right-hand side: (f1, f2) with F = -d f1 + i k f2, or F directly."""
    f1: np.ndarray | None = None
    f2: np.ndarray | None = None
    F: np.ndarray | None = None

    def assemble(self, grid: HalfLineGrid, k: float) -> np.ndarray:
        if self.F is not None:
            return np.asarray(self.F, dtype=complex)
        out = np.zeros(grid.N, dtype=complex)
        if self.f1 is not None:
            out -= grid.D1 @ np.asarray(self.f1, dtype=complex)
        if self.f2 is not None:
            out += 1j * k * np.asarray(self.f2, dtype=complex)
        return out

    def pair_norm(self, grid: HalfLineGrid) -> float:
        s = 0.0
        for f in (self.f1, self.f2):
            if f is not None:
                s += norm(grid, f) ** 2
        return math.sqrt(s)


@dataclass(eq=False)
class OSSolution:
    phi: np.ndarray
    w: np.ndarray
    grid: HalfLineGrid = field(repr=False)
    ctx: ModeContext | None = None
    kind: str = "nonslip"
    residual_norm: float = 0.0
    sigma_ratio: float | None = None
    pieces: dict = field(default_factory=dict, repr=False)

    @property
    def boundary(self):
        return (complex(self.phi[0]), complex((self.grid.D1 @ self.phi)[0]), complex(self.w[0]))

    @property
    def alpha(self):
        return self.ctx.alpha if self.ctx is not None else self.pieces.get("alpha", 0.0)

    def pair_norm(self) -> float:
        return norm(self.grid, self.phi, "H1-pair", alpha=self.alpha)

    def w_norm(self) -> float:
        return norm(self.grid, self.w)

    def weighted_w_norm(self, weight=None) -> float:
        if weight is None:
            weight = rho_lambda_weight(self.ctx.n, self.ctx.lam_i)
        return norm(self.grid, self.w, "weighted-L2", weight=weight)

    def velocity(self):
        """(v1, v2) = (-phi', i k phi)."""
        k = self.ctx.k
        return -(self.grid.D1 @ self.phi), 1j * k * self.phi

    @property
    def norms(self) -> dict:
        out = {"pair": self.pair_norm(), "w": self.w_norm()}
        if self.ctx is not None and self.ctx.lam_i > 0:
            out["rho_lambda_w"] = self.weighted_w_norm()
        return out


def _profile_arrays(profile: ShearProfile, grid: HalfLineGrid):
    V, V1, V2, V3 = profile.derivatives(grid.nodes)
    return V, V1, V2, V3


def _interior_l2(grid, r):
    r = np.array(r, dtype=complex)
    r[0] = 0.0
    return math.sqrt(max(float(np.real(grid.integrate(np.abs(r) ** 2))), 0.0))


class ModeOperator:
    """Factored companion-form matrix for one (profile, ctx, grid, boundary condition).

    bc: "nonslip" (phi(0) = phi'(0) = 0) or "navier" (phi(0) = w(0) = 0);
    variant "b1" discretises the divergence form used for the w1 piece.
    """

    def __init__(self, profile: ShearProfile, ctx: ModeContext, grid: HalfLineGrid,
                 bc: str = "nonslip", variant: str = "os", check: bool = True):
        if bc not in ("nonslip", "navier"):
            raise ConfigError(f"unknown boundary condition {bc!r}")
        self.profile, self.ctx, self.grid, self.bc, self.variant = profile, ctx, grid, bc, variant
        N = grid.N
        V, V1, V2, _ = _profile_arrays(profile, grid)
        k, a2, sq = ctx.k, ctx.alpha**2, math.sqrt(ctx.nu)
        lam = ctx.lam_signed
        I = np.eye(N)
        L2 = grid.D2 - a2 * I
        M = np.zeros((2 * N, 2 * N), dtype=complex)
        M[:N, :N] = L2
        M[:N, N:] = -I
        M[N:, N:] = -sq * L2
        if variant == "os":
            M[N:, N:] += 1j * k * np.diag(V - lam)
            M[N:, :N] = -1j * k * np.diag(V2)
        elif variant == "b1":
            op = (np.diag(V - lam) @ grid.D2 + np.diag(V1) @ grid.D1
                  - a2 * np.diag(V - lam) - np.diag(V2))
            M[N:, :N] = 1j * k * op
        else:
            raise ConfigError(f"unknown variant {variant!r}")
        M[0, :] = 0.0
        M[0, 0] = 1.0
        M[N, :] = 0.0
        if bc == "nonslip":
            M[N, :N] = grid.D1[0]
        else:
            M[N, N] = 1.0
        self.matrix = M
        self.sigma_ratio = None
        if check:
            scale = np.abs(M).max(axis=1)
            Ms = M / scale[:, None]
            sv = np.linalg.svd(Ms, compute_uv=False)
            self.sigma_ratio = float(sv[-1] / sv[0])
            if self.sigma_ratio < SINGULAR_THRESHOLD:
                raise NearSingularError(
                    f"discrete system near singular (sigma_min/sigma_max = {self.sigma_ratio:.2e})",
                    sigma_min=self.sigma_ratio)
        self.lu = sla.lu_factor(M)

    def solve_F(self, F):
        """Solve for one or many right-hand sides F (N or N x m)."""
        N = self.grid.N
        F = np.asarray(F, dtype=complex)
        single = F.ndim == 1
        Fm = F[:, None] if single else F
        b = np.zeros((2 * N, Fm.shape[1]), dtype=complex)
        b[N + 1:] = Fm[1:]
        x = sla.lu_solve(self.lu, b)
        phi, w = x[:N], x[N:]
        if single:
            return phi[:, 0], w[:, 0]
        return phi, w

    def residual(self, phi, w, F) -> float:
        N = self.grid.N
        x = np.concatenate([phi, w])
        r = self.matrix @ x
        r[N + 1:] -= F[1:]
        return math.sqrt(_interior_l2(self.grid, r[:N]) ** 2 + _interior_l2(self.grid, r[N:]) ** 2
                         + abs(r[0]) ** 2 + abs(r[N]) ** 2)


def _check_shapes(grid, rhs: RhsSpec):
    for f in (rhs.f1, rhs.f2, rhs.F):
        if f is not None:
            grid._check(f)


def solve_os_nonslip(profile, ctx: ModeContext, rhs: RhsSpec, grid: HalfLineGrid,
                     check: bool = True) -> OSSolution:
    _check_shapes(grid, rhs)
    op = ModeOperator(profile, ctx, grid, "nonslip", check=check)
    F = rhs.assemble(grid, ctx.k)
    phi, w = op.solve_F(F)
    return OSSolution(phi, w, grid, ctx, "nonslip", op.residual(phi, w, F), op.sigma_ratio)


def solve_os_navier(profile, ctx: ModeContext, rhs: RhsSpec, grid: HalfLineGrid,
                    decompose: bool = True, check: bool = True) -> OSSolution:
    """Navier-slip solve; with decompose=True also returns the w1/w2 pieces.

    pieces: phi1, w1 (divergence-form piece), h = i k phi1', phi2, w2 (piece driven
    by V' h), u2 = w2 / V' from the rescaled system, and decomposition_error.
    """
    _check_shapes(grid, rhs)
    op = ModeOperator(profile, ctx, grid, "navier", check=check)
    F = rhs.assemble(grid, ctx.k)
    phi, w = op.solve_F(F)
    sol = OSSolution(phi, w, grid, ctx, "navier", op.residual(phi, w, F), op.sigma_ratio)
    if decompose:
        b1 = ModeOperator(profile, ctx, grid, "navier", variant="b1", check=False)
        phi1, w1 = b1.solve_F(F)
        h = 1j * ctx.k * (grid.D1 @ phi1)
        V1 = profile.derivatives(grid.nodes)[1]
        phi2, w2 = op.solve_F(V1 * h)
        scale = max(norm(grid, w), 1e-300)
        sol.pieces.update(phi1=phi1, w1=w1, h=h, phi2=phi2, w2=w2,
                          decomposition_error=norm(grid, w1 + w2 - w) / scale)
    return sol


def solve_weighted_b3(profile, ctx: ModeContext, h, grid: HalfLineGrid):
    """Solve the V'h-driven Navier system for u = w / V' directly.

    Returns (phi, u, du) where du = (d_Y w)/V' = u' + (V''/V') u.
    """
    h = np.asarray(h, dtype=complex)
    N = grid.N
    if h.shape[0] != N:
        grid._check(h)
    _, V1, _, _ = _profile_arrays(profile, grid)
    V = profile.derivatives(grid.nodes)[0]
    r2, r3 = profile.ratios(grid.nodes)
    k, a2, sq = ctx.k, ctx.alpha**2, math.sqrt(ctx.nu)
    I = np.eye(N)
    M = np.zeros((2 * N, 2 * N), dtype=complex)
    M[:N, :N] = grid.D2 - a2 * I
    M[:N, N:] = -np.diag(V1)
    M[N:, N:] = (-sq * (grid.D2 + 2.0 * np.diag(r2) @ grid.D1 + np.diag(r3) - a2 * I)
                 + 1j * k * np.diag(V - ctx.lam_signed))
    M[N:, :N] = -1j * k * np.diag(r2)
    M[0, :] = 0.0
    M[0, 0] = 1.0
    M[N, :] = 0.0
    M[N, N] = 1.0
    b = np.zeros((2 * N,) + h.shape[1:], dtype=complex)
    b[N + 1:] = h[1:]
    x = np.linalg.solve(M, b)
    phi, u = x[:N], x[N:]
    du = grid.D1 @ u + (r2 * u.T).T
    return phi, u, du


def solve_rayleigh(profile, ctx_or_params, h1, h2, h3, grid: HalfLineGrid) -> OSSolution:
    """(V - lam)(d^2 - alpha^2) phi - V'' phi = V' h1 + d h2 + i alpha h3, phi(0) = 0.

    ctx_or_params: a ModeContext (uses lambda, alpha) or a (lam, alpha) pair.
    """
    if isinstance(ctx_or_params, ModeContext):
        lam, alpha, ctx = ctx_or_params.lam, ctx_or_params.alpha, ctx_or_params
    else:
        lam, alpha = ctx_or_params
        lam, ctx = complex(lam), None
    if lam.imag <= 0:
        raise DomainError("Rayleigh solve needs Im lambda > 0 (critical layer on the real axis)")
    htil = apply_rayleigh_rhs(profile, grid, alpha, h1, h2, h3)
    R = _rayleigh_matrix(profile, grid, lam, alpha)
    b = htil.copy()
    b[0] = 0.0
    phi = np.linalg.solve(R, b)
    w = grid.D2 @ phi - alpha**2 * phi
    res = R @ phi - b
    sol = OSSolution(phi, w, grid, ctx, "rayleigh", _interior_l2(grid, res) + abs(res[0]))
    sol.pieces.update(alpha=alpha, lam=lam, htil=htil)
    return sol


def _rayleigh_matrix(profile, grid, lam, alpha):
    V, _, V2, _ = _profile_arrays(profile, grid)
    R = np.diag(V - lam) @ (grid.D2 - alpha**2 * np.eye(grid.N)) - np.diag(V2)
    R = R.astype(complex)
    R[0, :] = 0.0
    R[0, 0] = 1.0
    return R


def rayleigh_solve_many(profile, grid, lam, alpha, rhs):
    """phi for each column of rhs (the already-assembled h-tilde), phi(0) = 0."""
    if complex(lam).imag <= 0:
        raise DomainError("Rayleigh solve needs Im lambda > 0 (critical layer on the real axis)")
    b = np.array(rhs, dtype=complex)
    b[0] = 0.0
    return np.linalg.solve(_rayleigh_matrix(profile, grid, complex(lam), alpha), b)


def apply_rayleigh_rhs(profile, grid, alpha, h1, h2, h3):
    V1 = profile.derivatives(grid.nodes)[1]
    out = np.zeros(grid.N, dtype=complex)
    if h1 is not None:
        out += V1 * np.asarray(h1)
    if h2 is not None:
        out += grid.D1 @ np.asarray(h2, dtype=complex)
    if h3 is not None:
        out += 1j * alpha * np.asarray(h3)
    return out


def rayleigh_operator(profile, grid, lam, alpha, phi):
    V, _, V2, _ = _profile_arrays(profile, grid)
    return (V - lam) * (grid.D2 @ phi - alpha**2 * phi) - V2 * phi


# Boundary-layer corrector

@dataclass(eq=False)
class CorrectorBundle:
    W_a: np.ndarray
    Phi_a: np.ndarray
    W_e: np.ndarray
    Phi_e: np.ndarray
    W: np.ndarray
    Phi: np.ndarray
    J: complex
    W_b: np.ndarray
    Phi_b: np.ndarray
    context: ModeContext
    grid: HalfLineGrid = field(repr=False)
    diagnostics: dict = field(default_factory=dict)

    @property
    def A(self):
        return self.context.A


def airy_profile(ctx: ModeContext, Y):
    """W_a(Y) = Ai(e^{i pi/6} kappa (Y + d)) / Ai(e^{i pi/6} kappa d), kappa = (|n| V'(0))^(1/3), n > 0."""
    kappa = (abs(ctx.n) * ctx.slope0) ** (1.0 / 3.0)
    rot = np.exp(1j * np.pi / 6.0)
    d = ctx.d_shift
    z0 = rot * kappa * d
    Y = np.asarray(Y, dtype=float)
    z = rot * kappa * (Y + d)
    out = np.zeros(Y.shape, dtype=complex)
    s0, _ = airy(z0, scaled=True)
    zeta0 = (2.0 / 3.0) * z0 * np.sqrt(z0)
    ok = np.abs(z) <= 1.0e4
    if np.any(ok):
        s, _ = airy(z[ok], scaled=True)
        zeta = (2.0 / 3.0) * z[ok] * np.sqrt(z[ok])
        expo = zeta0 - zeta
        vals = np.zeros(s.shape, dtype=complex)
        live = expo.real > -745.0
        vals[live] = s[live] / s0 * np.exp(expo[live])
        out[ok] = vals
    return out


def _poisson_solve(grid, alpha, rhs):
    """(d^2 - alpha^2) phi = rhs on interior nodes, phi(0) = 0, decay at the far node."""
    N = grid.N
    L = grid.D2 - alpha**2 * np.eye(N)
    L = L.astype(complex)
    L[0, :] = 0.0
    L[0, 0] = 1.0
    b = np.asarray(rhs, dtype=complex).copy()
    b[0] = 0.0
    return np.linalg.solve(L, b)


def build_corrector(profile, ctx: ModeContext, grid: HalfLineGrid, form: str = "raw",
                    j_floor: float = 1e-3) -> CorrectorBundle:
    """Airy boundary-layer corrector and its normalisation J = Phi'(0).

    form: "raw" uses F = -i k (V - V'(0) Y) W_a + i k V'' Phi_a for the W_e solve,
    "divergence" uses F = -d F11 + i k F12; both are always computed and their
    discrepancy recorded in diagnostics["form_gap"].
    """
    if ctx.n < 0:
        mirror = ctx.with_mu(np.conj(ctx.mu))
        mirror = replace(mirror, n=-ctx.n)
        b = build_corrector(profile, mirror, grid, form, j_floor)
        conj = {f: np.conj(getattr(b, f)) for f in
                ("W_a", "Phi_a", "W_e", "Phi_e", "W", "Phi", "W_b", "Phi_b")}
        return CorrectorBundle(J=np.conj(b.J), context=ctx, grid=grid,
                               diagnostics=dict(b.diagnostics, mirrored=True), **conj)
    if ctx.lam_i <= 0:
        raise DomainError("corrector needs Im lambda > 0")
    if ctx.slope0 <= 0:
        raise DomainError("corrector needs V'(0) > 0")
    Y = grid.nodes
    V, V1, V2, _ = _profile_arrays(profile, grid)
    W_a = airy_profile(ctx, Y)
    Phi_a = _poisson_solve(grid, ctx.alpha, W_a)
    k, s0 = ctx.k, ctx.slope0
    lin = V - s0 * Y
    F_raw = -1j * k * lin * W_a + 1j * k * V2 * Phi_a
    dPhi_a = grid.D1 @ Phi_a
    F11 = 1j * k * (lin * dPhi_a - (V1 - s0) * Phi_a)
    F12 = ctx.alpha**2 * lin * Phi_a
    F_div = -(grid.D1 @ F11) + 1j * k * F12
    op = ModeOperator(profile, ctx, grid, "navier")
    Phi_e_raw, W_e_raw = op.solve_F(F_raw)
    Phi_e_div, W_e_div = op.solve_F(F_div)
    gap = norm(grid, W_e_raw - W_e_div) / max(norm(grid, W_e_raw), 1e-300)
    if form == "raw":
        Phi_e, W_e = Phi_e_raw, W_e_raw
    elif form == "divergence":
        Phi_e, W_e = Phi_e_div, W_e_div
    else:
        raise ConfigError(f"unknown corrector form {form!r}")
    W = W_a + W_e
    Phi = Phi_a + Phi_e
    J = complex((grid.D1 @ Phi)[0])
    J_int = complex(-grid.integrate(W * np.exp(-ctx.alpha * Y)))
    wa_res = -math.sqrt(ctx.nu) * (grid.D2 @ W_a - ctx.alpha**2 * W_a) \
        + 1j * k * (s0 * Y - ctx.lam_signed) * W_a
    diag = {"form_gap": gap, "J_integral": J_int,
            "J_gap": abs(J - J_int) / max(abs(J), 1e-300),
            "Wa_residual": _interior_l2(grid, wa_res),
            "F11_F12_norm": math.hypot(norm(grid, F11), norm(grid, F12)),
            "sigma_ratio": op.sigma_ratio}
    if abs(J) < j_floor / ctx.A:
        raise DegenerateCorrectorError(f"|J| = {abs(J):.3e} below {j_floor}/A", J=J)
    return CorrectorBundle(W_a, Phi_a, W_e, Phi_e, W, Phi, J, W / J, Phi / J, ctx, grid, diag)


def assemble_nonslip(navier: OSSolution, bundle: CorrectorBundle) -> OSSolution:
    """w = w_Na - phi_Na'(0) W_b, phi = phi_Na - phi_Na'(0) Phi_b."""
    if navier.grid is not bundle.grid or navier.ctx != bundle.context:
        raise ConfigError("navier solution and corrector use different contexts or grids")
    slope = complex((navier.grid.D1 @ navier.phi)[0])
    phi = navier.phi - slope * bundle.Phi_b
    w = navier.w - slope * bundle.W_b
    out = OSSolution(phi, w, navier.grid, navier.ctx, "assembled", navier.residual_norm,
                     navier.sigma_ratio)
    out.pieces["boundary_slope"] = slope
    return out


def boundary_identity_gap(grid: HalfLineGrid, w, alpha: float):
    """(-phi'(0), integral of w e^{-alpha Y}) for phi solving the Poisson problem with data w."""
    phi = _poisson_solve(grid, alpha, w)
    lhs = -complex((grid.D1 @ phi)[0])
    rhs = complex(grid.integrate(np.asarray(w) * np.exp(-alpha * grid.nodes)))
    return lhs, rhs


def poisson_solve(grid, alpha, w):
    return _poisson_solve(grid, alpha, w)


def boundary_layer_nodes(ctx: ModeContext, grid: HalfLineGrid) -> int:
    """Number of nodes inside the Airy scale Y <= |n V'(0)|^(-1/3)."""
    scale = (abs(ctx.n) * ctx.slope0) ** (-1.0 / 3.0)
    return int(np.sum(grid.nodes <= scale))
