"""Half-line collocation grids, quadrature, norms, weights and Gevrey sums.

Grid functions live on the finite nodes Y_0 = 0 < Y_1 < ... < Y_{N-1}.  The
last Chebyshev node (Y = infinity for the algebraic map, Y = L for the
truncated map) is dropped, which imposes a zero value there.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

from .errors import ConfigError, ConsistencyError, ShapeError
from .reports import EstimateReport


def cheb_diff(N: int):
    """Chebyshev points x_j = -cos(pi j/N) (ascending) and the first-derivative matrix."""
    j = np.arange(N + 1)
    x = -np.cos(np.pi * j / N)
    c = np.ones(N + 1)
    c[0] = c[-1] = 2.0
    c = c * (-1.0) ** j
    dx = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dx + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    return x, D


def clenshaw_curtis(N: int):
    """Clenshaw-Curtis weights on [-1, 1] for the points -cos(pi j/N)."""
    theta = np.pi * np.arange(N + 1) / N
    w = np.zeros(N + 1)
    v = np.ones(N - 1)
    inner = theta[1:-1]
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N**2 - 1)
        for k in range(1, N // 2):
            v -= 2.0 * np.cos(2 * k * inner) / (4 * k * k - 1)
        v -= np.cos(N * inner) / (N**2 - 1)
    else:
        w[0] = w[N] = 1.0 / N**2
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * inner) / (4 * k * k - 1)
    w[1:-1] = 2.0 * v / N
    return w


def _bary_weights(N: int):
    bw = (-1.0) ** np.arange(N + 1)
    bw[0] *= 0.5
    bw[-1] *= 0.5
    return bw


@dataclass(eq=False)
class HalfLineGrid:
    """Collocation grid on [0, inf) (algebraic map) or [0, L) (truncated map)."""
    N: int
    mapping: str
    scale: float
    xi: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    D1: np.ndarray = field(repr=False)
    D2: np.ndarray = field(repr=False)
    D4: np.ndarray = field(repr=False)
    quad_weights: np.ndarray = field(repr=False)
    cond_d2: float = float("nan")
    D1_closed: np.ndarray | None = field(default=None, repr=False)

    @property
    def diff_ops(self):
        return {"D1": self.D1, "D2": self.D2, "D4": self.D4}

    # maps between Y and the Chebyshev variable
    def to_xi(self, Y):
        Y = np.asarray(Y, dtype=float)
        if self.mapping == "algebraic":
            return (Y - self.scale) / (Y + self.scale)
        return 2.0 * Y / self.scale - 1.0

    def from_xi(self, xi):
        xi = np.asarray(xi, dtype=float)
        if self.mapping == "algebraic":
            with np.errstate(divide="ignore"):
                return self.scale * (1.0 + xi) / (1.0 - xi)
        return 0.5 * self.scale * (1.0 + xi)

    def dY_dxi(self, xi):
        xi = np.asarray(xi, dtype=float)
        if self.mapping == "algebraic":
            return 2.0 * self.scale / (1.0 - xi) ** 2
        return 0.5 * self.scale * np.ones_like(xi)

    def derivative(self, values, far_value=0.0):
        """d/dY of a function with limit far_value at the dropped node (need not decay)."""
        values = self._check(values)
        full = np.concatenate([values, [far_value]])
        return (self.D1_closed @ full)[: self.N]

    def interp_matrix(self, Y) -> np.ndarray:
        """Matrix mapping nodal values to values at the points Y (zero at the dropped node)."""
        t = self.to_xi(np.atleast_1d(Y))
        xs = np.concatenate([self.xi, [1.0]])
        bw = _bary_weights(self.N)
        diff = t[:, None] - xs[None, :]
        exact = np.isclose(diff, 0.0, atol=1e-15, rtol=0.0)
        diff[exact] = 1.0
        C = bw[None, :] / diff
        C /= C.sum(axis=1, keepdims=True)
        rows = np.nonzero(exact.any(axis=1))[0]
        for r in rows:
            C[r] = 0.0
            C[r, np.nonzero(exact[r])[0][0]] = 1.0
        return C[:, : self.N]

    def evaluate(self, values, Y):
        return self.interp_matrix(Y) @ np.asarray(values)

    @cached_property
    def fine_matrix(self) -> np.ndarray:
        M = 8 * self.N
        t = -np.cos(np.pi * np.arange(M) / M)
        return self.interp_matrix(self.from_xi(t))

    def integrate(self, values):
        values = self._check(values)
        return np.sum(self.quad_weights * values)

    def _check(self, values):
        values = np.asarray(values)
        if values.shape[-1] != self.N:
            raise ShapeError(f"grid function has length {values.shape[-1]}, grid has {self.N} nodes")
        return values

    def segment_quadrature(self, b: float, m: int | None = None):
        """Gauss-Legendre points and weights on [0, b] in the mapped variable, plus interp matrix."""
        m = m or (self.N + 48)
        hi = float(self.to_xi(min(b, self._ymax)))
        x, w = np.polynomial.legendre.leggauss(m)
        t = -1.0 + (hi + 1.0) * (x + 1.0) / 2.0
        wt = w * (hi + 1.0) / 2.0 * self.dY_dxi(t)
        Y = self.from_xi(t)
        return Y, wt, self.interp_matrix(Y)

    @property
    def _ymax(self):
        return np.inf if self.mapping == "algebraic" else self.scale


def build_grid(N: int, mapping: str = "algebraic", scale: float = 2.0) -> HalfLineGrid:
    """Build a grid with N finite nodes.

    mapping="algebraic": Y = scale (1+xi)/(1-xi); mapping="truncated": Y in [0, scale).
    """
    if N < 16:
        raise ConfigError("N must be at least 16")
    if not (scale > 0 and math.isfinite(scale)):
        raise ConfigError("mapping parameter must be positive")
    if mapping not in ("algebraic", "truncated"):
        raise ConfigError(f"unknown mapping {mapping!r}")
    xi, Dxi = cheb_diff(N)
    cc = clenshaw_curtis(N)
    if mapping == "algebraic":
        with np.errstate(divide="ignore"):
            Y = scale * (1.0 + xi) / (1.0 - xi)
        dxi_dY = (1.0 - xi) ** 2 / (2.0 * scale)
        with np.errstate(divide="ignore"):
            jac = 2.0 * scale / (1.0 - xi[:-1]) ** 2
    else:
        Y = 0.5 * scale * (1.0 + xi)
        dxi_dY = np.full(N + 1, 2.0 / scale)
        jac = np.full(N, 0.5 * scale)
    DY = dxi_dY[:, None] * Dxi
    DY2 = DY @ DY
    DY4 = DY2 @ DY2
    keep = slice(0, N)
    D1 = DY[keep, keep].copy()
    D2 = DY2[keep, keep].copy()
    D4 = DY4[keep, keep].copy()
    weights = cc[:-1] * jac
    sv = np.linalg.svd(D2[1:, 1:], compute_uv=False)
    grid = HalfLineGrid(N=N, mapping=mapping, scale=float(scale), xi=xi[:-1].copy(),
                        nodes=Y[:-1].copy(), D1=D1, D2=D2, D4=D4,
                        quad_weights=weights, cond_d2=float(sv[0] / sv[-1]),
                        D1_closed=DY)
    return grid


# Weights

@dataclass(frozen=True)
class WeightSpec:
    """Piecewise-linear weight: rho(Y) = Y/breakpoint for Y < breakpoint, 1 beyond."""
    kind: str
    breakpoint: float

    @property
    def slope(self):
        return 1.0 / self.breakpoint if self.breakpoint > 0 else math.inf

    def __call__(self, Y):
        Y = np.asarray(Y, dtype=float)
        if self.breakpoint <= 0:
            return np.ones_like(Y)
        return np.minimum(Y / self.breakpoint, 1.0)


def unit_weight() -> WeightSpec:
    return WeightSpec("unit", 0.0)


def rho_weight(n: int, gamma: float, delta: float) -> WeightSpec:
    """Weight with breakpoint (|n|^(gamma-2/3)/delta)^(-3/2)."""
    base = abs(n) ** (gamma - 2.0 / 3.0) / delta
    return WeightSpec("rho", base ** -1.5)


def rho_lambda_weight(n: int, lam_i: float) -> WeightSpec:
    """Weight with breakpoint (|n|^(1/3) lambda_i)^(-3/2)."""
    if lam_i <= 0:
        raise ConfigError("rho_lambda needs Im lambda > 0")
    return WeightSpec("rho_lambda", (abs(n) ** (1.0 / 3.0) * lam_i) ** -1.5)


# Norms

def weighted_l2_sq(grid: HalfLineGrid, values, weight: WeightSpec) -> float:
    """Quadrature of weight * |v|^2, with the kink of the weight handled by a split."""
    values = grid._check(values)
    total = float(np.real(grid.integrate(np.abs(values) ** 2)))
    b = weight.breakpoint
    if b <= 0:
        return total
    Y, wt, C = grid.segment_quadrature(b)
    vals = C @ values
    defect = np.sum(wt * (1.0 - np.minimum(Y / b, 1.0)) * np.abs(vals) ** 2)
    return max(total - float(defect), 0.0)


def sup_norm(grid: HalfLineGrid, values) -> float:
    values = grid._check(values)
    fine = np.abs(grid.fine_matrix @ values)
    return float(max(fine.max(initial=0.0), np.abs(values).max(initial=0.0)))


def norm(grid: HalfLineGrid, values, which: str = "L2", weight: WeightSpec | None = None,
         alpha: float | None = None) -> float:
    """Norm of a grid function.  which in {L2, Linf, L1, weighted-L2, H1-pair}."""
    values = grid._check(values)
    if which == "L2":
        return math.sqrt(max(float(np.real(grid.integrate(np.abs(values) ** 2))), 0.0))
    if which == "Linf":
        return sup_norm(grid, values)
    if which == "L1":
        return float(np.real(grid.integrate(np.abs(values))))
    if which == "weighted-L2":
        if weight is None:
            raise ConfigError("weighted-L2 needs a WeightSpec")
        return math.sqrt(weighted_l2_sq(grid, values, weight))
    if which == "H1-pair":
        if alpha is None:
            raise ConfigError("H1-pair needs alpha")
        dv = grid.D1 @ values
        sq = grid.integrate(np.abs(dv) ** 2 + alpha**2 * np.abs(values) ** 2)
        return math.sqrt(max(float(np.real(sq)), 0.0))
    raise ConfigError(f"unknown norm {which!r}")


def l1_complement_sqrt_weight(grid: HalfLineGrid, values, weight: WeightSpec) -> float:
    """L1 norm of (1 - rho^(1/2)) v, which is supported on [0, breakpoint]."""
    b = weight.breakpoint
    if b <= 0:
        return 0.0
    m = 2 * grid.N + 64
    x, w = np.polynomial.legendre.leggauss(m)
    s = 0.5 * (x + 1.0)
    ws = 0.5 * w
    Y = b * s**2
    if grid.mapping == "truncated":
        Y = np.minimum(Y, grid.scale)
    vals = grid.interp_matrix(Y) @ values
    return float(np.sum(ws * (1.0 - s) * np.abs(vals) * 2.0 * b * s))


# Gevrey norms

def bracket(n):
    return np.sqrt(1.0 + np.asarray(n, dtype=float) ** 2)


@dataclass(frozen=True)
class GevreyNormParams:
    d: float
    gamma: float
    K: float
    variant: str = "X"
    base: str = "abs"

    def __post_init__(self):
        if self.variant not in ("X", "X1", "Y"):
            raise ConfigError(f"unknown Gevrey variant {self.variant!r}")
        if not (0 < self.gamma <= 1) or self.K < 0 or self.d < 0:
            raise ConfigError("Gevrey parameters out of range")

    def weight(self, n):
        """Mode weight; the exponent uses |n|^gamma (base 'abs') or <n>^gamma (base 'bracket')."""
        n = np.asarray(n, dtype=float)
        size = np.abs(n) if self.base == "abs" else bracket(n)
        return (1.0 + np.abs(n) ** self.d) * np.exp(self.K * size**self.gamma)


def gevrey_norm(mode_norms: Mapping[int, float], params: GevreyNormParams) -> float:
    """Supremum over modes of weight(n) * mode norm.

    The caller supplies L2 mode norms (X), L2_x H1_y norms (X1) or L2_x Linf_y norms (Y).
    """
    if not mode_norms:
        return 0.0
    ns = np.array(list(mode_norms.keys()), dtype=float)
    vals = np.array([float(v) for v in mode_norms.values()])
    return float(np.max(params.weight(ns) * vals))


# Interpolation inequality

def check_interpolation(grid: HalfLineGrid, phi, w, rho: WeightSpec, alpha: float,
                        tol: float = 1e-6) -> EstimateReport:
    """sup |(phi', alpha phi)| against the three-term interpolation bound.

    rhs_shape = ||rho^(1/2) w||^(1/2) ||(phi', alpha phi)||^(1/2)
                + ||(1 - rho^(1/2)) w||_L1 + alpha^(1/2) ||(phi', alpha phi)||.
    """
    phi = grid._check(np.asarray(phi, dtype=complex))
    w = grid._check(np.asarray(w, dtype=complex))
    resid = (grid.D2 @ phi - alpha**2 * phi - w)[1:]
    scale = max(norm(grid, w), norm(grid, phi, "H1-pair", alpha=alpha), 1e-300)
    rnorm = math.sqrt(float(np.real(grid.integrate(np.abs(np.concatenate([[0], resid])) ** 2))))
    if abs(phi[0]) > tol * scale or rnorm > tol * scale:
        raise ConsistencyError(f"(phi, w) inconsistent, residual {rnorm:.3e}", residual=rnorm)
    dphi = grid.D1 @ phi
    fine = grid.fine_matrix
    lhs = max(float(np.sqrt(np.abs(fine @ dphi) ** 2 + alpha**2 * np.abs(fine @ phi) ** 2).max()),
              float(np.sqrt(np.abs(dphi) ** 2 + alpha**2 * np.abs(phi) ** 2).max()))
    pair = norm(grid, phi, "H1-pair", alpha=alpha)
    t1 = math.sqrt(norm(grid, w, "weighted-L2", weight=rho) * pair)
    t2 = l1_complement_sqrt_weight(grid, w, rho)
    t3 = math.sqrt(alpha) * pair
    return EstimateReport("interpolation", lhs, t1 + t2 + t3,
                          {"alpha": alpha, "breakpoint": rho.breakpoint,
                           "terms": [t1, t2, t3]}, grid.N)
