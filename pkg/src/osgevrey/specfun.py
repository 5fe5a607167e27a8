"""Complex Airy function Ai, Ai' and the rotated antiderivative A0.

Three evaluation branches:
  * Maclaurin series for |z| <= SERIES_RADIUS,
  * asymptotic expansions for |z| >= ASYMPTOTIC_RADIUS,
  * Taylor-series continuation of y'' = z y along rays in between.
Continuation runs inward from the asymptotic circle in the decaying sector
|arg z| < pi/3 (where the solution is recessive inward), and outward from the
series circle elsewhere.

All branches produce the scaled pair (Ai, Ai') * exp(zeta), zeta = 2/3 z^(3/2)
on the principal branch, so that large arguments can be handled without
overflow; unscaling happens last.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import DomainError
from .reports import EstimateReport

SERIES_RADIUS = 3.0
ASYMPTOTIC_RADIUS = 12.0
MAX_ABS_ARG = 1.0e4

AI0 = 1.0 / (3.0 ** (2.0 / 3.0) * gamma_fn(2.0 / 3.0))
AIP0 = -1.0 / (3.0 ** (1.0 / 3.0) * gamma_fn(1.0 / 3.0))

_N_SERIES = 70
_N_ASYMP = 24
_N_TAYLOR = 40
_STEP = 0.25


def _asymptotic_coeffs(K):
    u = np.empty(K)
    v = np.empty(K)
    u[0] = v[0] = 1.0
    for k in range(1, K):
        u[k] = u[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k)
        v[k] = -(6 * k + 1) / (6 * k - 1) * u[k]
    return u, v


_U, _V = _asymptotic_coeffs(2 * _N_ASYMP + 2)


def _zeta(z):
    return (2.0 / 3.0) * z * np.sqrt(z)


def _series(z):
    """Unscaled Ai, Ai' from the Maclaurin series."""
    z3 = z**3
    f = np.ones_like(z)
    g = z.copy()
    fp = np.zeros_like(z)
    gp = np.ones_like(z)
    tf, tg = np.ones_like(z), z.copy()
    tfp, tgp = 0.5 * z * z, np.ones_like(z)
    fp = fp + tfp
    for k in range(1, _N_SERIES):
        tf = tf * z3 / ((3 * k - 1) * (3 * k))
        tg = tg * z3 / ((3 * k) * (3 * k + 1))
        tgp = tgp * z3 / ((3 * k) * (3 * k - 2))
        f = f + tf
        g = g + tg
        gp = gp + tgp
        if k >= 2:
            tfp = tfp * z3 / ((3 * k - 1) * (3 * k - 3))
            fp = fp + tfp
    ai = AI0 * f + AIP0 * g
    aip = AI0 * fp + AIP0 * gp
    return ai, aip


def _asym_scaled(z):
    """Scaled Ai, Ai' for large |z| (multiplied by exp(zeta(z)))."""
    out_ai = np.empty_like(z)
    out_aip = np.empty_like(z)
    ang = np.abs(np.angle(z))
    main = ang <= 2.0 * np.pi / 3.0
    if np.any(main):
        zz = z[main]
        zeta = _zeta(zz)
        q = 1.0 / zeta
        su = np.zeros_like(zz)
        sv = np.zeros_like(zz)
        p = np.ones_like(zz)
        for k in range(_N_ASYMP):
            su = su + _U[k] * p
            sv = sv + _V[k] * p
            p = -p * q
        root = zz**0.25
        out_ai[main] = su / (2.0 * math.sqrt(math.pi) * root)
        out_aip[main] = -root * sv / (2.0 * math.sqrt(math.pi))
    other = ~main
    if np.any(other):
        zz = z[other]
        w = -zz
        xi = _zeta(w)
        q = 1.0 / xi
        P = np.zeros_like(zz)
        Q = np.zeros_like(zz)
        R = np.zeros_like(zz)
        S = np.zeros_like(zz)
        sgn = 1.0
        pw = np.ones_like(zz)
        for k in range(_N_ASYMP):
            P = P + sgn * _U[2 * k] * pw
            R = R + sgn * _V[2 * k] * pw
            Q = Q + sgn * _U[2 * k + 1] * pw * q
            S = S + sgn * _V[2 * k + 1] * pw * q
            pw = pw * q * q
            sgn = -sgn
        root = w**0.25
        zeta_z = _zeta(zz)
        phase = xi + math.pi / 4.0
        # sin/cos written as exponentials, each combined with exp(zeta_z) in log space
        ep = np.exp(zeta_z + 1j * phase)
        em = np.exp(zeta_z - 1j * phase)
        sin_s = (ep - em) / 2j
        cos_s = (ep + em) / 2.0
        out_ai[other] = (sin_s * P - cos_s * Q) / (math.sqrt(math.pi) * root)
        out_aip[other] = -root * (cos_s * R + sin_s * S) / math.sqrt(math.pi)
    return out_ai, out_aip


def _taylor_march(z0, y, yp, z1, nsteps):
    """Integrate y'' = z y from z0 to z1 (arrays) with fixed Taylor steps."""
    h = (z1 - z0) / nsteps
    zc = z0.copy()
    for _ in range(nsteps):
        a = [y, yp, 0.5 * zc * y]
        for k in range(1, _N_TAYLOR - 2):
            a.append((zc * a[k] + a[k - 1]) / ((k + 1) * (k + 2)))
        ynew = np.zeros_like(y)
        ypnew = np.zeros_like(y)
        for k in range(len(a) - 1, -1, -1):
            ynew = ynew * h + a[k]
        for k in range(len(a) - 1, 0, -1):
            ypnew = ypnew * h + k * a[k]
        y, yp = ynew, ypnew
        zc = zc + h
    return y, yp


def _continuation(z):
    """Unscaled Ai, Ai' for SERIES_RADIUS < |z| < ASYMPTOTIC_RADIUS."""
    r = np.abs(z)
    unit = z / r
    ai = np.empty_like(z)
    aip = np.empty_like(z)
    inward = np.abs(np.angle(z)) < np.pi / 3.0
    if np.any(inward):
        zs = ASYMPTOTIC_RADIUS * unit[inward]
        sa, sp = _asym_scaled(zs)
        scale = np.exp(-_zeta(zs))
        nsteps = int(math.ceil((ASYMPTOTIC_RADIUS - SERIES_RADIUS) / _STEP))
        ai[inward], aip[inward] = _taylor_march(zs, sa * scale, sp * scale, z[inward], nsteps)
    out = ~inward
    if np.any(out):
        zs = SERIES_RADIUS * unit[out]
        sa, sp = _series(zs)
        nsteps = int(math.ceil((ASYMPTOTIC_RADIUS - SERIES_RADIUS) / _STEP))
        ai[out], aip[out] = _taylor_march(zs, sa, sp, z[out], nsteps)
    return ai, aip


def airy_method(z):
    r = np.abs(np.asarray(z))
    return np.where(r <= SERIES_RADIUS, "series",
                    np.where(r >= ASYMPTOTIC_RADIUS, "asymptotic", "continuation"))


def airy(z, scaled: bool = False):
    """(Ai(z), Ai'(z)) for complex z, |z| <= 1e4.

    With scaled=True returns (Ai, Ai') * exp(2/3 z^(3/2)) (principal branch).
    Raises OverflowError when an unscaled value would overflow.
    """
    zarr = np.asarray(z, dtype=complex)
    flat = np.atleast_1d(zarr).ravel()
    if np.any(~np.isfinite(flat)) or np.any(np.abs(flat) > MAX_ABS_ARG):
        raise DomainError("airy: |z| must be finite and at most 1e4")
    ai = np.empty_like(flat)
    aip = np.empty_like(flat)
    r = np.abs(flat)
    small = r <= SERIES_RADIUS
    big = r >= ASYMPTOTIC_RADIUS
    mid = ~small & ~big
    zeta = _zeta(flat)
    if np.any(small):
        a, b = _series(flat[small])
        if scaled:
            e = np.exp(zeta[small])
            a, b = a * e, b * e
        ai[small], aip[small] = a, b
    if np.any(mid):
        a, b = _continuation(flat[mid])
        if scaled:
            e = np.exp(zeta[mid])
            a, b = a * e, b * e
        ai[mid], aip[mid] = a, b
    if np.any(big):
        a, b = _asym_scaled(flat[big])
        if not scaled:
            expo = -zeta[big]
            if np.any(expo.real > 700.0):
                raise OverflowError("airy: value overflows in the growing sector; use scaled=True")
            e = np.exp(expo)
            a, b = a * e, b * e
        ai[big], aip[big] = a, b
    if not (np.all(np.isfinite(ai)) and np.all(np.isfinite(aip))):
        raise OverflowError("airy: non-finite value")
    if zarr.ndim == 0:
        return complex(ai[0]), complex(aip[0])
    return ai.reshape(zarr.shape), aip.reshape(zarr.shape)


# A0(z) = integral of Ai along the horizontal ray from e^{i pi/6} z to +infinity

ROT = np.exp(1j * np.pi / 6.0)
_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)
_PANEL = 0.5


def _a0_single(u: complex) -> complex:
    x_end = max(14.0, 2.0 * abs(u.imag), u.real + 1.0)
    length = x_end - u.real
    npan = max(1, int(math.ceil(length / _PANEL)))
    edges = u.real + np.linspace(0.0, length, npan + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    t = (mids[:, None] + half[:, None] * _GL_X[None, :]).ravel() + 1j * u.imag
    wts = (half[:, None] * _GL_W[None, :]).ravel()
    vals, _ = airy(t)
    end = x_end + 1j * u.imag
    ai_end, _ = airy(end)
    # tail beyond x_end: integral of Ai ~ Ai(t)/sqrt(t) (1 - 1/(2 zeta)), two leading terms
    zeta_end = _zeta(np.complex128(end))
    tail = ai_end / np.sqrt(end) * (1.0 - 0.5 / zeta_end)
    return complex(np.sum(wts * vals) + tail)


def a0(z):
    """A0(z) = integral of Ai(t) dt from e^{i pi/6} z to +infinity.

    The integration path is horizontal from u = e^{i pi/6} z, so it reaches the
    decaying sector; entire in z, domain error only when Ai overflows on the path.
    """
    zarr = np.asarray(z, dtype=complex)
    flat = np.atleast_1d(zarr).ravel()
    out = np.empty_like(flat)
    for k, zz in enumerate(flat):
        u = complex(ROT * zz)
        try:
            out[k] = _a0_single(u)
        except OverflowError as exc:
            raise DomainError(f"a0: argument {zz} too deep in the growth sector") from exc
    if zarr.ndim == 0:
        return complex(out[0])
    return out.reshape(zarr.shape)


def a0_derivatives(z):
    """(A0', A0'') = (-e^{i pi/6} Ai(u), -e^{i pi/3} Ai'(u)) with u = e^{i pi/6} z."""
    u = ROT * np.asarray(z, dtype=complex)
    ai, aip = airy(u)
    return -ROT * ai, -ROT**2 * aip


@dataclass(frozen=True)
class AirySample:
    z: complex
    ai: complex
    ai_prime: complex
    a0: complex
    method: str


def airy_sample(z: complex) -> AirySample:
    ai, aip = airy(z)
    return AirySample(complex(z), ai, aip, a0(z), str(airy_method(z)))


def check_airy_ratio_bounds(samples, sector_height: float = 0.1):
    """Fitted constants for the three ratio bounds on A0 over the samples.

    Reports (lhs / rhs_shape):
      airy-ratio-abs     |A0'/A0| / (1 + |z|^(1/2))
      airy-ratio-re      (1 + |z|^(1/2)) / (-Re(A0'/A0))   (its sup is 1/c)
      airy-ratio-second  |A0''/A0| / (1 + |z|)
    The params of each airy-ratio-re report record whether Re(A0'/A0) <= -1/3.
    """
    z = np.asarray(list(samples), dtype=complex)
    bad = np.nonzero(z.imag > sector_height)[0]
    if bad.size:
        raise DomainError(f"samples violate Im z <= {sector_height} at indices {bad.tolist()}")
    reports = []
    if z.size == 0:
        return reports
    A = a0(z)
    d1, d2 = a0_derivatives(z)
    if np.any(np.abs(A) < 1e-290):
        raise DomainError("a0 underflow in sample set")
    r1 = d1 / A
    r2 = d2 / A
    for k in range(z.size):
        zz = complex(z[k])
        p = {"z": zz}
        sq = 1.0 + math.sqrt(abs(zz))
        reports.append(EstimateReport("airy-ratio-abs", abs(r1[k]), sq, p))
        re = -r1[k].real
        reports.append(EstimateReport("airy-ratio-re", sq, max(re, 0.0),
                                      {"z": zz, "re_ratio": float(r1[k].real),
                                       "below_minus_third": bool(r1[k].real <= -1.0 / 3.0)}))
        reports.append(EstimateReport("airy-ratio-second", abs(r2[k]), 1.0 + abs(zz), p))
    return reports


def sector_samples(count: int, radius: float = 10.0, sector_height: float = 0.1, seed: int = 0):
    """Deterministic sample set in the box [-R, R] x [-R, sector_height].

    A quarter of the points sit evenly on the top edge Im z = sector_height, where
    the real-part ratio peaks; the rest are scrambled Halton points.
    """
    from scipy.stats import qmc
    n_edge = count // 4
    pts = qmc.Halton(d=2, scramble=True, seed=seed).random(count - n_edge)
    x = -radius + 2.0 * radius * pts[:, 0]
    y = -radius + (radius + sector_height) * pts[:, 1]
    edge = np.linspace(-radius, radius, n_edge) + 1j * sector_height
    return np.concatenate([x + 1j * y, edge])
