"""Space-time correlation kernels.

Conventions: ``K(s, x; t, y)`` with ``p1 = (s, x)`` and ``p2 = (t, y)``.
Every y'-integral against ``p(t, -iy | y')`` is evaluated after moving the
integration line, which turns it into ``E[F(y + i sqrt(t) W)]`` for a
standard normal ``W`` and an entire ``F``; Gauss-Hermite quadrature then
applies directly.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np

from .config import (Cluster, ClusterDecomposition, Configuration, LatticeTail,
                     cluster_index_range, decompose_clusters, tail_inverse_power_sum)
from .errors import (ContourPlacementError, InvalidParameter, NumericFailure,
                     PreconditionViolation, TruncationError, UnsupportedConfiguration)
from .quadrature import _hermegauss, integrate
from .specfun import (heat_kernel, hook_schur_from_h, scaled_hermite_coefficients,
                      theta3)
from scipy.special import zeta as hurwitz_zeta

FAMILIES = ("finite_contour", "finite_residue", "infinite_limit", "lattice_theta",
            "lattice_lsum", "lattice_direct", "sine", "extended_sine", "cluster")


@dataclass(frozen=True)
class SpaceTimePoint:
    t: float
    x: float

    def __post_init__(self):
        if not (math.isfinite(self.t) and math.isfinite(self.x)):
            raise InvalidParameter("space-time point must be finite")
        if self.t < 0:
            raise InvalidParameter("time must be nonnegative")


@dataclass(frozen=True)
class KernelValue:
    value: float
    imag_residual: float = 0.0
    est_error: float = 0.0

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class KernelSpec:
    family: str
    config: Optional[Configuration] = None
    quad_tol: float = 1e-12
    series_tol: float = 1e-15
    product_tol: float = 1e-15
    L_window: Optional[float] = None
    q_max: int = 200
    ell_max: Optional[int] = None
    k_cluster_range: Optional[tuple] = None
    cluster_kappa: float = 0.9
    cluster_m: Optional[int] = None
    cluster_choice: str = "first"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidParameter(f"unknown kernel family {self.family!r}")
        for name in ("quad_tol", "series_tol", "product_tol"):
            if not getattr(self, name) > 0:
                raise InvalidParameter(f"{name} must be positive")
        if self.q_max < 1 or (self.L_window is not None and self.L_window <= 0):
            raise InvalidParameter("truncation parameters must be positive")


def _positive_times(s, t):
    if not (s > 0 and t > 0):
        raise InvalidParameter("kernels are evaluated at s, t > 0 only")


# -- sine kernels ---------------------------------------------------------------

def sine_kernel(r):
    """``sin(pi r) / (pi r)``; real or complex argument, series near 0."""
    r = np.asarray(r)
    w = np.pi * r
    small = np.abs(w) < 1e-4
    safe = np.where(small, 1.0, w)
    out = np.where(small, 1.0 - w * w / 6.0 + w ** 4 / 120.0, np.sin(safe) / safe)
    return out.item() if out.ndim == 0 else out


def _ext_sine_scalar(dt: float, dr: float, tol: float):
    if dt == 0:
        return float(sine_kernel(dr)), 0.0
    b = math.pi * dr
    if dt > 0:
        a = math.pi ** 2 * dt / 2
        panels = max(1, int(math.ceil(abs(b) / 8 + a / 8)))
        v, e = integrate(lambda u: np.exp(a * u * u) * np.cos(b * u), 0.0, 1.0,
                         tol=tol, min_panels=panels)
        return float(v), e
    a = math.pi ** 2 * (-dt) / 2
    upper = math.sqrt(46.0 / a)
    if upper <= 1.0:
        return 0.0, 0.0
    panels = max(2, int(math.ceil((upper - 1.0) * (abs(b) / 4 + 1.0))))
    v, e = integrate(lambda u: np.exp(-a * u * u) * np.cos(b * u), 1.0, upper,
                     tol=tol, min_panels=panels, max_panels=max(4096, 8 * panels))
    return -float(v), e


def extended_sine(dt, dr, tol: float = 1e-13):
    """Extended sine kernel ``K_sin(t - s, y - x)`` with ``dt = t - s``,
    ``dr = y - x``, by the three-branch real-variable integrals."""
    if np.ndim(dt) == 0 and np.ndim(dr) == 0:
        return _ext_sine_scalar(float(dt), float(dr), tol)[0]
    dt_b, dr_b = np.broadcast_arrays(np.asarray(dt, float), np.asarray(dr, float))
    out = np.empty(dt_b.shape)
    for idx in np.ndindex(dt_b.shape):
        out[idx] = _ext_sine_scalar(dt_b[idx], dr_b[idx], tol)[0]
    return out


def extended_sine_fourier(dt: float, dr: float, tol: float = 1e-13) -> float:
    """Same kernel from the band-limited Fourier integral minus the
    backward-time heat kernel; an independent route for consistency."""
    v, _ = integrate(lambda k: np.exp(k * k * dt / 2) * np.cos(k * dr), 0.0, math.pi,
                     tol=tol, min_panels=max(1, int(abs(dr)) + 1))
    v /= math.pi
    if dt < 0:
        v -= heat_kernel(-dt, dr, 0.0)
    return float(v)


# -- the entire function Phi ------------------------------------------------------

def _tail_start_for(t: LatticeTail, reach0: float) -> int:
    return max(t.start, int(math.ceil((4.0 * max(reach0, 1.0)) ** (1.0 / t.kappa))))


@lru_cache(maxsize=1024)
def _split(xi: Configuration, n_min: int):
    """Explicit points in tail-normalised coordinates with the tail moved
    out to index ``n_min``; returns ``(pos0, mult, tail, scale, offset)``."""
    t = xi.tail
    if t is None:
        return (np.asarray(xi.positions, float), np.asarray(xi.multiplicities, float),
                None, 1.0, 0.0)
    if not t.symmetric:
        raise UnsupportedConfiguration("one-sided tails are not supported here")
    if n_min > t.start:
        xi = xi.with_explicit_radius(t.scale * (n_min - 0.5) ** t.kappa)
    pos = (np.asarray(xi.positions, float) - t.offset) / t.scale
    return pos, np.asarray(xi.multiplicities, float), xi.tail, t.scale, t.offset


def _tail_log_pairs(t: LatticeTail, a0: complex, z0: np.ndarray, tol: float = 1e-18):
    """``sum_{l >= n} [log(1 - z^2/g(l)^2) - log(1 - a^2/g(l)^2)]`` (paired
    tail factors) via Hurwitz zeta values."""
    acc = np.zeros(z0.shape, dtype=complex)
    z2 = z0 * z0
    a2 = a0 * a0
    zp = np.ones_like(z2)
    ap = 1.0 + 0.0j
    for p in range(1, 200):
        zp = zp * z2
        ap = ap * a2
        term = -(zp - ap) / p * hurwitz_zeta(2 * p * t.kappa, t.start)
        acc = acc + term
        if np.max(np.abs(term)) < tol * (1.0 + float(np.max(np.abs(acc)))):
            break
    return acc * t.multiplicity


def phi_entire(xi: Configuration, a: float, z, tol: float = 1e-15):
    """``Phi(xi, a, z) = prod_{x in xi, x != a} (1 - (z - a)/(x - a))``.

    Infinite configurations must carry a symmetric lattice tail; the tail is
    paired ``+-l`` (the symmetric principal value) and summed exactly.
    """
    z = np.asarray(z, dtype=complex)
    t = xi.tail
    S, O = (t.scale, t.offset) if t is not None else (1.0, 0.0)
    a0 = (a - O) / S
    z0 = (z - O) / S
    if t is None:
        pos0, mult, tail = _split(xi, 0)[:3]
    else:
        reach = max(abs(a0), float(np.max(np.abs(z0))) if z0.size else 0.0)
        pos0, mult, tail = _split(xi, _tail_start_for(t, reach))[:3]
    keep = pos0 != a0
    d = pos0[keep] - a0
    m = mult[keep]
    fac = 1.0 - (z0[..., None] - a0) / d
    hit = np.any(fac == 0, axis=-1)
    fac[fac == 0] = 1.0
    logs = np.log(fac) @ m if d.size else np.zeros(z0.shape, complex)
    if tail is not None:
        logs = logs + _tail_log_pairs(tail, complex(a0), z0, tol)
    out = np.where(hit, 0.0, np.exp(logs))
    return out.item() if out.ndim == 0 else out


def inverse_power_sums(xi: Configuration, c: float, mmax: int) -> np.ndarray:
    """``p_m = sum_{u in xi} (u - c)^{-m}`` for ``m = 1..mmax``; tails are
    summed exactly and ``m = 1`` as a symmetric principal value."""
    t = xi.tail
    S, O = (t.scale, t.offset) if t is not None else (1.0, 0.0)
    c0 = (c - O) / S
    if t is None:
        pos0, mult, tail = _split(xi, 0)[:3]
    else:
        pos0, mult, tail = _split(xi, _tail_start_for(t, abs(c0)))[:3]
    d = pos0 - c0
    if np.any(d == 0):
        raise InvalidParameter("c coincides with a point")
    inv = 1.0 / d
    out = np.empty(mmax, dtype=float)
    pw = np.ones_like(inv)
    for m in range(1, mmax + 1):
        pw = pw * inv
        out[m - 1] = float(pw @ mult)
    if tail is not None:
        gn = tail.start ** tail.kappa
        for m in range(1, mmax + 1):
            # tail is negligible once it drops below roundoff of the explicit part
            bound = 2.0 * tail.multiplicity * tail.start * (gn - abs(c0)) ** (-m) * 4
            if m > 2 and bound < 1e-18 * abs(out[m - 1]):
                break
            out[m - 1] += tail.multiplicity * tail_inverse_power_sum(tail.kappa, tail.start, c0, m).real
    return out * S ** (-np.arange(1, mmax + 1, dtype=float))


# -- Phi-form kernels (finite residue form and infinite limit) ----------------------

def _gh_expectation(fun, sigma: float, n0: int, tol: float):
    """``E[fun(sigma W)]`` comparing ``n0`` and ``2 n0`` Gauss-Hermite nodes;
    doubles further until the two agree."""
    n = n0
    x, w = _hermegauss(n)
    prev = fun(sigma * x) @ w
    while True:
        n *= 2
        x, w = _hermegauss(n)
        cur = fun(sigma * x) @ w
        err = float(np.max(np.abs(cur - prev)))
        if err <= tol * max(1.0, float(np.max(np.abs(cur)))):
            return cur, err
        if n >= 1024:
            raise NumericFailure("Gauss-Hermite expectation did not converge", achieved=err)
        prev = cur


def _is_simple(xi: Configuration) -> bool:
    return xi.is_simple


def _phi_form(xi: Configuration, s, x, t, y, quad_tol, series_tol) -> KernelValue:
    """``sum_{x'} p(s,x|x') E[Phi(xi, x', y + i sqrt(t) W)] - 1(s>t) p(s-t,x|y)``."""
    _positive_times(s, t)
    sig = math.sqrt(t)
    if xi.is_finite:
        n0 = max(8, xi.total // 2 + 2)
    else:
        n0 = 32
    R = math.sqrt(2.0 * s * math.log(1.0 / series_tol)) + 1.0
    total = 0.0 + 0.0j
    err = 0.0
    done_lo, done_hi = x, x  # open interval already summed is (done_lo, done_hi)
    first = True
    while True:
        lo, hi = x - R, x + R
        pos, mult = xi.points_in(lo, hi)
        if first:
            sel = np.ones(pos.size, bool)
        else:
            sel = (pos < done_lo) | (pos > done_hi)
        shell = 0.0
        for a, m in zip(pos[sel], mult[sel]):
            if m != 1:
                raise UnsupportedConfiguration("residue form needs a simple configuration")
            w = heat_kernel(s, x, a)
            if w == 0.0:
                continue
            e, de = _gh_expectation(lambda u: phi_entire(xi, a, y + 1j * u), sig, n0, quad_tol)
            total += w * e
            err += w * de
            shell = max(shell, abs(w * e))
        if xi.is_finite and not first:
            break
        if not first and shell <= series_tol * max(1.0, abs(total)):
            break
        if xi.is_finite:
            # all points within reach of the Gaussian weight are summed
            reach = xi.points_in(-np.inf, np.inf)[0]
            if reach.size == 0 or (reach.min() >= lo and reach.max() <= hi):
                break
        done_lo, done_hi = lo, hi
        first = False
        R *= 1.5
        if R > 1e4:
            raise TruncationError("x'-sum did not converge", achieved=shell)
    if s > t:
        total -= heat_kernel(s - t, x, y)
    return KernelValue(float(total.real), float(abs(total.imag)), float(err))


def kernel_finite_residue(kspec: KernelSpec, p1: SpaceTimePoint, p2: SpaceTimePoint) -> KernelValue:
    """Residue-sum form of the finite-configuration kernel (simple points)."""
    xi = kspec.config
    if xi is None or not xi.is_finite:
        raise InvalidParameter("finite kernel needs a finite configuration")
    if not xi.is_simple:
        raise UnsupportedConfiguration("residue form needs a simple configuration; use the contour form")
    return _phi_form(xi, p1.t, p1.x, p2.t, p2.x, kspec.quad_tol, kspec.series_tol)


def kernel_infinite(kspec: KernelSpec, p1: SpaceTimePoint, p2: SpaceTimePoint) -> KernelValue:
    """Limit kernel for an infinite simple configuration with an exact
    lattice tail (or a window of it when ``kspec.L_window`` is set)."""
    xi = kspec.config
    if xi is None:
        raise InvalidParameter("configuration required")
    if kspec.L_window is not None:
        xi = xi.restrict(kspec.L_window)
    elif xi.tail is not None and not (xi.tail.symmetric):
        raise PreconditionViolation("tail cannot be controlled: one-sided tail")
    if not xi.is_simple:
        raise UnsupportedConfiguration("limit kernel needs a simple configuration")
    return _phi_form(xi, p1.t, p1.x, p2.t, p2.x, kspec.quad_tol, kspec.series_tol)


# -- contour form ------------------------------------------------------------------

def kernel_finite_contour(kspec: KernelSpec, p1: SpaceTimePoint, p2: SpaceTimePoint) -> KernelValue:
    """Double-integral form: a closed z-contour around the configuration and
    the y'-integral, with the regular integrand
    ``(prod_x (x - w)/(x - z) - 1) / (w - z)`` written as a telescoping sum.
    Any multiplicities are allowed.
    """
    xi = kspec.config
    if xi is None or not xi.is_finite or xi.total == 0:
        raise InvalidParameter("contour form needs a nonempty finite configuration")
    s, x, t, y = p1.t, p1.x, p2.t, p2.x
    _positive_times(s, t)
    pts = xi.expanded()
    N = pts.size
    mid = 0.5 * (pts[0] + pts[-1])
    A = 0.5 * (pts[-1] - pts[0]) + 1.0
    B = min(1.0, 2.0 * math.sqrt(s))
    gx, gw = _hermegauss(N // 2 + 2)
    wnodes = y + 1j * math.sqrt(t) * gx
    prev = None
    M = 128
    while True:
        th = 2 * np.pi * np.arange(M) / M
        z = mid + A * np.cos(th) + 1j * B * np.sin(th)
        dz = -A * np.sin(th) + 1j * B * np.cos(th)
        gap = np.min(np.abs(z[:, None] - pts[None, :]))
        if gap < 1e-6:
            raise ContourPlacementError("contour passes too close to a pole", distance=gap)
        xz = pts[None, None, :] - z[:, None, None]           # (M, 1, N)
        r = (pts[None, None, :] - wnodes[None, :, None]) / xz  # (M, G, N)
        cp = np.cumprod(r, axis=-1)
        before = np.concatenate([np.ones(cp.shape[:-1] + (1,)), cp[..., :-1]], axis=-1)
        F = -np.sum(before / xz, axis=-1)                   # (M, G)
        EF = F @ gw
        g = np.exp(-(x - z) ** 2 / (2 * s)) / math.sqrt(2 * math.pi * s)
        val = np.sum(g * EF * dz) / (1j * M)
        if prev is not None:
            err = abs(val - prev)
            if err <= kspec.quad_tol * max(1.0, abs(val)):
                break
        if M >= 1 << 15:
            raise NumericFailure("contour trapezoid did not converge", nodes=M)
        prev = val
        M *= 2
    if s > t:
        val -= heat_kernel(s - t, x, y)
    return KernelValue(float(val.real), float(abs(val.imag)), float(err))


# -- lattice kernel ----------------------------------------------------------------

def lattice_theta_correction(s: float, x: float, t: float, y: float, tol: float = 1e-13):
    """``(1/2pi) int_{|k|<=pi} e^{k^2(t-s)/2 + ik(y-x)} (theta_3(x - iks, 2 pi i s) - 1) dk``.

    Returns ``(complex value, error estimate)``."""
    if not s > 0:
        raise InvalidParameter("lattice kernel needs s > 0")
    tau = 2j * math.pi * s

    def f(k):
        th = np.array([theta3(x - 1j * kk * s, tau, tol=1e-17) for kk in k]) - 1.0
        return np.exp(k * k * (t - s) / 2 + 1j * k * (y - x)) * th

    v, e = integrate(f, -math.pi, math.pi, tol=tol, min_panels=4 + int(4 * s))
    return v / (2 * math.pi), e / (2 * math.pi)


def kernel_lattice_theta(p1: SpaceTimePoint, p2: SpaceTimePoint, tol: float = 1e-13) -> KernelValue:
    """Closed form for the lattice start: extended sine kernel plus a
    band-limited theta-function correction."""
    s, x, t, y = p1.t, p1.x, p2.t, p2.x
    if not s > 0:
        raise InvalidParameter("lattice kernel needs s > 0 (no extrapolation to s = 0)")
    ks, e1 = _ext_sine_scalar(t - s, y - x, tol)
    corr, e2 = lattice_theta_correction(s, x, t, y, tol)
    return KernelValue(ks + corr.real, abs(corr.imag), e1 + e2)


def _ell_range(s: float, tol: float, ell_max: Optional[int]) -> np.ndarray:
    L = 2 + int(math.ceil(math.sqrt(math.log(1.0 / tol) / (2 * math.pi ** 2 * s))))
    if ell_max is not None:
        L = min(L, ell_max)
    ells = np.arange(-L, L + 1)
    return ells[ells != 0]


def kernel_lattice_lsum(p1: SpaceTimePoint, p2: SpaceTimePoint, tol: float = 1e-13,
                        ell_max: Optional[int] = None) -> KernelValue:
    """The same kernel as a sum over ``l != 0`` of damped cosine integrals."""
    s, x, t, y = p1.t, p1.x, p2.t, p2.x
    if not s > 0:
        raise InvalidParameter("lattice kernel needs s > 0")
    ells = _ell_range(s, tol, ell_max)
    D = (y - x) - 2j * math.pi * s * ells
    pref = np.exp(2j * math.pi * x * ells - 2 * math.pi ** 2 * s * ells ** 2)

    def f(u):
        return (np.exp(math.pi ** 2 * u * u * (t - s) / 2)[:, None]
                * np.cos(math.pi * u[:, None] * D[None, :]) * pref[None, :])

    v, e = integrate(lambda u: f(u).sum(axis=1), 0.0, 1.0, tol=tol, min_panels=2)
    ks, e1 = _ext_sine_scalar(t - s, y - x, tol)
    return KernelValue(ks + v.real, abs(v.imag), e + e1)


def kernel_lattice_direct(p1: SpaceTimePoint, p2: SpaceTimePoint, tol: float = 1e-13) -> KernelValue:
    """Direct lattice sum ``sum_l p(s,x|l) I(t,y,l) - 1(s>t) p(s-t,x|y)`` with
    ``I(t,y,l) = int_0^1 e^{pi^2 u^2 t/2} cos(pi u (y - l)) du``."""
    s, x, t, y = p1.t, p1.x, p2.t, p2.x
    _positive_times(s, t)
    R = math.sqrt(2 * s * math.log(1e3 / tol)) + 2
    ells = np.arange(math.floor(x - R), math.ceil(x + R) + 1)
    w = heat_kernel(s, x, ells.astype(float))

    def f(u):
        return np.exp(math.pi ** 2 * u * u * t / 2)[:, None] * np.cos(math.pi * u[:, None] * (y - ells)[None, :])

    I, e = integrate(lambda u: f(u) @ w, 0.0, 1.0, tol=tol,
                     min_panels=1 + int(abs(R) / 4))
    val = float(I)
    if s > t:
        val -= heat_kernel(s - t, x, y)
    return KernelValue(val, 0.0, float(e))


def lattice_equal_time_remark(t: float, x: float, y: float, tol: float = 1e-15) -> complex:
    """Equal-time lattice kernel as ``sum_l e^{2 pi i x l - 2 pi^2 t l^2}
    sinc((y - x) - 2 pi i t l)`` (complex sinc)."""
    if not t > 0:
        raise InvalidParameter("t must be positive")
    L = 3 + int(math.ceil(math.sqrt(math.log(1.0 / tol) / (2 * math.pi ** 2 * t))))
    ells = np.arange(-L, L + 1)
    w = (y - x) - 2j * math.pi * t * ells
    terms = np.exp(2j * math.pi * x * ells - 2 * math.pi ** 2 * t * ells ** 2) * sine_kernel(w)
    return complex(np.sum(terms))


def relaxation_gap(u: float, s: float, t: float, xs: Sequence[float], ys: Sequence[float],
                   tol: float = 1e-13) -> float:
    """``sup_{x, y} |K^Z(u+s, x; u+t, y) - K_sin(t-s, y-x)|`` over the grid."""
    if not u > 0:
        raise InvalidParameter("u must be positive")
    best = 0.0
    for x in xs:
        for y in ys:
            v, _ = lattice_theta_correction(u + s, x, u + t, y, tol)
            best = max(best, abs(v))
    return best


def relaxation_bound(u: float, s: float, t: float) -> float:
    """Explicit majorant of the relaxation gap (sup over all x, y)."""
    U = u + s
    pre = max(math.exp(math.pi ** 2 * (t - s) / 2), 1.0)
    q = math.exp(-4 * math.pi ** 2 * U)
    return pre * ((1 - q) / (2 * math.pi ** 2 * U)
                  + 2 * q / (1 - math.exp(-2 * math.pi ** 2 * U)))


# -- cluster expansion ---------------------------------------------------------------

@dataclass
class _ClusterData:
    cluster: Cluster
    rest: Configuration
    h: np.ndarray          # h_r((1/(u - c))_{u in rest}), r = 0..q_max
    schur: np.ndarray      # schur[l, q] = (-1)^{n-1-l} s_{(q-n | n-1-l)}(v - c)


@lru_cache(maxsize=4096)
def _cluster_data(xi: Configuration, cl: Cluster, q_max: int) -> _ClusterData:
    rest = xi.subtract(cl.positions, cl.multiplicities)
    c = cl.center
    p = inverse_power_sums(rest, c, q_max)
    h = np.empty(q_max + 1)
    h[0] = 1.0
    for r in range(1, q_max + 1):
        h[r] = np.dot(p[:r], h[r - 1::-1]) / r
    n = cl.size
    v = cl.members() - c
    pv = np.array([np.sum(v ** m) for m in range(1, q_max + 2)])
    hv = np.empty(q_max + 2)
    hv[0] = 1.0
    for r in range(1, q_max + 2):
        hv[r] = np.dot(pv[:r], hv[r - 1::-1]) / r
    schur = np.zeros((n, q_max + 1))
    for ell in range(n):
        b = n - 1 - ell
        sign = (-1) ** b
        for q in range(n, q_max + 1):
            schur[ell, q] = sign * hook_schur_from_h(q - n, b, hv)
    return _ClusterData(cl, rest, h, schur)


def theta_coefficients(t: float, cd: _ClusterData, x: float) -> np.ndarray:
    """``Theta_{k,q}(t, xi, x)`` for ``q = 0..q_max``."""
    if not t > 0:
        raise InvalidParameter("t must be positive")
    c = cd.cluster.center
    q_max = cd.h.size - 1
    hh = scaled_hermite_coefficients(q_max, (c - x) / math.sqrt(2 * t), -1.0 / math.sqrt(2 * t)).real
    return np.convolve(hh, cd.h)[: q_max + 1]


def theta_coeff(t: float, xi: Configuration, x: float, k: int, q: int,
                dec: ClusterDecomposition, q_max: int = 200) -> float:
    cd = _cluster_data(xi, dec.clusters[k], max(q_max, q))
    return float(theta_coefficients(t, cd, x)[q])


def _psi_coefficients(t: float, cd: _ClusterData, x: float, series_tol: float) -> np.ndarray:
    """Polynomial coefficients ``B_l`` with ``Psi_k = Phi(rest, c, z) sum_l (z-c)^l B_l``."""
    n = cd.cluster.size
    Th = theta_coefficients(t, cd, x)
    terms = cd.schur * Th[None, :]
    B = Th[:n] + terms.sum(axis=1)
    mag = np.max(np.abs(terms), axis=0)
    scale = max(float(np.max(np.abs(B))), float(np.max(np.abs(Th[:n]))), 1e-300)
    tail = float(np.max(mag[-3:]))
    if tail > series_tol * scale and tail > 1e-300:
        raise TruncationError("Psi q-series not converged at q_max", achieved=tail / scale,
                              q_max=cd.h.size - 1)
    return B


def psi_cluster(t: float, xi: Configuration, z, x: float, k: int, dec: ClusterDecomposition,
                q_max: int = 200, series_tol: float = 1e-15):
    """``Psi_k(t, xi, z, x)``; zero for an empty cluster."""
    cl = dec.clusters[k]
    z = np.asarray(z, dtype=complex)
    if cl.size == 0:
        out = np.zeros(z.shape, complex)
        return out.item() if out.ndim == 0 else out
    cd = _cluster_data(xi, cl, q_max)
    B = _psi_coefficients(t, cd, x, series_tol)
    w = z - cl.center
    poly = np.polyval(B[::-1], w)
    out = phi_entire(cd.rest, cl.center, z) * poly
    return out.item() if np.ndim(out) == 0 else out


def cluster_identity(t: float, xi: Configuration, z, x: float, k: int, dec: ClusterDecomposition,
                     q_max: int = 200):
    """Both sides of ``sum_{x' in C_k} e^{-(x'-x)^2/2t} Phi(xi, x', z) =
    e^{-(c_k-x)^2/2t} Psi_k(t, xi, z, x)`` (simple clusters)."""
    cl = dec.clusters[k]
    z = np.asarray(z, dtype=complex)
    lhs = np.zeros(z.shape, complex)
    for a, m in zip(cl.positions, cl.multiplicities):
        if m != 1:
            raise UnsupportedConfiguration("left side needs simple points")
        lhs = lhs + math.exp(-(a - x) ** 2 / (2 * t)) * phi_entire(xi, a, z)
    rhs = math.exp(-(cl.center - x) ** 2 / (2 * t)) * psi_cluster(t, xi, z, x, k, dec, q_max)
    return lhs, rhs


def _decomposition(kspec: KernelSpec, lo: float, hi: float) -> ClusterDecomposition:
    xi = kspec.config
    if kspec.k_cluster_range is not None:
        ks = range(kspec.k_cluster_range[0], kspec.k_cluster_range[1] + 1)
    else:
        if xi.is_finite:
            pos = np.asarray(xi.positions)
            lo, hi = max(lo, pos.min() - 1), min(hi, pos.max() + 1)
            if lo > hi:
                lo = hi = 0.5 * (lo + hi)
        ks = cluster_index_range(kspec.cluster_kappa, lo, hi)
    return _cached_decomposition(xi, kspec.cluster_kappa, ks.start, ks.stop, kspec.cluster_m,
                                 kspec.cluster_choice)


@lru_cache(maxsize=256)
def _cached_decomposition(xi, kappa, k0, k1, m, choice):
    return decompose_clusters(xi, kappa, range(k0, k1), m=m, choice=choice)


def kernel_cluster(kspec: KernelSpec, p1: SpaceTimePoint, p2: SpaceTimePoint) -> KernelValue:
    """Cluster-expansion kernel ``sum_k p(s,x|c_k) E[Psi_k(s, xi, y + i sqrt(t) W, x)]``
    minus the backward-time heat kernel. Multiple points are allowed."""
    xi = kspec.config
    if xi is None:
        raise InvalidParameter("configuration required")
    s, x, t, y = p1.t, p1.x, p2.t, p2.x
    _positive_times(s, t)
    R = math.sqrt(2.0 * s * math.log(1.0 / kspec.series_tol)) + 2.0
    dec = _decomposition(kspec, x - R, x + R)
    sig = math.sqrt(t)
    n0 = 32 if not xi.is_finite else max(8, xi.total // 2 + 2)
    total = 0.0 + 0.0j
    err = 0.0
    for cl in dec:
        if cl.size == 0:
            continue
        if kspec.k_cluster_range is None and abs(cl.center - x) > R + cl.half_gap:
            continue
        w = heat_kernel(s, x, cl.center)
        cd = _cluster_data(xi, cl, kspec.q_max)
        B = _psi_coefficients(s, cd, x, kspec.series_tol)

        def fun(u, cd=cd, B=B, c=cl.center):
            z = y + 1j * u
            return phi_entire(cd.rest, c, z) * np.polyval(B[::-1], z - c)

        e, de = _gh_expectation(fun, sig, n0, kspec.quad_tol)
        total += w * e
        err += w * de
    if s > t:
        total -= heat_kernel(s - t, x, y)
    return KernelValue(float(total.real), float(abs(total.imag)), float(err))


# -- dispatch, grids, CSV ------------------------------------------------------------

def evaluate(kspec: KernelSpec, p1: SpaceTimePoint, p2: SpaceTimePoint) -> KernelValue:
    fam = kspec.family
    if fam == "finite_contour":
        return kernel_finite_contour(kspec, p1, p2)
    if fam == "finite_residue":
        return kernel_finite_residue(kspec, p1, p2)
    if fam == "infinite_limit":
        return kernel_infinite(kspec, p1, p2)
    if fam == "lattice_theta":
        return kernel_lattice_theta(p1, p2, kspec.quad_tol)
    if fam == "lattice_lsum":
        return kernel_lattice_lsum(p1, p2, kspec.quad_tol, kspec.ell_max)
    if fam == "lattice_direct":
        return kernel_lattice_direct(p1, p2, kspec.quad_tol)
    if fam == "sine":
        if p1.t != p2.t:
            raise InvalidParameter("sine kernel is equal-time")
        return KernelValue(float(sine_kernel(p2.x - p1.x)))
    if fam == "extended_sine":
        v, e = _ext_sine_scalar(p2.t - p1.t, p2.x - p1.x, kspec.quad_tol)
        return KernelValue(v, 0.0, e)
    if fam == "cluster":
        return kernel_cluster(kspec, p1, p2)
    raise InvalidParameter(fam)


def evaluate_grid(kspec: KernelSpec, s_values: Iterable[float], t_values: Iterable[float],
                  x_values: Iterable[float], y_values: Iterable[float]) -> list:
    """Rows ``(s, t, x, y, value, imag_residual, est_error)`` in
    lexicographic order of ``(s, t, x, y)``."""
    rows = []
    for s in sorted(s_values):
        for t in sorted(t_values):
            for x in sorted(x_values):
                for y in sorted(y_values):
                    kv = evaluate(kspec, SpaceTimePoint(s, x), SpaceTimePoint(t, y))
                    rows.append((s, t, x, y, kv.value, kv.imag_residual, kv.est_error))
    return rows


CSV_COLUMNS = ("s", "t", "x", "y", "value", "imag_residual", "est_error")


def write_kernel_csv(rows: Sequence[tuple], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([repr(float(v)) for v in r])
