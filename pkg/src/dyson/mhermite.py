"""Multiple Hermite polynomials of type II and the type-I functions ``Q``.

With ``W ~ N(0, 1)`` the type-II polynomial is

    P_xi(y) = E[ prod_{x in xi} (y - x + i W) ],

which is the Gaussian integral representation after moving the
integration line by ``-i y``. The integrand is then a polynomial in ``W``,
so Gauss-Hermite quadrature with ``N//2 + 1`` nodes is exact.

``Q_xi(y)`` is the sum of residues of
``exp(-(z - y)^2 / 2) / sqrt(2 pi) / prod (z - x)`` at the points of xi.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .config import Configuration
from .errors import InvalidParameter, NumericFailure
from .quadrature import SQRT2PI, _hermegauss, integrate


def _labels(xi) -> np.ndarray:
    if isinstance(xi, Configuration):
        return xi.expanded()
    return np.sort(np.asarray(xi, dtype=float))


def _group(points: np.ndarray):
    """Distinct values and multiplicities of a sorted label vector."""
    if points.size == 0:
        return points, np.zeros(0, dtype=int)
    vals, counts = np.unique(points, return_counts=True)
    return vals, counts


def type2_poly(xi, y, var: float = 1.0):
    """``E[prod (y - x + i sqrt(var) W)]``; ``var = 1`` is ``P_xi``.

    ``xi`` is a finite Configuration or a sequence of labelled points.
    """
    pts = _labels(xi)
    y = np.asarray(y)
    n = pts.size
    if n == 0:
        out = np.ones(y.shape, dtype=complex)
        return out.item() if out.ndim == 0 else out
    nodes, weights = _hermegauss(n // 2 + 1)
    sig = math.sqrt(var)
    # shape (..., nodes, points)
    diff = y[..., None, None] - pts + 1j * sig * nodes[:, None]
    vals = np.prod(diff, axis=-1) @ weights
    return vals.item() if np.ndim(vals) == 0 else vals


def _residue_taylor(a: float, m: int, others: np.ndarray, other_mult: np.ndarray,
                    y, var: float):
    """Residue at ``a`` (pole of order ``m``) of
    ``p(var, y | z) / ((z - a)^m prod_b (z - b)^{m_b})``.

    Taylor coefficients of the Gaussian come from the scaled Hermite
    recurrence and those of the rational factor from its logarithm.
    """
    y = np.asarray(y, dtype=float)
    d = a - others
    # rational part r(w) = prod (d_b + w)^{-m_b}; log r = -sum m_b log(d_b) - sum m_b sum_k (-1)^{k+1} (w/d_b)^k / k
    r = np.zeros(m, dtype=complex)
    r0 = np.prod(d ** (-other_mult.astype(float))) if d.size else 1.0
    r[0] = r0
    if m > 1:
        # power-series exp via recurrence: r' = r * (log r)'
        lc = np.zeros(m, dtype=float)  # coefficients of (log r)'(w) = -sum m_b/(d_b + w)
        for k in range(m - 1):
            lc[k] = -np.sum(other_mult * (-1.0) ** k / d ** (k + 1)) if d.size else 0.0
        for n in range(1, m):
            r[n] = sum(lc[k] * r[n - 1 - k] for k in range(n)) / n
    c = 1.0 / math.sqrt(2.0 * var)
    X = (y - a) * c
    pref = np.exp(-(y - a) ** 2 / (2.0 * var)) / (SQRT2PI * math.sqrt(var))
    total = np.zeros(y.shape, dtype=complex)
    for j in range(m):
        gj = _scaled_hermite_coef_vec(j, X, c)
        total = total + gj * r[m - 1 - j]
    return pref * total


def _scaled_hermite_coef_vec(j: int, X, c: float):
    """``c^j H_j(X) / j!`` elementwise in X."""
    h0 = np.ones_like(X, dtype=float)
    if j == 0:
        return h0
    h1 = 2.0 * X * c
    for n in range(1, j):
        h0, h1 = h1, (2.0 * X * c * h1 - 2.0 * c * c * h0) / (n + 1)
    return h1


def type1_fn(xi, y, var: float = 1.0, method: str = "residue", tol: float = 1e-13):
    """``(1/2 pi i) oint p(var, y | z) / prod_{x in xi} (z - x) dz``; with
    ``var = 1`` this is ``Q_xi(y)``.

    ``method``: ``"residue"`` (exact Taylor residues, any multiplicity),
    ``"contour"`` (trapezoid on a small circle around each distinct point)
    or ``"ellipse"`` (one contour enclosing the whole support).
    """
    pts = _labels(xi)
    if pts.size == 0:
        raise InvalidParameter("type-I function needs at least one point")
    y = np.asarray(y, dtype=float)
    vals, mult = _group(pts)
    if method == "residue":
        out = np.zeros(y.shape, dtype=complex)
        for i, (a, m) in enumerate(zip(vals, mult)):
            others = np.delete(vals, i)
            om = np.delete(mult, i)
            out = out + _residue_taylor(a, int(m), others, om, y, var)
        out = out.real
    elif method in ("contour", "ellipse"):
        out = _type1_contour(vals, mult, y, var, method, tol)
    else:
        raise InvalidParameter(f"unknown method {method!r}")
    return out.item() if np.ndim(out) == 0 else out


def _type1_contour(vals, mult, y, var, method, tol):
    if method == "contour":
        if vals.size > 1:
            gaps = np.diff(vals)
            rad = np.minimum(np.concatenate([[np.inf], gaps]), np.concatenate([gaps, [np.inf]])) / 2
        else:
            rad = np.array([np.inf])
        rad = np.minimum(rad, 0.5 * math.sqrt(var))
        centers, radii_x, radii_y = vals, rad, rad
    else:
        mid = 0.5 * (vals[0] + vals[-1])
        half = 0.5 * (vals[-1] - vals[0])
        centers = np.array([mid])
        radii_x = np.array([half + 1.0])
        radii_y = np.array([1.0])
    prev = None
    n = 64
    while n <= 1 << 15:
        theta = 2 * np.pi * np.arange(n) / n
        total = np.zeros(y.shape, dtype=complex)
        for c, rx, ry in zip(centers, radii_x, radii_y):
            z = c + rx * np.cos(theta) + 1j * ry * np.sin(theta)
            dz = (-rx * np.sin(theta) + 1j * ry * np.cos(theta))
            denom = np.prod((z[:, None] - vals[None, :]) ** mult[None, :], axis=1)
            g = np.exp(-(z - y[..., None]) ** 2 / (2 * var)) / (SQRT2PI * math.sqrt(var))
            total = total + (g * (dz / denom)).sum(axis=-1) / (1j * n)
        if prev is not None and np.max(np.abs(total - prev)) <= tol * max(1.0, float(np.max(np.abs(total)))):
            return total.real
        prev = total
        n *= 2
    raise NumericFailure("contour trapezoid did not converge", nodes=n)


class MultiHermiteBasis:
    """Nested prefixes ``xi_j`` of a finite configuration and the
    biorthonormal families built from them."""

    def __init__(self, xi):
        self.config = xi if isinstance(xi, Configuration) else Configuration.from_points(xi)
        self.labels = self.config.expanded()
        self.N = int(self.labels.size)
        if self.N == 0:
            raise InvalidParameter("basis needs a nonempty configuration")

    def prefix(self, j: int) -> np.ndarray:
        if not 0 <= j <= self.N:
            raise InvalidParameter("prefix index out of range")
        return self.labels[:j]

    def h_minus(self, j: int, y):
        """``H_j^(-)(y) = P_{xi_j}(y)``."""
        return type2_poly(self.prefix(j), y).real if np.isrealobj(y) else type2_poly(self.prefix(j), y)

    def h_plus(self, j: int, y, method: str = "residue"):
        """``H_j^(+)(y) = Q_{xi_{j+1}}(y)``."""
        return type1_fn(self.prefix(j + 1), y, method=method)

    def phi_minus(self, t: float, x, j: int):
        if not t > 0:
            raise InvalidParameter("phi needs t > 0")
        return type2_poly(self.prefix(j), x, var=t).real

    def phi_plus(self, t: float, x, j: int, method: str = "residue"):
        if not t > 0:
            raise InvalidParameter("phi needs t > 0")
        return type1_fn(self.prefix(j + 1), x, var=t, method=method)

    def domain(self, t: float = 1.0, pad: float = 12.0):
        return self.labels[0] - pad * math.sqrt(t), self.labels[-1] + pad * math.sqrt(t)


def phi_minus(t: float, x, j: int, basis: MultiHermiteBasis):
    """``phi_j^(-)(t, x) = t^{j/2} H_j^(-)(x/sqrt t; xi/sqrt t)``."""
    return basis.phi_minus(t, x, j)


def phi_plus(t: float, x, j: int, basis: MultiHermiteBasis):
    """``phi_j^(+)(t, x) = t^{-(j+1)/2} H_j^(+)(x/sqrt t; xi/sqrt t)``."""
    return basis.phi_plus(t, x, j)


def biorth_pair(basis: MultiHermiteBasis, j: int, k: int, tol: float = 1e-12) -> float:
    """``int H_j^(-) H_k^(+) dy``; equals ``delta_jk``."""
    if not (0 <= j < basis.N and 0 <= k < basis.N):
        raise InvalidParameter("indices must lie in [0, N-1]")
    a, b = basis.domain()
    val, err = integrate(lambda y: basis.h_minus(j, y) * basis.h_plus(k, y), a, b,
                         tol=tol, min_panels=8)
    return float(val)


def mu_minus(t: float, xs: Sequence[float], basis: MultiHermiteBasis) -> float:
    xs = np.asarray(xs, float)
    return float(np.linalg.det(np.array([basis.phi_minus(t, xs, j) for j in range(basis.N)])))


def mu_plus(t: float, xs: Sequence[float], basis: MultiHermiteBasis) -> float:
    xs = np.asarray(xs, float)
    return float(np.linalg.det(np.array([basis.phi_plus(t, xs, j) for j in range(basis.N)])))


def vandermonde(xs: Sequence[float]) -> float:
    """``a_delta(x) = prod_{j<k} (x_j - x_k)``."""
    xs = np.asarray(xs, float)
    i, k = np.triu_indices(xs.size, 1)
    return float(np.prod(xs[i] - xs[k]))


def _lhs_distinct(xs: np.ndarray, ys: np.ndarray) -> float:
    mat = np.exp(-(ys[None, :] - xs[:, None]) ** 2 / 2.0)
    return float(np.linalg.det(mat) / vandermonde(xs))


def _neville_at_zero(hs: Sequence[float], vals: Sequence[float]) -> float:
    p = list(vals)
    h = list(hs)
    n = len(p)
    for m in range(1, n):
        for i in range(n - m):
            p[i] = (h[i + m] * p[i] - h[i] * p[i + 1]) / (h[i + m] - h[i])
    return p[0]


def confluent_lhs(xs: Sequence[float], ys: Sequence[float], eps0: float = 0.02,
                  levels: int = 5) -> float:
    """l'Hopital limit of ``det[exp(-(y_k - x_j)^2/2)] / a_delta(x)`` when
    labels coincide: split each coincident group by ``eps * (0, 1, 2, ...)``,
    sweep ``eps -> 0`` and extrapolate (Neville) to ``eps = 0``."""
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    ramp = np.zeros(xs.size)
    for i in range(1, xs.size):
        if xs[i] == xs[i - 1]:
            ramp[i] = ramp[i - 1] + 1
    if not np.any(ramp):
        return _lhs_distinct(xs, ys)
    hs = [eps0 / 2 ** k for k in range(levels)]
    vals = [_lhs_distinct(xs + h * ramp, ys) for h in hs]
    return float(_neville_at_zero(hs, vals))


def det_identity_check(basis: MultiHermiteBasis, y: Sequence[float]):
    """Both sides of the determinant identity for ``H^(+)``.

    Returns ``(lhs, rhs)``; the left side uses the confluent limit when the
    configuration has multiple points.
    """
    ys = np.asarray(y, float)
    if ys.size != basis.N or np.any(np.diff(ys) <= 0):
        raise InvalidParameter("y must be strictly increasing with N entries")
    lhs = confluent_lhs(basis.labels, ys)
    N = basis.N
    mat = np.array([basis.h_plus(j - 1, ys) for j in range(1, N + 1)])
    rhs = (-1) ** (N * (N - 1) // 2) * (2 * np.pi) ** (N / 2) * float(np.linalg.det(mat))
    return lhs, rhs


def intertwine_errors(basis: MultiHermiteBasis, j: int, k: int, t1: float, t2: float,
                      x1: float, x2: float, tol: float = 1e-11):
    """Errors of the three heat-kernel relations for ``0 < t1 < t2``:

    ``int phi_j^-(t2, u) p(t2-t1, u|x1) du = phi_j^-(t1, x1)``,
    ``int p(t2-t1, x2|u) phi_k^+(t1, u) du = phi_k^+(t2, x2)`` and
    ``int int phi_j^-(t2, u) p(t2-t1, u|v) phi_k^+(t1, v) dv du = delta_jk``.

    All integrals use adaptive Gauss-Legendre panels on the real line,
    not the Gaussian rules behind the phi evaluations.
    """
    if not 0 < t1 < t2:
        raise InvalidParameter("need 0 < t1 < t2")
    dt = t2 - t1
    sd = math.sqrt(dt)
    pad = 14.0

    def p(y, x):
        return np.exp(-(y - x) ** 2 / (2 * dt)) / math.sqrt(2 * math.pi * dt)

    v1, _ = integrate(lambda u: basis.phi_minus(t2, u, j) * p(u, x1),
                      x1 - pad * sd, x1 + pad * sd, tol=tol, min_panels=8)
    e1 = abs(v1 - basis.phi_minus(t1, x1, j))
    a, b = basis.domain(t1, pad)
    v2, _ = integrate(lambda u: p(x2, u) * basis.phi_plus(t1, u, k), a, b, tol=tol, min_panels=16)
    e2 = abs(v2 - basis.phi_plus(t2, x2, k))

    def inner(us):
        return np.array([integrate(lambda v: p(u, v) * basis.phi_plus(t1, v, k), a, b,
                                   tol=tol, min_panels=16)[0] for u in us])

    lo, hi = basis.domain(t2, pad)
    v3, _ = integrate(lambda u: basis.phi_minus(t2, u, j) * inner(u), lo, hi, tol=tol * 10,
                      min_panels=8)
    e3 = abs(v3 - (1.0 if j == k else 0.0))
    return float(e1), float(e2), float(e3)
