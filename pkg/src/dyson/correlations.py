"""Multitime correlation functions, the biorthogonal-sum kernel, the
Karlin-McGregor determinant and truncated Fredholm generating functions."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .config import Configuration
from .errors import InvalidParameter
from .kernels import KernelSpec, SpaceTimePoint, evaluate, phi_entire
from .mhermite import MultiHermiteBasis, mu_minus, mu_plus
from .quadrature import gauss_legendre_nodes
from .specfun import heat_kernel


def _check_times(times) -> tuple:
    times = tuple(float(t) for t in times)
    if not times:
        raise InvalidParameter("at least one time is required")
    if times[0] <= 0 or any(b <= a for a, b in zip(times, times[1:])):
        raise InvalidParameter("times must be positive and strictly increasing")
    return times


@dataclass(frozen=True)
class CorrelationRequest:
    times: tuple
    points: tuple
    kernel: KernelSpec

    def __post_init__(self):
        object.__setattr__(self, "times", _check_times(self.times))
        pts = tuple(tuple(float(x) for x in row) for row in self.points)
        if len(pts) != len(self.times):
            raise InvalidParameter("one point list per time")
        object.__setattr__(self, "points", pts)


def correlation_matrix(req: CorrelationRequest) -> np.ndarray:
    """Block matrix ``K(t_m, x_j^(m); t_n, x_k^(n))``."""
    flat = [(t, x) for t, row in zip(req.times, req.points) for x in row]
    n = len(flat)
    A = np.empty((n, n))
    for i, (s, x) in enumerate(flat):
        for j, (t, y) in enumerate(flat):
            A[i, j] = evaluate(req.kernel, SpaceTimePoint(s, x), SpaceTimePoint(t, y)).value
    return A


def correlation_det(req: CorrelationRequest, with_condition: bool = False):
    """Multitime correlation ``rho`` as the determinant of the block matrix.

    With ``with_condition`` the 2-norm condition number is returned too, so
    near-singular inputs are reported rather than rejected.
    """
    A = correlation_matrix(req)
    if A.size == 0:
        return (1.0, 1.0) if with_condition else 1.0
    d = float(np.linalg.det(A))
    if with_condition:
        return d, float(np.linalg.cond(A))
    return d


def km_determinant(t: float, y: Sequence[float], x: Sequence[float]) -> float:
    """Karlin-McGregor determinant ``det[p(t, y_j | x_k)]``."""
    y = np.asarray(y, float)
    x = np.asarray(x, float)
    if y.shape != x.shape:
        raise InvalidParameter("x and y must have the same length")
    return float(np.linalg.det(heat_kernel(t, y[:, None], x[None, :])))


def multitime_density(xi: Configuration, times: Sequence[float], configs: Sequence[Sequence[float]]) -> float:
    """Density of ``(X(t_1), ..., X(t_M))`` in the Weyl chamber for Dyson's
    model started from the finite configuration ``xi``:
    ``mu^-(t_M, x^M) prod f_N(t_{m+1} - t_m, x^{m+1} | x^m) mu^+(t_1, x^1)``.
    """
    times = _check_times(times)
    basis = MultiHermiteBasis(xi)
    configs = [np.asarray(c, float) for c in configs]
    if len(configs) != len(times) or any(c.size != basis.N for c in configs):
        raise InvalidParameter("each configuration must have exactly N points")
    val = mu_minus(times[-1], configs[-1], basis) * mu_plus(times[0], configs[0], basis)
    for m in range(len(times) - 1):
        val *= km_determinant(times[m + 1] - times[m], configs[m + 1], configs[m])
    return float(val)


def smn_kernel(t_m: float, t_n: float, x, y, basis: MultiHermiteBasis, subtract: bool = False):
    """``S(x, y) = sum_j phi_j^+(t_m, x) phi_j^-(t_n, y)``; with ``subtract``
    the backward-time heat kernel ``1(t_m > t_n) p(t_m - t_n, x | y)`` is
    removed (the tilde version, equal to the correlation kernel)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    out = 0.0
    for j in range(basis.N):
        out = out + basis.phi_plus(t_m, x, j) * basis.phi_minus(t_n, y, j)
    if subtract and t_m > t_n:
        out = out - heat_kernel(t_m - t_n, x, y)
    out = np.asarray(out)
    return out.item() if out.ndim == 0 else out


def smn_matrix(t_m: float, t_n: float, xs, ys, basis: MultiHermiteBasis, subtract: bool = True) -> np.ndarray:
    """``S~(t_m, xs_i; t_n, ys_k)`` as a matrix, via one product of the
    tabulated basis functions."""
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    P = np.array([basis.phi_plus(t_m, xs, j) for j in range(basis.N)])
    Q = np.array([basis.phi_minus(t_n, ys, j) for j in range(basis.N)])
    S = P.T @ Q
    if subtract and t_m > t_n:
        S = S - heat_kernel(t_m - t_n, xs[:, None], ys[None, :])
    return S


def telescoping_identity(z1: complex, z2: complex, xs: Sequence[float]):
    """Both sides of ``sum_{k<N} prod_{l<k}(z2-x_l) / prod_{l<=k}(z1-x_l)
    = (prod (z2-x)/(z1-x) - 1)/(z2 - z1)``."""
    xs = np.asarray(xs, float)
    lhs = 0.0 + 0.0j
    for k in range(xs.size):
        lhs += np.prod(z2 - xs[:k]) / np.prod(z1 - xs[: k + 1])
    rhs = (np.prod((z2 - xs) / (z1 - xs)) - 1.0) / (z2 - z1)
    return complex(lhs), complex(rhs)


# -- generating functions -----------------------------------------------------

@dataclass(frozen=True)
class TabulatedFunction:
    """Piecewise-linear function on ``[grid[0], grid[-1]]``, zero outside."""

    grid: tuple
    values: tuple

    def __post_init__(self):
        g = np.asarray(self.grid, float)
        v = np.asarray(self.values, float)
        if g.ndim != 1 or g.size < 2 or g.size != v.size or np.any(np.diff(g) <= 0):
            raise InvalidParameter("tabulation needs an increasing grid and matching values")
        if not np.all(np.isfinite(v)):
            raise InvalidParameter("test function must be bounded")

    @classmethod
    def indicator(cls, a: float, b: float, height: float = 1.0) -> "TabulatedFunction":
        return cls((a, b), (height, height))

    @classmethod
    def sample(cls, f: Callable, a: float, b: float, n: int = 201) -> "TabulatedFunction":
        g = np.linspace(a, b, n)
        return cls(tuple(g), tuple(np.asarray(f(g), float)))

    @property
    def support(self) -> tuple:
        return float(self.grid[0]), float(self.grid[-1])

    def __call__(self, x):
        x = np.asarray(x, float)
        g = np.asarray(self.grid)
        out = np.interp(x, g, np.asarray(self.values))
        return np.where((x >= g[0]) & (x <= g[-1]), out, 0.0)


@dataclass(frozen=True)
class GeneratingFnRequest:
    times: tuple
    chis: tuple
    config: Configuration
    order: int = 6
    panels: int = 2

    def __post_init__(self):
        object.__setattr__(self, "times", _check_times(self.times))
        if len(self.chis) != len(self.times):
            raise InvalidParameter("one test function per time")
        if not 0 <= self.order <= 6:
            raise InvalidParameter("truncation order must lie in 0..6")
        if not self.config.is_finite:
            raise InvalidParameter("generating function needs a finite configuration")


def _nystrom(req: GeneratingFnRequest) -> np.ndarray:
    basis = MultiHermiteBasis(req.config)
    xs, ws = [], []
    for chi in req.chis:
        a, b = chi.support
        x, w = gauss_legendre_nodes(a, b, req.panels)
        xs.append(x)
        ws.append(w * chi(x))
    blocks = [[smn_matrix(tm, tn, xs[m], xs[n], basis) * ws[n][None, :]
               for n, tn in enumerate(req.times)] for m, tm in enumerate(req.times)]
    return np.block(blocks)


def fredholm_terms(req: GeneratingFnRequest) -> np.ndarray:
    """Order-``n`` terms of the expansion for ``n = 0..order``.

    With tensor-product quadrature the order-``n`` integral of
    ``det[S~]`` weighted by ``prod chi`` is the sum of the ``n x n``
    principal minors of the Nystrom matrix, i.e. ``e_n`` of its
    eigenvalues; these follow from the traces of its powers.
    """
    A = _nystrom(req)
    order = req.order
    p = np.empty(order)
    Ak = np.eye(A.shape[0])
    for k in range(order):
        Ak = Ak @ A
        p[k] = np.trace(Ak)
    e = np.zeros(order + 1)
    e[0] = 1.0
    for n in range(1, order + 1):
        e[n] = sum((-1) ** (i - 1) * e[n - i] * p[i - 1] for i in range(1, n + 1)) / n
    return e


def generating_fn_truncated(req: GeneratingFnRequest) -> float:
    """Truncated Fredholm expansion of ``E[prod_m prod_j (1 + chi_m(X_j(t_m)))]``."""
    if all(not np.any(np.asarray(c.values)) for c in req.chis):
        return 1.0
    return float(np.sum(fredholm_terms(req)))


def phi_moderate_distance(xi_a: Configuration, xi_b: Configuration,
                          box: tuple = (-1.0, 1.0, -1.0, 1.0), n: int = 21) -> float:
    """``sup |Phi(xi_a, i, z) - Phi(xi_b, i, z)|`` over an ``n x n`` sample
    grid of the box ``(re_lo, re_hi, im_lo, im_hi)``."""
    re = np.linspace(box[0], box[1], n)
    im = np.linspace(box[2], box[3], n)
    z = (re[None, :] + 1j * im[:, None]).ravel()
    return float(np.max(np.abs(phi_entire(xi_a, 1j, z) - phi_entire(xi_b, 1j, z))))


def write_correlation_csv(rows: Sequence[tuple], path) -> None:
    """Rows ``(times, points, value)``; times and points are written as
    ``;``-joined lists."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(("times", "points", "value"))
        for times, points, value in rows:
            w.writerow((";".join(repr(float(t)) for t in times),
                        "|".join(";".join(repr(float(x)) for x in row) for row in points),
                        repr(float(value))))
