"""Quadrature rules used throughout the package.

Everything here is vectorised: integrands receive a 1-d array of nodes and
return an array whose first axis runs over the nodes (real or complex).
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import NumericFailure

SQRT2PI = np.sqrt(2.0 * np.pi)


@lru_cache(maxsize=64)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=64)
def _hermegauss(n: int):
    # probabilists' rule normalised to the standard normal law
    x, w = np.polynomial.hermite_e.hermegauss(n)
    w = w / SQRT2PI
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre_nodes(a: float, b: float, panels: int, order: int = 20):
    """Composite Gauss-Legendre nodes and weights on ``[a, b]``."""
    x0, w0 = _leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * x0[None, :]).ravel()
    w = (half[:, None] * w0[None, :]).ravel()
    return x, w


def integrate(f, a, b, tol=1e-12, order=20, min_panels=1, max_panels=4096,
              breakpoints=None):
    """Composite Gauss-Legendre with panel doubling.

    Returns ``(value, est_error)``; the estimate is the difference between
    the last two refinement levels. ``breakpoints`` splits the interval
    first (useful when the integrand is peaked at known places).
    """
    if breakpoints is not None:
        pts = np.unique(np.concatenate([[a, b], np.clip(breakpoints, a, b)]))
        total, err = 0.0, 0.0
        for lo, hi in zip(pts[:-1], pts[1:]):
            if hi > lo:
                v, e = integrate(f, lo, hi, tol=tol, order=order,
                                 min_panels=min_panels, max_panels=max_panels)
                total = total + v
                err += e
        return total, err
    panels = min_panels
    x, w = gauss_legendre_nodes(a, b, panels, order)
    prev = np.dot(w, f(x))
    while True:
        panels *= 2
        x, w = gauss_legendre_nodes(a, b, panels, order)
        cur = np.dot(w, f(x))
        err = float(np.max(np.abs(cur - prev)))
        if err <= tol * max(1.0, float(np.max(np.abs(cur)))):
            return cur, err
        if panels >= max_panels:
            raise NumericFailure("Gauss-Legendre refinement did not converge",
                                 achieved=err, panels=panels)
        prev = cur


def gaussian_expectation(f, sigma=1.0, tol=1e-12, n0=32, n_max=512):
    """``E[f(sigma*W)]`` for a standard normal W, by Gauss-Hermite doubling.

    ``f`` receives the scaled nodes. Returns ``(value, est_error, nodes)``.
    """
    n = n0
    x, w = _hermegauss(n)
    prev = np.dot(w, f(sigma * x))
    while True:
        n *= 2
        x, w = _hermegauss(n)
        cur = np.dot(w, f(sigma * x))
        err = float(np.max(np.abs(cur - prev)))
        if err <= tol * max(1.0, float(np.max(np.abs(cur)))):
            return cur, err, n
        if n >= n_max:
            raise NumericFailure("Gauss-Hermite refinement did not converge",
                                 achieved=err, nodes=n)
        prev = cur


def hermite_rule(n: int):
    """Gauss-Hermite nodes/weights for the standard normal density."""
    return _hermegauss(n)


def tensor_rule(intervals, order=20, panels=1):
    """Tensor-product Gauss-Legendre rule over a box given as ``[(a, b), ...]``.

    Returns ``(points, weights)`` with ``points`` of shape ``(n, d)``.
    """
    axes = [gauss_legendre_nodes(a, b, panels, order) for a, b in intervals]
    grids = np.meshgrid(*[ax[0] for ax in axes], indexing="ij")
    wgrids = np.meshgrid(*[ax[1] for ax in axes], indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    wts = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return pts, wts
