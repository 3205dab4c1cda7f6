"""Acceptance gate: one test per criterion, each printing a single
PASS/FAIL line (run with ``pytest -s tests/test_acceptance.py`` to see them)."""
from __future__ import annotations

import math
import time
from math import comb

import numpy as np
from scipy import integrate as sci

from dyson import verify
from dyson.config import Configuration
from dyson.correlations import (GeneratingFnRequest, TabulatedFunction, generating_fn_truncated,
                                smn_kernel)
from dyson.kernels import (KernelSpec, SpaceTimePoint, evaluate, kernel_infinite,
                           kernel_lattice_theta, relaxation_bound, relaxation_gap)
from dyson.mcsim import SimPlan, simulate
from dyson.mhermite import MultiHermiteBasis
from dyson.specfun import complete_symmetric_all, hermite, schur_frobenius


def report(num: int, checks) -> None:
    ok = all(c.passed for c in checks)
    detail = "; ".join(f"{c.name}={c.value:.3e}" for c in checks)
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}")
    assert ok, detail


def timed(name, seconds, limit):
    return verify.Check(name, bool(seconds < limit), seconds, limit)


def test_c01_biorthonormality():
    t0 = time.perf_counter()
    checks = verify.suite_biorth()
    report(1, checks + [timed("runtime s", time.perf_counter() - t0, 5.0)])


def test_c02_determinant_lemma():
    report(2, verify.suite_det_lemma())


def test_c03_intertwining():
    report(3, verify.suite_intertwine(0.3, 0.9))


def test_c04_form_equivalence():
    t0 = time.perf_counter()
    checks = verify.suite_forms_agree()
    report(4, checks + [timed("runtime s", time.perf_counter() - t0, 30.0)])


def test_c05_projection_trace():
    worst = 0.0
    for pts in ([0.0], [-0.5, 0.5], [-1.0, 0.2, 0.9], [-1.3, -0.4, 0.3, 1.6]):
        kspec = KernelSpec("finite_residue", Configuration.from_points(pts))
        for t in (0.25, 1.0):
            f = lambda x: evaluate(kspec, SpaceTimePoint(t, x), SpaceTimePoint(t, x)).value
            v = sum(sci.quad(f, lo, hi, epsabs=1e-12, epsrel=1e-12, limit=200)[0]
                    for lo, hi in ((-12.0, 0.0), (0.0, 12.0)))
            worst = max(worst, abs(v - len(pts)))
    report(5, [verify._le("max |trace - N|", worst, 1e-6)])


def test_c06_monte_carlo():
    t0 = time.perf_counter()
    checks = verify.mc_n2_checks(n_paths=100_000, seed=11, dt=1e-3)
    report(6, checks + [timed("runtime s", time.perf_counter() - t0, 600.0)])


def test_c07_theta_closed_form():
    report(7, verify.suite_theta())


def test_c08_relaxation():
    us = (1.0, 2.0, 4.0, 8.0)
    grid = np.linspace(-1, 1, 9)
    gaps = np.array([relaxation_gap(u, 0.5, 0.5, grid, grid) for u in us])
    bounds = np.array([relaxation_bound(u, 0.5, 0.5) for u in us])
    ratio = gaps / bounds
    spread = float(ratio.max() / ratio.min() - 1.0)
    checks = [verify.Check("strictly decreasing", bool(np.all(np.diff(gaps) < 0)),
                           float(np.max(np.diff(gaps))), 0.0),
              verify._le("gap(8)", gaps[-1], 1e-3),
              verify._le("gap/bound spread", spread, 0.2)]
    report(8, checks)


def test_c09_window_convergence():
    Z = Configuration.integers()
    grid = np.linspace(-1, 1, 9)
    errs = []
    for L in (10, 20, 40):
        kspec = KernelSpec("infinite_limit", Z, L_window=L)
        e = 0.0
        for x in grid:
            for y in grid:
                p1, p2 = SpaceTimePoint(0.5, x), SpaceTimePoint(0.5, y)
                e = max(e, abs(kernel_infinite(kspec, p1, p2).value - kernel_lattice_theta(p1, p2).value))
        errs.append(e)
    checks = [verify.Check("decreasing in L", bool(errs[0] > errs[1] > errs[2]), errs[2], 0.0),
              verify._le("error at L=40", errs[2], 1e-5)]
    report(9, checks)


def test_c10_cluster_machinery():
    report(10, verify.suite_cluster())


def test_c11_symmetric_functions():
    bad = 0
    for n in range(1, 7):
        ones = [1] * n
        for k in range(n):
            for l in range(n - k):
                got = schur_frobenius(k, l, ones)
                if got != comb(k + l, l) * comb(n, k + l + 1):
                    bad += 1
    x = np.array([0.3, -0.5, 0.7, 0.2])
    z = 0.6
    h = complete_symmetric_all(80, x)
    e_h = abs(sum(hr * z ** r for r, hr in enumerate(h)) - float(np.prod(1 / (1 - x * z))))
    zz, xx = 0.3, 0.7
    e_H = abs(sum(zz ** j * hermite(j, xx) / math.factorial(j) for j in range(60))
              - math.exp(2 * zz * xx - zz ** 2))
    report(11, [verify.Check("hook dimension mismatches", bad == 0, float(bad), 0.0),
                verify._le("h_r generating identity", e_h, 1e-10),
                verify._le("Hermite generating identity", e_H, 1e-10)])


def test_c12_conditions():
    report(12, verify.suite_conditions())


def test_c13_fredholm_consistency():
    xi = Configuration.from_points([-0.5, 0.5])
    t, a, b = 0.5, -0.5, 0.7
    basis = MultiHermiteBasis(xi)

    def G(height):
        chi = TabulatedFunction.indicator(a, b, height)
        return generating_fn_truncated(GeneratingFnRequest((t,), (chi,), xi, panels=4))

    eps = 1e-4
    first = (G(eps) - G(-eps)) / (2 * eps)
    mean = sci.quad(lambda x: smn_kernel(t, t, x, x, basis), a, b, epsabs=1e-13)[0]
    theta = 0.2
    X = simulate(SimPlan(xi, (t,), 100_000, dt=1e-3, seed=23)).at(t)
    w = np.exp(theta * np.sum((X >= a) & (X <= b), axis=1))
    se = w.std(ddof=1) / math.sqrt(w.size)
    z = abs(w.mean() - G(math.expm1(theta))) / se
    report(13, [verify._le("first-order coefficient error", abs(first - mean), 1e-5),
                verify._le("MC vs truncated expansion (SE units)", z, 3.0)])
