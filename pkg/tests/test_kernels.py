from __future__ import annotations

import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dyson.config import Configuration, LatticeTail, decompose_clusters
from dyson.errors import InvalidParameter, UnsupportedConfiguration
from dyson.kernels import (KernelSpec, SpaceTimePoint, cluster_identity, evaluate, evaluate_grid,
                           extended_sine, extended_sine_fourier, inverse_power_sums,
                           kernel_cluster, kernel_finite_contour, kernel_finite_residue,
                           kernel_infinite, kernel_lattice_direct, kernel_lattice_lsum,
                           kernel_lattice_theta, lattice_equal_time_remark, phi_entire,
                           relaxation_bound, relaxation_gap, sine_kernel, theta_coeff,
                           write_kernel_csv)
from dyson.quadrature import integrate
from dyson.specfun import heat_kernel

P = SpaceTimePoint


def test_sine_kernel_values():
    assert sine_kernel(0.0) == 1.0
    assert abs(sine_kernel(1.0)) < 1e-16
    assert abs(sine_kernel(0.5) - 2 / math.pi) < 1e-15
    assert abs(sine_kernel(1e-7) - 1.0) < 1e-13


@pytest.mark.parametrize("dt,dr", [(0.4, 0.3), (-0.4, 0.3), (-0.05, 1.7), (2.0, -2.5), (-3.0, 0.0)])
def test_extended_sine_two_routes(dt, dr):
    assert abs(extended_sine(dt, dr) - extended_sine_fourier(dt, dr)) < 1e-11


def test_extended_sine_equal_time_and_symmetry():
    assert extended_sine(0.0, 0.37) == sine_kernel(0.37)
    assert abs(extended_sine(0.3, 0.8) - extended_sine(0.3, -0.8)) < 1e-15
    # continuity in dt at 0 from both sides
    assert abs(extended_sine(1e-6, 0.4) - sine_kernel(0.4)) < 1e-5
    assert abs(extended_sine(-1e-6, 0.4) - sine_kernel(0.4)) < 1e-3


def test_single_particle_kernel():
    xi = Configuration.from_points([0.3])
    for (s, x, t, y) in [(0.5, 0.1, 0.9, -0.4), (1.0, 0.7, 0.2, 0.0), (0.4, -1.0, 0.4, 0.5)]:
        oracle = heat_kernel(s, x, 0.3) - (heat_kernel(s - t, x, y) if s > t else 0.0)
        for fam in ("finite_contour", "finite_residue", "cluster"):
            v = evaluate(KernelSpec(fam, xi), P(s, x), P(t, y)).value
            assert abs(v - oracle) < 1e-12, fam


def test_contour_handles_multiple_points():
    xi = Configuration.from_pairs([(-0.5, 2), (0.4, 1), (1.1, 2)])
    for (s, x, t, y) in [(0.5, 0.1, 0.9, -0.4), (1.0, 0.7, 0.2, 0.0)]:
        a = kernel_finite_contour(KernelSpec("finite_contour", xi), P(s, x), P(t, y)).value
        c = kernel_cluster(KernelSpec("cluster", xi), P(s, x), P(t, y)).value
        assert abs(a - c) < 1e-10
    with pytest.raises(UnsupportedConfiguration):
        kernel_finite_residue(KernelSpec("finite_residue", xi), P(0.5, 0), P(0.5, 0))


@pytest.mark.parametrize("pts", [[0.0], [-0.5, 0.5], [-1.0, 0.2, 0.9], [-1.3, -0.4, 0.3, 1.6]])
@pytest.mark.parametrize("t", [0.25, 1.0])
def test_projection_trace(pts, t):
    xi = Configuration.from_points(pts)
    kspec = KernelSpec("finite_residue", xi)
    f = lambda xs: np.array([evaluate(kspec, P(t, x), P(t, x)).value for x in xs])
    v, _ = integrate(f, min(pts) - 9, max(pts) + 9, tol=1e-10, min_panels=6)
    assert abs(v - len(pts)) < 1e-6


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(-9, 9), min_size=1, max_size=4, unique=True),
       st.floats(0.1, 1.5), st.floats(0.1, 1.5), st.floats(-2, 2), st.floats(-2, 2))
def test_contour_equals_residue(raw, s, t, x, y):
    xi = Configuration.from_points([v / 4 for v in raw])
    a = kernel_finite_contour(KernelSpec("finite_contour", xi), P(s, x), P(t, y)).value
    b = kernel_finite_residue(KernelSpec("finite_residue", xi), P(s, x), P(t, y)).value
    assert abs(a - b) < 1e-8


def test_phi_entire_basic():
    xi = Configuration.from_points([-1.0, 0.5, 2.0])
    z = np.array([0.3 + 0.2j, 1.1])
    direct = (1 - (z - 0.5) / (-1.5)) * (1 - (z - 0.5) / 1.5)
    assert np.allclose(phi_entire(xi, 0.5, z), direct, atol=1e-15)
    assert phi_entire(xi, 0.5, 2.0) == 0.0


@pytest.mark.parametrize("ell", [-2, 0, 3])
def test_phi_on_integers_is_sinc(ell):
    z = np.array([0.3 + 0.4j, -1.2, 2.7 - 0.1j, 5.5])
    assert np.allclose(phi_entire(Configuration.integers(), float(ell), z), sine_kernel(z - ell),
                       atol=1e-13)


def test_phi_tail_matches_large_window():
    # Phi over Z∩[-L, L] with a symmetric window converges to sinc slowly; the
    # exact tail must agree with a huge window up to the window error O(|z-a|/L).
    z = np.array([0.4 + 0.3j])
    L = 200000
    pts = np.arange(-L, L + 1, dtype=float)
    pts = pts[pts != 0]
    big = np.exp(np.sum(np.log(1 - z[:, None] / pts[None, :]), axis=1))
    assert np.allclose(phi_entire(Configuration.integers(), 0.0, z), big, atol=1e-10)


def test_inverse_power_sums_integers():
    from scipy.special import zeta
    Zm0 = Configuration.integers().subtract([0.0], [1])
    p = inverse_power_sums(Zm0, 0.0, 6)
    assert abs(p[0]) < 1e-15 and abs(p[2]) < 1e-15
    assert abs(p[1] - 2 * zeta(2)) < 1e-14 and abs(p[3] - 2 * zeta(4)) < 1e-14


def test_lattice_routes():
    for (s, x, t, y) in [(0.3, 0.2, 0.7, -0.4), (1.0, -1.3, 0.2, 0.6), (0.5, 0.0, 0.5, 0.25)]:
        a = kernel_lattice_theta(P(s, x), P(t, y)).value
        assert abs(a - kernel_lattice_lsum(P(s, x), P(t, y)).value) < 1e-10
        assert abs(a - kernel_lattice_direct(P(s, x), P(t, y)).value) < 1e-10
        assert abs(a - kernel_infinite(KernelSpec("infinite_limit", Configuration.integers()),
                                       P(s, x), P(t, y)).value) < 1e-10


def test_lattice_needs_positive_s():
    with pytest.raises(InvalidParameter):
        kernel_lattice_theta(P(0.0, 0.1), P(0.5, 0.2))


def test_equal_time_remark():
    for (t, x, y) in [(0.2, 0.3, 0.8), (0.7, -0.4, 1.35)]:
        k = kernel_lattice_theta(P(t, x), P(t, y)).value
        r = lattice_equal_time_remark(t, x, y)
        assert abs(k - r.real) < 1e-12 and abs(r.imag) < 1e-12


def test_lattice_density_is_one():
    # K(t, x; t, x) integrates to 1 per unit cell for the integer start
    f = lambda xs: np.array([kernel_lattice_theta(P(0.4, x), P(0.4, x)).value for x in xs])
    v, _ = integrate(f, 0.0, 1.0, tol=1e-10)
    assert abs(v - 1.0) < 1e-9


def test_relaxation_gap_below_bound_and_decreasing():
    xs = np.linspace(-1, 1, 5)
    gaps = [relaxation_gap(u, 0.5, 0.5, xs, xs) for u in (1, 2, 4)]
    assert gaps[0] > gaps[1] > gaps[2]
    for u, g in zip((1, 2, 4), gaps):
        assert g <= relaxation_bound(u, 0.5, 0.5) * (1 + 1e-9)


def test_cluster_identity_and_theta():
    Z = Configuration.from_points([-2.0, -0.1, 0.1, 1.0, 3.0])
    dec = decompose_clusters(Z, 0.9, range(-4, 5))
    sizes = {k: c.size for k, c in dec.clusters.items()}
    assert max(sizes.values()) >= 2
    z = np.array([0.2 + 0.3j, 4.1 - 0.2j])
    for k, n in sizes.items():
        if n:
            lhs, rhs = cluster_identity(0.6, Z, z, 0.4, k, dec)
            assert np.allclose(lhs, rhs, atol=1e-10)


def test_theta_coefficients_by_cauchy():
    # Theta_q are the Taylor coefficients at c of exp(-(c+w-x)^2/2t)/exp(-(c-x)^2/2t)
    # times prod_{u in rest} (1 - w/(u-c))^{-1}
    xi = Configuration.from_points([-1.4, -0.3, 0.2, 1.5])
    dec = decompose_clusters(xi, 0.9, range(-3, 4))
    k = next(k for k, c in dec.clusters.items() if c.size)
    cl = dec.clusters[k]
    rest = xi.subtract(cl.positions, cl.multiplicities).expanded()
    c, t, x = cl.center, 0.7, 0.25
    r = 0.5 * np.min(np.abs(rest - c))
    M = 256
    w = r * np.exp(2j * np.pi * np.arange(M) / M)
    f = np.exp(-((c + w - x) ** 2 - (c - x) ** 2) / (2 * t)) / np.prod(1 - w[:, None] / (rest - c), axis=1)
    coef = np.fft.fft(f) / M / r ** np.arange(M)
    for q in range(6):
        assert abs(theta_coeff(t, xi, x, k, q, dec) - coef[q].real) < 1e-10


def test_grid_csv_order(tmp_path):
    kspec = KernelSpec("extended_sine")
    rows = evaluate_grid(kspec, [0.5, 0.2], [0.3], [0.4, -0.1], [0.0])
    keys = [r[:4] for r in rows]
    assert keys == sorted(keys)
    path = tmp_path / "k.csv"
    write_kernel_csv(rows, path)
    with open(path) as fh:
        got = list(csv.reader(fh))
    assert got[0] == ["s", "t", "x", "y", "value", "imag_residual", "est_error"]
    assert len(got) == 5


def test_spec_validation():
    with pytest.raises(InvalidParameter):
        KernelSpec("nonsense")
    with pytest.raises(InvalidParameter):
        KernelSpec("sine", quad_tol=0)
    one_sided = Configuration((0.0,), (1,), LatticeTail(1.0, start=1, symmetric=False))
    with pytest.raises(Exception):
        kernel_infinite(KernelSpec("infinite_limit", one_sided), P(0.5, 0.0), P(0.5, 0.0))
