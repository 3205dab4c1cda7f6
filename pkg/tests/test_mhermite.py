from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dyson.config import Configuration
from dyson.errors import InvalidParameter
from dyson.mhermite import (MultiHermiteBasis, biorth_pair, det_identity_check,
                            intertwine_errors, mu_minus, type1_fn, type2_poly, vandermonde)
from dyson.specfun import hermite

points = st.lists(st.integers(-12, 12), min_size=1, max_size=5, unique=True).map(
    lambda v: sorted(x / 6 for x in v))


def test_type2_single_point():
    assert abs(type2_poly([0.4], 1.3) - 0.9) < 1e-15


@pytest.mark.parametrize("N", [1, 2, 3, 4, 5])
def test_type2_at_multiple_origin(N):
    y = np.linspace(-2, 2, 7)
    expect = 2 ** (-N / 2) * hermite(N, y / math.sqrt(2))
    assert np.allclose(type2_poly([0.0] * N, y).real, expect, atol=1e-12)


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_type1_at_multiple_origin(N):
    j = N - 1
    y = np.linspace(-2, 2, 7)
    expect = (2 ** (-j / 2) / (math.factorial(j) * math.sqrt(2 * math.pi))
              * hermite(j, y / math.sqrt(2)) * np.exp(-y * y / 2))
    assert np.allclose(type1_fn([0.0] * N, y), expect, atol=1e-13)


def test_type1_single_pole():
    y = np.linspace(-3, 3, 5)
    assert np.allclose(type1_fn([0.2], y), np.exp(-(y - 0.2) ** 2 / 2) / math.sqrt(2 * math.pi))


@settings(max_examples=20, deadline=None)
@given(points)
def test_type2_monic_of_degree_N(xs):
    # finite differences of order N recover N! times the leading coefficient
    N = len(xs)
    h = 0.5
    grid = np.arange(N + 2) * h
    vals = type2_poly(xs, grid).real
    dN = np.diff(vals, n=N)
    assert np.allclose(dN / (math.factorial(N) * h ** N), 1.0, atol=1e-8)
    assert np.allclose(np.diff(vals, n=N + 1), 0.0, atol=1e-8)


@settings(max_examples=15, deadline=None)
@given(points)
def test_type1_routes_agree(xs):
    y = np.array([-1.1, 0.05, 0.9])
    r = type1_fn(xs, y)
    for method in ("contour", "ellipse"):
        assert np.allclose(type1_fn(xs, y, method=method), r, atol=1e-11)


def test_type1_multiplicity_routes_agree():
    xi = [0.0, 0.0, 0.7, 0.7, 0.7]
    y = np.linspace(-1.5, 2.0, 6)
    assert np.allclose(type1_fn(xi, y, method="contour"), type1_fn(xi, y), atol=1e-12)


def test_biorth_trivial():
    b = MultiHermiteBasis([0.0])
    assert abs(biorth_pair(b, 0, 0) - 1) < 1e-12


def test_biorth_multiplicities():
    b = MultiHermiteBasis(Configuration.from_pairs([(0.0, 2), (1.0, 3)]))
    for j in range(b.N):
        for k in range(b.N):
            assert abs(biorth_pair(b, j, k) - (j == k)) < 1e-9
    with pytest.raises(InvalidParameter):
        biorth_pair(b, 0, b.N)


def test_det_identity_examples():
    b = MultiHermiteBasis([0.0, 1.0])
    lhs, rhs = det_identity_check(b, [0.3, 1.7])
    oracle = (math.exp(-0.3 ** 2 / 2) * math.exp(-0.7 ** 2 / 2)
              - math.exp(-1.7 ** 2 / 2) * math.exp(-0.7 ** 2 / 2)) / (0.0 - 1.0)
    assert abs(lhs - oracle) < 1e-14 and abs(lhs - rhs) < 1e-10
    b1 = MultiHermiteBasis([0.4])
    lhs, rhs = det_identity_check(b1, [1.1])
    assert abs(lhs - math.exp(-0.7 ** 2 / 2)) < 1e-15 and abs(rhs - lhs) < 1e-14
    b3 = MultiHermiteBasis([0.0, 0.0, 1.0])
    lhs, rhs = det_identity_check(b3, [-0.5, 0.4, 1.2])
    assert abs(lhs - rhs) < 1e-8


@settings(max_examples=15, deadline=None)
@given(points, st.integers(0, 10**6))
def test_det_identity_random(xs, seed):
    rng = np.random.default_rng(seed)
    y = np.sort(rng.uniform(-2, 2, len(xs)))
    if len(y) > 1 and np.min(np.diff(y)) < 0.05:
        return
    lhs, rhs = det_identity_check(MultiHermiteBasis(xs), y)
    assert abs(lhs - rhs) <= 1e-8 * max(abs(rhs), 1e-12)


def test_mu_minus_is_signed_vandermonde():
    b = MultiHermiteBasis([-0.6, 0.1, 0.8, 1.5])
    x = np.array([-1.2, -0.1, 0.6, 2.0])
    N = b.N
    assert abs(mu_minus(0.7, x, b) - (-1) ** (N * (N - 1) // 2) * vandermonde(x)) < 1e-8


def test_intertwining_small():
    b = MultiHermiteBasis([-0.4, 0.5, 0.9])
    for j in range(3):
        errs = intertwine_errors(b, j, 2 - j, 0.3, 0.9, 0.2, -0.1)
        assert max(errs) < 1e-7


def test_phi_needs_positive_time():
    b = MultiHermiteBasis([0.0])
    with pytest.raises(InvalidParameter):
        b.phi_minus(0.0, 0.3, 0)
