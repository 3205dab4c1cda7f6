from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dyson.config import (Configuration, alpha_moment, check_conditions, decompose_clusters,
                          dilate, format_literal, g_power, parse_configuration, shift,
                          signed_moment, square, tail_inverse_power_sum)
from dyson.errors import InvalidParameter


def same_window(a, b, L=12.0):
    pa, ma = a.points_in(-L, L)
    pb, mb = b.points_in(-L, L)
    return np.allclose(pa, pb, atol=1e-12) and np.array_equal(ma, mb)


def test_rejects_unsorted_and_bad_multiplicity():
    with pytest.raises(InvalidParameter):
        Configuration((1.0, 0.0), (1, 1))
    with pytest.raises(InvalidParameter):
        Configuration((0.0,), (0,))


def test_shift_examples():
    Z = Configuration.integers()
    assert same_window(shift(Z, 1.0), Z)
    xi = Configuration.from_points([0.0, 2.0])
    assert shift(xi, -1.0).positions == (-1.0, 1.0)


def test_dilate_examples():
    assert dilate(Configuration.from_points([1, 2]), 2).positions == (2.0, 4.0)
    assert same_window(dilate(Configuration.integers(), 0.5),
                       Configuration.from_points(np.arange(-24, 25) * 0.5))
    with pytest.raises(InvalidParameter):
        dilate(Configuration.from_points([1.0]), 0.0)


def test_square_examples():
    sq = square(Configuration.from_points([-1.0, 1.0]))
    assert sq.positions == (1.0,) and sq.multiplicities == (2,)
    assert square(Configuration.from_points([0.0])).positions == (0.0,)
    w = square(Configuration.integers().restrict(2))
    assert w.positions == (0.0, 1.0, 4.0) and w.multiplicities == (1, 2, 2)
    full = square(Configuration.integers())
    p, m = full.points_in(0, 30)
    assert list(p) == [0.0, 1.0, 4.0, 9.0, 16.0, 25.0] and list(m) == [1, 2, 2, 2, 2, 2]


@given(st.lists(st.integers(-400, 400), min_size=1, max_size=8),
       st.floats(-10, 10, allow_nan=False))
def test_shift_inverse(raw, u):
    xi = Configuration.from_points([v / 8 for v in raw])
    back = shift(shift(xi, u), -u)
    assert np.allclose(back.positions, xi.positions, atol=1e-9)
    assert back.multiplicities == xi.multiplicities


def test_literals_roundtrip():
    for text in ("Z", "eta:0.8", "points:-0.5^1,0.5^2"):
        assert format_literal(parse_configuration(text)) == text
    with pytest.raises(InvalidParameter):
        parse_configuration("points:1^x")
    with pytest.raises(InvalidParameter):
        parse_configuration("lattice")


def test_lattice_points():
    eta = Configuration.lattice(0.8)
    p, _ = eta.points_in(-3, 3)
    expect = sorted(float(g_power(l, 0.8)) for l in range(-5, 6) if abs(g_power(l, 0.8)) <= 3)
    assert np.allclose(p, expect)


@pytest.mark.parametrize("L", [0.5, 1.0, 3.3, 17.0, 250.0])
def test_signed_moment_vanishes_on_eta(L):
    assert signed_moment(Configuration.lattice(0.8), L) == 0.0


def test_origin_excluded():
    xi = Configuration.from_points([0.0])
    assert signed_moment(xi, 5) == 0.0 and alpha_moment(xi, 5, 1.5) == 0.0


def test_conditions_for_integers():
    rep = check_conditions(Configuration.integers(), 200.0, 1.5, 0.9)
    assert rep.c1_holds and rep.c2i_holds
    assert math.isfinite(rep.C0) and math.isfinite(rep.C1)
    assert rep.m_alpha >= 0


def test_conditions_validate_parameters():
    with pytest.raises(InvalidParameter):
        check_conditions(Configuration.integers(), 10.0, 2.5, 0.9)


def test_tail_inverse_power_sum_against_direct_sum():
    from scipy.special import zeta
    ells = np.arange(7, 200001, dtype=float)
    for m in (2, 3, 4, 5):
        c = 0.37
        # the c-dependent part converges fast; the c = 0 part is exact
        diff = np.sum((ells - c) ** -m) + np.sum((-ells - c) ** -m) - np.sum(ells ** -m) * (1 + (-1) ** m)
        direct = diff + (1 + (-1) ** m) * zeta(m, 7)
        assert abs(tail_inverse_power_sum(1.0, 7, c, m) - direct) < 1e-12
    # principal value for m = 1: pairs (l - c)^{-1} + (-l - c)^{-1}
    c = 0.37
    direct = 2 * c * zeta(2, 7) + np.sum(2 * c ** 3 / (ells ** 2 * (ells ** 2 - c ** 2)))
    assert abs(tail_inverse_power_sum(1.0, 7, c, 1) - direct) < 1e-12


def test_cluster_decomposition_integers():
    Z = Configuration.integers()
    dec = decompose_clusters(Z, 0.9, range(-6, 7))
    lo0, hi0 = dec.lower[0], dec.upper[0]
    assert 0 < lo0 < hi0 < 1 and Z.count(lo0, hi0) == 0
    assert dec.clusters[0].positions == (0.0,)
    assert abs(dec.clusters[0].center) < 0.5
    for k in range(-6, 6):
        assert dec.lower[-k - 1] == -dec.upper[k] and dec.upper[-k - 1] == -dec.lower[k]
        assert dec.clusters[k].size <= 2 * dec.m if k in dec.clusters else True
        assert g_power(k, 0.9) <= dec.lower[k] < dec.upper[k] <= g_power(k + 1, 0.9)
        assert dec.gap(k) >= (g_power(k + 1, 0.9) - g_power(k, 0.9)) / (2 * dec.m + 1) - 1e-12


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-40, 40), min_size=1, max_size=14))
def test_clusters_partition_and_separate(raw):
    xi = Configuration.from_points([v / 4 for v in raw] + [-v / 4 for v in raw])
    ks = range(-14, 14)
    dec = decompose_clusters(xi, 0.9, ks)
    union = []
    for cl in dec:
        union.extend(cl.members())
        rest = xi.subtract(cl.positions, cl.multiplicities)
        if cl.size and rest.total:
            d = np.min(np.abs(np.subtract.outer(np.asarray(cl.positions), rest.expanded())))
            eps = min(dec.gap(cl.k - 1), dec.gap(cl.k))
            assert d >= eps - 1e-12
    lo, hi = dec.upper[ks[0] - 1], dec.lower[ks[-1]]
    inside = xi.window(lo, hi).expanded()
    assert np.array_equal(np.sort(union), inside)
