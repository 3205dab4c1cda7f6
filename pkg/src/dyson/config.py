"""Point configurations on the real line.

A :class:`Configuration` is a finite list of explicit points with
multiplicities, optionally continued by a power-lattice tail generator
``x = scale * sgn(l) |l|**kappa + offset`` for ``|l| >= start``. The lattice
``Z`` and the configurations ``eta^kappa`` are represented exactly this way,
so nothing is truncated unless a caller asks for a window.

Also here: the operations shift / dilate / square, the decay conditions
(C.1)-(C.3) and the cluster decomposition used by the cluster-series kernel.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.special import zeta as hurwitz_zeta

from .errors import ClusterError, InvalidParameter, UnsupportedConfiguration


def g_power(x, kappa):
    """Odd power map ``sgn(x)|x|**kappa``."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.abs(x) ** kappa


def g_power_inv(y, kappa):
    y = np.asarray(y, dtype=float)
    return np.sign(y) * np.abs(y) ** (1.0 / kappa)


@dataclass(frozen=True)
class LatticeTail:
    """Generator for the points ``scale * g^kappa(l) + offset``.

    ``symmetric=True`` covers ``|l| >= start``; otherwise only ``l >= start``.
    Every generated point carries ``multiplicity``.
    """

    kappa: float
    start: int = 1
    scale: float = 1.0
    offset: float = 0.0
    symmetric: bool = True
    multiplicity: int = 1

    def __post_init__(self):
        if self.kappa <= 0 or self.scale <= 0:
            raise InvalidParameter("tail needs kappa > 0 and scale > 0")
        if self.start < 1:
            raise InvalidParameter("tail start index must be >= 1")
        if self.multiplicity < 1:
            raise InvalidParameter("tail multiplicity must be >= 1")

    @property
    def is_standard(self) -> bool:
        return self.symmetric and self.scale == 1.0 and self.offset == 0.0

    def position(self, ell):
        return self.scale * g_power(ell, self.kappa) + self.offset

    @property
    def inner_radius(self) -> float:
        return self.scale * self.start ** self.kappa

    def indices_in(self, lo: float, hi: float) -> np.ndarray:
        """Tail indices whose positions lie in ``[lo, hi]``, sorted by position."""
        out = []
        a = (lo - self.offset) / self.scale
        b = (hi - self.offset) / self.scale
        # positive branch
        if b >= self.start ** self.kappa:
            l0 = max(self.start, int(math.floor(max(a, 0.0) ** (1.0 / self.kappa))) - 1)
            l1 = int(math.ceil(b ** (1.0 / self.kappa))) + 1
            ells = np.arange(l0, l1 + 1)
            out.append(ells)
        if self.symmetric and a <= -(self.start ** self.kappa):
            l0 = max(self.start, int(math.floor(max(-b, 0.0) ** (1.0 / self.kappa))) - 1)
            l1 = int(math.ceil((-a) ** (1.0 / self.kappa))) + 1
            out.append(-np.arange(l0, l1 + 1))
        if not out:
            return np.zeros(0, dtype=np.int64)
        ells = np.concatenate(out)
        pos = self.position(ells)
        keep = (pos >= lo) & (pos <= hi)
        ells = ells[keep]
        return ells[np.argsort(self.position(ells), kind="stable")]


@dataclass(frozen=True)
class Configuration:
    """Locally finite point multiset: explicit points plus an optional tail.

    ``positions`` is strictly increasing, ``multiplicities`` are >= 1. With a
    tail, every explicit point lies strictly inside the tail's inner gap.
    """

    positions: tuple = ()
    multiplicities: tuple = ()
    tail: Optional[LatticeTail] = None

    def __post_init__(self):
        pos = tuple(float(x) for x in self.positions)
        mult = tuple(int(m) for m in self.multiplicities)
        if len(pos) != len(mult):
            raise InvalidParameter("positions and multiplicities differ in length")
        if any(m < 1 for m in mult):
            raise InvalidParameter("multiplicities must be positive")
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise InvalidParameter("positions must be strictly increasing")
        if any(not math.isfinite(x) for x in pos):
            raise InvalidParameter("positions must be finite")
        if self.tail is not None and pos:
            t = self.tail
            r = t.inner_radius
            if t.symmetric:
                bad = any(abs(x - t.offset) >= r for x in pos)
            else:
                bad = any(x - t.offset >= r for x in pos)
            if bad:
                raise InvalidParameter("explicit points overlap the tail region")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "multiplicities", mult)

    # -- constructors -------------------------------------------------------
    @classmethod
    def from_points(cls, points: Iterable[float]) -> "Configuration":
        """Finite configuration from a list of (possibly repeated) points."""
        arr = np.sort(np.asarray(list(points), dtype=float))
        if arr.size == 0:
            return cls()
        uniq, counts = np.unique(arr, return_counts=True)
        return cls(tuple(uniq), tuple(int(c) for c in counts))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple]) -> "Configuration":
        merged: dict = {}
        for x, m in pairs:
            merged[float(x)] = merged.get(float(x), 0) + int(m)
        keys = sorted(merged)
        return cls(tuple(keys), tuple(merged[k] for k in keys))

    @classmethod
    def lattice(cls, kappa: float = 1.0) -> "Configuration":
        """``eta^kappa``: one point at ``g^kappa(l)`` for every integer l."""
        return cls((0.0,), (1,), LatticeTail(kappa, start=1))

    @classmethod
    def integers(cls) -> "Configuration":
        return cls.lattice(1.0)

    # -- basic queries ------------------------------------------------------
    @property
    def is_finite(self) -> bool:
        return self.tail is None

    @property
    def total(self) -> int:
        if not self.is_finite:
            raise UnsupportedConfiguration("infinite configuration has no total count")
        return int(sum(self.multiplicities))

    @property
    def is_simple(self) -> bool:
        tail_ok = self.tail is None or self.tail.multiplicity == 1
        return tail_ok and all(m == 1 for m in self.multiplicities)

    def points_in(self, lo: float, hi: float):
        """Positions and multiplicities in the closed interval ``[lo, hi]``."""
        pos = np.asarray(self.positions, dtype=float)
        mult = np.asarray(self.multiplicities, dtype=np.int64)
        keep = (pos >= lo) & (pos <= hi)
        pos, mult = pos[keep], mult[keep]
        if self.tail is not None:
            ells = self.tail.indices_in(lo, hi)
            if ells.size:
                pos = np.concatenate([pos, self.tail.position(ells)])
                mult = np.concatenate([mult, np.full(ells.size, self.tail.multiplicity)])
                order = np.argsort(pos, kind="stable")
                pos, mult = pos[order], mult[order]
        return pos, mult

    def count(self, lo: float, hi: float) -> int:
        return int(self.points_in(lo, hi)[1].sum())

    def window(self, lo: float, hi: float) -> "Configuration":
        pos, mult = self.points_in(lo, hi)
        return Configuration(tuple(pos), tuple(int(m) for m in mult))

    def restrict(self, L: float) -> "Configuration":
        """``xi ∩ [-L, L]`` as a finite configuration."""
        return self.window(-L, L)

    def expanded(self) -> np.ndarray:
        """Nondecreasing labelled points, each repeated by its multiplicity."""
        if not self.is_finite:
            raise UnsupportedConfiguration("cannot label an infinite configuration")
        return np.repeat(np.asarray(self.positions, float),
                         np.asarray(self.multiplicities, int))

    def multiplicity_at(self, x: float) -> int:
        return self.count(x, x)

    def with_explicit_radius(self, radius: float) -> "Configuration":
        """Same configuration with every tail point inside ``radius`` (around
        the tail offset) moved into the explicit list."""
        t = self.tail
        if t is None or radius < t.inner_radius:
            return self
        new_start = int(math.floor((radius / t.scale) ** (1.0 / t.kappa))) + 1
        new_tail = LatticeTail(t.kappa, new_start, t.scale, t.offset,
                               t.symmetric, t.multiplicity)
        lo = t.offset - new_tail.inner_radius if t.symmetric else -np.inf
        hi = t.offset + new_tail.inner_radius
        pos, mult = self.points_in(lo, hi)
        keep = (pos > lo) & (pos < hi)
        return Configuration(tuple(pos[keep]), tuple(int(m) for m in mult[keep]), new_tail)

    def subtract(self, positions: Sequence[float], multiplicities: Sequence[int]) -> "Configuration":
        """``xi - c`` for a finite sub-configuration ``c`` of ``xi``."""
        if len(positions) == 0:
            return self
        reach = max(abs(p - (self.tail.offset if self.tail else 0.0)) for p in positions)
        base = self.with_explicit_radius(reach + 1e-9) if self.tail else self
        counts = dict(zip(base.positions, base.multiplicities))
        for x, m in zip(positions, multiplicities):
            x = float(x)
            have = counts.get(x, 0)
            if have < m:
                raise InvalidParameter(f"cannot remove {m} points at {x}: only {have} present")
            counts[x] = have - m
        keys = sorted(k for k, v in counts.items() if v > 0)
        return Configuration(tuple(keys), tuple(counts[k] for k in keys), base.tail)

    def __str__(self) -> str:
        return format_literal(self)


# -- operations ---------------------------------------------------------------

def shift(xi: Configuration, u: float) -> Configuration:
    """Translate every point by ``u``."""
    tail = None
    if xi.tail is not None:
        t = xi.tail
        tail = LatticeTail(t.kappa, t.start, t.scale, t.offset + u, t.symmetric, t.multiplicity)
    moved = Configuration.from_pairs((x + u, m) for x, m in zip(xi.positions, xi.multiplicities))
    return Configuration(moved.positions, moved.multiplicities, tail)


def dilate(xi: Configuration, c: float) -> Configuration:
    """Multiply every point by ``c > 0``."""
    if not c > 0:
        raise InvalidParameter("dilation factor must be positive")
    tail = None
    if xi.tail is not None:
        t = xi.tail
        tail = LatticeTail(t.kappa, t.start, t.scale * c, t.offset * c, t.symmetric, t.multiplicity)
    scaled = Configuration.from_pairs((c * x, m) for x, m in zip(xi.positions, xi.multiplicities))
    return Configuration(scaled.positions, scaled.multiplicities, tail)


def square(xi: Configuration) -> Configuration:
    """Image under ``x -> x**2``; coincident images merge multiplicities."""
    tail = None
    if xi.tail is not None:
        t = xi.tail
        if t.offset != 0.0:
            raise UnsupportedConfiguration("square of an offset tail is not a power lattice")
        tail = LatticeTail(2 * t.kappa, t.start, t.scale ** 2, 0.0, False,
                           t.multiplicity * (2 if t.symmetric else 1))
    sq = Configuration.from_pairs((x * x, m) for x, m in zip(xi.positions, xi.multiplicities))
    return Configuration(sq.positions, sq.multiplicities, tail)


# -- literals -----------------------------------------------------------------

_POINT_RE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(?:\^\s*(\d+))?\s*$")


def parse_configuration(text: str) -> Configuration:
    """Parse ``Z``, ``eta:<kappa>`` or ``points:x1^m1,x2^m2,...``."""
    s = text.strip()
    if s == "Z":
        return Configuration.integers()
    if s.startswith("eta:"):
        try:
            kappa = float(s[4:])
        except ValueError:
            raise InvalidParameter(f"bad kappa in {text!r}") from None
        if not kappa > 0:
            raise InvalidParameter("kappa must be positive")
        return Configuration.lattice(kappa)
    if s.startswith("points:"):
        body = s[7:].strip()
        if not body:
            return Configuration()
        pairs = []
        for item in body.split(","):
            mt = _POINT_RE.match(item)
            if not mt:
                raise InvalidParameter(f"bad point literal {item!r}")
            m = int(mt.group(2)) if mt.group(2) else 1
            if m < 1:
                raise InvalidParameter("multiplicity must be >= 1")
            pairs.append((float(mt.group(1)), m))
        return Configuration.from_pairs(pairs)
    raise InvalidParameter(f"unrecognised configuration literal {text!r}")


def format_literal(xi: Configuration) -> str:
    if xi.tail is not None:
        t = xi.tail
        if t.is_standard and t.multiplicity == 1 and t.start == 1 and \
                xi.positions == (0.0,) and xi.multiplicities == (1,):
            return "Z" if t.kappa == 1.0 else f"eta:{t.kappa:g}"
        return f"<tail kappa={t.kappa:g} start={t.start} scale={t.scale:g} offset={t.offset:g}>"
    return "points:" + ",".join(f"{x!r}^{m}" for x, m in zip(xi.positions, xi.multiplicities))


# -- tail sums ----------------------------------------------------------------

def _tail_index_for(tail: LatticeTail, reach: float, factor: float = 4.0) -> int:
    """Smallest tail index whose position exceeds ``factor * reach``."""
    target = max(factor * reach, 1.0) / tail.scale
    return max(tail.start, int(math.ceil(target ** (1.0 / tail.kappa))) + 1)


def tail_inverse_power_sum(kappa: float, n: int, c: complex, m: int,
                           tol: float = 1e-17, jmax: int = 400) -> complex:
    """``sum_{|l|>=n} (g(l) - c)**(-m)`` for the standard symmetric tail.

    Expanded in ``c / g(l)`` and summed with Hurwitz zeta values, which is
    exact up to the series truncation as long as ``|c| < g(n)``.
    ``m = 1`` is the symmetric principal value.
    """
    total = 0.0 + 0.0j
    cpow = 1.0 + 0.0j
    binom = 1.0
    gn = n ** kappa
    for j in range(jmax):
        if j > 0:
            binom *= (m + j - 1) / j
            cpow *= c
        if (m + j) % 2 == 0:
            term = 2.0 * binom * cpow * hurwitz_zeta((m + j) * kappa, n)
            total += term
            if abs(term) < tol * max(1.0, abs(total)) and abs(c) * 2 < gn:
                # remaining terms shrink at least geometrically
                if j > 4:
                    break
    return total


# -- conditions ---------------------------------------------------------------

@dataclass
class ConditionReport:
    L_grid: np.ndarray
    m_signed_series: np.ndarray
    m_alpha_series: np.ndarray
    m_signed: float
    m_alpha: float
    alpha: float
    kappa: float
    m_signed_limit: Optional[float] = None
    m_alpha_limit: Optional[float] = None
    c1_holds: Optional[bool] = None
    c2i_holds: Optional[bool] = None
    c2ii_holds: Optional[bool] = None
    c3_holds: Optional[bool] = None
    C0: Optional[float] = None
    C1: Optional[float] = None
    C2: Optional[float] = None
    beta_exp: Optional[float] = None
    m: Optional[int] = None
    exact: bool = False
    notes: list = field(default_factory=list)


def signed_moment(xi: Configuration, L: float) -> float:
    """``M(xi, L)``: sum of ``1/x`` over points in ``[-L, L]`` except 0."""
    pos, mult = xi.points_in(-L, L)
    keep = pos != 0.0
    terms = np.repeat(1.0 / pos[keep], mult[keep])
    # symmetric points cancel exactly under fsum
    return math.fsum(terms)


def alpha_moment(xi: Configuration, L: float, alpha: float) -> float:
    """``M_alpha(xi, L)``."""
    pos, mult = xi.points_in(-L, L)
    keep = pos != 0.0
    s = math.fsum(np.repeat(np.abs(pos[keep]) ** (-alpha), mult[keep]))
    return s ** (1.0 / alpha)


def cell_occupancy(xi: Configuration, kappa: float, k_lo: int, k_hi: int) -> np.ndarray:
    """``xi([g(k), g(k+1)])`` for ``k_lo <= k <= k_hi``."""
    edges = g_power(np.arange(k_lo, k_hi + 2), kappa)
    pos, mult = xi.points_in(edges[0], edges[-1])
    left = np.searchsorted(pos, edges[:-1], side="left")
    right = np.searchsorted(pos, edges[1:], side="right")
    csum = np.concatenate([[0], np.cumsum(mult)])
    return csum[right] - csum[left]


def _squared_shift_moment(xi: Configuration, a: float, L: float) -> float:
    """``M_1(tau_{-a^2} xi^<2>)``: sum over points with ``x^2 != a^2`` of
    ``1/|x^2 - a^2|``, with the lattice tail added exactly when available."""
    t = xi.tail
    if t is not None and t.is_standard:
        n = _tail_index_for(t, abs(a), factor=2.0)
        base = xi.with_explicit_radius(n ** t.kappa - 1e-9) if n > t.start else xi
        pos, mult = np.asarray(base.positions), np.asarray(base.multiplicities)
        d = np.abs(pos ** 2 - a * a)
        keep = d > 0
        s = math.fsum(mult[keep] / d[keep])
        # tail: 2 * sum_{l>=n} 1/(l^{2k} - a^2)
        tail = 0.0
        a2 = a * a
        for p in range(200):
            term = 2.0 * t.multiplicity * a2 ** p * hurwitz_zeta(2 * t.kappa * (p + 1), n)
            tail += term
            if term < 1e-17 * tail:
                break
        return s + tail
    pos, mult = xi.points_in(-L, L)
    d = np.abs(pos ** 2 - a * a)
    keep = d > 0
    return math.fsum(mult[keep] / d[keep])


def check_conditions(xi: Configuration, L_max: float, alpha: float, kappa: float,
                     n_grid: int = 24) -> ConditionReport:
    """Evaluate the decay conditions (C.1), (C.2)(i)/(ii) and (C.3).

    Window quantities are reported on a geometric grid of L up to ``L_max``.
    For configurations with a standard lattice tail the limits are exact
    (Hurwitz zeta tails); otherwise flags are decided from the trend on the
    grid and may be ``None`` (undetermined).
    """
    if not 1.0 < alpha < 2.0:
        raise InvalidParameter("alpha must lie in (1, 2)")
    if not 0.5 < kappa <= 1.0:
        raise InvalidParameter("kappa must lie in (1/2, 1]")
    if not L_max > 0:
        raise InvalidParameter("L_max must be positive")
    L_grid = np.geomspace(max(1.0, L_max / 2 ** 10), L_max, n_grid)
    ms = np.array([signed_moment(xi, L) for L in L_grid])
    ma = np.array([alpha_moment(xi, L, alpha) for L in L_grid])
    rep = ConditionReport(L_grid, ms, ma, float(ms[-1]), float(ma[-1]), alpha, kappa)

    t = xi.tail
    if t is None:
        pos = np.asarray(xi.positions)
        reach = float(np.max(np.abs(pos))) if pos.size else 0.0
        rep.exact = True
        rep.m_signed_limit = signed_moment(xi, reach + 1.0)
        rep.m_alpha_limit = alpha_moment(xi, reach + 1.0, alpha)
        if reach > L_max:
            rep.notes.append("L_max smaller than the support; limits taken over the full support")
    elif t.is_standard:
        rep.exact = True
        expl = Configuration(xi.positions, xi.multiplicities)
        rep.m_signed_limit = signed_moment(expl, np.inf)
        if alpha * t.kappa > 1.0:
            pos = np.asarray(xi.positions)
            nz = pos != 0.0
            s = math.fsum(np.repeat(np.abs(pos[nz]) ** (-alpha), np.asarray(xi.multiplicities)[nz]))
            s += 2.0 * t.multiplicity * hurwitz_zeta(alpha * t.kappa, t.start)
            rep.m_alpha_limit = s ** (1.0 / alpha)
        else:
            rep.m_alpha_limit = math.inf
    else:
        rep.notes.append("non-standard tail: limits estimated from the window trend")

    # (C.1)
    if rep.m_signed_limit is not None:
        rep.c1_holds = math.isfinite(rep.m_signed_limit)
        rep.C0 = max(float(np.max(np.abs(ms))), abs(rep.m_signed_limit)) * 1.01 + 1e-12
    else:
        half = ms[n_grid // 2:]
        spread = float(np.max(half) - np.min(half))
        if spread <= 0.05 * max(1.0, float(np.max(np.abs(ms)))):
            rep.c1_holds = True
            rep.C0 = float(np.max(np.abs(ms))) * 1.01 + 1e-12
    # (C.2)(i)
    if rep.m_alpha_limit is not None:
        rep.c2i_holds = math.isfinite(rep.m_alpha_limit)
        rep.C1 = rep.m_alpha_limit if rep.c2i_holds else None
    else:
        s = ma ** alpha
        inc1 = s[-1] - s[n_grid // 2]
        inc0 = s[n_grid // 2] - s[0]
        if inc1 < inc0:
            r = inc1 / inc0 if inc0 > 0 else 0.0
            rep.c2i_holds = True
            rep.C1 = float((s[-1] + inc1 * r / (1 - r)) ** (1 / alpha))

    # (C.2)(ii)
    if t is None:
        pos = np.asarray(xi.positions)
        vals = [_squared_shift_moment(xi, a, np.inf) * max(abs(a), 1.0) for a in pos]
        rep.beta_exp = 1.0
        rep.C2 = float(max(vals)) * 1.01 if vals else 0.0
        rep.c2ii_holds = True
    elif t.is_standard:
        beta = (2 * t.kappa - 1) / 2
        if beta > 0:
            pos, _ = xi.points_in(-L_max, L_max)
            sample = pos[:: max(1, pos.size // 200)]
            vals = np.array([_squared_shift_moment(xi, a, L_max) * max(abs(a), 1.0) ** beta
                             for a in sample])
            rep.beta_exp = beta
            rep.C2 = float(np.max(vals)) * 1.01
            far = vals[np.abs(sample) >= 0.5 * np.max(np.abs(sample))]
            rep.c2ii_holds = bool(np.max(far) <= np.max(vals))
        else:
            rep.c2ii_holds = False
    else:
        rep.notes.append("(C.2)(ii) undetermined for this tail")

    # (C.3)
    k_hi = int(math.ceil(float(g_power_inv(L_max, kappa))))
    occ = cell_occupancy(xi, kappa, -k_hi, k_hi - 1)
    rep.m = int(np.max(occ)) if occ.size else 0
    if t is None:
        rep.c3_holds = True
    elif t.symmetric and t.offset == 0.0:
        rep.c3_holds = bool(kappa <= t.kappa + 1e-12)
    return rep


# -- cluster decomposition ----------------------------------------------------

@dataclass(frozen=True)
class Cluster:
    k: int
    lo: float          # upper end of I_{k-1}
    hi: float          # lower end of I_k
    center: float
    half_gap: float
    padded_half_gap: float
    positions: tuple
    multiplicities: tuple

    @property
    def size(self) -> int:
        return int(sum(self.multiplicities))

    def members(self) -> np.ndarray:
        return np.repeat(np.asarray(self.positions, float), np.asarray(self.multiplicities, int))


@dataclass
class ClusterDecomposition:
    """Configuration-free intervals ``I_k = [lower[k], upper[k]]`` and the
    clusters between consecutive intervals."""

    kappa: float
    m: int
    lower: dict
    upper: dict
    clusters: dict
    center_on_point: tuple = ()

    def gap(self, k: int) -> float:
        return self.upper[k] - self.lower[k]

    def cluster_of(self, a: float) -> Cluster:
        for c in self.clusters.values():
            if c.lo <= a <= c.hi and a in c.positions:
                return c
        raise KeyError(a)

    def __iter__(self):
        return iter(self.clusters[k] for k in sorted(self.clusters))


def cluster_index_range(kappa: float, lo: float, hi: float) -> range:
    """Cluster indices whose intervals can touch ``[lo, hi]``."""
    k0 = int(math.floor(float(g_power_inv(lo, kappa)))) - 1
    k1 = int(math.ceil(float(g_power_inv(hi, kappa)))) + 1
    return range(k0, k1 + 1)


def decompose_clusters(xi: Configuration, kappa: float, k_range: Iterable[int],
                       m: Optional[int] = None, choice: str = "first") -> ClusterDecomposition:
    """Cluster decomposition of ``xi`` relative to the grid ``g^kappa(k)``.

    Each cell ``[g(j), g(j+1)]`` (j >= 0) is cut into ``2m+1`` equal slots;
    the chosen slot is free of points and so is its mirror image, which
    fixes ``I_{-j-1} = -I_j``. Among admissible slots the first (or last,
    with ``choice="last"``) one whose cluster centre avoids the
    configuration is taken; for ``k = 0`` the centre is 0 by symmetry and
    may coincide with a point, which is recorded in ``center_on_point``.
    """
    if not 0.5 < kappa <= 1.0:
        raise InvalidParameter("kappa must lie in (1/2, 1]")
    if choice not in ("first", "last"):
        raise InvalidParameter("choice must be 'first' or 'last'")
    ks = sorted(set(k_range))
    if not ks:
        raise InvalidParameter("empty k_range")
    need = set()
    for k in ks:
        for kk in (k - 1, k):
            need.add(kk if kk >= 0 else -kk - 1)
    jmax = max(need)
    if m is None:
        occ = cell_occupancy(xi, kappa, -jmax - 1, jmax)
        m = max(1, int(np.max(occ)))
    lower: dict = {}
    upper: dict = {}
    flagged = []
    for j in range(0, jmax + 1):
        a, b = float(g_power(j, kappa)), float(g_power(j + 1, kappa))
        h = (b - a) / (2 * m + 1)
        slots = list(range(2 * m + 1))
        if choice == "last":
            slots.reverse()
        admissible = []
        for i in slots:
            lo_i = a + i * h
            hi_i = b if i == 2 * m else a + (i + 1) * h
            if xi.count(lo_i, hi_i) == 0 and xi.count(-hi_i, -lo_i) == 0:
                admissible.append((lo_i, hi_i))
        if not admissible:
            raise ClusterError(f"no admissible interval in cell {j}; m={m} too small?")
        chosen = admissible[0]
        if j >= 1:
            for cand in admissible:
                c = 0.5 * (upper[j - 1] + cand[0])
                if xi.count(c, c) == 0 and xi.count(-c, -c) == 0:
                    chosen = cand
                    break
            else:
                flagged.append(j)
        lower[j], upper[j] = chosen
        lower[-j - 1], upper[-j - 1] = -chosen[1], -chosen[0]
    clusters = {}
    for k in ks:
        lo, hi = upper[k - 1], lower[k]
        pos, mult = xi.points_in(lo, hi)
        center = 0.5 * (lo + hi)
        if k == 0 and xi.count(0.0, 0.0) > 0:
            flagged.append(0)
        half = 0.5 * (hi - lo)
        eps = min(upper[k - 1] - lower[k - 1], upper[k] - lower[k])
        clusters[k] = Cluster(k, lo, hi, center, half, half + 0.5 * eps,
                              tuple(float(p) for p in pos), tuple(int(x) for x in mult))
    return ClusterDecomposition(kappa, m, lower, upper, clusters, tuple(sorted(set(flagged))))
