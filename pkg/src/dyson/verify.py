"""Named property suites. Each returns a list of ``Check`` records; the CLI
prints them and the acceptance tests assert on them."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from .config import (Configuration, alpha_moment, decompose_clusters,
                     signed_moment)
from .correlations import smn_kernel, smn_matrix
from .kernels import (KernelSpec, SpaceTimePoint, cluster_identity, kernel_cluster,
                      kernel_finite_contour, kernel_finite_residue, kernel_infinite,
                      kernel_lattice_direct, kernel_lattice_lsum, kernel_lattice_theta,
                      lattice_equal_time_remark)
from .mhermite import (MultiHermiteBasis, biorth_pair, det_identity_check,
                       intertwine_errors)
from .quadrature import _leggauss
from .specfun import theta3


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: {self.value:.3e} (threshold {self.threshold:.1e})"


def _le(name, value, thr) -> Check:
    return Check(name, bool(value < thr), float(value), float(thr))


def _random_simple(rng, n, lo=-2.0, hi=2.0, min_gap=0.05):
    while True:
        x = np.sort(rng.uniform(lo, hi, n))
        if n == 1 or np.min(np.diff(x)) > min_gap:
            return x


def suite_biorth(seed: int = 1) -> List[Check]:
    rng = np.random.default_rng(seed)
    out = []
    for label, pts in (("random N=4", _random_simple(rng, 4)),
                       ("confluent (0,0,1,1)", np.array([0.0, 0.0, 1.0, 1.0]))):
        xi = Configuration.from_points(pts) if label.startswith("random") else \
            Configuration.from_pairs([(0.0, 2), (1.0, 2)])
        b = MultiHermiteBasis(xi)
        err = max(abs(biorth_pair(b, j, k) - (j == k)) for j in range(b.N) for k in range(b.N))
        out.append(_le(f"biorthonormality {label}", err, 1e-8))
    return out


def suite_det_lemma(seed: int = 2, draws: int = 20) -> List[Check]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(draws):
        n = 1 + i % 4
        x = _random_simple(rng, n, -1.5, 1.5, 0.1)
        y = _random_simple(rng, n, -2.0, 2.0, 0.1)
        lhs, rhs = det_identity_check(MultiHermiteBasis(x), y)
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-300))
    b = MultiHermiteBasis(Configuration.from_pairs([(0.0, 2), (1.0, 1)]))
    y = np.array([-0.4, 0.5, 1.3])
    lhs, rhs = det_identity_check(b, y)
    return [_le(f"determinant lemma, {draws} draws N<=4 (rel)", worst, 1e-8),
            _le("determinant lemma, double point (0,0,1)", abs(lhs - rhs), 1e-6)]


def suite_intertwine(t1: float = 0.3, t2: float = 0.9) -> List[Check]:
    b = MultiHermiteBasis([-0.8, -0.1, 0.35, 1.2])
    e1 = e2 = e3 = 0.0
    for j in range(b.N):
        for k in range(b.N):
            a, c, d = intertwine_errors(b, j, k, t1, t2, 0.15, -0.45)
            e1, e2, e3 = max(e1, a), max(e2, c), max(e3, d)
    return [_le("phi^- relation", e1, 1e-7), _le("phi^+ relation", e2, 1e-7),
            _le("double integral = delta", e3, 1e-7)]


def forms_tuples():
    s_t = [(0.25, 0.25), (0.5, 1.0), (1.0, 0.5), (0.3, 0.7), (1.2, 1.2)]
    xy = [(0.0, 0.0), (0.4, -0.6), (-1.1, 0.9), (1.5, 1.3), (-0.2, 2.1)]
    return [(s, x, t, y) for (s, t) in s_t for (x, y) in xy]


def suite_forms_agree() -> List[Check]:
    configs = [Configuration.from_points(p) for p in
               ([0.0], [-0.5, 0.5], [-1.0, 0.2, 0.9], [-1.3, -0.4, 0.3, 1.6])]
    worst = 0.0
    for xi in configs:
        for (s, x, t, y) in forms_tuples():
            p1, p2 = SpaceTimePoint(s, x), SpaceTimePoint(t, y)
            a = kernel_finite_contour(KernelSpec("finite_contour", xi), p1, p2).value
            r = kernel_finite_residue(KernelSpec("finite_residue", xi), p1, p2).value
            worst = max(worst, abs(a - r))
    b = MultiHermiteBasis(configs[-1])
    worst_s = 0.0
    for (s, x, t, y) in forms_tuples():
        a = kernel_finite_contour(KernelSpec("finite_contour", configs[-1]),
                                  SpaceTimePoint(s, x), SpaceTimePoint(t, y)).value
        worst_s = max(worst_s, abs(smn_kernel(s, t, x, y, b, subtract=True) - a))
    return [_le("contour vs residue form, N<=4, 25 tuples", worst, 1e-8),
            _le("biorthogonal sum vs contour form, N=4", worst_s, 1e-8)]


def suite_theta() -> List[Check]:
    times = (0.1, 0.5, 1.0)
    xs = np.linspace(-2, 2, 5)
    worst = 0.0
    worst_l = 0.0
    for s in times:
        for t in times:
            for x in xs:
                for y in xs:
                    p1, p2 = SpaceTimePoint(s, x), SpaceTimePoint(t, y)
                    a = kernel_lattice_theta(p1, p2).value
                    worst = max(worst, abs(a - kernel_lattice_direct(p1, p2).value))
                    if x == xs[1]:
                        worst_l = max(worst_l, abs(a - kernel_lattice_lsum(p1, p2).value))
    per = 0.0
    for (s, x, t, y) in ((0.3, 0.2, 0.7, -0.4), (0.5, -0.9, 0.5, 0.6)):
        k0 = kernel_lattice_theta(SpaceTimePoint(s, x), SpaceTimePoint(t, y)).value
        k1 = kernel_lattice_theta(SpaceTimePoint(s, x + 1), SpaceTimePoint(t, y + 1)).value
        per = max(per, abs(k0 - k1))
    rem = 0.0
    asym = 0.0
    offs = np.array([-1.65, -0.4, 0.25, 0.8, 1.35])
    for t in (0.1, 0.5):
        for x in offs:
            for y in offs:
                k = kernel_lattice_theta(SpaceTimePoint(t, x), SpaceTimePoint(t, y)).value
                rem = max(rem, abs(k - lattice_equal_time_remark(t, x, y).real))
                kt = kernel_lattice_theta(SpaceTimePoint(t, y), SpaceTimePoint(t, x)).value
                asym = max(asym, abs(k - kt))
    mod = 0.0
    for v, tau in ((0.3 + 0.1j, 0.7j), (0.1 - 0.2j, 0.4 + 1.1j), (0.45, 1.3j)):
        mod = max(mod, abs(theta3(v, tau, method="direct") - theta3(v, tau, method="modular")))
    return [_le("theta form vs direct lattice sum", worst, 1e-8),
            _le("theta form vs l-sum form", worst_l, 1e-8),
            _le("lattice periodicity", per, 1e-10),
            _le("equal-time closed form", rem, 1e-9),
            Check("asymmetry witness |K(x,y)-K(y,x)|", bool(asym > 1e-4), asym, 1e-4),
            _le("theta3 modular vs direct", mod, 1e-12)]


def suite_cluster() -> List[Check]:
    Z = Configuration.integers()
    ident = 0.0
    z = np.array([0.3 + 0.4j, -1.7 + 0.2j, 2.4 - 0.6j, 0.55])
    for xi in (Z, Z.restrict(6)):
        for kappa in (0.9, 0.75):
            dec = decompose_clusters(xi, kappa, range(-8, 9))
            for k, cl in dec.clusters.items():
                if cl.size == 0:
                    continue
                lhs, rhs = cluster_identity(0.5, xi, z, 0.2, k, dec)
                ident = max(ident, float(np.max(np.abs(lhs - rhs))))
    kern = 0.0
    inv = 0.0
    for (s, x, t, y) in ((0.5, 0.1, 0.8, -0.3), (1.0, 0.2, 0.4, 1.1), (0.3, 0.0, 0.3, 0.6)):
        p1, p2 = SpaceTimePoint(s, x), SpaceTimePoint(t, y)
        phi_form = kernel_infinite(KernelSpec("infinite_limit", Z), p1, p2).value
        c1 = kernel_cluster(KernelSpec("cluster", Z, cluster_choice="first"), p1, p2).value
        c2 = kernel_cluster(KernelSpec("cluster", Z, cluster_choice="last"), p1, p2).value
        kern = max(kern, abs(c1 - phi_form))
        inv = max(inv, abs(c1 - c2))
    return [_le("cluster identity on integer-lattice windows", ident, 1e-8),
            _le("cluster kernel vs Phi-form kernel", kern, 1e-7),
            _le("invariance under two decompositions", inv, 1e-7)]


def bin_average(f: Callable, lo: float, hi: float, order: int = 4) -> float:
    g, w = _leggauss(order)
    x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * g
    return 0.5 * float(np.dot(w, [f(v) for v in x]))


def mc_n2_checks(n_paths: int = 100_000, seed: int = 11, dt: float = 1e-3) -> List[Check]:
    from .mcsim import (SimPlan, estimate_density, estimate_two_point, estimate_two_time,
                        simulate, within_bands)
    xi = Configuration.from_points([-0.5, 0.5])
    b = MultiHermiteBasis(xi)
    snaps = simulate(SimPlan(xi, (0.25, 0.5), n_paths, dt=dt, seed=seed))
    e1 = np.linspace(-2.5, 2.5, 41)
    f1 = estimate_density(snaps, 0.5, e1)
    ref1 = [bin_average(lambda x: smn_kernel(0.5, 0.5, x, x, b), e1[i], e1[i + 1])
            for i in range(e1.size - 1)]
    frac1, _ = within_bands(f1, ref1)
    e8 = np.linspace(-2, 2, 9)

    def rho2(x, y):
        return float(np.linalg.det(smn_matrix(0.5, 0.5, [x, y], [x, y], b)))

    def rho_tt(x, y):
        return (smn_kernel(0.25, 0.25, x, x, b) * smn_kernel(0.5, 0.5, y, y, b)
                - smn_kernel(0.25, 0.5, x, y, b, True) * smn_kernel(0.5, 0.25, y, x, b, True))

    def grid_ref(f):
        return np.array([[bin_average(lambda x: bin_average(lambda y: f(x, y), e8[j], e8[j + 1]),
                                      e8[i], e8[i + 1]) for j in range(8)] for i in range(8)])

    frac2, _ = within_bands(estimate_two_point(snaps, 0.5, e8), grid_ref(rho2))
    frac3, _ = within_bands(estimate_two_time(snaps, 0.25, 0.5, e8), grid_ref(rho_tt))
    gap = snaps.stats.get("min_gap", 1.0)

    def ge(name, v):
        return Check(name, bool(v >= 0.95), v, 0.95)

    return [ge("rho1 bins within 3 SE (fraction)", frac1),
            ge("rho2 8x8 cells within 3 SE (fraction)", frac2),
            ge("two-time 8x8 cells within 3 SE (fraction)", frac3),
            Check("paths never collide (min gap)", bool(gap > 0), gap, 0.0)]


def suite_mc_n2() -> List[Check]:
    return mc_n2_checks(n_paths=20_000)


def suite_conditions() -> List[Check]:
    eta = Configuration.lattice(0.8)
    Ls = [1.0, 2.5, 7.0, 30.0, 111.0, 500.0, 2000.0]
    worst = max(abs(signed_moment(eta, L)) for L in Ls)
    Lgrid = np.geomspace(2, 4000, 12)
    ma = np.array([alpha_moment(eta, L, 1.5) for L in Lgrid])
    s = ma ** 1.5
    inc = np.diff(s)
    from scipy.special import zeta
    limit = (2 * zeta(1.5 * 0.8, 1)) ** (1 / 1.5)
    trend = bool(np.all(inc >= 0) and np.all(ma <= limit) and inc[-1] < inc[len(inc) // 2])
    return [Check("M(eta, L) == 0 exactly", worst == 0.0, worst, 0.0),
            Check("M_alpha(eta^0.8, L) bounded (alpha=1.5)", trend, float(ma[-1]), float(limit))]


SUITES: Dict[str, Callable[[], List[Check]]] = {
    "biorth": suite_biorth,
    "det-lemma": suite_det_lemma,
    "intertwine": suite_intertwine,
    "forms-agree": suite_forms_agree,
    "theta": suite_theta,
    "cluster": suite_cluster,
    "mc-n2": suite_mc_n2,
    "conditions": suite_conditions,
}
