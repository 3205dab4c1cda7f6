"""Monte Carlo oracle: Euler-Maruyama paths of Dyson's model with beta = 2,

    dX_j = dB_j + sum_{k != j} dt / (X_j - X_k),

and histogram estimators of one-point, two-point and two-time densities.

Randomness: PCG64 streams spawned from ``SeedSequence([seed, chunk])`` with
a fixed chunk size, so results depend only on the plan, never on worker
count. A step whose new state breaks the ordering guard is refined by
Brownian-bridge halving, which keeps the driving path unchanged.
"""
from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import Configuration
from .errors import InvalidParameter, StepFailure

PRNG_NAME = "numpy.PCG64 via SeedSequence([seed, chunk])"
CHUNK = 4096
MAX_HALVINGS = 20


@dataclass(frozen=True)
class SimPlan:
    initial: Configuration
    t_snapshots: tuple
    n_paths: int
    dt: float = 1e-3
    seed: int = 0
    collision_guard: float = 1e-4

    def __post_init__(self):
        if not self.initial.is_finite or self.initial.total == 0:
            raise InvalidParameter("simulation needs a nonempty finite configuration")
        ts = tuple(float(t) for t in self.t_snapshots)
        if not ts or ts[0] <= 0 or any(b <= a for a, b in zip(ts, ts[1:])):
            raise InvalidParameter("snapshot times must be positive and increasing")
        object.__setattr__(self, "t_snapshots", ts)
        if not self.dt > 0 or self.n_paths < 1 or not self.collision_guard > 0:
            raise InvalidParameter("dt, n_paths and collision_guard must be positive")

    def start(self) -> np.ndarray:
        """Initial ordered positions; a point of multiplicity ``m`` is split
        symmetrically with spacing ``g_min / 10``."""
        eps = self.collision_guard / 10
        out = []
        for a, m in zip(self.initial.positions, self.initial.multiplicities):
            out.extend(a + (j - (m - 1) / 2) * eps for j in range(m))
        return np.asarray(out, float)


@dataclass
class Snapshots:
    times: tuple
    positions: np.ndarray          # (n_times, n_paths, N), each row sorted
    plan: SimPlan
    stats: dict = field(default_factory=dict)

    def at(self, t: float) -> np.ndarray:
        for i, s in enumerate(self.times):
            if abs(s - t) <= 1e-12 * max(1.0, t):
                return self.positions[i]
        raise InvalidParameter(f"{t} is not a snapshot time")


def _drift(X: np.ndarray) -> np.ndarray:
    D = X[:, :, None] - X[:, None, :]
    N = X.shape[1]
    D[:, np.arange(N), np.arange(N)] = np.inf
    return np.sum(1.0 / D, axis=2)


def _bad(Xold: np.ndarray, Xnew: np.ndarray, gmin: float) -> np.ndarray:
    if Xnew.shape[1] < 2:
        return np.zeros(Xnew.shape[0], bool)
    gnew = np.min(np.diff(Xnew, axis=1), axis=1)
    gold = np.min(np.diff(Xold, axis=1), axis=1)
    return (gnew <= 0) | ((gnew < gmin) & (gnew < 0.5 * gold))


def _step(X, dB, h, gmin, rng, depth, stats):
    """One Euler step of size ``h`` driven by ``dB``; offending paths are
    redone as two half steps with a bridge-sampled midpoint."""
    Xn = X + dB + h * _drift(X)
    bad = _bad(X, Xn, gmin)
    if np.any(bad):
        if depth >= MAX_HALVINGS:
            g = np.min(np.diff(X[bad], axis=1), axis=1)
            raise StepFailure("collision guard unsatisfiable", halvings=depth,
                              min_gap=float(np.min(g)), step=h)
        stats["halvings"] = stats.get("halvings", 0) + int(bad.sum())
        Xb, dBb = X[bad], dB[bad]
        mid = 0.5 * dBb + np.sqrt(h / 4) * rng.standard_normal(dBb.shape)
        Xb = _step(Xb, mid, h / 2, gmin, rng, depth + 1, stats)
        Xb = _step(Xb, dBb - mid, h / 2, gmin, rng, depth + 1, stats)
        Xn[bad] = Xb
    return Xn


def _simulate_chunk(plan: SimPlan, chunk: int, n: int):
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([plan.seed, chunk])))
    x0 = plan.start()
    X = np.tile(x0, (n, 1))
    out = np.empty((len(plan.t_snapshots), n, x0.size))
    stats: dict = {}
    t_prev = 0.0
    for i, t in enumerate(plan.t_snapshots):
        span = t - t_prev
        k = max(1, int(round(span / plan.dt)))
        h = span / k
        for _ in range(k):
            dB = np.sqrt(h) * rng.standard_normal(X.shape)
            X = _step(X, dB, h, plan.collision_guard, rng, 0, stats)
        out[i] = X
        t_prev = t
    return out, stats


def simulate(plan: SimPlan, workers: Optional[int] = None) -> Snapshots:
    """Simulate ``plan.n_paths`` paths and record the snapshot positions.

    ``workers`` (default: ``DYSON_THREADS`` or 1) only affects speed.
    """
    if workers is None:
        workers = int(os.environ.get("DYSON_THREADS", "1") or 1)
    sizes = [min(CHUNK, plan.n_paths - c * CHUNK) for c in range(-(-plan.n_paths // CHUNK))]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda c: _simulate_chunk(plan, c, sizes[c]), range(len(sizes))))
    else:
        parts = [_simulate_chunk(plan, c, n) for c, n in enumerate(sizes)]
    pos = np.concatenate([p[0] for p in parts], axis=1)
    stats = {"halvings": sum(p[1].get("halvings", 0) for p in parts)}
    if pos.shape[2] > 1:
        stats["min_gap"] = float(np.min(np.diff(pos, axis=2)))
    return Snapshots(plan.t_snapshots, pos, plan, stats)


# -- estimators -----------------------------------------------------------------

@dataclass
class EmpiricalField:
    """Histogram estimate; ``edges`` is one array (1-d) or a pair (2-d)."""

    edges: tuple
    counts: np.ndarray
    n_paths: int
    values: np.ndarray
    se: np.ndarray

    @property
    def centers(self):
        return tuple(0.5 * (e[1:] + e[:-1]) for e in self.edges)


def _bin_counts(X: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Per-path particle counts in each bin, shape ``(n_paths, n_bins)``."""
    nb = edges.size - 1
    idx = np.searchsorted(edges, X, side="right") - 1
    ok = (idx >= 0) & (idx < nb) & (X <= edges[-1])
    rows = np.broadcast_to(np.arange(X.shape[0])[:, None], X.shape)
    flat = rows[ok] * nb + idx[ok]
    return np.bincount(flat, minlength=X.shape[0] * nb).reshape(X.shape[0], nb).astype(float)


def estimate_density(snaps: Snapshots, t: float, edges) -> EmpiricalField:
    """One-point density per bin with the standard error of the per-path
    count (the binomial SE when each path has one particle)."""
    edges = np.asarray(edges, float)
    C = _bin_counts(snaps.at(t), edges)
    n = C.shape[0]
    w = np.diff(edges)
    mean = C.mean(axis=0)
    var = C.var(axis=0, ddof=1) if n > 1 else np.zeros_like(mean)
    return EmpiricalField((edges,), C.sum(axis=0), n, mean / w, np.sqrt(var / n) / w)


def _pair_field(Y_mean, Y2_mean, n, area, edges, counts):
    var = np.maximum(Y2_mean - Y_mean ** 2, 0.0) * n / max(n - 1, 1)
    return EmpiricalField(edges, counts, n, Y_mean / area, np.sqrt(var / n) / area)


def estimate_two_point(snaps: Snapshots, t: float, edges) -> EmpiricalField:
    """Equal-time two-point density from ordered pairs of distinct particles."""
    edges = np.asarray(edges, float)
    C = _bin_counts(snaps.at(t), edges)
    n = C.shape[0]
    Y = C.T @ C / n
    d = np.mean(C * (C - 1), axis=0)
    Y[np.diag_indices_from(Y)] = d
    C2 = C * C
    Y2 = C2.T @ C2 / n
    Y2[np.diag_indices_from(Y2)] = np.mean((C2 - C) ** 2, axis=0)
    w = np.diff(edges)
    counts = Y * n
    return _pair_field(Y, Y2, n, np.outer(w, w), (edges, edges), counts)


def estimate_two_time(snaps: Snapshots, t1: float, t2: float, edges1, edges2=None) -> EmpiricalField:
    """Joint density of a particle near ``x`` at ``t1`` and one near ``y`` at
    ``t2`` (any pair of particles, the same one included)."""
    if abs(t1 - t2) <= 1e-12:
        return estimate_two_point(snaps, t1, edges1)
    e1 = np.asarray(edges1, float)
    e2 = e1 if edges2 is None else np.asarray(edges2, float)
    A = _bin_counts(snaps.at(t1), e1)
    B = _bin_counts(snaps.at(t2), e2)
    n = A.shape[0]
    Y = A.T @ B / n
    Y2 = (A * A).T @ (B * B) / n
    return _pair_field(Y, Y2, n, np.outer(np.diff(e1), np.diff(e2)), (e1, e2), Y * n)


def write_snapshots_csv(snaps: Snapshots, path, max_paths: Optional[int] = None) -> None:
    P = snaps.positions
    npaths = P.shape[1] if max_paths is None else min(max_paths, P.shape[1])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["path", "time"] + [f"x{j + 1}" for j in range(P.shape[2])])
        for p in range(npaths):
            for i, t in enumerate(snaps.times):
                w.writerow([p, repr(t)] + [repr(float(v)) for v in P[i, p]])


def write_field_csv(fld: EmpiricalField, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if len(fld.edges) == 1:
            e = fld.edges[0]
            w.writerow(["lo", "hi", "count", "density", "se"])
            for i in range(e.size - 1):
                w.writerow([repr(float(e[i])), repr(float(e[i + 1])), int(fld.counts[i]),
                            repr(float(fld.values[i])), repr(float(fld.se[i]))])
        else:
            e1, e2 = fld.edges
            w.writerow(["x_lo", "x_hi", "y_lo", "y_hi", "density", "se"])
            for i in range(e1.size - 1):
                for j in range(e2.size - 1):
                    w.writerow([repr(float(e1[i])), repr(float(e1[i + 1])), repr(float(e2[j])),
                                repr(float(e2[j + 1])), repr(float(fld.values[i, j])),
                                repr(float(fld.se[i, j]))])


def within_bands(fld: EmpiricalField, reference, k: float = 3.0):
    """Fraction of bins with ``|estimate - reference| <= k SE`` and the
    z-scores. A bin with no hits has zero sample SE, so the SE is floored
    at the one-count resolution ``1 / (n_paths * bin volume)``."""
    vol = np.diff(fld.edges[0])
    for e in fld.edges[1:]:
        vol = np.multiply.outer(vol, np.diff(e))
    se = np.maximum(fld.se, 1.0 / (fld.n_paths * vol))
    z = np.abs(fld.values - np.asarray(reference)) / se
    return float(np.mean(z <= k)), z
