"""Classical special functions: heat kernel, Hermite polynomials, complete
symmetric and hook Schur functions, and the theta function ``theta_3``."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Integral, Rational
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidParameter

SQRT2PI = math.sqrt(2.0 * math.pi)


def heat_kernel(t, y, x):
    """``p(t, y | x) = exp(-(y-x)^2 / 2t) / sqrt(2 pi t)``.

    Complex ``y`` or ``x`` give the entire continuation. Arrays broadcast.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0):
        raise InvalidParameter("heat kernel needs t > 0")
    d = np.asarray(y) - np.asarray(x)
    out = np.exp(-d * d / (2.0 * t_arr)) / np.sqrt(2.0 * np.pi * t_arr)
    if np.ndim(out) == 0:
        return out.item()
    return out


def hermite(j: int, x):
    """Physicists' Hermite polynomial ``H_j(x)``.

    Explicit alternating series for ``j <= 20``; the three-term recurrence
    above that, where the factorials in the series would lose digits.
    """
    if j < 0:
        raise InvalidParameter("degree must be nonnegative")
    x = np.asarray(x)
    if j <= 20:
        total = np.zeros_like(x, dtype=np.result_type(x, float))
        for k in range(j // 2 + 1):
            coef = (-1) ** k * math.factorial(j) / (math.factorial(k) * math.factorial(j - 2 * k))
            total = total + coef * (2 * x) ** (j - 2 * k)
    else:
        h0 = np.ones_like(x, dtype=np.result_type(x, float))
        h1 = 2 * x * h0
        for n in range(1, j):
            h0, h1 = h1, 2 * x * h1 - 2 * n * h0
        total = h1
    return total.item() if total.ndim == 0 else total


def scaled_hermite_coefficients(jmax: int, X, c):
    """``c^j H_j(X) / j!`` for ``j = 0..jmax`` by a scaled recurrence.

    These are the Taylor coefficients of ``exp(2 X c w - c^2 w^2)`` in ``w``;
    the scaling keeps them bounded where ``H_j`` alone would overflow.
    """
    out = np.empty(jmax + 1, dtype=complex)
    out[0] = 1.0
    if jmax >= 1:
        out[1] = 2.0 * X * c
    for j in range(1, jmax):
        out[j + 1] = (2.0 * X * c * out[j] - 2.0 * c * c * out[j - 1]) / (j + 1)
    return out


# -- symmetric functions -----------------------------------------------------

def _is_exact(values) -> bool:
    return all(isinstance(v, (Integral, Rational)) and not isinstance(v, bool) for v in values)


@dataclass(frozen=True)
class SymmetricFnInput:
    """A (possibly truncated) variable sequence for symmetric functions.

    ``tail_power_sums`` optionally adds the power sums ``p_1, p_2, ...`` of
    the variables dropped by the truncation, so infinite sequences with
    summable tails are handled exactly.
    """

    variables: tuple
    tail_power_sums: Optional[tuple] = None

    @property
    def truncation_length(self) -> int:
        return len(self.variables)

    def power_sum(self, i: int):
        if _is_exact(self.variables) and self.tail_power_sums is None:
            s = sum(Fraction(v) ** i for v in self.variables)
        else:
            s = complex(sum(complex(v) ** i for v in self.variables))
            if self.tail_power_sums is not None and i - 1 < len(self.tail_power_sums):
                s += self.tail_power_sums[i - 1]
        return s

    def diagnostics(self):
        """``(sum x_j, sum x_j^2)`` including any tail."""
        return self.power_sum(1), self.power_sum(2)

    def h_bound(self, z: float) -> float:
        """Majorant ``exp(|sum x| z + sum x^2 z^2 / (1 - |x z|))`` of
        ``sum_r |h_r| z^r``; explicit variables only, tail ignored."""
        xs = np.abs(np.asarray([complex(v) for v in self.variables]))
        if np.any(xs * z >= 1):
            return math.inf
        s1 = abs(complex(self.power_sum(1)))
        return math.exp(s1 * z + float(np.sum(xs ** 2 / (1 - xs * z))) * z * z)


def _as_input(vars_) -> SymmetricFnInput:
    if isinstance(vars_, SymmetricFnInput):
        return vars_
    return SymmetricFnInput(tuple(vars_))


def complete_symmetric_from_power_sums(rmax: int, p: Sequence) -> list:
    """``h_0..h_rmax`` from power sums ``p[0] = p_1, p[1] = p_2, ...`` via
    ``r h_r = sum_{i=1}^r p_i h_{r-i}``."""
    exact = _is_exact(p[:rmax])
    h = [Fraction(1) if exact else 1.0 + 0.0j]
    for r in range(1, rmax + 1):
        acc = sum(p[i - 1] * h[r - i] for i in range(1, r + 1))
        h.append(acc / r if not exact else Fraction(acc) / r)
    return h


def complete_symmetric_all(rmax: int, vars_) -> list:
    inp = _as_input(vars_)
    p = [inp.power_sum(i) for i in range(1, rmax + 1)]
    return complete_symmetric_from_power_sums(rmax, p)


def complete_symmetric(r: int, vars_):
    """``h_r`` of the variable sequence; exact for integer/rational input."""
    if r < 0:
        return 0
    return complete_symmetric_all(r, vars_)[r]


def elementary_symmetric_all(rmax: int, vars_) -> list:
    inp = _as_input(vars_)
    p = [inp.power_sum(i) for i in range(1, rmax + 1)]
    exact = _is_exact(p)
    e = [Fraction(1) if exact else 1.0 + 0.0j]
    for r in range(1, rmax + 1):
        acc = sum((-1) ** (i - 1) * p[i - 1] * e[r - i] for i in range(1, r + 1))
        e.append(Fraction(acc) / r if exact else acc / r)
    return e


def _det(mat):
    """Determinant by fraction-free-ish Gaussian elimination; exact on
    Fractions, plain floating point otherwise."""
    a = [list(row) for row in mat]
    n = len(a)
    det = Fraction(1) if all(isinstance(v, Fraction) for row in a for v in row) else 1.0
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(a[r][col]))
        if a[piv][col] == 0:
            return 0 * det
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det = det * a[col][col]
        for r in range(col + 1, n):
            f = a[r][col] / a[col][col]
            if f != 0:
                for c in range(col, n):
                    a[r][c] = a[r][c] - f * a[col][c]
    return det


def hook_schur_from_h(k: int, l: int, h: Sequence):
    """``s_{(k|l)}`` by Jacobi-Trudi from ``h_0, h_1, ...`` (``h_{<0} = 0``)."""
    lam = [k + 1] + [1] * l
    n = l + 1

    def hh(i):
        return h[i] if 0 <= i < len(h) else 0 * h[0]
    return _det([[hh(lam[i] - i + j) for j in range(n)] for i in range(n)])


def schur_frobenius(k: int, l: int, vars_):
    """Hook Schur function ``s_{(k|l)}(x_1..x_n)`` (partition ``(k+1, 1^l)``).

    Evaluated by the Jacobi-Trudi determinant, so coincident variables need
    no limit. Zero when the partition length ``l + 1`` exceeds ``n``.
    """
    if k < 0 or l < 0:
        raise InvalidParameter("Frobenius indices must be nonnegative")
    inp = _as_input(vars_)
    if inp.tail_power_sums is None and l + 1 > len(inp.variables):
        return Fraction(0) if _is_exact(inp.variables) else 0.0
    h = complete_symmetric_all(k + l + 1, inp)
    val = hook_schur_from_h(k, l, h)
    if isinstance(val, complex) and all(isinstance(complex(v).imag, float) and complex(v).imag == 0
                                        for v in inp.variables) and inp.tail_power_sums is None:
        return val.real
    return val


def schur_bialternant(partition: Sequence[int], xs: Sequence[float]) -> float:
    """``a_{lambda+delta} / a_delta`` for distinct variables."""
    n = len(xs)
    lam = list(partition) + [0] * (n - len(partition))
    if len(lam) > n:
        return 0.0
    xs_exact = _is_exact(xs)
    conv = Fraction if xs_exact else float
    num = _det([[conv(x) ** (lam[c] + n - 1 - c) for c in range(n)] for x in xs])
    den = _det([[conv(x) ** (n - 1 - c) for c in range(n)] for x in xs])
    if den == 0:
        raise InvalidParameter("bialternant needs distinct variables")
    return num / den


# -- theta function ------------------------------------------------------------

@dataclass(frozen=True)
class ThetaArgs:
    v: complex
    tau: complex

    def __post_init__(self):
        if not complex(self.tau).imag > 0:
            raise InvalidParameter("theta3 needs Im(tau) > 0")


def _theta_direct(v: complex, tau: complex, tol: float) -> complex:
    b = tau.imag
    center = -v.imag / b
    half = int(math.ceil(math.sqrt(math.log(1.0 / tol) / (math.pi * b)))) + 2
    ells = np.arange(int(math.floor(center)) - half, int(math.ceil(center)) + half + 1)
    expo = 2j * math.pi * v * ells + 1j * math.pi * tau * ells * ells
    return complex(np.sum(np.exp(expo)))


def theta3(args: ThetaArgs | complex, tau: Optional[complex] = None, tol: float = 1e-14,
           method: str = "auto") -> complex:
    """``theta_3(v, tau) = sum_l exp(2 pi i v l + pi i tau l^2)``.

    ``method="auto"`` reduces ``Re v`` mod 1 and ``Re tau`` mod 2 and applies
    the modular transformation when ``Im tau < 1``. ``"direct"`` and
    ``"modular"`` force one route (used to cross-check the two).
    """
    if isinstance(args, ThetaArgs):
        v, tau = complex(args.v), complex(args.tau)
    else:
        if tau is None:
            raise InvalidParameter("tau is required")
        v, tau = complex(args), complex(tau)
        ThetaArgs(v, tau)
    if method not in ("auto", "direct", "modular"):
        raise InvalidParameter(f"unknown method {method!r}")
    if method == "direct":
        return _theta_direct(v, tau, tol)
    v = complex(v.real - math.floor(v.real), v.imag)
    shift = 2.0 * math.floor(tau.real / 2.0)
    tau = complex(tau.real - shift, tau.imag)
    if tau.real > 1.0:
        # tau -> tau - 1 maps v -> v + 1/2
        tau -= 1.0
        v += 0.5
    if method == "auto" and tau.imag >= 1.0:
        return _theta_direct(v, tau, tol)
    vt, tt = v / tau, -1.0 / tau
    pref = cmath.exp(-1j * math.pi * v * v / tau) * cmath.sqrt(1j / tau)
    return pref * _theta_direct(vt, tt, tol / max(abs(pref), 1e-300))
