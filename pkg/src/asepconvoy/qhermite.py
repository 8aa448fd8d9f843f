"""Continuous big q-Hermite polynomials with parameter a = 1.

H_{n+1}(x) = (2x - q^n) H_n(x) - (1 - q^n) H_{n-1}(x),  H_0 = 1, H_{-1} = 0.

They are orthogonal on [-1, 1] for a weight w with an inverse square-root
singularity at x = 1.  Integrals are done in theta = arccos(x), where
w(cos theta) sin theta is smooth.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy import integrate

from . import _accel
from ._accel import njit
from .errors import DomainError, NumericError
from .qseries import qpoch_finite, qpoch_infinite, truncation_index


def h_eval(n: int, x, q):
    """H_n(x | q) by forward recurrence.

    Scalars of type int/Fraction give exact results.  Array ``x`` is
    evaluated elementwise in float64.
    """
    if n < 0:
        raise DomainError("n must be nonnegative")
    if isinstance(x, np.ndarray):
        return h_table(n, x, float(q))[n]
    prev, cur = 0, 1
    qk = 1
    for _ in range(n):
        prev, cur = cur, (2 * x - qk) * cur - (1 - qk) * prev
        qk = qk * q
    return cur


@njit
def _h_table_loop(nmax, x, q):
    out = np.empty((nmax + 1, x.shape[0]))
    for j in range(x.shape[0]):
        prev = 0.0
        cur = 1.0
        out[0, j] = 1.0
        qk = 1.0
        for k in range(nmax):
            nxt = (2.0 * x[j] - qk) * cur - (1.0 - qk) * prev
            prev = cur
            cur = nxt
            out[k + 1, j] = cur
            qk *= q
    return out


def _h_table_numpy(nmax, x, q):
    out = np.empty((nmax + 1, x.shape[0]))
    out[0] = 1.0
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    qk = 1.0
    for k in range(nmax):
        prev, cur = cur, (2.0 * x - qk) * cur - (1.0 - qk) * prev
        out[k + 1] = cur
        qk *= q
    return out


def h_table(nmax: int, x, q: float, use_numba: bool | None = None) -> np.ndarray:
    """Array T with T[k, j] = H_k(x_j | q) for k = 0..nmax."""
    x = np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=float)))
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    if use_numba:
        return _h_table_loop(int(nmax), x, float(q))
    return _h_table_numpy(int(nmax), x, float(q))


# --- weight ---------------------------------------------------------------------

def _n_terms(q: float, tol: float) -> int:
    # each factor differs from 1 by at most 3 q^k (|alpha| <= 1)
    return max(truncation_index(3.0, q, tol), 1)


def _hfactor(x, alpha: float, q: float, tol: float):
    """h(x, alpha) = prod_k (1 - 2 alpha x q^k + alpha^2 q^{2k})."""
    n = 1 if q == 0 else _n_terms(q, tol)
    qk = q ** np.arange(n)
    x = np.asarray(x, dtype=float)
    terms = 1.0 - 2.0 * alpha * np.multiply.outer(x, qk) + alpha**2 * qk**2
    return np.prod(terms, axis=-1)


def weight_w(x, q: float, tol: float = 1e-15, form: str = "h"):
    """Orthogonality weight of H_n at x in (-1, 1).

    ``form="h"``: (q;q)_inf / (2 pi sqrt(1-x^2)) h(x,-1) h(x,sqrt q) h(x,-sqrt q).
    ``form="exp"``: (q;q)_inf / (2 pi sqrt(1-x^2)) |(e^{2i t};q)_inf|^2 / |(e^{i t};q)_inf|^2
    with x = cos t.  The truncation budget is split evenly between factors.
    """
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) >= 1):
        raise DomainError("weight_w is defined on the open interval (-1, 1)")
    pref = (qpoch_infinite(q, q) if q > 0 else 1.0) / (2 * math.pi * np.sqrt(1 - xa**2))
    if form == "h":
        sq = math.sqrt(q)
        val = _hfactor(xa, -1.0, q, tol / 3) * _hfactor(xa, sq, q, tol / 3) * _hfactor(xa, -sq, q, tol / 3)
    elif form == "exp":
        t = np.arccos(xa)
        n = 1 if q == 0 else _n_terms(q, tol / 2)
        qk = q ** np.arange(n)
        e1 = np.exp(1j * t)
        num = np.prod(1 - np.multiply.outer(e1**2, qk), axis=-1)
        den = np.prod(1 - np.multiply.outer(e1, qk), axis=-1)
        val = np.abs(num) ** 2 / np.abs(den) ** 2
    else:
        raise ValueError(f"unknown form {form!r}")
    out = pref * val
    return float(out) if np.ndim(out) == 0 else out


def weight_theta(theta, q: float, tol: float = 1e-16):
    """w(cos t) sin t, smooth and even in t.

    The k = 0 factor of |(e^{2it};q)|^2/|(e^{it};q)|^2 is 2(1 + cos t); the
    remaining factors have denominators bounded below by (1-q^k)^2.
    """
    t = np.asarray(theta, dtype=float)
    ct = np.cos(t)
    val = 2.0 * (1.0 + ct)
    if q > 0:
        n = _n_terms(q, tol)
        qk = q ** np.arange(1, n + 1)
        c2 = np.cos(2 * t)
        num = 1.0 - 2.0 * np.multiply.outer(c2, qk) + qk**2
        den = 1.0 - 2.0 * np.multiply.outer(ct, qk) + qk**2
        val = val * np.prod(num / den, axis=-1)
        val = val * qpoch_infinite(q, q)
    return val / (2 * math.pi)


def orthogonality_integral(m: int, n: int, q: float, quad_tol: float = 1e-12) -> float:
    """int_{-1}^{1} H_m H_n w dx, computed as an integral over theta in [0, pi]."""
    if max(m, n) > 40:
        raise DomainError("orthogonality_integral supports degrees up to 40")
    deg = max(m, n)

    def f(t):
        x = np.array([math.cos(t)])
        tab = h_table(deg, x, q)
        return tab[m, 0] * tab[n, 0] * float(weight_theta(t, q))

    val, err = integrate.quad(f, 0.0, math.pi, epsabs=quad_tol, epsrel=0, limit=400)
    if err > 10 * quad_tol:
        raise NumericError(f"orthogonality quadrature reached only {err:.2e}")
    return val


def gf_coeff_oracle(theta: float, q: float, N: int) -> list:
    """H_0..H_N at cos(theta) read off the generating function

        sum_n H_n t^n / (q;q)_n = (t;q)_inf / ((e^{i theta} t;q)_inf (e^{-i theta} t;q)_inf)

    by truncated power-series arithmetic in t (complex coefficients).
    """
    if N > 60:
        raise DomainError("N must be <= 60")
    if not (0 < theta <= math.pi):
        raise DomainError("theta must lie in (0, pi]")
    nk = 1 if q == 0 else _n_terms(q, 1e-18)
    series = np.zeros(N + 1, dtype=complex)
    series[0] = 1.0
    e = np.exp(1j * theta)
    for k in range(nk):
        qk = q**k if q > 0 else (1.0 if k == 0 else 0.0)
        # multiply by (1 - qk t)
        series[1:] = series[1:] - qk * series[:-1]
        # divide by (1 - e qk t)(1 - e^{-1} qk t): running geometric sums
        for a in (e * qk, np.conj(e) * qk):
            for j in range(1, N + 1):
                series[j] = series[j] + a * series[j - 1]
    out = []
    for n in range(N + 1):
        out.append(float((series[n] * qpoch_finite(q, q, n)).real))
    return out


def endpoint_limit_check(u: float, q: float, n: int):
    """(H_n(1 - u^2/(2 n^2)), cos u)."""
    x = 1.0 - u * u / (2.0 * n * n)
    return float(h_table(n, np.array([x]), q)[n, 0]), math.cos(u)


def weight_uniform_bound(q: float) -> float:
    """(sqrt 2 / pi) (q;q)_inf (-q;q)_inf^4, a bound for sqrt(1-x) w(x) on [0,1)."""
    if q == 0:
        return math.sqrt(2) / math.pi
    return math.sqrt(2) / math.pi * qpoch_infinite(q, q) * qpoch_infinite(-q, q) ** 4


def endpoint_weight_limit(q: float) -> float:
    """lim_{eps -> 0} sqrt(eps) w(1 - eps) = sqrt(2) (q;q)_inf / pi."""
    return math.sqrt(2) * (qpoch_infinite(q, q) if q > 0 else 1.0) / math.pi


def sup_abs(n: int, q: float, lo: float = -1.0, hi: float = 1.0, points: int = 4001) -> float:
    """max |H_n| over a uniform grid of [lo, hi]."""
    x = np.linspace(lo, hi, points)
    return float(np.max(np.abs(h_table(n, x, q)[n])))


def exact_value_at_one(n: int, q=Fraction(1, 2)):
    """H_n(1) in exact arithmetic (equals 1)."""
    return h_eval(n, Fraction(1), Fraction(q))
