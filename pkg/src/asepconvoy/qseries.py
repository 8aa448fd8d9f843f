"""q-Pochhammer symbols, q-numbers and the q-Gamma function.

Finite products are generic over the scalar type, so ``Fraction`` inputs give
exact results.  Infinite products are always floating point.
"""
from __future__ import annotations

import cmath
import math
from fractions import Fraction
from numbers import Number

import numpy as np

from .errors import DomainError

DEFAULT_TOL = 1e-15


def _check_q(q) -> None:
    if not (0 <= q < 1):
        raise DomainError(f"q must lie in [0, 1), got {q!r}")


def qpoch_finite(a, q, n: int):
    """Return (a; q)_n = prod_{i<n} (1 - a q^i)."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    out = 1 if isinstance(a, (int, Fraction)) and isinstance(q, (int, Fraction)) else 1.0
    qi = 1
    for _ in range(n):
        out = out * (1 - a * qi)
        qi = qi * q
    return out


def truncation_index(absa: float, q: float, tol: float) -> int:
    """Smallest N with |a| q^N / (1-q) < tol/2 and |a| q^N <= 1/2.

    For such N the logarithm of the neglected tail of (a; q)_inf is below tol,
    because |log(1 - y)| <= 2|y| when |y| <= 1/2.
    """
    if absa == 0:
        return 0
    if q == 0:
        return 1
    bound = min(0.5, 0.5 * tol * (1 - q))
    # q^N * absa < bound
    n = math.ceil((math.log(bound) - math.log(absa)) / math.log(q))
    n = max(n, 0)
    while absa * q**n >= bound:
        n += 1
    while n > 0 and absa * q ** (n - 1) < bound:
        n -= 1
    return n


def qpoch_infinite(a, q: float, tol: float = DEFAULT_TOL):
    """(a; q)_inf truncated so that the relative error is at most ``tol``.

    ``a`` may be complex.  Returns a float for real ``a``.
    """
    _check_q(q)
    if tol <= 0:
        raise DomainError("tol must be positive")
    a_c = complex(a)
    n = truncation_index(abs(a_c), float(q), tol)
    if n == 0:
        return 1.0 if a_c.imag == 0 else complex(1.0)
    powers = float(q) ** np.arange(n)
    if a_c.imag == 0:
        terms = 1.0 - a_c.real * powers
        if np.all(terms > 0):
            return math.exp(math.fsum(np.log1p(-a_c.real * powers)))
        return float(np.prod(terms))
    terms = 1.0 - a_c * powers
    return complex(np.prod(terms))


def log_qpoch_infinite(a: float, q: float, tol: float = DEFAULT_TOL) -> float:
    """log (a; q)_inf for real a < 1; safe where the product itself underflows."""
    _check_q(q)
    if a >= 1:
        raise DomainError("log_qpoch_infinite needs a < 1")
    n = truncation_index(abs(a), q, tol)
    if n == 0:
        return 0.0
    return math.fsum(np.log1p(-a * float(q) ** np.arange(n)))


def qpoch_tail(k: int, q: float, tol: float = DEFAULT_TOL) -> float:
    """(q^{k+1}; q)_inf, i.e. (q;q)_inf / (q;q)_k without cancellation."""
    _check_q(q)
    if q == 0:
        return 1.0
    return math.exp(log_qpoch_infinite(q ** (k + 1), q, tol))


def q_number(n: int, q):
    """[n]_q = 1 + q + ... + q^{n-1}."""
    out = 0
    qi = 1
    for _ in range(n):
        out = out + qi
        qi = qi * q
    return out


def q_factorial(n: int, q):
    """[n]_q! = [1]_q [2]_q ... [n]_q."""
    out = 1
    for i in range(1, n + 1):
        out = out * q_number(i, q)
    return out


def initial_law(q: float, tail_tol: float = 1e-14) -> np.ndarray:
    """Probabilities pi_k = (q;q)_inf q^k / (q;q)_k for k = 0..K.

    K is the first level where the remaining mass drops below ``tail_tol``.
    The returned vector is not renormalised.
    """
    _check_q(q)
    if q == 0:
        return np.array([1.0])
    p0 = qpoch_infinite(q, q)
    probs = [p0]
    acc = p0
    k = 0
    while 1.0 - acc >= tail_tol:
        k += 1
        nxt = probs[-1] * q / (1.0 - q**k)
        probs.append(nxt)
        acc += nxt
        # rounding in acc can stall near 1; the geometric bound pi_j <= q^j
        # gives a hard stop
        if q ** (k + 1) / (1 - q) < tail_tol:
            break
    return np.array(probs)


def q_gamma(z, q: float, tol: float = DEFAULT_TOL):
    """Gamma_q(z) = (1-q)^{1-z} (q;q)_inf / (q^z;q)_inf for q in (0, 1).

    Evaluated as a sum of logarithms of the paired factors
    (1 - q^{i+1}) / (1 - q^{z+i}), which stays finite when both products
    underflow as q -> 1.
    """
    if not (0 < q < 1):
        raise DomainError(f"q_gamma needs q in (0, 1), got {q!r}")
    zc = complex(z)
    if zc.imag == 0 and zc.real <= 0 and zc.real == math.floor(zc.real):
        raise DomainError(f"q_gamma has a pole at z = {zc.real:g}")
    lq = math.log(q)
    qz = cmath.exp(zc * lq)
    n = max(truncation_index(q, q, tol / 2), truncation_index(abs(qz), q, tol / 2), 1)
    i = np.arange(n)
    qi = np.exp(i * lq)
    num = np.log1p(-q * qi)
    den = np.log(1.0 - qz * qi.astype(complex))
    logg = (1 - zc) * math.log1p(-q) + num.sum() - den.sum()
    val = cmath.exp(logg)
    if isinstance(z, Number) and not isinstance(z, complex):
        return val.real
    return val
