"""Exact and closed-form engines for the expected convoy size.

Three independent routes to E_x[Q_{n+1} - Q_1]:

* ``expected_convoy_dp``: the triangular recursion for E[q^{k Q_i}];
* ``expected_convoy_genocchi``: binomial sum over q-Genocchi numbers;
* ``expected_convoy_tasep``: the terminating 2F1 form at q = 0.

Rational inputs (``Fraction``/``int``) give exact rational outputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence

import mpmath
from scipy import integrate

from .errors import DomainError
from .genocchi import catalan, genocchi_values
from .qseries import qpoch_finite


def as_scalar(v):
    """Accept ints, Fractions, floats and "p/q" strings."""
    if isinstance(v, str):
        v = v.strip()
        if "/" in v or v.lstrip("-").isdigit():
            return Fraction(v)
        return float(v)
    if isinstance(v, bool):
        raise TypeError("bool is not a scalar")
    if isinstance(v, int):
        return Fraction(v)
    return v


def _is_exact(*vals) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in vals)


@dataclass(frozen=True)
class ModelParams:
    """Asymmetry q in [0,1) and speed coordinate x in (0,1)."""

    q: object
    x: object

    def __post_init__(self):
        object.__setattr__(self, "q", as_scalar(self.q))
        object.__setattr__(self, "x", as_scalar(self.x))
        if not (0 <= self.q < 1):
            raise DomainError(f"q must lie in [0,1), got {self.q}")
        if not (0 < self.x < 1):
            raise DomainError(f"x must lie in (0,1), got {self.x}")

    @property
    def c(self):
        return self.x * (1 - self.x)

    @property
    def exact(self) -> bool:
        return _is_exact(self.q, self.x)

    def as_float(self) -> "ModelParams":
        return ModelParams(float(self.q), float(self.x))


def moment_q1(k: int, q):
    """E[q^{k Q_1}] = (q;q)_k."""
    if k < 1:
        raise DomainError("k must be >= 1")
    return qpoch_finite(q, q, k)


@dataclass
class MomentTable:
    """m[i][k] = E[q^{k Q_i}] for 1 <= i <= n+1 and 1 <= k <= n+2-i."""

    n: int
    rows: List[list]
    exact: bool

    def m(self, i: int, k: int):
        return self.rows[i - 1][k - 1]


def _dp_rows(n, q, c):
    row = []
    p = 1
    for k in range(1, n + 2):
        p = p * (1 - q**k)
        row.append(p)
    rows = [row]
    for _ in range(n):
        new = []
        for k in range(1, len(row)):
            qk = q**k
            a = qk + 1 / qk - 2
            b = 1 - 1 / qk
            new.append((1 + c * a) * row[k - 1] + c * b * row[k])
        row = new
        rows.append(row)
    return rows


def _guard_bits(n: int, q: float) -> int:
    # one recursion step at level k amplifies errors by at most ~q^{-k};
    # chaining levels n, n-1, ..., 1 bounds the total by q^{-n(n+1)/2}
    return 64 + int(math.ceil(n * (n + 1) / 2 * math.log2(1 / q)))


def build_moment_table(n: int, params: ModelParams, mode: str | None = None) -> MomentTable:
    """Fill the moment triangle from the seed row (q;q)_k.

    ``mode`` is "exact" (rationals), "numeric" (extended precision, floats
    out) or None (exact iff the parameters are rational).  The recursion
    subtracts quantities of size q^{-k}; in numeric mode the working precision
    is raised by the worst-case amplification so that the float output is
    correctly rounded to about 1e-15.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if params.q == 0:
        raise DomainError("q = 0 is singular for the moment recursion; use expected_convoy_tasep")
    if mode is None:
        mode = "exact" if params.exact else "numeric"
    if mode == "exact":
        if not params.exact:
            q, x = Fraction(params.q), Fraction(params.x)
        else:
            q, x = params.q, params.x
        return MomentTable(n, _dp_rows(n, q, x * (1 - x)), True)
    if mode != "numeric":
        raise ValueError(f"unknown mode {mode!r}")
    with mpmath.workprec(_guard_bits(n, float(params.q))):
        q = mpmath.mpf(Fraction(params.q).numerator) / Fraction(params.q).denominator
        x = mpmath.mpf(Fraction(params.x).numerator) / Fraction(params.x).denominator
        rows = _dp_rows(n, q, x * (1 - x))
        rows = [[float(v) for v in r] for r in rows]
    return MomentTable(n, rows, False)


def expected_convoy_dp(n: int, params: ModelParams, mode: str | None = None):
    """c * sum_{i=1}^n E[q^{Q_i}] = E[Q_{n+1} - Q_1]."""
    t = build_moment_table(n, params, mode)
    x = Fraction(params.x) if t.exact else float(params.x)
    c = x * (1 - x)
    return c * sum(t.rows[i][0] for i in range(n))


def _exactify(params: ModelParams):
    return Fraction(params.q), Fraction(params.x)


def expected_convoy_genocchi(n: int, params: ModelParams):
    """sum_{k=0}^{n-1} (-1)^k (1-q)^{2k+1} c^{k+1} C(n,k+1) B_k(1,q).

    Float parameters are converted to their exact binary rationals, the sum
    is formed exactly and rounded once at the end (the alternating sum is
    far too cancellation-prone for floating point).
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    q, x = _exactify(params)
    c = x * (1 - x)
    B = genocchi_values(n - 1, q)
    one_q2 = (1 - q) ** 2
    term_q = 1 - q
    cpow = c
    total = Fraction(0)
    for k in range(n):
        s = Fraction(math.comb(n, k + 1)) * term_q * cpow * B[k]
        total += -s if k % 2 else s
        term_q *= one_q2
        cpow *= c
    return total if params.exact else float(total)


def moment_qQn_closed(n: int, params: ModelParams):
    """E[q^{Q_{n+1}}] = sum_{k=0}^n (1-q)^{2k+1} (-c)^k C(n,k) B_k(1,q)."""
    if n < 0:
        raise DomainError("n must be >= 0")
    q, x = _exactify(params)
    c = x * (1 - x)
    B = genocchi_values(n, q)
    total = Fraction(0)
    for k in range(n + 1):
        total += (1 - q) ** (2 * k + 1) * (-c) ** k * math.comb(n, k) * B[k]
    return total if params.exact else float(total)


def hyp2f1_terminating(a: int, b, d, z):
    """sum_{k=0}^{-a} (a)_k (b)_k / ((d)_k k!) z^k for a in {0,-1,-2,...}.

    Exact when b, d, z are rational.  Otherwise the alternating sum is
    evaluated in mpmath with enough digits to cover the largest term.
    """
    if a > 0 or int(a) != a:
        raise DomainError("a must be a nonpositive integer")
    a = int(a)
    if _is_nonpos_int(d):
        raise DomainError("d must not be a nonpositive integer")
    if _is_exact(b, d, z):
        b, d, z = Fraction(b), Fraction(d), Fraction(z)
        term = Fraction(1)
        total = Fraction(1)
        for k in range(-a):
            term = term * (a + k) * (b + k) / ((d + k) * (k + 1)) * z
            total += term
        return total
    b, d, z = float(b), float(d), float(z)
    # locate the largest term in log scale to size the working precision
    lt, lmax = 0.0, 0.0
    for k in range(-a):
        num = abs(a + k) * abs(b + k) * abs(z)
        if num == 0:
            break
        lt += math.log(num) - math.log(abs(d + k)) - math.log(k + 1)
        lmax = max(lmax, lt)
    dps = 20 + int(lmax / math.log(10))
    with mpmath.workdps(dps):
        bm, dm, zm = mpmath.mpf(b), mpmath.mpf(d), mpmath.mpf(z)
        term = mpmath.mpf(1)
        total = mpmath.mpf(1)
        for k in range(-a):
            term = term * (a + k) * (bm + k) / ((dm + k) * (k + 1)) * zm
            total += term
        return float(total)


def _is_nonpos_int(v) -> bool:
    try:
        return v <= 0 and int(v) == v
    except (TypeError, ValueError):
        return False


def expected_convoy_tasep(n: int, x):
    """q = 0 closed form: (2F1(-n, -1/2; 1; 4c) - 1) / 2."""
    if n < 1:
        raise DomainError("n must be >= 1")
    x = as_scalar(x)
    if not (0 < x < 1):
        raise DomainError("x must lie in (0,1)")
    c = x * (1 - x)
    if _is_exact(x):
        return (hyp2f1_terminating(-n, Fraction(-1, 2), 1, 4 * c) - 1) / 2
    return (hyp2f1_terminating(-n, -0.5, 1.0, 4 * c) - 1) / 2


def expected_convoy(n: int, params: ModelParams, method: str = "auto"):
    """Dispatch to one exact engine; q = 0 always takes the TASEP path."""
    if method == "auto":
        method = "tasep" if params.q == 0 else "genocchi"
    if method == "tasep":
        if params.q != 0:
            raise DomainError("the TASEP formula needs q = 0")
        return expected_convoy_tasep(n, params.x)
    if method == "genocchi":
        return expected_convoy_genocchi(n, params)
    if method == "dp":
        return expected_convoy_dp(n, params)
    raise ValueError(f"unknown method {method!r}")


def asymptotic_expected(n: int, x) -> float:
    """sqrt(4 c n / pi), the leading-order expected convoy size."""
    x = float(as_scalar(x))
    return math.sqrt(4 * x * (1 - x) * n / math.pi)


def universal_constant() -> float:
    """Limit of E[#C_n]/sqrt(n) with the speed x averaged uniformly."""
    return math.sqrt(math.pi) / 4


def convoy_coefficients_in_c(n: int, q) -> List[Fraction]:
    """Coefficients e_j with E = sum_j e_j c^j (j = 1..n), exact in q."""
    q = Fraction(q)
    # at q = 0 the Genocchi numbers reduce to Catalan numbers
    B = [catalan(k) for k in range(n)] if q == 0 else genocchi_values(n - 1, q)
    out = [Fraction(0)] * (n + 1)
    for k in range(n):
        out[k + 1] = (-1) ** k * (1 - q) ** (2 * k + 1) * math.comb(n, k + 1) * B[k]
    return out


def unconditional_expected(n: int, q=0, method: str = "quad"):
    """Average of the expected convoy size over x ~ Uniform(0,1).

    ``method="quad"`` integrates the pointwise engine adaptively;
    ``method="exact"`` integrates the polynomial in c term by term with
    int_0^1 (x(1-x))^j dx = (j!)^2 / (2j+1)!.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    q = as_scalar(q)
    if method == "exact":
        coef = convoy_coefficients_in_c(n, q)
        val = sum(coef[j] * Fraction(math.factorial(j) ** 2, math.factorial(2 * j + 1)) for j in range(1, n + 1))
        return val if _is_exact(q) else float(val)
    if method != "quad":
        raise ValueError(f"unknown method {method!r}")
    if q == 0:
        f = lambda x: expected_convoy_tasep(n, float(x))
    else:
        qf = float(q)
        f = lambda x: float(expected_convoy_genocchi(n, ModelParams(qf, float(x))))
    # the integrand is symmetric about x = 1/2
    val, _ = integrate.quad(f, 0.0, 0.5, epsabs=1e-12, epsrel=1e-10, limit=200)
    return 2 * val


def monotone_in_n(values: Sequence) -> bool:
    return all(b >= a for a, b in zip(values, values[1:]))
