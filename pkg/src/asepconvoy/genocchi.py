"""q-Gandhi polynomials, q-Genocchi numbers and surjective pistols.

Everything here is exact integer arithmetic.  Two small polynomial types are
used:

* :class:`BiPoly`: integer polynomial in (x, q), keys ``(xdeg, qdeg)``.
* :class:`LaurentPoly`: integer Laurent polynomial in q, keys ``qdeg``.
"""
from __future__ import annotations

import math
import re
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterator, List, Sequence, Tuple

from .errors import ConsistencyError, DomainError, ResourceError

PISTOL_MAX_N = 6


def _fmt_term(coef: int, mono: List[str]) -> str:
    if not mono:
        return str(coef)
    return "*".join([str(coef)] + mono)


def _pow(var: str, d: int) -> List[str]:
    if d == 0:
        return []
    return [var] if d == 1 else [f"{var}^{d}"]


class LaurentPoly:
    """Integer Laurent polynomial in q."""

    __slots__ = ("c",)

    def __init__(self, coeffs: Dict[int, int] | None = None):
        self.c = {k: v for k, v in (coeffs or {}).items() if v}

    @classmethod
    def const(cls, v: int) -> "LaurentPoly":
        return cls({0: v})

    @classmethod
    def monomial(cls, d: int, v: int = 1) -> "LaurentPoly":
        return cls({d: v})

    @staticmethod
    def _lift(other) -> "LaurentPoly":
        if isinstance(other, LaurentPoly):
            return other
        if isinstance(other, int):
            return LaurentPoly({0: other})
        return NotImplemented

    def __add__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        out = dict(self.c)
        for k, v in o.c.items():
            out[k] = out.get(k, 0) + v
        return LaurentPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly({k: -v for k, v in self.c.items()})

    def __sub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        out: Dict[int, int] = {}
        for i, a in self.c.items():
            for j, b in o.c.items():
                out[i + j] = out.get(i + j, 0) + a * b
        return LaurentPoly(out)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        out = LaurentPoly.const(1)
        for _ in range(e):
            out = out * self
        return out

    def __eq__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return False
        return self.c == o.c

    def __hash__(self):
        return hash(frozenset(self.c.items()))

    def min_degree(self) -> int:
        return min(self.c) if self.c else 0

    def degree(self) -> int:
        return max(self.c) if self.c else 0

    def coefficients(self) -> List[int]:
        """Dense coefficient list from q^0 upwards (polynomials only)."""
        if not self.c:
            return [0]
        if self.min_degree() < 0:
            raise ValueError("negative powers present")
        return [self.c.get(d, 0) for d in range(self.degree() + 1)]

    def evaluate(self, q):
        out = 0
        for d, v in self.c.items():
            out += v * (Fraction(q) ** d if isinstance(q, (int, Fraction)) else q**d)
        return out

    def __call__(self, q):
        return self.evaluate(q)

    def to_text(self) -> str:
        if not self.c:
            return "0"
        return " + ".join(_fmt_term(self.c[d], _pow("q", d)) for d in sorted(self.c))

    def __repr__(self):
        return f"LaurentPoly({self.to_text()})"


class BiPoly:
    """Integer polynomial in x and q, stored sparsely as {(xdeg, qdeg): coef}."""

    __slots__ = ("c",)

    def __init__(self, coeffs: Dict[Tuple[int, int], int] | None = None):
        self.c = {k: v for k, v in (coeffs or {}).items() if v}
        for i, j in self.c:
            if i < 0 or j < 0:
                raise ValueError("BiPoly degrees must be nonnegative")

    def __eq__(self, other):
        return isinstance(other, BiPoly) and self.c == other.c

    def __hash__(self):
        return hash(frozenset(self.c.items()))

    def __add__(self, other: "BiPoly") -> "BiPoly":
        out = dict(self.c)
        for k, v in other.c.items():
            out[k] = out.get(k, 0) + v
        return BiPoly(out)

    def __sub__(self, other: "BiPoly") -> "BiPoly":
        out = dict(self.c)
        for k, v in other.c.items():
            out[k] = out.get(k, 0) - v
        return BiPoly(out)

    def x_degree(self) -> int:
        return max((i for i, _ in self.c), default=0)

    def shift_x(self, d: int) -> "BiPoly":
        """Multiply by x^d."""
        return BiPoly({(i + d, j): v for (i, j), v in self.c.items()})

    def x_coeffs(self) -> List[Dict[int, int]]:
        """List indexed by x-degree of q-polynomials {qdeg: coef}."""
        out: List[Dict[int, int]] = [dict() for _ in range(self.x_degree() + 1)]
        for (i, j), v in self.c.items():
            out[i][j] = v
        return out

    @classmethod
    def from_x_coeffs(cls, rows: Sequence[Dict[int, int]]) -> "BiPoly":
        return cls({(i, j): v for i, row in enumerate(rows) for j, v in row.items()})

    def at_x1(self) -> LaurentPoly:
        out: Dict[int, int] = {}
        for (_, j), v in self.c.items():
            out[j] = out.get(j, 0) + v
        return LaurentPoly(out)

    def evaluate(self, x, q):
        return sum(v * x**i * q**j for (i, j), v in self.c.items())

    def to_text(self) -> str:
        if not self.c:
            return "0"
        keys = sorted(self.c)
        return " + ".join(_fmt_term(self.c[k], _pow("q", k[1]) + _pow("x", k[0])) for k in keys)

    def __repr__(self):
        return f"BiPoly({self.to_text()})"


_TERM = re.compile(r"^(-?\d+)((?:\*[qx](?:\^-?\d+)?)*)$")


def parse_poly(text: str):
    """Inverse of ``to_text`` for both polynomial types.

    Returns a BiPoly if any term mentions x, else a LaurentPoly.
    """
    text = text.strip()
    if text == "0":
        return LaurentPoly()
    terms = {}
    has_x = False
    for raw in text.split(" + "):
        m = _TERM.match(raw.strip())
        if not m:
            raise ValueError(f"cannot parse term {raw!r}")
        coef = int(m.group(1))
        dx = dq = 0
        for factor in filter(None, m.group(2).split("*")):
            var, _, exp = factor.partition("^")
            e = int(exp) if exp else 1
            if var == "x":
                dx += e
                has_x = True
            else:
                dq += e
        terms[(dx, dq)] = terms.get((dx, dq), 0) + coef
    if has_x:
        return BiPoly(terms)
    return LaurentPoly({dq: v for (_, dq), v in terms.items()})


# --- q-polynomial helpers on plain dicts -------------------------------------

def _padd(a: Dict[int, int], b: Dict[int, int], s: int = 1) -> Dict[int, int]:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + s * v
    return {k: v for k, v in out.items() if v}


def _pmul(a: Dict[int, int], b: Dict[int, int]) -> Dict[int, int]:
    out: Dict[int, int] = {}
    for i, u in a.items():
        for j, v in b.items():
            out[i + j] = out.get(i + j, 0) + u * v
    return {k: v for k, v in out.items() if v}


def _pshift(a: Dict[int, int], d: int, s: int = 1) -> Dict[int, int]:
    return {k + d: s * v for k, v in a.items()}


def q_hahn_delta(f: BiPoly) -> BiPoly:
    """(f(1 + qx) - f(x)) / ((1 + qx) - x), by exact division in x.

    The divisor is 1 + (q - 1)x, which has constant term 1 in x, so the
    quotient is produced coefficient by coefficient from the bottom and the
    leftover must vanish.
    """
    rows = f.x_coeffs()
    deg = len(rows) - 1
    # numerator N(x) = f(1 + qx) - f(x)
    num: List[Dict[int, int]] = [dict() for _ in range(deg + 1)]
    for i, ci in enumerate(rows):
        if not ci:
            continue
        for k in range(i + 1):
            num[k] = _padd(num[k], _pshift(ci, k, math.comb(i, k)))
        num[i] = _padd(num[i], ci, -1)
    # quotient g with num = (1 + (q-1) x) g, so g_k = num_k - (q-1) g_{k-1}
    quo: List[Dict[int, int]] = []
    prev: Dict[int, int] = {}
    for k in range(deg + 1):
        qm1_prev = _padd(_pshift(prev, 1), prev, -1)
        gk = _padd(num[k], qm1_prev, -1)
        quo.append(gk)
        prev = gk
    # the last quotient coefficient must be zero (deg g = deg f - 1)
    if quo and quo[-1]:
        raise ConsistencyError("q-Hahn division left a remainder")
    return BiPoly.from_x_coeffs(quo[:-1] if quo else [])


@lru_cache(maxsize=None)
def gandhi_poly(n: int) -> BiPoly:
    """B_1 = 1, B_n = Delta_q(x^2 B_{n-1})."""
    if n < 1:
        raise ValueError("gandhi_poly needs n >= 1")
    if n == 1:
        return BiPoly({(0, 0): 1})
    return q_hahn_delta(gandhi_poly(n - 1).shift_x(2))


def q_genocchi(n: int) -> LaurentPoly:
    """B_n(1, q) with the convention B_0 = 1."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return LaurentPoly.const(1)
    return gandhi_poly(n).at_x1()


def hsym(m: int, args: Sequence):
    """Complete homogeneous symmetric polynomial h_m(args).

    Uses h_m(x_1..x_r) = h_m(x_1..x_{r-1}) + x_r h_{m-1}(x_1..x_r).
    Works for any ring elements supporting + and * with ints.
    """
    if m < 0:
        return 0
    row = [1] + [0] * m  # h_j of the empty list
    for a in args:
        for j in range(1, m + 1):
            row[j] = row[j] + a * row[j - 1]
    return row[m]


def _qint(n: int) -> LaurentPoly:
    return LaurentPoly({d: 1 for d in range(n)})


def genocchi_via_hsym(n: int) -> LaurentPoly:
    """B_n(1,q) from the signed sum of complete homogeneous polynomials
    in [i]_q^2 / q^i, evaluated over Laurent polynomials."""
    if n < 1:
        raise ValueError("n must be >= 1")
    args = [_qint(i) ** 2 * LaurentPoly.monomial(-i) for i in range(1, n + 1)]
    total = LaurentPoly()
    fact = LaurentPoly.const(1)
    for k in range(n):
        fact = fact * _qint(k + 1)
        sign = -1 if (n - 1 - k) % 2 else 1
        term = hsym(n - 1 - k, args[: k + 1]) * fact * fact * LaurentPoly.monomial(-k * (k + 1) // 2)
        total = total + sign * term
    if total.c and total.min_degree() < 0:
        raise ConsistencyError("negative powers of q survived")
    return total


def genocchi_from_series(q, order: int) -> List[Fraction]:
    """Coefficients B_1..B_order at a rational q read off the generating series

        sum_n ([n]_q!)^2 q^n t^n / prod_{i<=n} (q^i + [i]_q^2 t),

    expanded as a formal power series in t.
    """
    q = Fraction(q)
    if q == 0:
        raise DomainError("the series is singular at q = 0")
    out = [Fraction(0)] * (order + 1)
    for n in range(1, order + 1):
        # t^n * A / prod (q^i + [i]^2 t); expand 1/prod to order - n
        series = [Fraction(0)] * (order - n + 1)
        series[0] = Fraction(1)
        for i in range(1, n + 1):
            a, b = q**i, q_number_frac(i, q) ** 2
            # multiply by 1/(a + b t) = (1/a) sum (-b/a)^k t^k
            r = -b / a
            new = [Fraction(0)] * len(series)
            for k in range(len(series)):
                acc = Fraction(0)
                p = Fraction(1)
                for j in range(k, -1, -1):
                    acc += series[j] * p
                    p *= r
                new[k] = acc / a
            series = new
        lead = q_factorial_frac(n, q) ** 2 * q**n
        for k, s in enumerate(series):
            out[n + k] += lead * s
    return out[1:]


def q_number_frac(n: int, q: Fraction) -> Fraction:
    return sum((q**i for i in range(n)), Fraction(0))


def q_factorial_frac(n: int, q: Fraction) -> Fraction:
    out = Fraction(1)
    for i in range(1, n + 1):
        out *= q_number_frac(i, q)
    return out


def genocchi_values(kmax: int, q) -> List:
    """[B_0(1,q), ..., B_kmax(1,q)] at a concrete scalar q.

    Runs the Gandhi recursion with q substituted, so the x-polynomials have
    scalar coefficients.  Exact for int/Fraction q; much cheaper than the
    symbolic route for large kmax.  Results are cached per q and extended on
    demand.
    """
    if isinstance(q, (int, Fraction)):
        q = Fraction(q)
        if q.denominator == 1:
            q = int(q)
    state = _GENOCCHI_CACHE.get(q)
    if state is None:
        if len(_GENOCCHI_CACHE) > 64:
            _GENOCCHI_CACHE.clear()
        one = 1.0 if isinstance(q, float) else 1
        state = _GENOCCHI_CACHE[q] = {"vals": [one, one], "poly": [one]}
    vals, poly = state["vals"], state["poly"]
    zero = 0.0 if isinstance(q, float) else 0
    while len(vals) <= kmax:
        f = [zero, zero] + poly  # x^2 B_{n-1}
        deg = len(f) - 1
        num = [zero] * (deg + 1)
        qk = [1]
        for _ in range(deg):
            qk.append(qk[-1] * q)
        while len(_BINOM) <= deg:
            r = len(_BINOM)
            _BINOM.append([math.comb(r, k) for k in range(r + 1)])
        for i, ci in enumerate(f):
            if ci == 0:
                continue
            row = _BINOM[i]
            for k in range(i + 1):
                num[k] += ci * row[k] * qk[k]
            num[i] -= ci
        quo = []
        prev = zero
        for k in range(deg + 1):
            prev = num[k] - (q - 1) * prev
            quo.append(prev)
        if quo[-1] != 0 and not isinstance(q, float):
            raise ConsistencyError("q-Hahn division left a remainder")
        poly = quo[:-1]
        state["poly"] = poly
        vals.append(sum(poly, zero))
    return vals[: kmax + 1]


_GENOCCHI_CACHE: Dict[object, dict] = {}
_BINOM: List[List[int]] = []


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


# --- surjective pistols --------------------------------------------------------

Pistol = Tuple[int, ...]


def enumerate_pistols(n: int) -> Iterator[Pistol]:
    """All surjections p: {1..2n} -> {2,4,..,2n} with p(i) >= i.

    Backtracking over positions.  A value v can only be hit at positions <= v,
    so a branch dies as soon as an unused value falls below the next position,
    or when fewer positions remain than unused values.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > PISTOL_MAX_N:
        raise ResourceError(f"pistol enumeration capped at n={PISTOL_MAX_N}")
    size = 2 * n
    vals = list(range(2, size + 1, 2))
    used = {v: 0 for v in vals}
    p = [0] * size

    def rec(pos: int, unused: int):
        # pos is 1-based
        if pos > size:
            if unused == 0:
                yield tuple(p)
            return
        if size - pos + 1 < unused:
            return
        for v in vals:
            if v < pos:
                if used[v] == 0:
                    return  # unreachable value: dead branch
                continue
            p[pos - 1] = v
            fresh = used[v] == 0
            used[v] += 1
            yield from rec(pos + 1, unused - (1 if fresh else 0))
            used[v] -= 1

    yield from rec(1, n)


def sinv(p: Sequence[int]) -> int:
    """Special inversions: pairs i > j with p(i) < p(j), i the rightmost
    position carrying the value p(i)."""
    last = {}
    for i, v in enumerate(p):
        last[v] = i
    count = 0
    for v, i in last.items():
        for j in range(i):
            if p[j] > v:
                count += 1
    return count


def pistol_polynomial(n: int) -> LaurentPoly:
    """sum over pistols of size 2n of q^sinv."""
    out: Dict[int, int] = {}
    for p in enumerate_pistols(n):
        s = sinv(p)
        out[s] = out.get(s, 0) + 1
    return LaurentPoly(out)
