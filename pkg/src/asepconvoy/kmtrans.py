"""n-step transition probabilities of the queue chain.

The chain on {0, 1, 2, ...} moves up with probability c, down with
probability c(1 - q^k) and stays otherwise.  Two independent routes:

* spectral: P(Q_{n+1}=j | Q_1=i) = (1/(q;q)_j) int (1-2c+2cz)^n H_i H_j w dz;
* brute force: powers of the truncated transition matrix.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy import integrate

from . import _accel
from ._accel import njit
from .errors import NumericError, PreconditionError
from .moments import ModelParams
from .qhermite import h_table, weight_theta
from .qseries import initial_law, qpoch_finite


def rates(params: ModelParams, K: int):
    """(up, down, stay) arrays on levels 0..K; the up-move at K is folded into stay."""
    q, c = float(params.q), float(params.c)
    k = np.arange(K + 1)
    qk = q**k if q > 0 else (k == 0).astype(float)
    up = np.full(K + 1, c)
    down = c * (1.0 - qk)
    up[K] = 0.0
    stay = 1.0 - up - down
    return up, down, stay


@njit
def _propagate_loop(v, up, down, stay, nsteps):
    K = v.shape[0] - 1
    cur = v.copy()
    nxt = np.empty_like(cur)
    for _ in range(nsteps):
        for k in range(K + 1):
            acc = cur[k] * stay[k]
            if k > 0:
                acc += cur[k - 1] * up[k - 1]
            if k < K:
                acc += cur[k + 1] * down[k + 1]
            nxt[k] = acc
        cur, nxt = nxt, cur
    return cur


def _propagate_numpy(v, up, down, stay, nsteps):
    cur = v.copy()
    for _ in range(nsteps):
        nxt = cur * stay
        nxt[1:] += cur[:-1] * up[:-1]
        nxt[:-1] += cur[1:] * down[1:]
        cur = nxt
    return cur


def propagate(v: np.ndarray, params: ModelParams, nsteps: int, use_numba: bool | None = None) -> np.ndarray:
    """Row vector v times P^nsteps for the chain truncated at len(v)-1."""
    K = len(v) - 1
    up, down, stay = rates(params, K)
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    v = np.ascontiguousarray(v, dtype=float)
    if use_numba:
        return _propagate_loop(v, up, down, stay, int(nsteps))
    return _propagate_numpy(v, up, down, stay, int(nsteps))


def matrix_row(i: int, n: int, params: ModelParams, K: int | None = None) -> np.ndarray:
    """Law of Q_{n+1} given Q_1 = i on levels 0..K."""
    if K is None:
        K = i + n + 1
    if K < i + n:
        raise PreconditionError(f"K={K} < i+n={i + n}: truncation could be felt")
    v = np.zeros(K + 1)
    v[i] = 1.0
    return propagate(v, params, n)


def matrix_transition(i: int, j: int, n: int, params: ModelParams, K: int | None = None) -> float:
    """(P^n)_{ij} from the truncated matrix (exact up to roundoff when K >= i+n)."""
    row = matrix_row(i, n, params, K)
    return float(row[j]) if j < len(row) else 0.0


def _seed_points(nmax: int) -> list:
    if nmax <= 0:
        return []
    s = 1.0 / math.sqrt(nmax)
    pts = [s * f for f in (1.0, 3.0, 10.0, 30.0) if s * f < math.pi]
    return pts


def km_table(imax: int, jmax: int, ns: Sequence[int], params: ModelParams, quad_tol: float = 1e-12):
    """Array T[a, i, j] = P(Q_{ns[a]+1} = j | Q_1 = i) by the spectral formula.

    All entries share one vector-valued adaptive quadrature in theta, with
    breakpoints seeded at multiples of 1/sqrt(max n) where the factor
    (1 - 2c + 2c cos theta)^n concentrates.
    """
    q, c = float(params.q), float(params.c)
    ns = np.asarray(ns, dtype=int)
    deg = max(imax, jmax)
    norm = np.array([qpoch_finite(q, q, j) for j in range(jmax + 1)])

    def f(t):
        z = math.cos(t)
        base = 1.0 - 2.0 * c + 2.0 * c * z
        pw = base ** ns
        H = h_table(deg, np.array([z]), q)[:, 0]
        wt = float(weight_theta(t, q))
        return (pw[:, None, None] * (H[: imax + 1, None] * (H[None, : jmax + 1] / norm))[None]) * wt

    pts = _seed_points(int(ns.max()) if len(ns) else 0)
    val, err = integrate.quad_vec(f, 0.0, math.pi, epsabs=quad_tol, epsrel=0, norm="max",
                                  points=pts or None, limit=2000)
    if err > 100 * quad_tol:
        raise NumericError(f"spectral quadrature reached only {err:.2e}")
    return val


def km_transition(i: int, j: int, n: int, params: ModelParams, quad_tol: float = 1e-12) -> float:
    """P(Q_{n+1} = j | Q_1 = i) from the spectral integral."""
    q, c = float(params.q), float(params.c)
    deg = max(i, j)
    norm = qpoch_finite(q, q, j)

    def f(t):
        z = math.cos(t)
        H = h_table(deg, np.array([z]), q)[:, 0]
        return (1.0 - 2.0 * c + 2.0 * c * z) ** n * H[i] * H[j] * float(weight_theta(t, q)) / norm

    pts = _seed_points(n)
    val, err = integrate.quad(f, 0.0, math.pi, epsabs=quad_tol, epsrel=0, limit=500, points=pts or None)
    if err > 100 * quad_tol:
        raise NumericError(f"spectral quadrature reached only {err:.2e}")
    return val


def negative_half_contribution(i: int, j: int, n: int, params: ModelParams) -> float:
    """|part of the spectral integral over z in [-1, 0]|, i.e. theta in [pi/2, pi]."""
    q, c = float(params.q), float(params.c)
    deg = max(i, j)
    norm = qpoch_finite(q, q, j)

    def f(t):
        z = math.cos(t)
        H = h_table(deg, np.array([z]), q)[:, 0]
        return (1.0 - 2.0 * c + 2.0 * c * z) ** n * H[i] * H[j] * float(weight_theta(t, q)) / norm

    val, _ = integrate.quad(f, math.pi / 2, math.pi, epsabs=1e-300, epsrel=1e-10, limit=200)
    return abs(val)


def distribution_after_n(n: int, params: ModelParams, K: int | None = None, init_tail_tol: float = 1e-14):
    """Law of Q_{n+1} when Q_1 ~ pi (truncated where its tail drops below init_tail_tol).

    Returns (probabilities on 0..K, mean, mean of the initial law).
    """
    pi = initial_law(float(params.q), init_tail_tol)
    k0 = len(pi) - 1
    if K is None:
        K = k0 + n + 1
    if K < k0 + n:
        raise PreconditionError(f"K={K} < k0+n={k0 + n}")
    v = np.zeros(K + 1)
    v[: k0 + 1] = pi
    out = propagate(v, params, n)
    lev = np.arange(K + 1)
    return out, float(out @ lev), float(pi @ lev[: k0 + 1])


def local_limit_density(y: float, c: float) -> float:
    """Half-normal density with variance 2c: exp(-y^2/(4c)) / sqrt(c pi)."""
    return math.exp(-y * y / (4 * c)) / math.sqrt(c * math.pi)


def local_limit_check(y: float, n: int, params: ModelParams, method: str = "km"):
    """(sqrt(n) P(Q_{n+1} = floor(y sqrt n) | Q_1 = 0), limiting density)."""
    j = int(math.floor(y * math.sqrt(n)))
    if method == "km":
        p = km_transition(0, j, n, params, quad_tol=1e-14)
    elif method == "matrix":
        p = matrix_transition(0, j, n, params)
    else:
        raise ValueError(f"unknown method {method!r}")
    return math.sqrt(n) * p, local_limit_density(y, float(params.c))
