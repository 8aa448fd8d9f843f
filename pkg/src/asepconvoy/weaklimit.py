"""Weakly asymmetric scaling q_n = exp(-gamma/sqrt n).

Levels are centred at (sqrt n / gamma) log sqrt n and measured in units of
sqrt n.  In that frame the initial level has density

    f_X(x) = exp(-gamma x) exp(-eta),    eta = exp(-gamma x) / gamma,

and the pair (X, Y) = (initial, final) has the joint density

    f(x, y) = (1/2pi) e^{-gamma x} int_0^inf e^{-c w^2} rho(w) J(x, w) J(y, w) dw,

with rho(w) = |Gamma(i w/g)|^2 / |Gamma(2 i w/g)|^2 = 4 cosh(pi w / g) and J the
kernel below.  Numerically we work with Jn = sqrt(rho) J, which stays O(1):

    Jn(z, w) = 2 Re[ exp(i phi(w) + i w (z + log(g)/g)) F(z, w) ],
    phi = arg Gamma(2e)/Gamma(e),   e = i w / g,
    F = 1F1(1 - e; 1 - 2e; -eta) = exp(-eta) 1F1(-e; 1 - 2e; eta).

The second form of F is a series with positive argument and rounding error
of order 1e-16 in absolute terms, whatever eta is.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import DomainError, NumericError
from .qseries import qpoch_infinite, qpoch_tail, q_gamma

EULER_GAMMA = 0.5772156649015329


# --- scaling helpers ------------------------------------------------------------

@dataclass(frozen=True)
class WeakScaling:
    gamma: float
    n: int

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError("gamma must be positive")
        if self.n < 1:
            raise DomainError("n must be a positive integer")

    @property
    def q(self) -> float:
        return math.exp(-self.gamma / math.sqrt(self.n))

    def level(self, z: float) -> int:
        """m_n(z) = floor(z sqrt n + (sqrt n / gamma) log sqrt n)."""
        r = math.sqrt(self.n)
        return int(math.floor(z * r + r / self.gamma * math.log(r)))


def qpoch_scaling_limit(z: float, gamma: float, n: int):
    """((q^m; q)_inf at q = q_n, m = m_n(z),  exp(-e^{-gamma z}/gamma))."""
    sc = WeakScaling(gamma, n)
    q = sc.q
    m = sc.level(z)
    if m < 0:
        raise DomainError(f"m_n(z) = {m} < 0; take n larger or z larger")
    finite = qpoch_infinite(q**m, q)
    return float(finite), math.exp(-math.exp(-gamma * z) / gamma)


def density_x(x, gamma: float):
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    x = np.asarray(x, dtype=float)
    lx = -gamma * x
    # log form: far left, exp(lx) overflows to inf and the density correctly goes to 0
    with np.errstate(over="ignore"):
        out = np.exp(lx - np.exp(lx) / gamma)
    return float(out) if out.ndim == 0 else out


def x_quantile(p: float, gamma: float) -> float:
    """Inverse of the cdf exp(-e^{-gamma x}/gamma)."""
    if not 0 < p < 1:
        raise DomainError("p must lie in (0,1)")
    return -math.log(-gamma * math.log(p)) / gamma


def local_law_x(x: float, gamma: float, n: int):
    """(sqrt n P(Q_1 = m_n(x)), f_X(x)) with Q_1 from the stationary initial law."""
    sc = WeakScaling(gamma, n)
    q = sc.q
    m = sc.level(x)
    p = q**m * qpoch_tail(m, q)
    return math.sqrt(n) * p, density_x(x, gamma)


def qgamma_modulus_ratios(n: int, xs, gamma: float = 2.0):
    """|Gamma_q(1 + i x)|^2 / (e^{x^2/sqrt n} pi x / sinh(pi x)) at q = e^{-gamma/sqrt n}."""
    q = math.exp(-gamma / math.sqrt(n))
    out = []
    for x in xs:
        g = q_gamma(complex(1.0, x), q, tol=1e-14)
        ref = math.exp(x * x / math.sqrt(n)) * math.pi * x / math.sinh(math.pi * x)
        out.append(abs(g) ** 2 / ref)
    return np.array(out)


# --- special functions ----------------------------------------------------------

def complex_gamma(z):
    """Gamma(z) for complex z (scipy's loggamma, exponentiated)."""
    z = complex(z)
    if z.imag == 0 and z.real <= 0 and z.real == int(z.real):
        raise DomainError(f"Gamma has a pole at {z.real:g}")
    return complex(np.exp(special.loggamma(z)))


def hyp1f1(a, b, z, kummer_below: float = -20.0, max_terms: int = 20000, log_scale=None):
    """Confluent hypergeometric 1F1(a; b; z) by its power series.

    Works elementwise on broadcastable arrays.  Summation stops once three
    consecutive terms are below 1e-16 times the partial sum.  Where
    Re z < kummer_below the identity 1F1(a;b;z) = e^z 1F1(b-a;b;-z) is applied
    first.  ``log_scale`` (broadcastable, real) multiplies the result by
    exp(log_scale) by seeding the series with it, which keeps the terms in
    range when that factor cancels their growth.
    """
    a, b, z = np.broadcast_arrays(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex),
                                  np.asarray(z, dtype=complex))
    bad = (b.imag == 0) & (b.real <= 0) & (b.real == np.round(b.real))
    if np.any(bad):
        raise DomainError("b must not be a nonpositive integer")
    flip = z.real < kummer_below
    aa = np.where(flip, b - a, a)
    zz = np.where(flip, -z, z)
    term = np.ones(a.shape, dtype=complex)
    if log_scale is not None:
        term = term * np.exp(np.asarray(log_scale, dtype=float))
    total = term.copy()
    quiet = np.zeros(a.shape, dtype=int)
    for k in range(max_terms):
        term = term * (aa + k) / (b + k) * zz / (k + 1)
        total = total + term
        small = np.abs(term) < 1e-16 * np.abs(total)
        quiet = np.where(small, quiet + 1, 0)
        if np.all(quiet >= 3):
            break
    else:
        raise NumericError("1F1 series did not converge within the term budget")
    if np.any(flip):
        total = np.where(flip, np.exp(np.where(flip, z, 0)) * total, total)
    return complex(total) if total.ndim == 0 else total


def _gamma_phase(w, gamma: float):
    """arg Gamma(2e)/Gamma(e) with e = i w / gamma; 0 at w = 0 (ratio -> 1/2)."""
    w = np.asarray(w, dtype=float)
    e = 1j * w / gamma
    safe = np.where(w == 0, 1.0, e)
    ph = np.imag(special.loggamma(2 * safe) - special.loggamma(safe))
    return np.where(w == 0, 0.0, ph)


def _jn_table(z, w, gamma: float):
    """Jn(z_i, w_j) as a (len z, len w) real array."""
    z = np.asarray(z, dtype=float)[:, None]
    w = np.asarray(w, dtype=float)[None, :]
    eta = np.exp(-gamma * z) / gamma
    e = 1j * w / gamma
    F = _kummer_F(e, eta)
    phase = _gamma_phase(w, gamma) + w * (z + math.log(gamma) / gamma)
    return 2.0 * np.real(np.exp(1j * phase) * F)


def _kummer_F(e, eta):
    """exp(-eta) 1F1(-e; 1-2e; eta) for e on a row vector and eta on a column.

    Rows with eta far beyond |e|^2 use the large-argument expansion
    Gamma(1-2e)/Gamma(-e) eta^{e-1} sum_s (1-e)_s (1+e)_s / s! eta^{-s};
    the companion term carries a factor e^{-eta} and is dropped there.
    """
    eta_col = eta[:, 0]
    emax = float(np.max(np.abs(e))) if e.size else 0.0
    big = eta_col > max(300.0, 4.0 * emax * emax)
    out = np.empty((eta.shape[0], e.shape[1]), dtype=complex)
    if np.any(~big):
        et = eta[~big]
        if np.max(et) > 700:
            raise NumericError("eta too large for the series and too small for the expansion")
        out[~big] = hyp1f1(-e, 1 - 2 * e, et + 0j, kummer_below=0.0, log_scale=-et)
    if np.any(big):
        et = eta[big]
        ee = np.where(e == 0, 1.0, e)
        lead = np.exp(special.loggamma(1 - 2 * ee) - special.loggamma(-ee))
        lead = np.where(e == 0, 0.0, lead)
        term = np.ones(np.broadcast(et, e).shape, dtype=complex)
        total = term.copy()
        for s in range(60):
            term = term * (1 - e + s) * (1 + e + s) / ((s + 1) * et)
            total = total + term
            if np.all(np.abs(term) < 1e-17 * np.abs(total)):
                break
        val = lead * np.exp((e - 1) * np.log(et)) * total
        # at e = 0 the function is exactly exp(-eta)
        out[big] = np.where(e == 0, np.exp(-et), val)
    return out


def _log_sqrt_rho(w, gamma: float):
    # log(2 sqrt(cosh(pi y))), written to avoid overflow
    y = math.pi * np.abs(np.asarray(w, dtype=float)) / gamma
    return math.log(2.0) + 0.5 * (y + np.log1p(np.exp(-2 * y)) - math.log(2.0))


def j_kernel(z: float, w: float, gamma: float) -> float:
    """J(z, w); equals exp(-e^{-gamma z}/gamma) at w = 0."""
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    if w < 0:
        raise DomainError("w must be >= 0")
    jn = float(_jn_table([z], [w], gamma)[0, 0])
    return jn * math.exp(-float(_log_sqrt_rho(w, gamma)))


def j_kernel_complex(z: float, w: float, gamma: float) -> complex:
    """The bracket whose doubled real part is J, built directly from Gamma values.

    Independent of the normalised route used by the density code; for w > 0 only.
    """
    if w <= 0:
        raise DomainError("w must be > 0")
    e = 1j * w / gamma
    eta = math.exp(-gamma * z) / gamma
    pref = np.exp(e * math.log(gamma * math.exp(gamma * z)))
    ratio = complex_gamma(2 * e) / complex_gamma(e)
    return complex(pref * ratio * hyp1f1(1 - e, 1 - 2 * e, -eta))


# --- w quadrature ------------------------------------------------------------------

_GL_ORDER = 8


def w_cutoff(c: float, tol: float = 1e-13) -> float:
    return math.sqrt(math.log(1.0 / tol) / c)


def w_nodes(zmax: float, gamma: float, c: float, tol: float = 1e-13):
    """Gauss-Legendre panels on [0, W] with e^{-cW^2} = tol.

    Panel width is at most pi / (2 Omega), where Omega bounds the angular
    frequency of Jn(x,.) Jn(y,.) for |x|, |y| <= zmax: 2 zmax from the
    explicit exponential plus the drift of phi(w) + w log(g)/g, whose
    derivative stays within max(1, log 4W) / g in absolute value.
    """
    W = w_cutoff(c, tol)
    omega = 1.0 + 2.0 * zmax + 2.0 * max(1.0, math.log(4.0 * W)) / gamma
    npan = max(4, int(math.ceil(W / (math.pi / (2.0 * omega)))))
    xg, wg = np.polynomial.legendre.leggauss(_GL_ORDER)
    edges = np.linspace(0.0, W, npan + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    weights = (half[:, None] * wg[None, :]).ravel()
    return nodes, weights


def joint_density_matrix(xs, ys, gamma: float, c: float, tol: float = 1e-13):
    """f(x_i, y_j) as a dense matrix (small grids)."""
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    if not 0 < c <= 0.25:
        raise DomainError("c must lie in (0, 1/4]")
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    zmax = max(np.max(np.abs(xs)), np.max(np.abs(ys)))
    w, wt = w_nodes(zmax, gamma, c, tol)
    g = wt * np.exp(-c * w * w)
    A = _jn_table(xs, w, gamma)
    B = _jn_table(ys, w, gamma)
    return np.exp(-gamma * xs)[:, None] * ((A * g) @ B.T) / (2 * math.pi)


def joint_density(x: float, y: float, gamma: float, c: float, tol: float = 1e-13) -> float:
    return float(joint_density_matrix([x], [y], gamma, c, tol)[0, 0])


# --- band grids ---------------------------------------------------------------------

@dataclass
class DensityGrid:
    abscissae: np.ndarray
    values: np.ndarray
    errors: np.ndarray

    def to_csv(self) -> str:
        rows = ["abscissa,value,err"]
        for a, v, e in zip(self.abscissae, self.values, self.errors):
            rows.append(f"{format(float(a), '.17g')},{format(float(v), '.17g')},{format(float(e), '.17g')}")
        return "\n".join(rows) + "\n"

    def mass(self) -> float:
        return float(integrate.trapezoid(self.values, self.abscissae))


@dataclass
class BandDensity:
    """f(x_i, x_i + o) for grid points x_i and band offsets o = d h."""

    gamma: float
    c: float
    h: float
    x: np.ndarray
    offsets: np.ndarray
    F: np.ndarray
    info: dict = field(default_factory=dict)

    def _wy(self):
        return np.full(len(self.offsets), self.h)

    def x_marginal(self) -> np.ndarray:
        return self.F @ self._wy()

    def y_marginal(self):
        """(y grid, f_Y) with trapezoid weights in x."""
        n, m = self.F.shape
        Dl = int(round(-self.offsets[0] / self.h))
        ys = self.x[0] + self.h * np.arange(-Dl, n + m - 1 - Dl)
        fy = np.zeros(len(ys))
        for d in range(m):
            fy[d: d + n] += self.h * self.F[:, d]
        return ys, fy

    def mass(self) -> float:
        return float(integrate.simpson(self.x_marginal(), x=self.x))

    def gap_given_x(self) -> np.ndarray:
        return self.F @ (self._wy() * self.offsets)


def default_step(gamma: float, c: float) -> float:
    # the density is smooth on the scales sqrt(2c) (in y) and 1/gamma (in x);
    # trapezoid/Simpson rules with a quarter of either are far below 1e-6
    return min(0.25 * math.sqrt(2 * c), 0.3 / gamma)


def band_limits(gamma: float, c: float, eta_max: float):
    """(below, above): how far y may sit below / above x with non-negligible density.

    Below x only diffusive fluctuations count (variance 2c, cut at about
    7 standard deviations).  Above x there is in addition the upward drift,
    at most c*gamma*eta per unit time and in total at most log(1+gamma*eta)/gamma.
    """
    below = 10.0 * math.sqrt(c)
    drift = min(c * gamma * eta_max, math.log1p(gamma * eta_max) / gamma)
    return below, below + drift + 1.0


def band_density(gamma: float, c: float, x_lo: float, x_hi: float, h: float | None = None,
                 band: tuple | None = None, tol: float = 1e-13, block: int = 48) -> BandDensity:
    """Joint density on the band x - below <= y <= x + above, x in [x_lo, x_hi]."""
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    if not 0 < c <= 0.25:
        raise DomainError("c must lie in (0, 1/4]")
    if h is None:
        h = default_step(gamma, c)
    if band is None:
        band = band_limits(gamma, c, math.exp(-gamma * x_lo) / gamma)
    Dl = int(math.ceil(band[0] / h))
    Du = int(math.ceil(band[1] / h))
    m = Dl + Du + 1
    nx = int(math.ceil((x_hi - x_lo) / h)) + 1
    if nx % 2 == 0:
        nx += 1  # odd count for Simpson in x
    grid = x_lo + h * np.arange(-Dl, nx + Du)
    zmax = float(np.max(np.abs(grid)))
    w, wt = w_nodes(zmax, gamma, c, tol)
    g = wt * np.exp(-c * w * w) / (2 * math.pi)
    F = np.zeros((nx, m))
    cache = {}

    def rows(k0, k1):
        # Jn rows for grid indices [k0, k1), computed in chunks of `block`
        out = []
        for b in range(k0 // block, (k1 - 1) // block + 1):
            if b not in cache:
                cache[b] = _jn_table(grid[b * block: (b + 1) * block], w, gamma)
            lo, hi = max(k0, b * block), min(k1, (b + 1) * block)
            out.append(cache[b][lo - b * block: hi - b * block])
        return np.vstack(out)

    for s in range(0, nx, block):
        e = min(nx, s + block)
        A = rows(s + Dl, e + Dl) * g  # x_i lives at grid index i + Dl
        B = rows(s, e + Dl + Du)
        M = A @ B.T  # M[i, j] pairs x_{s+i} with grid[s + j]
        for i in range(e - s):
            F[s + i] = M[i, i: i + m]
        for b in [b for b in cache if (b + 1) * block <= e]:
            del cache[b]
    xs = grid[Dl: Dl + nx]
    F *= np.exp(-gamma * xs)[:, None]
    return BandDensity(gamma, c, h, xs, h * np.arange(-Dl, Du + 1), F,
                       {"band": band, "n_w": len(w), "W": float(w[-1]) if len(w) else 0.0})


def x_window(gamma: float, eta_hi: float = 25.0, eta_lo: float = 1e-4):
    """x-range holding all but e^{-eta_hi} (left) and about eta_lo (right) of X."""
    lo = -math.log(gamma * eta_hi) / gamma
    hi = -math.log(gamma * eta_lo) / gamma
    return lo, hi


@dataclass
class GapResult:
    gap: float
    mass: float
    mean_x: float
    mean_y: float
    marginal_err: float
    grid: BandDensity

    def as_dict(self):
        return {"gap": self.gap, "mass": self.mass, "mean_x": self.mean_x,
                "mean_y": self.mean_y, "marginal_err": self.marginal_err,
                "h": self.grid.h, "n_x": len(self.grid.x), "n_w": self.grid.info["n_w"]}


def expected_gap(gamma: float, c: float = 0.25, eta_hi: float = 25.0, eta_lo: float = 1e-3,
                 h: float | None = None) -> GapResult:
    """E[Y - X] from the joint density on a band grid.

    The x-range leaves out X-mass e^{-eta_hi} on the left and about eta_lo on
    the right.  On the right the conditional gap is about c*gamma*eta, so the
    omitted part of E[Y - X] is of order c*gamma*eta_lo^2.  Mass is not renormalised; the achieved mass and the largest
    deviation of the x-marginal from f_X are returned with the estimate.
    """
    lo, hi = x_window(gamma, eta_hi, eta_lo)
    bd = band_density(gamma, c, lo, hi, h=h)
    fx = bd.x_marginal()
    gap = float(integrate.simpson(bd.gap_given_x(), x=bd.x))
    mass = float(integrate.simpson(fx, x=bd.x))
    mean_x = float(integrate.simpson(bd.x * fx, x=bd.x))
    mean_y = mean_x + gap
    err = float(np.max(np.abs(fx - density_x(bd.x, gamma))))
    return GapResult(gap, mass, mean_x, mean_y, err, bd)


def half_normal_density(y, c: float):
    y = np.asarray(y, dtype=float)
    return np.where(y >= 0, np.exp(-y * y / (4 * c)) / math.sqrt(math.pi * c), 0.0)


def marginal_y_limit_check(gamma: float, c: float = 0.25, eta_hi: float = 25.0, eta_lo: float = 1e-6) -> float:
    """L1 distance between the y-marginal and the half-normal density of variance 2c."""
    if gamma < 4:
        raise DomainError("the half-normal comparison is meant for gamma >= 4")
    lo, hi = x_window(gamma, eta_hi, eta_lo)
    bd = band_density(gamma, c, lo, hi)
    ys, fy = bd.y_marginal()
    return float(integrate.trapezoid(np.abs(fy - half_normal_density(ys, c)), ys))


def y_marginal_grid(gamma: float, c: float, eta_hi: float = 25.0, eta_lo: float = 1e-4) -> DensityGrid:
    lo, hi = x_window(gamma, eta_hi, eta_lo)
    h = default_step(gamma, c)
    ys, fy = band_density(gamma, c, lo, hi, h=h).y_marginal()
    # error column: difference against the same computation with twice the step
    # (both grids are anchored at lo, so every coarse point is a fine point)
    ys2, fy2 = band_density(gamma, c, lo, hi, h=2 * h).y_marginal()
    idx = np.rint((ys2 - ys[0]) / h).astype(int)
    keep = (idx >= 0) & (idx < len(ys))
    diff = np.full(len(ys), np.nan)
    diff[idx[keep]] = np.abs(fy[idx[keep]] - fy2[keep])
    # fine points between two shared points take the larger neighbouring value
    known = ~np.isnan(diff)
    left = np.maximum.accumulate(np.where(known, np.arange(len(ys)), 0))
    right = np.minimum.accumulate(np.where(known, np.arange(len(ys)), len(ys) - 1)[::-1])[::-1]
    err = np.where(known, diff, np.fmax(diff[left], diff[right]))
    return DensityGrid(ys, fy, np.nan_to_num(err, nan=0.0))
