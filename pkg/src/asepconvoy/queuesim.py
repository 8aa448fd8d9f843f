"""Monte Carlo for the inhomogeneous queue and its convoy marks.

Random numbers
--------------
Each replica ``r`` owns a SplitMix64 stream: its state is
``mix64(mix64(seed) ^ mix64(r + 1))`` and draw number ``t`` is
``mix64(state + (t + 1) * GAMMA) >> 11`` scaled to [0, 1).  Draw 0 samples
Q_1; step t (0-based) reads draws 1 + 2t (driver) and 2 + 2t (rejection).
Because the stream is counter based, the numba kernel and the vectorised
numpy kernel produce bit-identical results, and results do not depend on how
replicas are partitioned.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Sequence

import numpy as np
from scipy import stats

from . import _accel
from ._accel import njit
from .errors import ConsistencyError, DomainError
from .moments import ModelParams
from .qseries import initial_law, qpoch_finite

GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1
_INV53 = 1.0 / (1 << 53)


# --- stream (pure python reference) -------------------------------------------

def mix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def replica_key(seed: int, r: int) -> int:
    return mix64(mix64(seed) ^ mix64(r + 1))


class CounterStream:
    """Python view of one replica stream; ``random()`` returns successive draws."""

    def __init__(self, seed: int, replica: int = 0):
        self.key = replica_key(seed, replica)
        self.t = 0

    def draw(self, t: int) -> float:
        return (mix64(self.key + (t + 1) * GAMMA) >> 11) * _INV53

    def random(self) -> float:
        u = self.draw(self.t)
        self.t += 1
        return u


# --- numba kernels ------------------------------------------------------------

@njit
def _mix64_nb(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


@njit
def _draw_nb(key, t):
    z = _mix64_nb(key + np.uint64(t + 1) * np.uint64(GAMMA))
    return np.float64(z >> np.uint64(11)) * _INV53


if not _accel.NUMBA_OK:
    # interpreted uint64 arithmetic warns on the intended wraparound; use python ints
    def _draw_nb(key, t):
        return (mix64(int(key) + (t + 1) * GAMMA) >> 11) * _INV53


@njit
def _queue_kernel(n, keys, c, qpow, cdf, counts, finals, starts, walks):
    ok = True
    top = cdf.shape[0] - 1
    for r in range(keys.shape[0]):
        key = keys[r]
        k = np.searchsorted(cdf, _draw_nb(key, 0), side="right")
        if k > top:
            k = top
        p = k
        starts[r] = k
        cnt = 0
        for t in range(n):
            u = _draw_nb(key, 1 + 2 * t)
            if u < c:
                k += 1
                p += 1
            elif u >= 1.0 - c:
                p -= 1
                if _draw_nb(key, 2 + 2 * t) < qpow[k]:
                    cnt += 1
                else:
                    k -= 1
            if cnt != k - p or k < 0:
                ok = False
        counts[r] = cnt
        finals[r] = k
        walks[r] = p
    return ok


@njit
def _walk_kernel(n, keys, c, dn, en, ln):
    for r in range(keys.shape[0]):
        key = keys[r]
        p = 0
        d = 0
        e = 0
        loc = 0
        for t in range(n):
            if p == 0:
                loc += 1
            u = _draw_nb(key, 1 + 2 * t)
            # below -1/2 the walk mirrors the queue's moves
            if p >= 0:
                step = 1 if u < c else (-1 if u >= 1.0 - c else 0)
            else:
                step = -1 if u < c else (1 if u >= 1.0 - c else 0)
            if p == 0 and step == -1:
                d += 1
            elif p == -1 and step == 1:
                e += 1
            p += step
        dn[r] = d
        en[r] = e
        ln[r] = loc


# --- numpy kernels ------------------------------------------------------------

def _mix64_np(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def _draw_np(keys, t):
    z = _mix64_np(keys + np.uint64(((t + 1) * GAMMA) & _MASK))
    return (z >> np.uint64(11)).astype(np.float64) * _INV53


def _queue_numpy(n, keys, c, qpow, cdf):
    top = cdf.shape[0] - 1
    k = np.minimum(np.searchsorted(cdf, _draw_np(keys, 0), side="right"), top).astype(np.int64)
    start = k.copy()
    p = k.copy()
    cnt = np.zeros_like(k)
    ok = True
    for t in range(n):
        u = _draw_np(keys, 1 + 2 * t)
        up = u < c
        dn = u >= 1.0 - c
        rej = dn & (_draw_np(keys, 2 + 2 * t) < qpow[k])
        k = k + up - (dn & ~rej)
        p = p + up - dn
        cnt = cnt + rej
        if np.any(cnt != k - p) or np.any(k < 0):
            ok = False
    return ok, cnt, k, start, p


def _walk_numpy(n, keys, c):
    p = np.zeros(keys.shape[0], dtype=np.int64)
    d = np.zeros_like(p)
    e = np.zeros_like(p)
    loc = np.zeros_like(p)
    for t in range(n):
        loc += p == 0
        u = _draw_np(keys, 1 + 2 * t)
        step = (u < c).astype(np.int64) - (u >= 1.0 - c)
        step = np.where(p >= 0, step, -step)
        e += (step == 1) & (p == -1)
        d += (step == -1) & (p == 0)
        p = p + step
    return d, e, loc


def replica_keys(seed: int, reps: int, first: int = 0) -> np.ndarray:
    return np.array([replica_key(seed, r) for r in range(first, first + reps)], dtype=np.uint64)


# --- public API ---------------------------------------------------------------

def pi_cdf(q: float, tail_tol: float = 1e-14) -> np.ndarray:
    return np.cumsum(initial_law(float(q), tail_tol))


def sample_pi(q: float, rng) -> int:
    """Inverse-CDF draw from pi; ``rng`` needs a ``random()`` method."""
    cdf = pi_cdf(q)
    k = int(np.searchsorted(cdf, rng.random(), side="right"))
    return min(k, len(cdf) - 1)


@dataclass
class CoupledState:
    """Queue level k, free-walk level p, convoy count, step index."""

    k: int
    p: int
    convoy: int = 0
    i: int = 1

    def check(self) -> None:
        if self.k < 0 or self.convoy != self.k - self.p:
            raise ConsistencyError(f"coupling broken: {self}")


def step_coupled(state: CoupledState, params: ModelParams, rng):
    """Advance queue and free walk by one shared step; returns (new state, mark)."""
    q, c = float(params.q), float(params.c)
    u = rng.random()
    u2 = rng.random()
    k, p, conv = state.k, state.p, state.convoy
    mark = False
    if u < c:
        k += 1
        p += 1
    elif u >= 1.0 - c:
        p -= 1
        if u2 < (q**k if k else 1.0):
            mark = True
            conv += 1
        else:
            k -= 1
    new = CoupledState(k, p, conv, state.i + 1)
    new.check()
    return new, mark


@dataclass
class QueuePath:
    levels: List[int]
    walk: List[int]
    marks: List[bool]

    @property
    def convoy(self) -> int:
        return sum(self.marks)


def simulate_path(n: int, params: ModelParams, rng, start: int | None = None) -> QueuePath:
    """One trajectory Q_1..Q_{n+1} with convoy marks (reference implementation)."""
    k = sample_pi(float(params.q), rng) if start is None else start
    st = CoupledState(k, k)
    levels, walk, marks = [k], [k], []
    for _ in range(n):
        st, m = step_coupled(st, params, rng)
        levels.append(st.k)
        walk.append(st.p)
        marks.append(m)
    return QueuePath(levels, walk, marks)


def _fmt(v) -> str:
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}" if v.denominator != 1 else str(v.numerator)
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


@dataclass
class SimSummary:
    params: ModelParams
    n: int
    reps: int
    seed: int
    mean: float
    stderr: float
    histogram: List[Dict[str, float]]
    counts: np.ndarray = field(repr=False, default=None)

    def scaled(self) -> np.ndarray:
        return self.counts / math.sqrt(self.n)

    def to_dict(self) -> dict:
        return {
            "params": {"q": _fmt(self.params.q), "x": _fmt(self.params.x), "c": _fmt(float(self.params.c))},
            "n": self.n,
            "reps": self.reps,
            "seed": self.seed,
            "mean": self.mean,
            "stderr": self.stderr,
            "histogram": self.histogram,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        lines = ["count,freq"]
        lines += [f"{h['count']},{_fmt(h['freq'])}" for h in self.histogram]
        return "\n".join(lines) + "\n"


def _summarise(params, n, reps, seed, counts) -> SimSummary:
    vals, freq = np.unique(counts, return_counts=True)
    mean = float(counts.mean())
    se = float(counts.std(ddof=1) / math.sqrt(reps)) if reps > 1 else float("nan")
    hist = [{"count": int(v), "freq": int(f)} for v, f in zip(vals, freq)]
    return SimSummary(params, n, reps, seed, mean, se, hist, counts)


def run_queue(n: int, params: ModelParams, reps: int, seed: int, use_numba: bool | None = None, first: int = 0):
    """Raw per-replica arrays (convoy count, Q_{n+1}, Q_1, P_{n+1})."""
    q, c = float(params.q), float(params.c)
    cdf = pi_cdf(q)
    qpow = q ** np.arange(len(cdf) + n + 2) if q > 0 else np.r_[1.0, np.zeros(len(cdf) + n + 1)]
    keys = replica_keys(seed, reps, first)
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    if use_numba:
        counts = np.empty(reps, dtype=np.int64)
        finals = np.empty_like(counts)
        starts = np.empty_like(counts)
        walks = np.empty_like(counts)
        ok = _queue_kernel(n, keys, c, qpow, cdf, counts, finals, starts, walks)
    else:
        ok, counts, finals, starts, walks = _queue_numpy(n, keys, c, qpow, cdf)
    if not ok:
        raise ConsistencyError("coupling identity violated during simulation")
    return counts, finals, starts, walks


def convoy_mc(n: int, params: ModelParams, reps: int, seed: int, use_numba: bool | None = None) -> SimSummary:
    """Final convoy counts of ``reps`` independent queue runs of length n."""
    if reps < 1:
        raise DomainError("reps must be >= 1")
    counts, *_ = run_queue(n, params, reps, seed, use_numba)
    return _summarise(params, n, reps, seed, counts)


def merge_summaries(parts: Sequence[SimSummary]) -> SimSummary:
    """Combine summaries of disjoint replica blocks (same params, n, seed)."""
    counts = np.concatenate([p.counts for p in parts])
    p0 = parts[0]
    return _summarise(p0.params, p0.n, len(counts), p0.seed, counts)


# --- exact path weights ------------------------------------------------------

def _step_factor_float(k: int, s: int, q: float, c: float) -> float:
    qk = q**k if k > 0 else 1.0
    if s == 1:
        return c
    if s == 0:
        return 1.0 - c * (2.0 - qk)
    return c * (1.0 - qk)


def path_weight(signs: Sequence[int], params: ModelParams, tail_tol: float = 1e-17, exact: bool | None = None):
    """sum_k pi_k prod_i P(k_i, k_{i+1}) along the path k + s_1 + ... + s_i.

    Exact mode writes the product as a polynomial in y = q^k and uses
    E[q^{j Q_1}] = (q;q)_j, so no truncation is involved.  Float mode sums
    over levels until the remaining pi-mass is below ``tail_tol``.
    """
    signs = [int(s) for s in signs]
    if any(s not in (-1, 0, 1) for s in signs):
        raise DomainError("signs must be in {-1, 0, 1}")
    if exact is None:
        exact = params.exact
    q, c = params.q, params.c
    if exact:
        q, x = Fraction(q), Fraction(params.x)
        c = x * (1 - x)
        if q == 0:
            return _path_from(0, signs, lambda k: Fraction(1) if k == 0 else Fraction(0), c)
        poly = [Fraction(1)]  # coefficients in y
        off = 0
        for s in signs:
            if s == 1:
                fac = [c]
            elif s == 0:
                fac = [1 - 2 * c, c * q**off]
            else:
                fac = [c, -c * q**off]
            new = [Fraction(0)] * (len(poly) + len(fac) - 1)
            for i, a in enumerate(poly):
                for j, b in enumerate(fac):
                    new[i + j] += a * b
            poly = new
            off += s
        return sum(a * qpoch_finite(q, q, j) for j, a in enumerate(poly))
    qf, cf = float(q), float(c)
    pi = initial_law(qf, tail_tol)
    total = 0.0
    for k0, w in enumerate(pi):
        total += w * _path_from(k0, signs, lambda k: qf**k if k else 1.0, cf, True)
    return total


def _path_from(k0, signs, qpow, c, as_float=False):
    w = 1.0 if as_float else Fraction(1)
    k = k0
    for s in signs:
        if s == 1:
            f = c
        elif s == 0:
            f = 1 - c * (2 - qpow(k))
        else:
            f = c * (1 - qpow(k))
        w = w * f
        k += s
        if k < 0:
            return 0.0 if as_float else Fraction(0)
    return w


def reversal_check(signs: Sequence[int], params: ModelParams, exact: bool | None = None):
    """(forward weight, q^{-s} * weight of the reversed, negated path)."""
    signs = list(signs)
    s = sum(signs)
    back = [-v for v in reversed(signs)]
    lhs = path_weight(signs, params, exact=exact)
    rhs = path_weight(back, params, exact=exact)
    if exact is None:
        exact = params.exact
    q = Fraction(params.q) if exact else float(params.q)
    if q == 0:
        raise DomainError("the reversal identity needs q > 0")
    return lhs, rhs * q ** (-s)


# --- q = 0 checks ----------------------------------------------------------------

def folded_walk_law(n: int, c: float) -> np.ndarray:
    """Law of |P_{n+1} + 1/2| - 1/2 for the free walk started at 0."""
    law = np.zeros(2 * n + 1)
    law[n] = 1.0
    for _ in range(n):
        new = law * (1 - 2 * c)
        new[1:] += law[:-1] * c
        new[:-1] += law[1:] * c
        law = new
    pos = law[n:].copy()
    pos[: n] += law[:n][::-1]  # p = -m-1 folds to m
    return pos


def lumping_check(n: int, x, samples: int, seed: int, q=0) -> dict:
    """Chi-square comparison of simulated Q_{n+1} (q = 0, Q_1 = 0) with the folded walk."""
    if q != 0:
        raise DomainError("lumping holds only at q = 0")
    params = ModelParams(0, x)
    _, finals, _, _ = run_queue(n, params, samples, seed)
    expect = folded_walk_law(n, float(params.c)) * samples
    observed = np.bincount(finals, minlength=len(expect)).astype(float)
    # pool the upper tail so every cell expects at least 5
    cells_o, cells_e = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expect):
        acc_o += o
        acc_e += e
        if acc_e >= 5:
            cells_o.append(acc_o)
            cells_e.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 and cells_e:
        cells_o[-1] += acc_o
        cells_e[-1] += acc_e
    if len(cells_e) < 2:
        return {"statistic": 0.0, "dof": 0, "pvalue": 1.0}
    cells_e = np.array(cells_e)
    cells_e *= samples / cells_e.sum()
    stat, pval = stats.chisquare(cells_o, cells_e)
    return {"statistic": float(stat), "dof": len(cells_e) - 1, "pvalue": float(pval)}


def walk_crossings(n: int, x, samples: int, seed: int, use_numba: bool | None = None):
    """Per-replica (D_n, E_n, L_n(0)) for a simple walk from 0 on the queue's streams.

    The walk uses the queue's driver draws, with the moves mirrored while it
    sits below -1/2.  Its fold |P + 1/2| - 1/2 is then the q = 0 queue path
    itself, and D_n + E_n equals the convoy count replica by replica.
    """
    c = float(ModelParams(0, x).c)
    keys = replica_keys(seed, samples)
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    if use_numba:
        d = np.empty(samples, dtype=np.int64)
        e = np.empty_like(d)
        loc = np.empty_like(d)
        _walk_kernel(n, keys, c, d, e, loc)
        return d, e, loc
    return _walk_numpy(n, keys, c)


def tasep_crossing_stats(n: int, x, samples: int, seed: int) -> dict:
    """Means of down-crossings 0 -> -1, up-crossings -1 -> 0 and visits to 0."""
    d, e, loc = walk_crossings(n, x, samples, seed)
    return {
        "D": float(d.mean()),
        "E": float(e.mean()),
        "L": float(loc.mean()),
        "D_plus_E": d + e,
    }


def folded_queue(walk: Sequence[int]):
    """Queue path and marks obtained by folding a free-walk path at -1/2.

    At q = 0 the folded path is itself a queue path; a mark is produced
    exactly when the walk crosses between 0 and -1.
    """
    fold = [p if p >= 0 else -p - 1 for p in walk]
    marks = [fold[i] == fold[i + 1] == 0 and walk[i] != walk[i + 1] for i in range(len(walk) - 1)]
    return fold, marks
