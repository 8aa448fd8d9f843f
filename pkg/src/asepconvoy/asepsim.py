"""Direct simulation of the multi-species ASEP (desk-scale sanity checks).

Every bond carries a Poisson clock of rate 1 + q and a mark U uniform on
[0, 1 + q].  When the clock rings, labels a (left) and b (right) swap if
a < b and U <= 1, or a > b and U > 1.  The superposition of all bond clocks is
simulated directly: the next ring is exponential with the total rate and the
bond is uniform among all bonds (periodic ring or closed segment).  Random numbers come from the same
counter-based stream as the queue simulator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import _accel
from ._accel import njit
from .queuesim import _draw_nb, CounterStream, replica_key


@dataclass
class LatticeConfig:
    labels: np.ndarray
    q: float
    T: float
    ring: bool = True


@dataclass
class RingResult:
    labels: np.ndarray
    events: int
    swaps: int


@njit
def _ring_kernel(labels, q, T, key, ring):
    L = labels.shape[0]
    nbonds = L if ring else L - 1
    rate = (1.0 + q) * nbonds
    t = 0.0
    e = 0
    swaps = 0
    while True:
        u = _draw_nb(key, 3 * e)
        t += -math.log(1.0 - u) / rate
        if t > T:
            break
        b = int(_draw_nb(key, 3 * e + 1) * nbonds)
        if b >= nbonds:
            b = nbonds - 1
        mark = _draw_nb(key, 3 * e + 2) * (1.0 + q)
        nb = b + 1
        if nb == L:
            nb = 0
        a = labels[b]
        c = labels[nb]
        if (a < c and mark <= 1.0) or (a > c and mark > 1.0):
            labels[b] = c
            labels[nb] = a
            swaps += 1
        e += 1
    return e, swaps


def _ring_python(labels, q, T, key, ring):
    stream = CounterStream(0)
    stream.key = key
    L = labels.shape[0]
    nbonds = L if ring else L - 1
    rate = (1.0 + q) * nbonds
    t, e, swaps = 0.0, 0, 0
    while True:
        t += -math.log(1.0 - stream.draw(3 * e)) / rate
        if t > T:
            break
        b = min(int(stream.draw(3 * e + 1) * nbonds), nbonds - 1)
        mark = stream.draw(3 * e + 2) * (1.0 + q)
        nb = (b + 1) % L
        a, c = labels[b], labels[nb]
        if (a < c and mark <= 1.0) or (a > c and mark > 1.0):
            labels[b], labels[nb] = c, a
            swaps += 1
        e += 1
    return e, swaps


def simulate(config: LatticeConfig, seed: int, use_numba: bool | None = None) -> RingResult:
    """Run the dynamics up to time T; the input labels are not modified.

    ``config.ring`` selects periodic bonds (L of them); otherwise the segment
    is closed and has the L - 1 inner bonds.
    """
    labels = np.array(config.labels, dtype=np.int64)
    if labels.shape[0] < 2:
        raise ValueError("need at least two sites")
    key = np.uint64(replica_key(seed, 0))
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    if use_numba:
        e, s = _ring_kernel(labels, float(config.q), float(config.T), key, bool(config.ring))
    else:
        e, s = _ring_python(labels, float(config.q), float(config.T), int(key), bool(config.ring))
    return RingResult(labels, int(e), int(s))


@njit
def _second_class_kernel(M, q, T, key):
    # sites 0..2M, origin at M; 1 = first class, 2 = second class, 3 = hole
    size = 2 * M + 1
    lab = np.empty(size, dtype=np.int64)
    for i in range(size):
        lab[i] = 1 if i < M else (2 if i == M else 3)
    pos = M
    lo = M  # first site whose label is not 1
    hi = M  # last site whose label is not 3
    t = 0.0
    e = 0
    while True:
        first = lo - 1
        nbonds = hi - first + 1
        if first < 0 or hi + 1 >= size:
            return pos - M, False
        rate = (1.0 + q) * nbonds
        t += -math.log(1.0 - _draw_nb(key, 3 * e)) / rate
        if t > T:
            break
        b = first + int(_draw_nb(key, 3 * e + 1) * nbonds)
        if b > hi:
            b = hi
        mark = _draw_nb(key, 3 * e + 2) * (1.0 + q)
        a = lab[b]
        c = lab[b + 1]
        if (a < c and mark <= 1.0) or (a > c and mark > 1.0):
            lab[b] = c
            lab[b + 1] = a
            if a == 2:
                pos = b + 1
            elif c == 2:
                pos = b
            # only sites b, b+1 changed; everything left of min(lo, b) is still type 1
            if b < lo:
                lo = b
            while lab[lo] == 1:
                lo += 1
            if b + 1 > hi:
                hi = b + 1
            while lab[hi] == 3:
                hi -= 1
        e += 1
    return pos - M, True


@dataclass
class SpeedSample:
    positions: np.ndarray
    speeds: np.ndarray
    valid: np.ndarray
    T: float
    q: float

    def ks_uniform(self) -> float:
        s = self.speeds[self.valid]
        return float(stats.kstest(s, stats.uniform(loc=-1, scale=2).cdf).statistic)

    def to_csv(self) -> str:
        rows = ["replicate,position,speed"]
        for r, (p, s, v) in enumerate(zip(self.positions, self.speeds, self.valid)):
            rows.append(f"{r},{int(p)},{format(float(s), '.17g') if v else 'nan'}")
        return "\n".join(rows) + "\n"


def second_class_speed(L: int, T: float, q: float, reps: int, seed: int) -> SpeedSample:
    """Speed Y(T) / ((1-q) T) of a second-class particle started at the origin
    between a full half-line of particles and an empty one.

    Only first-class / second-class / hole types matter, so the segment of
    length L is simulated in that projection.  Runs whose active zone reaches
    the segment ends are flagged invalid.
    """
    if L < 2:
        raise ValueError("L must be >= 2")
    M = L // 2
    pos = np.empty(reps, dtype=np.int64)
    valid = np.empty(reps, dtype=bool)
    for r in range(reps):
        key = np.uint64(replica_key(seed, r))
        p, ok = _second_class_kernel(M, float(q), float(T), key)
        pos[r] = p
        valid[r] = ok
    return SpeedSample(pos, pos / ((1.0 - q) * T), valid, T, q)
