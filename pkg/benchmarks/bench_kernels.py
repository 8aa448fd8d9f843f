"""Time the numba kernels against their numpy/python fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Each case runs both paths on identical inputs, checks that the outputs agree
and prints the best wall time of each.
"""
import argparse
import time

import numpy as np

from asepconvoy import _accel
from asepconvoy.asepsim import LatticeConfig, simulate
from asepconvoy.kmtrans import propagate
from asepconvoy.moments import ModelParams
from asepconvoy.qhermite import h_table
from asepconvoy.queuesim import run_queue


def best_of(fn, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def cases():
    p = ModelParams(0.5, 0.5)
    v = np.zeros(3001)
    v[:50] = 1 / 50
    xs = np.linspace(-1, 1, 2000)
    ring = LatticeConfig(np.random.default_rng(0).permutation(400), 0.3, 50.0)
    return [
        ("queue kernel n=2000 reps=2000",
         lambda nb: run_queue(2000, p, 2000, 1, use_numba=nb)[0]),
        ("chain propagate K=3000 steps=2000",
         lambda nb: propagate(v, p, 2000, use_numba=nb)),
        ("q-Hermite table deg=500 pts=2000",
         lambda nb: h_table(500, xs, 0.7, use_numba=nb)),
        ("ring ASEP L=400 T=50",
         lambda nb: simulate(ring, 3, use_numba=nb).labels),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not _accel.NUMBA_OK:
        print("numba unavailable (or disabled); nothing to compare")
        return
    print(f"{'case':40s} {'numba [s]':>10s} {'fallback [s]':>13s} {'speedup':>8s}  same")
    for name, fn in cases():
        fn(True)  # compile
        t_nb, a = best_of(lambda: fn(True), args.repeat)
        t_np, b = best_of(lambda: fn(False), args.repeat)
        same = np.allclose(a, b, rtol=0, atol=1e-12)
        print(f"{name:40s} {t_nb:10.4f} {t_np:13.4f} {t_np / t_nb:8.1f}  {same}")


if __name__ == "__main__":
    main()
