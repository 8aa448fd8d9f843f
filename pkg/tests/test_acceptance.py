"""Acceptance checks; each test prints one PASS/FAIL line (also repeated in the summary)."""
import itertools
import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate, stats

from asepconvoy.genocchi import catalan, enumerate_pistols, pistol_polynomial, q_genocchi, sinv
from asepconvoy.kmtrans import km_table, local_limit_check, matrix_row
from asepconvoy.moments import (ModelParams, expected_convoy_dp, expected_convoy_genocchi,
                                expected_convoy_tasep)
from asepconvoy.qhermite import (endpoint_limit_check, exact_value_at_one, gf_coeff_oracle, h_table,
                                 orthogonality_integral)
from asepconvoy.qseries import qpoch_finite, qpoch_infinite
from asepconvoy.queuesim import convoy_mc, reversal_check
from asepconvoy.weaklimit import (density_x, expected_gap, joint_density_matrix, local_law_x,
                                  qpoch_scaling_limit)

TARGET = 1 / math.sqrt(math.pi)


def test_1_genocchi_values(criterion):
    t = time.perf_counter()
    listed = {1: [1], 2: [2, 1], 3: [5, 7, 4, 1], 4: [14, 36, 45, 35, 18, 6, 1]}
    ok = all(q_genocchi(n).coefficients() == c for n, c in listed.items())
    dt = time.perf_counter() - t
    assert criterion(1, "q-Genocchi B_1..B_4 exact", ok and dt < 1, f"{dt:.2f}s")


def test_2_pistols(criterion):
    t = time.perf_counter()
    ok = all(pistol_polynomial(n) == q_genocchi(n) for n in range(1, 6))
    ok &= all(sum(1 for p in enumerate_pistols(n) if sinv(p) == 0) == catalan(n) for n in range(1, 6))
    dt = time.perf_counter() - t
    assert criterion(2, "pistol generating polynomial and Catalan count, n<=5", ok and dt < 30, f"{dt:.1f}s")


def test_3_formula_arbitration(criterion):
    t = time.perf_counter()
    bad = []
    for q in (Fraction(1, 5), Fraction(1, 2), Fraction(4, 5)):
        for x in (Fraction(1, 4), Fraction(1, 2)):
            p = ModelParams(q, x)
            for n in range(1, 26):
                if expected_convoy_dp(n, p) != expected_convoy_genocchi(n, p):
                    bad.append((q, x, n))
    for x in (Fraction(1, 4), Fraction(1, 2)):
        for n in range(1, 201):
            if expected_convoy_tasep(n, x) != expected_convoy_genocchi(n, ModelParams(0, x)):
                bad.append((0, x, n))
    dt = time.perf_counter() - t
    assert criterion(3, "DP = Genocchi (n<=25), TASEP = Genocchi at q=0 (n<=200), exact",
                     not bad and dt < 60, f"{dt:.1f}s, mismatches={len(bad)}")


def test_4_spectral_vs_matrix(criterion):
    t = time.perf_counter()
    ns = list(range(0, 101))
    worst = worst_sum = 0.0
    for q in (0.0, 0.3, 0.7):
        for x in (0.3, 0.5):
            p = ModelParams(q, x)
            T = km_table(8, 8 + 100, ns, p)
            for n in ns:
                for i in range(9):
                    row = matrix_row(i, n, p, K=i + n + 9)
                    worst = max(worst, float(np.max(np.abs(T[n, i, :9] - row[:9]))))
                    worst_sum = max(worst_sum, abs(float(T[n, i, : i + n + 1].sum()) - 1))
    dt = time.perf_counter() - t
    ok = worst <= 1e-8 and worst_sum <= 1e-7 and dt < 300
    assert criterion(4, "spectral vs matrix transitions, i,j<=8, n<=100", ok,
                     f"max diff {worst:.1e}, row-sum err {worst_sum:.1e}, {dt:.1f}s")


def test_5_path_reversal(criterion):
    t = time.perf_counter()
    ok = True
    for q in (Fraction(1, 4), Fraction(1, 2)):
        p = ModelParams(q, Fraction(1, 3))
        for n in range(0, 5):
            for signs in itertools.product((-1, 0, 1), repeat=n):
                lhs, rhs = reversal_check(signs, p)
                ok &= lhs == rhs
    rnd = random.Random(5)
    worst = 0.0
    for _ in range(200):
        n = rnd.randint(5, 8)
        signs = [rnd.choice((-1, 0, 1)) for _ in range(n)]
        q, x = rnd.uniform(0.05, 0.95), rnd.uniform(0.05, 0.95)
        lhs, rhs = reversal_check(signs, ModelParams(q, x), exact=False)
        worst = max(worst, abs(lhs - rhs))
        a, b = reversal_check(signs, ModelParams(Fraction(1, 3), Fraction(1, 4)))
        ok &= a == b
    dt = time.perf_counter() - t
    ok = ok and worst < 1e-10 and dt < 60
    assert criterion(5, "path reversal identity", ok, f"float max err {worst:.1e}, {dt:.1f}s")


@pytest.fixture(scope="module")
def universality_runs():
    n, reps, seed = 10_000, 10_000, 2024
    out = {}
    t = time.perf_counter()
    for q in (0.0, 0.5, 0.9):
        out[q] = convoy_mc(n, ModelParams(q, 0.5), reps, seed)
    return out, time.perf_counter() - t


def test_6_universality(criterion, universality_runs):
    runs, dt = universality_runs
    n = 10_000
    means = {q: s.mean / math.sqrt(n) for q, s in runs.items()}
    ses = {q: s.stderr / math.sqrt(n) for q, s in runs.items()}
    in_band = all(0.536 <= m <= 0.593 for m in means.values())
    z = {(a, b): abs(means[a] - means[b]) / math.hypot(ses[a], ses[b])
         for a, b in itertools.combinations(sorted(means), 2)}
    ok = in_band and max(z.values()) < 3 and dt < 600
    detail = ", ".join(f"q={q}: {m:.4f}+-{ses[q]:.4f}" for q, m in means.items())
    detail += ", max pairwise z " + f"{max(z.values()):.2f}"
    assert criterion(6, "mean convoy / sqrt(n) independent of q", ok, detail)


def test_7_folded_normal(criterion, universality_runs):
    runs, _ = universality_runs
    half = stats.halfnorm(scale=math.sqrt(0.5))
    ks = {q: float(stats.kstest(s.scaled(), half.cdf).statistic) for q, s in runs.items()}
    for q in (0.5, 0.9):
        print(f"[INFO] KS distance to |N(0,1/2)| at q={q}: {ks[q]:.4f} (not asserted)")
    assert criterion(7, "TASEP convoy / sqrt(n) vs |N(0,1/2)|", ks[0.0] < 0.03,
                     f"KS {ks[0.0]:.4f}; informational q=0.5: {ks[0.5]:.4f}, q=0.9: {ks[0.9]:.4f}")


def test_8_local_limit(criterion):
    t = time.perf_counter()
    p = ModelParams(0.5, 0.5)
    rel = {}
    for y in (0.2, 0.5, 1.0):
        v, target = local_limit_check(y, 10_000, p)
        rel[y] = abs(v / target - 1)
    dt = time.perf_counter() - t
    ok = max(rel.values()) < 0.10 and dt < 120
    assert criterion(8, "local limit at n=1e4", ok,
                     ", ".join(f"y={y}: {r:.3f}" for y, r in rel.items()) + f", {dt:.1f}s")


def test_9_weak_limit(criterion):
    t = time.perf_counter()
    parts = {}
    gaps = [abs(a - b) for a, b in (qpoch_scaling_limit(0.0, 1.0, 10**6), qpoch_scaling_limit(1.0, 2.0, 10**6))]
    parts["scaling"] = max(gaps) < 1e-2
    ll = [abs(a - b) for a, b in (local_law_x(x, 1.0, 10**6) for x in (-1.0, 0.0, 1.0))]
    parts["local law"] = max(ll) < 5e-2
    masses = [integrate.quad(lambda x: density_x(x, g), -np.inf, np.inf, epsabs=1e-12, limit=200)[0]
              for g in (0.5, 1.0, 2.0, 8.0)]
    parts["f_X mass"] = max(abs(m - 1) for m in masses) < 1e-8
    marg = []
    for x in (-1.0, 0.0, 1.0):
        ys = np.arange(x - 5.0, x + 7.0, 0.05)
        f = joint_density_matrix([x], ys, 1.0, 0.25)[0]
        marg.append(abs(integrate.simpson(f, x=ys) - density_x(x, 1.0)))
    parts["joint marginal"] = max(marg) < 1e-3
    g8 = expected_gap(8.0, 0.25).gap
    g005 = expected_gap(0.05, 0.25).gap
    parts["gap gamma=8"] = abs(g8 / TARGET - 1) < 0.10
    parts["gap gamma=0.05"] = g005 < 0.1
    dt = time.perf_counter() - t
    ok = all(parts.values()) and dt < 900
    detail = (f"scaling {max(gaps):.1e}, local {max(ll):.1e}, marginal {max(marg):.1e}, "
              f"gap(8)={g8:.4f}, gap(0.05)={g005:.4f}, {dt:.0f}s")
    failed = [k for k, v in parts.items() if not v]
    if failed:
        detail += ", failed: " + ", ".join(failed)
    assert criterion(9, "weak-asymmetry scaling limits", ok, detail)


def test_10_q_hermite(criterion):
    t = time.perf_counter()
    parts = {}
    parts["H_n(1)=1"] = all(exact_value_at_one(n) == 1 for n in range(0, 101))
    worst = 0.0
    for q in (0.0, 0.5, 0.9):
        for m in range(0, 11):
            for n in range(m, 11):
                target = qpoch_finite(q, q, n) if m == n else 0.0
                worst = max(worst, abs(orthogonality_integral(m, n, q) - target))
    parts["orthogonality"] = worst < 1e-8
    gf = 0.0
    for theta, q in ((math.pi / 3, 0.4), (math.pi / 2, 0.0), (2.0, 0.8)):
        co = np.array(gf_coeff_oracle(theta, q, 20))
        rec = h_table(20, np.array([math.cos(theta)]), q)[:, 0]
        gf = max(gf, float(np.max(np.abs(co - rec))))
    parts["generating function"] = gf < 1e-9
    ends = [abs(v - c) for v, c in (endpoint_limit_check(1.0, 0.5, 2000), endpoint_limit_check(2.0, 0.0, 2000))]
    parts["endpoint"] = max(ends) < 0.05
    prod = max(abs(qpoch_infinite(-q, q) * qpoch_infinite(q, q * q) - 1) for q in np.linspace(0.05, 0.95, 19))
    parts["product identity"] = prod < 1e-10
    dt = time.perf_counter() - t
    ok = all(parts.values()) and dt < 120
    detail = f"ortho {worst:.1e}, gf {gf:.1e}, endpoint {max(ends):.3f}, product {prod:.1e}, {dt:.1f}s"
    assert criterion(10, "q-Hermite suite", ok, detail)
