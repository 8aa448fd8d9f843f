"""Command-line front end.

Every subcommand writes deterministic output (CSV or JSON) to stdout or to
--out.  Exit codes: 0 ok, 1 selftest failure, 2 usage / bad parameters,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

import numpy as np

from .errors import ConsistencyError, DomainError, NumericError, PreconditionError, ResourceError
from .moments import ModelParams, as_scalar

EXIT_SELFTEST = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


def fmt(v) -> str:
    """17 significant digits for floats, p/q for rationals."""
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, Fraction):
        return fmt(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def emit_table(args, header, rows, meta=None) -> str:
    if args.format == "json":
        doc = {"command": args.cmd, "columns": list(header), "rows": [list(r) for r in rows]}
        if meta:
            doc["meta"] = meta
        return json.dumps(_jsonable(doc), indent=2, sort_keys=False) + "\n"
    lines = [",".join(header)] if header else []
    lines += [",".join(fmt(v) for v in r) for r in rows]
    return "\n".join(lines) + "\n"


def _params(args) -> ModelParams:
    if args.q is None or args.x is None:
        raise UsageError("--q and --x are required")
    p = ModelParams(args.q, args.x)
    if getattr(args, "exact", False):
        if not p.exact:
            raise UsageError("--exact needs rational --q and --x (e.g. 1/2)")
        return p
    return p


# --- subcommands --------------------------------------------------------------

def cmd_genocchi(args) -> str:
    from .genocchi import parse_poly, q_genocchi
    max_n = args.n if args.n is not None else 4
    if max_n < 0:
        raise UsageError("--n must be >= 0")
    if max_n > 40:
        raise ResourceError("max_n > 40 exceeds the computation budget")
    polys = [q_genocchi(k) for k in range(max_n + 1)]
    if args.format == "json":
        doc = {"command": "genocchi", "max_n": max_n,
               "polys": [{"n": k, "text": p.to_text(), "coefficients": p.coefficients()}
                         for k, p in enumerate(polys)]}
        for entry, p in zip(doc["polys"], polys):
            if parse_poly(entry["text"]) != p:
                raise ConsistencyError(f"text form of B_{entry['n']} does not round-trip")
        return json.dumps(doc, indent=2) + "\n"
    return "\n".join(",".join(str(c) for c in p.coefficients()) for p in polys) + "\n"


def cmd_convoy_exact(args) -> str:
    from .moments import expected_convoy_dp, expected_convoy_genocchi, expected_convoy_tasep
    p = _params(args)
    n = args.n if args.n is not None else 10
    method = args.method or "both"
    rows = []
    if method in ("dp", "both"):
        if p.q == 0:
            rows.append(("tasep", expected_convoy_tasep(n, p.x)))
        else:
            rows.append(("dp", expected_convoy_dp(n, p)))
    if method in ("genocchi", "both"):
        rows.append(("genocchi", expected_convoy_genocchi(n, p)))
    if method == "tasep":
        rows.append(("tasep", expected_convoy_tasep(n, p.x)))
    if not rows:
        raise UsageError(f"unknown --method {method!r}")
    status = "SINGLE"
    if len(rows) > 1:
        a, b = rows[0][1], rows[1][1]
        if p.exact:
            same = a == b
        else:
            same = abs(float(a) - float(b)) <= 1e-12 * max(1.0, abs(float(a)))
        status = "MATCH" if same else "MISMATCH"
    out_rows = [(m, v) for m, v in rows] + [("status", status)]
    return emit_table(args, ["method", "value"], out_rows,
                      meta={"n": n, "q": fmt(p.q), "x": fmt(p.x)})


def cmd_convoy_mc(args) -> str:
    from .queuesim import convoy_mc
    p = _params(args).as_float()
    n = args.n if args.n is not None else 1000
    reps = args.reps or 1000
    s = convoy_mc(n, p, reps, args.seed)
    if args.format == "json":
        doc = {"command": args.cmd, **s.to_dict(), "mean_over_sqrt_n": s.mean / math.sqrt(n)}
        return json.dumps(_jsonable(doc), indent=2) + "\n"
    rows = [("n", n), ("reps", reps), ("seed", args.seed), ("mean", s.mean), ("stderr", s.stderr),
            ("mean_over_sqrt_n", s.mean / math.sqrt(n))]
    rows += [(f"freq[{h['count']}]", h["freq"]) for h in s.histogram]
    return emit_table(args, ["key", "value"], rows)


def cmd_km_verify(args) -> str:
    from .kmtrans import km_table, matrix_row
    p = _params(args).as_float()
    n = args.n if args.n is not None else 50
    K = args.K if args.K is not None else 8
    tol = args.tol or 1e-12
    T = km_table(K, K, [n], p, quad_tol=tol)[0]
    rows = []
    worst = 0.0
    for i in range(K + 1):
        m = matrix_row(i, n, p)
        row_m = np.zeros(K + 1)
        row_m[: min(K + 1, len(m))] = m[: K + 1]
        diff = float(np.max(np.abs(T[i] - row_m)))
        worst = max(worst, diff)
        rows.append((i, diff))
    rows.append(("max", worst))
    return emit_table(args, ["i", "max_abs_diff"], rows, meta={"n": n, "K": K, "q": fmt(p.q), "x": fmt(p.x)})


def cmd_universality(args) -> str:
    from .queuesim import convoy_mc
    n = args.n if args.n is not None else 10_000
    reps = args.reps or 10_000
    x = float(as_scalar(args.x if args.x is not None else "1/2"))
    qs = [float(as_scalar(v)) for v in (args.qs or "0,0.5,0.9").split(",")]
    target = 2 * math.sqrt(x * (1 - x)) / math.sqrt(math.pi)
    rows = []
    for q in qs:
        s = convoy_mc(n, ModelParams(q, x), reps, args.seed)
        m = s.mean / math.sqrt(n)
        se = s.stderr / math.sqrt(n)
        rows.append((q, m, se, abs(m - target) <= 0.05 * target))
    return emit_table(args, ["q", "mean_over_sqrt_n", "stderr", "within_5pct"], rows,
                      meta={"n": n, "reps": reps, "seed": args.seed, "x": x, "target": target})


def cmd_weak_limit(args) -> str:
    from .weaklimit import expected_gap, y_marginal_grid
    if args.q is not None:
        raise UsageError("weak-limit takes --gamma, not --q")
    gamma = float(as_scalar(args.gamma if args.gamma is not None else 1.0))
    x = float(as_scalar(args.x if args.x is not None else "1/2"))
    c = x * (1 - x)
    r = expected_gap(gamma, c)
    if args.grid:
        with open(args.grid, "w", newline="\n") as fh:
            fh.write(y_marginal_grid(gamma, c).to_csv())
    d = r.as_dict()
    rows = [(k, d[k]) for k in ("gap", "mass", "mean_x", "mean_y", "marginal_err", "h", "n_x", "n_w")]
    return emit_table(args, ["key", "value"], rows, meta={"gamma": gamma, "c": c})


def cmd_asep_demo(args) -> str:
    from .asepsim import second_class_speed
    q = float(as_scalar(args.q if args.q is not None else 0))
    T = args.T or 200.0
    reps = args.reps or 200
    L = args.L or int(2 * (1 - q) * T * 1.5 + 50)
    s = second_class_speed(L, T, q, reps, args.seed)
    if args.format == "json":
        doc = {"command": "asep-demo", "L": L, "T": T, "q": q, "reps": reps, "seed": args.seed,
               "valid": int(s.valid.sum()), "ks_uniform": s.ks_uniform(),
               "mean_speed": float(s.speeds[s.valid].mean()),
               "rows": [[r, int(pos), float(v) if ok else None]
                        for r, (pos, v, ok) in enumerate(zip(s.positions, s.speeds, s.valid))]}
        return json.dumps(doc, indent=2) + "\n"
    return s.to_csv()


def run_selftest() -> list:
    """Exact-identity checks; returns a list of (name, ok)."""
    from .genocchi import catalan, enumerate_pistols, genocchi_via_hsym, pistol_polynomial, q_genocchi, sinv
    from .moments import expected_convoy_dp, expected_convoy_genocchi, expected_convoy_tasep
    from .qhermite import exact_value_at_one
    from .qseries import qpoch_infinite
    from .queuesim import reversal_check

    out = []
    out.append(("genocchi_b4", q_genocchi(4).coefficients() == [14, 36, 45, 35, 18, 6, 1]))
    out.append(("pistols", all(pistol_polynomial(n) == q_genocchi(n) for n in range(1, 5))))
    out.append(("pistol_catalan", all(sum(1 for p in enumerate_pistols(n) if sinv(p) == 0) == catalan(n)
                                      for n in range(1, 5))))
    out.append(("hsym_form", all(genocchi_via_hsym(n) == q_genocchi(n) for n in range(1, 6))))
    ok = True
    for q in (Fraction(1, 5), Fraction(1, 2)):
        for n in range(1, 9):
            p = ModelParams(q, Fraction(1, 3))
            ok &= expected_convoy_dp(n, p) == expected_convoy_genocchi(n, p)
    out.append(("dp_vs_genocchi", bool(ok)))
    out.append(("tasep_vs_genocchi", all(expected_convoy_tasep(n, Fraction(1, 2)) ==
                                         expected_convoy_genocchi(n, ModelParams(0, Fraction(1, 2)))
                                         for n in range(1, 30))))
    out.append(("hermite_at_one", all(exact_value_at_one(n) == 1 for n in range(0, 30))))
    out.append(("product_identity", abs(qpoch_infinite(-0.5, 0.5) * qpoch_infinite(0.5, 0.25) - 1) < 1e-10))
    rc = True
    for signs in ([1, 1, -1], [1, -1, -1, 1], [-1, 1, 1]):
        a, b = reversal_check(signs, ModelParams(Fraction(1, 2), Fraction(1, 3)))
        rc &= a == b
    out.append(("path_reversal", bool(rc)))
    return out


def cmd_selftest(args) -> str:
    res = run_selftest()
    args._selftest_failed = not all(ok for _, ok in res)
    return emit_table(args, ["check", "ok"], [(k, bool(v)) for k, v in res])


COMMANDS = {
    "genocchi": cmd_genocchi,
    "convoy-exact": cmd_convoy_exact,
    "convoy-mc": cmd_convoy_mc,
    "km-verify": cmd_km_verify,
    "universality": cmd_universality,
    "weak-limit": cmd_weak_limit,
    "asep-demo": cmd_asep_demo,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="asepconvoy", description="Convoy sizes in the ASEP speed process.")
    sub = ap.add_subparsers(dest="cmd", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--q", type=str)
        sp.add_argument("--x", type=str)
        sp.add_argument("--gamma", type=str)
        sp.add_argument("--n", type=int)
        sp.add_argument("--reps", type=int)
        sp.add_argument("--seed", type=int, default=2024)
        sp.add_argument("--tol", type=float)
        sp.add_argument("--format", choices=["csv", "json"], default="csv")
        sp.add_argument("--out", type=str)
        sp.add_argument("--method", type=str)
        sp.add_argument("--exact", action="store_true")
        sp.add_argument("--K", type=int, help="largest level index (km-verify)")
        if name == "universality":
            sp.add_argument("--qs", type=str, help="comma separated q values")
        if name == "weak-limit":
            sp.add_argument("--grid", type=str, help="write the y-marginal grid to this CSV")
        if name == "asep-demo":
            sp.add_argument("--L", type=int)
            sp.add_argument("--T", type=float)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        text = COMMANDS[args.cmd](args)
    except (UsageError, DomainError, PreconditionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, ResourceError, ConsistencyError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if getattr(args, "_selftest_failed", False):
        return EXIT_SELFTEST
    return 0


if __name__ == "__main__":
    sys.exit(main())
