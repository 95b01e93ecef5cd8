"""Command-line driver: ``quadcong <subcommand> [options]``.

Tables go out as CSV, structured reports as JSON.  Floats use the shortest
round-trip text.  A JSON file given with ``--config`` supplies defaults
(keys are option names with dashes replaced by underscores); explicit flags
win.  ``QC_THREADS`` sets the default thread count.

Exit codes: 0 ok, 2 usage or invalid input, 3 numeric tolerance failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .congruence import QuadPoly, ReduciblePolynomial, RootTable, rho, roots_mod
from .forms import BQForm
from .hecke import Cusp, KloostermanQuery, cusp_data, cusp_representatives, kloosterman_sum
from .poincare import (OrbitIncomplete, PoincareConfig, QuadratureError, TruncationError,
                       poisson_identity_check, small_representatives)
from .weyl import (SmoothWeight, WeylQuery, dyadic_range, exponent_scan, fmt,
                   weyl_discrete, weyl_smooth)

EXIT_USAGE = 2
EXIT_TOLERANCE = 3


class UsageError(Exception):
    pass


def _ints(text, count: int | None = None) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        vals = tuple(int(v) for v in text)
    else:
        vals = tuple(int(v) for v in str(text).split(","))
    if count is not None and len(vals) != count:
        raise UsageError(f"expected {count} comma-separated integers, got {text!r}")
    return vals


def _poly(args) -> QuadPoly:
    return QuadPoly(*_ints(args.poly, 3))


def _threads(args) -> int:
    t = args.threads if args.threads is not None else int(os.environ.get("QC_THREADS", "1"))
    if t < 1:
        raise UsageError("thread count must be >= 1")
    return t


def _csv(rows) -> list[str]:
    return [",".join(fmt(v) if not isinstance(v, str) else v for v in row) for row in rows]


def cmd_rho(args) -> list[str]:
    f = _poly(args)
    val = rho(f, args.h, args.n)
    return [",".join([str(args.n), fmt(val.real), fmt(val.imag), str(len(roots_mod(f, args.n)))])]


def cmd_weyl(args) -> list[str]:
    f = _poly(args)
    q = WeylQuery(f, args.h, args.x, args.N)
    threads = _threads(args)
    table = RootTable(f, math.floor(2 * args.x + (args.x / args.Y1 if args.Y1 else 0)) + 2)
    lines = ["kind,x,N,h,Y1,re,im,abs,trivial,terms"]
    res = weyl_discrete(q, open_range=args.open_range, table=table, threads=threads)
    kind = "discrete_open" if args.open_range else "discrete"
    lines.append(",".join([kind, fmt(args.x), str(args.N), str(args.h), "",
                           fmt(res.value.real), fmt(res.value.imag), fmt(abs(res.value)),
                           fmt(res.trivial_bound), str(res.term_count)]))
    if args.Y1 is not None:
        sm = weyl_smooth(q, SmoothWeight(args.x, args.Y1), table=table, threads=threads)
        lines.append(",".join(["smooth", fmt(args.x), str(args.N), str(args.h), fmt(args.Y1),
                               fmt(sm.value.real), fmt(sm.value.imag), fmt(abs(sm.value)),
                               fmt(sm.trivial_bound), str(sm.term_count)]))
    return lines


def _dyadic(start: float, end: float) -> list[float]:
    if start < 2 or end < start:
        raise UsageError("need 2 <= x-start <= x-end")
    lo, hi = math.log2(start), math.log2(end)
    if lo != int(lo) or hi != int(hi):
        raise UsageError("x-start and x-end must be powers of two")
    xs = dyadic_range(int(lo), int(hi))
    if len(xs) < 4:
        raise UsageError("dyadic range too small: need >= 4 points")
    return xs


def cmd_scan(args) -> list[str]:
    f = _poly(args)
    xs = _dyadic(args.x_start, args.x_end)
    res = exponent_scan(f, args.h, args.N, xs, threads=_threads(args))
    return res.csv_lines() + res.summary_line().split("\n")


def cmd_cusps(args) -> list[str]:
    rows = []
    for cusp in cusp_representatives(args.q):
        data = cusp_data(args.q, cusp)
        rows.append(dict(q=args.q, mu=cusp.mu, nu=cusp.nu, qpp=data.qdoubleprime, width=data.width))
    if args.format == "json":
        return [json.dumps(rows)]
    return ["q,mu,nu,qpp,width"] + [",".join(str(r[k]) for k in ("q", "mu", "nu", "qpp", "width"))
                                    for r in rows]


def cmd_kloosterman(args) -> list[str]:
    cusp = Cusp.parse(args.cusp, args.q)
    if args.q % cusp.nu:
        raise UsageError(f"cusp denominator {cusp.nu} does not divide q={args.q}")
    res = kloosterman_sum(KloostermanQuery(args.q, cusp, args.m, args.n, args.c))
    if res.empty:
        print(f"note: c={args.c} is not a modulus for this cusp; sum is empty", file=sys.stderr)
    return [f"{fmt(res.value.real)},{fmt(res.value.imag)}"]


def cmd_poincare_check(args):
    f = _poly(args)
    if args.form is not None:
        qform = BQForm(*_ints(args.form, 3))
    else:
        qform = small_representatives(f)[0]
    cfg = PoincareConfig(f, qform, args.x, args.N, args.Y1, h=args.h, kappa_max=args.kappa_max)
    report = poisson_identity_check(cfg, rel_tol=args.rel_tol)
    out = {k: (float(v) if isinstance(v, (float, np.floating)) else v)
           for k, v in report.as_dict().items()}
    line = json.dumps(out)
    return [line], (0 if report.ok(args.rel_tol) else EXIT_TOLERANCE)


def equidistribution(f: QuadPoly, x: int, bins: int):
    """Histogram of root fractions v/n over n <= x; rows (lo, hi, count, expected, discrepancy)."""
    table = RootTable(f, max(x, 2))
    ns, vs = table.pairs(1, x)
    # bin index floor(bins * v / n) computed exactly in integers
    idx = (bins * vs) // ns
    counts = np.bincount(idx, minlength=bins)
    total = int(counts.sum())
    expected = total / bins
    rows = []
    for k in range(bins):
        rows.append((k / bins, (k + 1) / bins, int(counts[k]), expected,
                     (int(counts[k]) - expected) / total if total else 0.0))
    return rows


def cmd_equidist(args) -> list[str]:
    if args.bins < 1 or args.x < 1:
        raise UsageError("need x >= 1 and bins >= 1")
    rows = equidistribution(_poly(args), int(args.x), args.bins)
    return ["bin_lo,bin_hi,count,expected,discrepancy"] + _csv(rows)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--config", help="JSON file of default option values")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $QC_THREADS or 1)")
    common.add_argument("--seed", type=int, default=0, help="seed for any sampling")
    common.add_argument("--output", "-o", default=None, help="write to this file instead of stdout")

    parser = argparse.ArgumentParser(prog="quadcong", allow_abbrev=False, description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rho", parents=[common], allow_abbrev=False, help="quadratic harmonic rho_h(n)")
    p.add_argument("--poly", required=True, help="alpha,beta,gamma")
    p.add_argument("--h", type=int, default=0)
    p.add_argument("--n", type=int, default=1)
    p.set_defaults(func=cmd_rho)

    p = sub.add_parser("weyl", parents=[common], allow_abbrev=False, help="discrete (and smooth) Weyl form")
    p.add_argument("--poly", required=True)
    p.add_argument("--h", type=int, default=1)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--Y1", type=float, default=None, help="also report the smooth form")
    p.add_argument("--open-range", action="store_true", help="use x < n < 2x")
    p.set_defaults(func=cmd_weyl)

    p = sub.add_parser("scan", parents=[common], allow_abbrev=False, help="dyadic exponent scan")
    p.add_argument("--poly", required=True)
    p.add_argument("--h", type=int, default=1)
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--x-start", type=float, required=True)
    p.add_argument("--x-end", type=float, required=True)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("cusps", parents=[common], allow_abbrev=False, help="cusp table of Gamma_0(q)")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_cusps)

    p = sub.add_parser("kloosterman", parents=[common], allow_abbrev=False, help="Kloosterman sum S(m, n; c sqrt q'')")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--cusp", default="inf", help="'inf' or mu/nu")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--c", type=int, required=True)
    p.set_defaults(func=cmd_kloosterman)

    p = sub.add_parser("poincare-check", parents=[common], allow_abbrev=False, help="Poisson/Kloosterman identity report")
    p.add_argument("--poly", default="1,0,-2")
    p.add_argument("--form", default=None, help="u,r,v; write --form=-2,0,1 for a negative u (default: least-height orbit representative)")
    p.add_argument("--x", type=float, default=1e4)
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--Y1", type=float, default=4.0)
    p.add_argument("--h", type=int, default=1)
    p.add_argument("--kappa-max", type=int, default=None)
    p.add_argument("--rel-tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_poincare_check)

    p = sub.add_parser("equidist", parents=[common], allow_abbrev=False, help="histogram of root fractions v/n")
    p.add_argument("--poly", required=True)
    p.add_argument("--x", type=float, default=1e5)
    p.add_argument("--bins", type=int, default=20)
    p.set_defaults(func=cmd_equidist)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv) -> None:
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    with open(known.config, encoding="utf-8") as fh:
        defaults = json.load(fh)
    if not isinstance(defaults, dict):
        raise UsageError("config file must hold a JSON object")
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            dests = {a.dest for a in sp._actions}
            sp.set_defaults(**{k: v for k, v in defaults.items() if k in dests})
            for a in sp._actions:  # a config value satisfies a required flag
                if a.dest in defaults:
                    a.required = False


def _emit(lines, path) -> None:
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.buffer.write(text.encode("utf-8"))
        sys.stdout.flush()


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        out = args.func(args)
        code = 0
        if isinstance(out, tuple):
            out, code = out
        _emit(out, args.output)
        return code
    except SystemExit as exc:  # argparse usage errors
        return EXIT_USAGE if exc.code else 0
    except (UsageError, ReduciblePolynomial, ValueError, OrbitIncomplete, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TruncationError, QuadratureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE


if __name__ == "__main__":
    sys.exit(main())
