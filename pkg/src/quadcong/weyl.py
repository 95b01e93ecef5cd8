"""Discrete and smoothed Weyl linear forms over dyadic ranges, the smoothing
weight, and exponent scans of |W_h(x, N)| against x.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .congruence import QuadPoly, RootTable, rho_range
from .phase import ordered_sum

CSV_HEADER = "x,N,h,re,im,abs,trivial,hooley_bound,ratio"


def mollifier(t):
    t = np.asarray(t, dtype=float)
    pos = t > 0
    return np.where(pos, np.exp(-1.0 / np.where(pos, t, 1.0)), 0.0)


def smooth_step(t):
    """C-infinity ramp: 0 for t <= 0, 1 for t >= 1."""
    a = mollifier(t)
    b = mollifier(1.0 - np.asarray(t, dtype=float))
    return a / (a + b)


@dataclass(frozen=True)
class SmoothWeight:
    """g = 1 on [x, 2x], supported in [x - x/Y1, 2x + x/Y1]."""

    x: float
    y1: float

    def __post_init__(self):
        if not self.x > 1:
            raise ValueError("x must exceed 1")
        if not 1 < self.y1 < self.x:
            raise ValueError("need 1 < Y1 < x")

    @property
    def ramp(self) -> float:
        return self.x / self.y1

    @property
    def support(self) -> tuple[float, float]:
        return self.x - self.ramp, 2 * self.x + self.ramp

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        w = self.ramp
        left = smooth_step((t - (self.x - w)) / w)
        right = smooth_step((2 * self.x + w - t) / w)
        out = np.minimum(left, right)
        return float(out) if out.ndim == 0 else out


def weight_eval(w: SmoothWeight, t: float) -> float:
    return float(w(t))


@dataclass(frozen=True)
class WeylQuery:
    f: QuadPoly
    h: int
    x: float
    N: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.x < 2:
            raise ValueError("x must be >= 2")
        if 2 * self.x > 2**62:
            raise ValueError("x too large")


@dataclass(frozen=True)
class WeylResult:
    value: complex
    term_count: int
    trivial_bound: float


def _chunked_rho(f, h, lo, hi, step, table, threads):
    """rho_h over step | n in [lo, hi], computed in n-chunks, concatenated in order."""
    if hi < lo:
        return np.zeros(0, np.int64), np.zeros(0, complex)
    threads = max(1, int(threads))
    bounds = np.linspace(lo, hi + 1, threads + 1).astype(np.int64)
    parts = [(int(a), int(b) - 1) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]

    def work(part):
        a, b = part
        ns, vals, _ = rho_range(f, h, a, b, step, table)
        return ns, vals

    if threads == 1:
        results = [work(p) for p in parts]
    else:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(work, parts))
    ns = np.concatenate([r[0] for r in results])
    vals = np.concatenate([r[1] for r in results])
    return ns, vals


def discrete_range(x: float, open_range: bool = False) -> tuple[int, int]:
    if open_range:
        return math.floor(x) + 1, math.ceil(2 * x) - 1
    return math.ceil(x), math.floor(2 * x)


def weyl_discrete(q: WeylQuery, open_range: bool = False, table: RootTable | None = None,
                  threads: int = 1) -> WeylResult:
    """Sum of rho_h(n) over x <= n <= 2x with N | n (strict inequalities if ``open_range``)."""
    lo, hi = discrete_range(q.x, open_range)
    table = table or RootTable(q.f, max(hi, 2))
    _, vals = _chunked_rho(q.f, q.h, lo, hi, q.N, table, threads)
    return WeylResult(ordered_sum(vals), int(vals.size), float(np.abs(vals).sum()))


def weyl_smooth(q: WeylQuery, w: SmoothWeight, table: RootTable | None = None,
                threads: int = 1) -> WeylResult:
    """Sum of rho_h(n) g(n) over N | n in the support of g."""
    if w.x != q.x:
        raise ValueError("weight and query disagree on x")
    a, b = w.support
    lo, hi = max(math.ceil(a), 1), math.floor(b)
    table = table or RootTable(q.f, max(hi, 2))
    ns, vals = _chunked_rho(q.f, q.h, lo, hi, q.N, table, threads)
    weights = w(ns.astype(float)) if ns.size else np.zeros(0)
    terms = vals * weights
    return WeylResult(ordered_sum(terms), int(np.count_nonzero(weights)),
                      float(np.abs(terms).sum()))


def hooley_bound(x: float) -> float:
    return x**0.75 * math.log(x) ** 2


def smoothing_gap_bound(x: float, N: int, y1: float, tau_n: int, const: float = 10.0) -> float:
    return const * (x * tau_n * math.log(x) / (N * y1) + math.sqrt(x))


@dataclass
class ScanResult:
    rows: list[dict]
    slope: float
    stderr: float
    fitted_c: float

    def csv_lines(self) -> list[str]:
        lines = [CSV_HEADER]
        for r in self.rows:
            lines.append(",".join(fmt(r[k]) for k in CSV_HEADER.split(",")))
        return lines

    def summary_line(self) -> str:
        return f"slope,stderr,fitted_C\n{fmt(self.slope)},{fmt(self.stderr)},{fmt(self.fitted_c)}"


def fmt(v) -> str:
    """Shortest round-trip text for floats (at most 17 significant digits)."""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def exponent_scan(f: QuadPoly, h: int, N: int, x_list, threads: int = 1) -> ScanResult:
    xs = [float(x) for x in x_list]
    if len(xs) < 4:
        raise ValueError("need >= 4 points")
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ValueError("x_list must be increasing")
    table = RootTable(f, math.floor(2 * xs[-1]) + 1)
    rows = []
    for x in xs:
        res = weyl_discrete(WeylQuery(f, h, x, N), table=table, threads=threads)
        hb = hooley_bound(x)
        rows.append(dict(x=x, N=N, h=h, re=res.value.real, im=res.value.imag,
                         abs=abs(res.value), trivial=res.trivial_bound,
                         hooley_bound=hb, ratio=abs(res.value) / hb))
    absw = np.array([r["abs"] for r in rows])
    if np.any(absw == 0):
        raise ValueError("|W| vanished at a scan point; log-fit undefined")
    fit = stats.linregress(np.log(xs), np.log(absw))
    return ScanResult(rows, float(fit.slope), float(fit.stderr),
                      float(max(r["ratio"] for r in rows)))


def dyadic_range(start_exp: int, end_exp: int) -> list[float]:
    return [float(2**k) for k in range(start_exp, end_exp + 1)]
