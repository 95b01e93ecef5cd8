"""Smooth partitions of unity along hyperbolic orbits (T-functions) and the
orbit-cutting weight psi_q(xi) = p_1(c/d) for an indefinite form q.

A hyperbolic T in SL_2(Z) with fixed points t0 < t1 splits the projective
line into the inner arc (t0, t1) and the outer arc through infinity.  On each
arc the coordinate

    sigma(x) = log |(x - t0) / (x - t1)|

turns T into a translation by the log of its multiplier, L = 2 log(lambda),
lambda the larger eigenvalue.  We use the flow S in {T, T^-1} that moves sigma
forward.  With u1 = sigma^-1(a) and u2 = sigma^-1(a + r) the bump

    p0(sigma) = step((sigma - a) / r) * step((a + L + r - sigma) / r)

rises on [u1, u2], is 1 up to S(u1) and falls on [S(u1), S(u2)].  Its fall is
exactly one minus the S-image of its rise, so sum_n p0(S^n x) = 1 already; we
still divide by that sum.  The start a is placed to keep the support away from
0 and infinity while keeping |F(x)| / (1 + x^2) large, F(x) = c x^2 + (d - a) x - b
the fixed-point quadratic of T.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .forms import BQForm, Mat2
from .weyl import smooth_step

RAMP = 0.3  # ramp length as a fraction of the translation length L
MARGIN = 0.05  # clearance from 0 and infinity, as a fraction of L
NORMALIZE_RANGE = 3


class NotHyperbolic(ValueError):
    pass


def fixed_points(T: Mat2) -> tuple[float, float]:
    """Sorted real roots of c t^2 + (d - a) t - b = 0."""
    a, b, c, d = T.entries()
    disc = (d - a) ** 2 + 4 * b * c
    if c == 0 or disc <= 0:
        raise NotHyperbolic("not hyperbolic")
    if b == 0:
        raise ValueError("zero fixed point")
    root = math.sqrt(disc)
    # numerically stable pair
    s = -(d - a)
    q1 = (s + math.copysign(root, s if s else 1.0)) / 2.0
    r1 = q1 / c
    r2 = -b / q1
    t0, t1 = sorted((r1, r2))
    return t0, t1


def _mobius(m: Mat2, y):
    with np.errstate(divide="ignore", invalid="ignore"):
        return (m.a * y + m.b) / (m.c * y + m.d)


def translation_length(T: Mat2) -> float:
    tr = abs(T.trace)
    return 2.0 * math.log((tr + math.sqrt(tr * tr - 4.0)) / 2.0)


@dataclass(frozen=True)
class Branch:
    """Bump on one arc: inner (t0, t1) or outer (through infinity)."""

    outer: bool
    t0: float
    t1: float
    flow: Mat2  # S, moving sigma forward by L
    length: float  # L
    start: float  # a
    ramp: float  # r

    def sigma(self, x):
        """sigma on this arc; nan off the arc, +-inf at the fixed points."""
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = (x - self.t0) / (x - self.t1)
            ratio = ratio if self.outer else -ratio
            return np.where(ratio > 0, np.log(np.where(ratio > 0, ratio, 1.0)), np.nan)

    def inverse_sigma(self, s: float) -> float:
        """Point of the arc with the given sigma; infinity is sigma = 0 on the outer arc."""
        k = math.exp(s) if self.outer else -math.exp(s)
        if k == 1.0:
            return math.inf
        # (x - t0) = k (x - t1)
        return (self.t0 - k * self.t1) / (1.0 - k)

    def bump(self, s):
        s = np.asarray(s, dtype=float)
        a, L, r = self.start, self.length, self.ramp
        with np.errstate(invalid="ignore"):
            out = smooth_step((s - a) / r) * smooth_step((a + L + r - s) / r)
        return np.where(np.isfinite(s), out, 0.0)

    def __call__(self, x):
        s = self.sigma(x)
        p0 = self.bump(s)
        total = p0.copy()
        for n in range(1, NORMALIZE_RANGE + 1):
            total += self.bump(s + n * self.length) + self.bump(s - n * self.length)
        live = p0 > 0
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(live, p0 / np.where(live, total, 1.0), 0.0)

    def support_x(self) -> tuple[float, float]:
        ends = [self.inverse_sigma(self.start), self.inverse_sigma(self.start + self.length + self.ramp)]
        return min(ends), max(ends)


def _clearance_points(outer: bool, t0: float, t1: float) -> list[float]:
    """sigma-values of 0 and infinity when they lie on the arc."""
    pts = []
    if outer:
        pts.append(0.0)  # infinity
        if t0 > 0 or t1 < 0:
            pts.append(math.log(abs(t0 / t1)))
    elif t0 < 0 < t1:
        pts.append(math.log(abs(t0 / t1)))
    return pts


def _make_branch(T: Mat2, outer: bool, ramp: float) -> Branch:
    t0, t1 = fixed_points(T)
    L = translation_length(T)
    a_, b_, c_, d_ = T.entries()
    probe = Branch(outer, t0, t1, T, L, 0.0, 1.0)
    x_mid = probe.inverse_sigma(0.3)
    shift = float(probe.sigma(_mobius(T, x_mid))) - 0.3
    flow = T if shift > 0 else T.inverse()
    r = ramp * L
    width = L + r
    avoid = _clearance_points(outer, t0, t1)
    clear = MARGIN * L

    def score(s):  # |F| / (1 + x^2) on the arc, F the fixed-point quadratic
        k = np.exp(s) if outer else -np.exp(s)
        num, den = t0 - k * t1, 1.0 - k  # x = num / den, homogeneously
        return np.abs(c_ * num * num + (d_ - a_) * num * den - b_ * den * den) / (num * num + den * den)

    grid = np.linspace(-6 * L, 6 * L, 1201)
    centre = float(grid[int(np.argmax(score(grid)))])
    best, best_val = None, -1.0
    for a in np.linspace(centre - width - 2 * L, centre + 2 * L, 801):
        if any(a - clear < z < a + width + clear for z in avoid):
            continue
        val = float(score(np.linspace(a, a + width, 33)).min())
        if val > best_val:
            best, best_val = float(a), val
    if best is None:
        raise ValueError("no admissible placement for the bump")
    return Branch(outer, t0, t1, flow, L, best, r)


@dataclass(frozen=True)
class TFunction:
    T: Mat2
    t0: float
    t1: float
    inner: Branch
    outer: Branch

    def near_fixed(self, x, rel: float = 1e-9):
        x = np.asarray(x, dtype=float)
        return ((np.abs(x - self.t0) <= rel * max(1.0, abs(self.t0)))
                | (np.abs(x - self.t1) <= rel * max(1.0, abs(self.t1))))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(self.near_fixed(x), 0.0, self.inner(x) + self.outer(x))
        return float(out) if out.ndim == 0 else out

    @property
    def radii(self) -> tuple[float, float]:
        """(r1, r2) with p(x) != 0 only for r1 < |x| < r2."""
        mags = []
        for br in (self.inner, self.outer):
            lo, hi = br.support_x()
            if lo < 0 < hi:
                raise AssertionError("branch support contains 0")
            mags += [abs(lo), abs(hi)]
        return min(mags), max(mags)

    def orbit_sum(self, x: float, terms: int = 30) -> float:
        """sum over |n| <= terms of p(T^n x); 0 at a fixed point, whose orbit is itself."""
        if self.near_fixed(x):
            return 0.0
        pts = [float(x)]
        fwd = back = float(x)
        inv = self.T.inverse()
        for _ in range(terms):
            fwd = float(_mobius(self.T, fwd))
            back = float(_mobius(inv, back))
            pts += [fwd, back]
        return float(np.sum(self(np.array(pts))))


def t_function(T: Mat2, ramp: float = RAMP) -> TFunction:
    if not 0 < ramp < 1:
        raise ValueError("ramp fraction must lie in (0, 1)")
    t0, t1 = fixed_points(T)
    return TFunction(T, t0, t1, _make_branch(T, False, ramp), _make_branch(T, True, ramp))


@dataclass(frozen=True)
class PsiWeight:
    """psi_q(xi) = p1(c/d), p1 a T1-function for T1 = transpose of the automorph T0."""

    form: BQForm
    T0: Mat2
    p1: TFunction

    @property
    def radii(self) -> tuple[float, float]:
        return self.p1.radii

    def __call__(self, c, d):
        c = np.asarray(c, dtype=float)
        d = np.asarray(d, dtype=float)
        nz = d != 0
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(nz, c / np.where(nz, d, 1.0), 0.0)
        out = np.where(nz, self.p1(t), 0.0)
        return float(out) if out.ndim == 0 else out


def psi_weight(form: BQForm, T0: Mat2, ramp: float = RAMP) -> PsiWeight:
    return PsiWeight(form, T0, t_function(T0.transpose(), ramp))


def psi_eval(w: PsiWeight, bottom: tuple[int, int]) -> float:
    c, d = bottom
    if d == 0:
        return 0.0
    return float(w(c, d))
