"""Truncated Poincare series attached to a divisible coset, the Fourier
integrals G(c, kappa), and the Poisson/Kloosterman expansion of Q.

Rows (c, d) of matrices in Gamma' eta are taken modulo +-1 with c > 0; a row
belongs to the coset iff c d_eta - d c_eta = 0 (mod N alpha).  Every
enumeration is confined to a sector of directions where |q(c, d)| is bounded
below by m (c^2 + d^2), which makes the row sets finite and provably complete.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy import integrate

from .congruence import QuadPoly
from .forms import (BQForm, Mat2, act, automorph_generator, extend_bottom_row,
                    orbit_representatives, qf_member)
from .hecke import (CosetLabel, Cusp, coset_labels, cusp_data, divisible_cosets,
                    kloosterman_moduli, kloosterman_terms, width_formula)
from .partition import RAMP, PsiWeight, psi_weight
from .phase import e_rational, ordered_sum
from .weyl import SmoothWeight, smooth_step

KAPPA_EXPONENT = 1.1
KAPPA_CAP = 1 << 15
MIN_NODES = 512  # trapezoid nodes per y-interval, at least
DIRECT_FFT_LIMIT = 1 << 22


class TruncationError(RuntimeError):
    pass


class QuadratureError(RuntimeError):
    pass


class OrbitIncomplete(RuntimeError):
    pass


def kappa_floor(N: int, y1: float) -> int:
    return math.ceil((N * y1) ** KAPPA_EXPONENT)


def default_coset(f: QuadPoly, qform: BQForm, N: int) -> CosetLabel:
    """First divisible coset if any, else a coset of largest width."""
    divisible = divisible_cosets(f, qform, N)
    if divisible:
        return divisible[0]
    labels = coset_labels(f.alpha, N)
    return max(labels, key=lambda lab: (lab.width, [-v for v in lab.point]))


@dataclass
class PoincareConfig:
    f: QuadPoly
    qform: BQForm
    x: float
    N: int
    Y1: float
    h: int = 1
    coset: CosetLabel | None = None
    kappa_max: int | None = None
    quad_abs_tol: float = 1e-10
    ramp: float = RAMP

    def __post_init__(self):
        if not qf_member(self.f, self.qform):
            raise ValueError(f"{self.qform} is not in Q_f")
        if self.f.disc <= 0:
            raise ValueError("positive discriminant required")
        if self.x > 1e6:
            raise ValueError("x must be <= 10^6 for direct enumeration")
        if self.quad_abs_tol > 1e-9:
            raise ValueError("quad_abs_tol must be <= 1e-9")
        if self.kappa_max is not None and self.kappa_max < kappa_floor(self.N, self.Y1):
            raise ValueError("kappa_max below ceil((N Y1)^1.1)")
        if self.coset is None:
            self.coset = default_coset(self.f, self.qform, self.N)
        if self.coset.level != self.n1:
            raise ValueError("coset level must be N alpha")

    @property
    def n1(self) -> int:
        return self.N * self.f.alpha

    @cached_property
    def weight(self) -> SmoothWeight:
        return SmoothWeight(self.x, self.Y1)

    @cached_property
    def automorph(self) -> Mat2:
        return automorph_generator(self.f, self.qform)

    @cached_property
    def psi(self) -> PsiWeight:
        return psi_weight(self.qform, self.automorph, self.ramp)

    @property
    def width(self) -> int:
        return width_formula(self.n1, self.coset.eta)

    @property
    def vmax(self) -> float:
        """Largest q(c, d) with g(q / alpha) != 0."""
        return self.f.alpha * self.weight.support[1]

    @property
    def is_divisible(self) -> bool:
        eta = self.coset.eta
        return self.qform(eta.c, eta.d) % self.n1 == 0


# ---------------------------------------------------------------------------
# sectors of directions


def _theta(t) -> float:
    """Direction angle in [0, pi) of the row (c, d) with c/d = t; t=None is infinity."""
    if t is None:
        return 0.0
    return math.atan2(1.0, float(t))


def _min_abs_q(q: BQForm, lo: float, hi: float) -> float:
    """min |q(cos th, sin th)| for th in [lo, hi]; q has no zero there."""
    A, B, C = (q.u + q.v) / 2, (q.u - q.v) / 2, q.r / 2
    cands = [lo, hi]
    base = 0.5 * math.atan2(C, B)
    k0 = math.floor((lo - base) / (math.pi / 2)) - 1
    for k in range(k0, k0 + 8):
        th = base + k * math.pi / 2
        if lo <= th <= hi:
            cands.append(th)
    vals = [abs(A + B * math.cos(2 * t) + C * math.sin(2 * t)) for t in cands]
    for t in np.linspace(lo, hi, 65):  # sign-change guard
        if abs(A + B * math.cos(2 * t) + C * math.sin(2 * t)) < 1e-300:
            raise ValueError("form vanishes inside sector")
    return min(vals)


def _sector_radius(q: BQForm, sectors, vmax: float) -> int:
    m = min(_min_abs_q(q, lo, hi) for lo, hi in sectors)
    return int(math.sqrt(vmax / m) * 1.001) + 2


def _interval_sector(lo: float, hi: float) -> tuple[float, float]:
    """Sector of directions for t in the finite interval [lo, hi] (0 not inside)."""
    a, b = _theta(hi), _theta(lo)
    return min(a, b), max(a, b)


_QUARTER = math.pi / 4


def _split_sector(lo: float, hi: float, pieces: int) -> list[tuple[float, float]]:
    """Cut the angle range [lo, hi] into short pieces that never straddle a
    multiple of pi/2 or the diagonals pi/4, 3 pi/4 (mod pi)."""
    cuts = {lo, hi}
    k = math.floor(lo / _QUARTER) + 1
    while k * _QUARTER < hi:
        cuts.add(k * _QUARTER)
        k += 1
    edges = sorted(cuts)
    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        n = max(1, math.ceil(pieces * (b - a) / math.pi))
        grid = np.linspace(a, b, n + 1)
        out += list(zip(grid[:-1].tolist(), grid[1:].tolist()))
    return out


def _ragged(starts, counts, keys):
    """Flatten the runs starts[i] .. starts[i] + counts[i] - 1, tagged by keys[i]."""
    counts = np.maximum(counts, 0)
    total = int(counts.sum())
    offs = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    return np.repeat(keys, counts), np.repeat(starts, counts) + offs


def _piece_rows(a: float, b: float, radius: int):
    """Integer rows with direction angle in [a, b] (mod pi, slightly padded)
    and length <= radius, normalised to c > 0 or (0, 1)."""
    k = math.floor((0.5 * (a + b)) / math.pi)
    a, b = a - k * math.pi, b - k * math.pi
    mid = 0.5 * (a + b)
    if _QUARTER <= mid <= 3 * _QUARTER:
        # d > 0 and c / d = cot(theta)
        lo, hi = sorted((math.cos(b) / math.sin(b), math.cos(a) / math.sin(a)))
        d = np.arange(1, radius + 1, dtype=np.int64)
        start = np.floor(d * lo).astype(np.int64) - 1
        stop = np.floor(d * hi).astype(np.int64) + 1
        dd, cc = _ragged(start, stop - start + 1, d)
        flip = cc < 0
        cc, dd = np.where(flip, -cc, cc), np.where(flip, -dd, dd)
        dd = np.where(cc == 0, 1, dd)
    else:
        # c > 0 and d / c = tan(theta)
        lo, hi = sorted((math.tan(a), math.tan(b)))
        c = np.arange(1, radius + 1, dtype=np.int64)
        start = np.floor(c * lo).astype(np.int64) - 1
        stop = np.floor(c * hi).astype(np.int64) + 1
        cc, dd = _ragged(start, stop - start + 1, c)
    keep = cc * cc + dd * dd <= radius * radius
    return cc[keep], dd[keep]


def sector_rows(q: BQForm, sectors, vmax: float, pieces: int = 256):
    """Coprime rows (c > 0, or (0, 1)) covering every direction in the sectors
    with |q(c, d)| <= vmax; callers filter the exact conditions.

    Each sector is cut into thin pieces, each with its own radius, so a sector
    running close to an isotropic direction does not force a huge disc.
    Returns (c, d, c_bound) with c_bound >= |c| for every real point of the
    sectors with |q| <= vmax."""
    cs, ds = [], []
    c_bound = 0
    for lo, hi in sectors:
        for a, b in _split_sector(lo, hi, pieces):
            radius = _sector_radius(q, [(a, b)], vmax)
            cc, dd = _piece_rows(a, b, radius)
            cs.append(cc)
            ds.append(dd)
            cmax = max(abs(math.cos(a)), abs(math.cos(b)))
            c_bound = max(c_bound, math.ceil(radius * cmax))
    if not cs:
        return np.zeros(0, np.int64), np.zeros(0, np.int64), 0
    pairs = np.unique(np.stack([np.concatenate(cs), np.concatenate(ds)], axis=1), axis=0)
    c, d = pairs[:, 0], pairs[:, 1]
    keep = np.gcd(c, d) == 1
    return c[keep], d[keep], c_bound


def _support_sectors(cfg) -> list[tuple[float, float]]:
    return [_interval_sector(*br.support_x()) for br in (cfg.psi.p1.inner, cfg.psi.p1.outer)]


@dataclass
class Rows:
    c: np.ndarray
    d: np.ndarray
    v: np.ndarray  # q(c, d)
    weight: np.ndarray  # g(v / alpha) (times psi where applicable)

    def __len__(self):
        return int(self.c.size)


def _q_values(q: BQForm, c, d):
    return q.u * c * c + q.r * c * d + q.v * d * d


def support_rows(cfg: PoincareConfig) -> Rows:
    """Rows (c > 0, d) of Gamma' eta with g(q(c,d)/alpha) psi(c,d) != 0."""
    c, d, _ = sector_rows(cfg.qform, _support_sectors(cfg), cfg.vmax)
    inside = cfg.coset.contains_row_vec(c, d)
    c, d = c[inside], d[inside]
    v = _q_values(cfg.qform, c, d)
    lo, hi = cfg.weight.support
    alpha = cfg.f.alpha
    keep = (v > alpha * lo) & (v < alpha * hi)
    c, d, v = c[keep], d[keep], v[keep]
    w = np.atleast_1d(cfg.weight(v / alpha) * cfg.psi(c, d))
    keep = w > 0
    return Rows(c[keep], d[keep], v[keep], w[keep])


def _hooley_numerators(cfg: PoincareConfig, c, d):
    """(h (r(xi) - beta) mod 2 v, 2 v) for each row, exact integers."""
    num, den = [], []
    for ci, di in zip(c.tolist(), d.tolist()):
        moved = act(extend_bottom_row(ci, di), cfg.qform)
        two_v = 2 * moved.v
        num.append(cfg.h * (moved.r - cfg.f.beta) % two_v)
        den.append(two_v)
    return np.array(num, dtype=np.int64), np.array(den, dtype=np.int64)


def _inverse_mod_rows(c, d):
    out = np.zeros_like(c)
    for i, (ci, di) in enumerate(zip(c.tolist(), d.tolist())):
        out[i] = pow(di, -1, ci) if ci > 1 else 0
    return out


def poincare_P(cfg: PoincareConfig) -> complex:
    """Sum over rows of Gamma' eta of e(h (r - beta) / (2 v)) g(v / alpha) psi(c, d)."""
    rows = support_rows(cfg)
    if not len(rows):
        return 0j
    num, den = _hooley_numerators(cfg, rows.c, rows.d)
    return ordered_sum(e_rational(num, den) * rows.weight)


def poincare_Q(cfg: PoincareConfig) -> complex:
    """Same rows with the simplified phase e(a h / c), a = d^{-1} mod c."""
    rows = support_rows(cfg)
    if not len(rows):
        return 0j
    a = _inverse_mod_rows(rows.c, rows.d)
    return ordered_sum(e_rational(a * cfg.h % rows.c, rows.c) * rows.weight)


# ---------------------------------------------------------------------------
# exact quotient by the automorphs, without psi


@dataclass(frozen=True)
class ArcDomain:
    """Half-open fundamental domain of T1 on one arc, in an exact coordinate phi.

    phi(t) = t when ``pole`` is None, else 1/(t - pole) with ``pole`` a rational
    point off the arc, so the arc is a bounded phi-interval."""

    pole: Fraction | None
    start: Fraction
    stop: Fraction
    sector: tuple[float, float]

    def phi(self, c: int, d: int):
        if self.pole is None:
            return None if d == 0 else Fraction(c, d)
        den = c - self.pole * d
        return None if den == 0 else Fraction(d) / den

    def contains(self, c: int, d: int) -> bool:
        p = self.phi(c, d)
        if p is None:
            return False
        if self.start < self.stop:
            return self.start <= p < self.stop
        return self.stop < p <= self.start


def _apply(m: Mat2, t):
    """Mobius action on P^1(Q); None is infinity."""
    if t is None:
        return None if m.c == 0 else Fraction(m.a, m.c)
    den = m.c * t + m.d
    return None if den == 0 else (m.a * t + m.b) / den


def _arc_sector(t_start, t_stop, fixed: float) -> tuple[float, float]:
    a, b = _theta(t_start), _theta(t_stop)
    f = math.atan2(1.0, fixed)
    span = (b - a) % math.pi
    if (f - a) % math.pi < span:  # this way round passes the fixed point
        a, span = b, math.pi - span
    return a, a + span


def arc_domains(T1: Mat2, t0: float, t1: float) -> list[ArcDomain]:
    if t0 < 0 < t1:
        base = Fraction(0)
    else:
        base = Fraction((t0 + t1) / 2).limit_denominator(10**6)
        if not t0 < base < t1:
            raise ValueError("rational base point left the arc")
    img = _apply(T1, base)
    inner = ArcDomain(None, base, img, _arc_sector(base, img, t0))
    img_inf = _apply(T1, None)

    def phi_outer(t):
        return Fraction(0) if t is None else 1 / (t - base)

    outer = ArcDomain(base, phi_outer(None), phi_outer(img_inf),
                      _arc_sector(None, img_inf, t0))
    return [inner, outer]


def poincare_P_exact(cfg: PoincareConfig) -> complex:
    """P over Gamma_inf \\ Gamma' eta / <T0>, one row per T0-orbit (needs a divisible coset)."""
    if not cfg.is_divisible:
        raise ValueError("automorph quotient is only defined on a divisible coset")
    T1 = cfg.automorph.transpose()
    p1 = cfg.psi.p1
    domains = arc_domains(T1, p1.t0, p1.t1)
    c, d, _ = sector_rows(cfg.qform, [dom.sector for dom in domains], cfg.vmax)
    inside = cfg.coset.contains_row_vec(c, d)
    c, d = c[inside], d[inside]
    v = _q_values(cfg.qform, c, d)
    lo, hi = cfg.weight.support
    alpha = cfg.f.alpha
    keep = (v > alpha * lo) & (v < alpha * hi)
    c, d, v = c[keep], d[keep], v[keep]
    sel = np.array([any(dom.contains(ci, di) for dom in domains)
                    for ci, di in zip(c.tolist(), d.tolist())], dtype=bool)
    if sel.size == 0 or not sel.any():
        return 0j
    c, d, v = c[sel], d[sel], v[sel]
    w = cfg.weight(v / alpha)
    num, den = _hooley_numerators(cfg, c, d)
    return ordered_sum(e_rational(num, den) * w)


# ---------------------------------------------------------------------------
# Fourier side


@dataclass(frozen=True)
class GValue:
    c: int
    kappa: int
    value: complex
    quadrature_error_estimate: float


def _y_intervals(cfg: PoincareConfig, c: int) -> list[tuple[float, float]]:
    """y-intervals carrying g(q(c, y)/alpha) psi(c, y): the psi support c/y in I,
    cut down to where q(c, y) lies strictly inside alpha * supp(g)."""
    q = cfg.qform
    lo_v, hi_v = (cfg.f.alpha * s for s in cfg.weight.support)
    cuts = []
    for br in (cfg.psi.p1.inner, cfg.psi.p1.outer):
        lo, hi = br.support_x()
        cuts += [c / lo, c / hi]
    for level in (lo_v, hi_v):
        coeffs = [q.v, q.r * c, q.u * c * c - level]
        if q.v == 0:
            coeffs = coeffs[1:]
        for root in np.roots(coeffs) if any(coeffs[:-1]) else []:
            if abs(root.imag) < 1e-12 * (1 + abs(root.real)):
                cuts.append(float(root.real))
    cuts = sorted(set(cuts))
    psi_ivals = [tuple(sorted((c / lo, c / hi)))
                 for lo, hi in (br.support_x() for br in (cfg.psi.p1.inner, cfg.psi.p1.outer))]
    out: list[tuple[float, float]] = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (a + b)
        val = q.u * c * c + q.r * c * mid + q.v * mid * mid
        if not lo_v < val < hi_v:
            continue
        if not any(pa <= mid <= pb for pa, pb in psi_ivals):
            continue
        if out and out[-1][1] == a:
            out[-1] = (out[-1][0], b)
        else:
            out.append((a, b))
    return out


def integrand(cfg: PoincareConfig, c: int, y):
    y = np.asarray(y, dtype=float)
    v = _q_values(cfg.qform, float(c), y)
    return cfg.weight(v / cfg.f.alpha) * cfg.psi(np.full_like(y, float(c)), y)


def fourier_G(cfg: PoincareConfig, c: int, kappa: int) -> GValue:
    """G(c, kappa) = integral of g(q(c,y)/alpha) psi(c,y) e(-kappa y / (c N'')) dy,
    by QUADPACK (oscillatory weight when kappa != 0)."""
    omega = 2 * math.pi * kappa / (c * cfg.width)
    re = im = err = 0.0
    for a, b in _y_intervals(cfg, c):
        def fn(y):
            return float(integrand(cfg, c, y))
        if kappa == 0:
            val, e = integrate.quad(fn, a, b, epsabs=cfg.quad_abs_tol, epsrel=0, limit=2000)
            re += val
            err += e
            continue
        vc, ec = integrate.quad(fn, a, b, weight="cos", wvar=omega,
                                epsabs=cfg.quad_abs_tol, epsrel=0, limit=2000)
        vs, es = integrate.quad(fn, a, b, weight="sin", wvar=omega,
                                epsabs=cfg.quad_abs_tol, epsrel=0, limit=2000)
        re += vc
        im -= vs
        err += ec + es
    if err > max(10 * cfg.quad_abs_tol, 1e-9):
        raise QuadratureError(f"quadrature did not converge: error estimate {err:.3g}")
    return GValue(c, kappa, complex(re, im), err)


def _next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def fourier_G_grid(cfg: PoincareConfig, c: int, K: int, oversample: int = 8) -> np.ndarray:
    """G(c, kappa) for kappa = -K..K by the trapezoid rule and one FFT per y-interval.

    The integrand is smooth and vanishes to infinite order at the interval
    ends, so the trapezoid error is the aliased tail of G beyond
    oversample * K - K, which the kappa cutoff already treats as negligible."""
    P = c * cfg.width
    ks = np.arange(-K, K + 1, dtype=np.int64)
    out = np.zeros(ks.size, dtype=complex)
    for a, b in _y_intervals(cfg, c):
        length = b - a
        m = max(1, math.ceil(length / P))
        M = _next_pow2(max(oversample * m * (2 * K + 1), int(MIN_NODES * m * P / length) + 1))
        if M > DIRECT_FFT_LIMIT:
            # a short interval against a long period: sum the nodes directly
            h = length / MIN_NODES
            y = a + h * np.arange(MIN_NODES + 1)
            f = np.asarray(integrand(cfg, c, y), dtype=float)
            for lo in range(0, ks.size, 2048):
                kk = ks[lo:lo + 2048, None]
                out[lo:lo + 2048] += h * (np.exp(-2j * np.pi * kk * (y / P)) @ f)
            continue
        h = m * P / M
        n = int(length / h)
        y = a + h * np.arange(n + 1)
        f = np.asarray(integrand(cfg, c, y), dtype=float)
        F = np.fft.fft(f, M)
        out += h * np.exp(-2j * np.pi * (ks * (a / P))) * F[(ks * m) % M]
    return out


def kloosterman_period(cfg: PoincareConfig, c: int) -> np.ndarray | None:
    """S(h, kappa; c sqrt N'') for every residue kappa mod c N'' (None if c is not a modulus).

    Each term's phase e(h N'' a / (c N'')) is evaluated once from exact
    integers; the sum over d against e(kappa d / (c N'')) is one inverse FFT."""
    a, d = kloosterman_terms(cfg.n1, cfg.coset.eta, c, cfg.width)
    if d.size == 0:
        return None
    mod = c * cfg.width
    vec = np.zeros(mod, dtype=complex)
    np.add.at(vec, d % mod, e_rational((cfg.h * cfg.width * a) % mod, mod))
    return mod * np.fft.ifft(vec)


def admissible_moduli(cfg: PoincareConfig, c_max: int) -> list[int]:
    """Moduli c <= c_max for which the coset has rows with first entry c."""
    return [c for c in range(1, c_max + 1)
            if kloosterman_terms(cfg.n1, cfg.coset.eta, c, cfg.width)[1].size]


def c_max_of(cfg: PoincareConfig) -> int:
    """Bound on c for real points (c, y) with g(q(c,y)/alpha) psi(c,y) != 0."""
    return sector_rows(cfg.qform, _support_sectors(cfg), cfg.vmax)[2]


@dataclass
class PoissonReport:
    lhs: complex
    rhs: complex
    c_max: int
    kappa_max: int
    terms: int

    @property
    def abs_err(self) -> float:
        return abs(self.lhs - self.rhs)

    def ok(self, rel: float = 1e-4) -> bool:
        return self.abs_err < rel * (1 + abs(self.lhs))

    def as_dict(self) -> dict:
        return dict(lhs_re=self.lhs.real, lhs_im=self.lhs.imag, rhs_re=self.rhs.real,
                    rhs_im=self.rhs.imag, abs_err=self.abs_err, c_max=self.c_max,
                    kappa_max=self.kappa_max, terms=self.terms)


def _rhs_moduli(cfg: PoincareConfig, c_max: int) -> list[int]:
    return [c for c in range(1, c_max + 1)
            if _y_intervals(cfg, c) and kloosterman_terms(cfg.n1, cfg.coset.eta, c, cfg.width)[1].size]


def modulus_terms(cfg: PoincareConfig, c: int, share: float, kappa_max: int | None = None):
    """The c-part of the expansion, sum over |kappa| <= K of S(h, kappa; c sqrt N'') G(c, kappa) / (c N'').

    With ``kappa_max`` the cutoff is K = kappa_max; otherwise K doubles from
    ceil((N Y1)^1.1) + 10 until the outer band K/2 < |kappa| <= K, bounded by
    max|S| times sum |G|, is at most ``share``.  Returns (value, K, band bound)."""
    S = kloosterman_period(cfg, c)
    if S is None:
        return 0j, 0, 0.0
    mod = c * cfg.width
    s_max = float(np.abs(S).max()) / mod
    K = kappa_max or kappa_floor(cfg.N, cfg.Y1) + 10
    while True:
        ks = np.arange(-K, K + 1, dtype=np.int64)
        G = fourier_G_grid(cfg, c, K)
        # bound |S| by its maximum so a vanishing S(kappa) cannot hide a slow G
        tail = s_max * float(np.abs(G[np.abs(ks) > K // 2]).sum())
        if tail <= share:
            return ordered_sum(S[ks % mod] * G / mod), K, tail
        if kappa_max is not None:
            raise TruncationError(
                f"kappa tail {tail:.3g} at c={c} exceeds tolerance; increase kappa_max")
        if K >= KAPPA_CAP:
            raise TruncationError(f"kappa tail {tail:.3g} at c={c} with kappa_max={K}")
        K *= 2


def poisson_rhs(cfg: PoincareConfig, tol: float, kappa_max: int | None = None,
                c_max: int | None = None):
    """Sum of ``modulus_terms`` over the moduli c <= c_max, each allowed an equal
    share of ``tol``.  Returns (rhs, largest K, summed band bounds)."""
    c_max = c_max or c_max_of(cfg)
    moduli = _rhs_moduli(cfg, c_max)
    share = tol / max(1, len(moduli))
    total, tail_sum, k_used = 0j, 0.0, 0
    for c in moduli:
        value, K, tail = modulus_terms(cfg, c, share, kappa_max)
        total += value
        tail_sum += tail
        k_used = max(k_used, K)
    return total, k_used, tail_sum


def poisson_identity_check(cfg: PoincareConfig, rel_tol: float = 1e-4) -> PoissonReport:
    """Direct Q against its Kloosterman expansion (see ``poisson_rhs`` for the cutoff)."""
    if cfg.x > 1e5 or cfg.N > 6:
        raise ValueError("Poisson check is limited to x <= 10^5, N <= 6")
    rows = support_rows(cfg)
    lhs = poincare_Q(cfg)
    c_max = c_max_of(cfg)
    if not len(rows):
        return PoissonReport(0j, 0j, c_max, cfg.kappa_max or kappa_floor(cfg.N, cfg.Y1), 0)
    tol = 1e-2 * rel_tol * (1 + abs(lhs))
    rhs, k_used, _ = poisson_rhs(cfg, tol, cfg.kappa_max, c_max)
    return PoissonReport(lhs, rhs, c_max, k_used, len(rows))


# ---------------------------------------------------------------------------
# aggregates and assembly


def plateau_weight(C: float, K: float):
    """Smooth V(c, kappa) supported in (C, 2C) x (K, 2K)."""
    def bump(t):
        t = np.asarray(t, dtype=float)
        return smooth_step(4 * (t - 1)) * smooth_step(4 * (2 - t))

    def V(c, kappa):
        return float(bump(c / C) * bump(kappa / K))
    return V


def kloosterman_aggregate(q: int, cusp: Cusp, h: int, V, C: int, K: int) -> complex:
    """sum over admissible c in (C, 2C], kappa in (K, 2K] of S(h, kappa; c sqrt q'')/c V(c, kappa)."""
    if C * K > 10**5:
        raise ValueError("enumeration budget C*K <= 10^5 exceeded")
    data = cusp_data(q, cusp)
    w = data.qdoubleprime
    total = 0j
    for c in kloosterman_moduli(q, cusp, 2 * C):
        if c <= C:
            continue
        a, d = kloosterman_terms(q, data.eta, c, w)
        if d.size == 0:
            continue
        mod = c * w
        for kappa in range(K + 1, 2 * K + 1):
            weight = V(c, kappa)
            if weight == 0:
                continue
            num = (h * w * a + kappa * d) % mod
            total += ordered_sum(e_rational(num, mod)) / c * weight
    return total


def small_representatives(f: QuadPoly, coeff_bound: int = 60) -> list[BQForm]:
    """One form per Gamma_0(alpha)-orbit of Q_f, each of least height in its class.

    Raises OrbitIncomplete unless the bounded partition matches the oracle count."""
    orbits = orbit_representatives(f, coeff_bound)
    if not orbits.exact:
        raise OrbitIncomplete(f"bounded orbit partition of {f} is not confirmed exact")
    return orbits.small


def assemble_weyl_smooth(f: QuadPoly, h: int, x: float, N: int, Y1: float,
                         exact: bool = False, coeff_bound: int = 60) -> complex:
    """sum over orbit representatives q_j and divisible cosets of Q_j (or of the
    exact automorph quotient P_j when ``exact``)."""
    total = 0j
    for qj in small_representatives(f, coeff_bound):
        for lab in divisible_cosets(f, qj, N):
            cfg = PoincareConfig(f, qj, x, N, Y1, h=h, coset=lab)
            total += poincare_P_exact(cfg) if exact else poincare_Q(cfg)
    return total
