"""Cusps, widths and Kloosterman sums for Hecke congruence groups Gamma_0(q),
plus the divisible cosets of Gamma_0(N alpha) inside Gamma_0(alpha).

A cusp mu/nu of Gamma_0(q) carries the decomposition q = nu q', iota =
gcd(nu, q'), nu = iota nu', q' = iota q''.  The cusp at infinity is stored as
1/q, which is Gamma_0(q)-equivalent to it and has the same data (q'' = 1).

Kloosterman sums keep the irrational modulus c sqrt(q'') symbolic: with an
integer matrix (a, b; c, d) in Gamma_0(q) eta the phase is
e(m a / c + n d / (c q'')), an exact rational.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .arith import divisor_count, divisors, euler_phi, inverse_mod
from .congruence import QuadPoly
from .forms import BQForm, Mat2, extend_bottom_row, qf_member
from .phase import e_rational, ordered_sum


@dataclass(frozen=True, order=True)
class Cusp:
    """The cusp mu/nu; at level q the cusp infinity is 1/q."""

    nu: int
    mu: int

    def __post_init__(self):
        if self.nu < 1 or self.mu < 1 or math.gcd(self.mu, self.nu) != 1:
            raise ValueError(f"bad cusp {self.mu}/{self.nu}")

    @classmethod
    def infinity(cls, q: int) -> "Cusp":
        return cls(q, 1)

    @classmethod
    def parse(cls, text: str, q: int) -> "Cusp":
        text = text.strip().lower()
        if text in ("inf", "infinity", "oo"):
            return cls.infinity(q)
        mu, nu = text.split("/")
        return cls(int(nu), int(mu))

    def __str__(self):
        return f"{self.mu}/{self.nu}"


def cusp_representatives(q: int) -> list[Cusp]:
    """One cusp mu/nu per class: nu | q, mu coprime to nu, mu mod gcd(nu, q/nu)."""
    if not 1 <= q <= 10**4:
        raise ValueError("need 1 <= q <= 10^4")
    out = []
    for nu in divisors(q):
        g = math.gcd(nu, q // nu)
        for res in range(g):
            if math.gcd(res, g) != 1:
                continue
            mu = res if res > 0 else g
            while math.gcd(mu, nu) != 1:
                mu += g
            out.append(Cusp(nu, mu))
    return out


def cusp_count_formula(q: int) -> int:
    return sum(euler_phi(math.gcd(nu, q // nu)) for nu in divisors(q))


def _as_pair(p) -> tuple[int, int]:
    """Rational or None (infinity) -> coprime (a, c) with c >= 0."""
    if p is None:
        return 1, 0
    if isinstance(p, Cusp):
        return p.mu, p.nu
    fr = Fraction(p)
    return fr.numerator, fr.denominator


def cusp_equivalent(q: int, p1, p2) -> bool:
    """a/c ~ a'/c' under Gamma_0(q) iff some unit y has c' = y c (mod q) and
    y a' = a (mod gcd(c, q)).  Points are Fractions, ints, Cusps or None for infinity."""
    a, c = _as_pair(p1)
    a2, c2 = _as_pair(p2)
    g = math.gcd(c, q)
    for y in range(1, q + 1):
        if math.gcd(y, q) == 1 and (c2 - y * c) % q == 0 and (y * a2 - a) % g == 0:
            return True
    return False


def cusp_equivalent_search(q: int, p1, p2, bound: int = 30) -> bool:
    """Slow cross-check: look for gamma in Gamma_0(q), entries <= bound, with gamma p1 = p2."""
    a, c = _as_pair(p1)
    a2, c2 = _as_pair(p2)
    for gc in range(-bound, bound + 1, 1):
        if gc % q:
            continue
        for gd in range(-bound, bound + 1):
            if math.gcd(gc, gd) != 1:
                continue
            gamma = extend_bottom_row(gc, gd)
            for k in range(-bound, bound + 1):
                ga, gb = gamma.a + k * gc, gamma.b + k * gd
                x, y = ga * a + gb * c, gc * a + gd * c
                if x * c2 == y * a2:
                    return True
    return False


@dataclass(frozen=True)
class CuspData:
    q: int
    cusp: Cusp
    qprime: int
    iota: int
    nuprime: int
    qdoubleprime: int
    eta: Mat2
    width: int


def cusp_data(q: int, cusp: Cusp) -> CuspData:
    mu, nu = cusp.mu, cusp.nu
    if q % nu:
        raise ValueError(f"nu={nu} does not divide q={q}")
    qp = q // nu
    iota = math.gcd(nu, qp)
    mubar = inverse_mod(mu, nu) if nu > 1 else 1
    if mubar == 0:
        mubar = 1
    eta = Mat2(mu, (mu * mubar - 1) // nu, nu, mubar)
    width = q // math.gcd(q, nu * nu)
    data = CuspData(q, cusp, qp, iota, nu // iota, qp // iota, eta, width)
    assert data.qdoubleprime == width and math.gcd(data.nuprime, data.qdoubleprime) == 1
    return data


def width_formula(level: int, eta: Mat2) -> int:
    """Width of the cusp eta(infinity) for Gamma_0(level)."""
    return level // math.gcd(level, eta.c * eta.c)


def width_by_stabilizer(level: int, eta: Mat2, limit: int = 10**6) -> int:
    """Least w >= 1 with eta (1, w; 0, 1) eta^{-1} in Gamma_0(level), by direct search."""
    step = Mat2(1, 1, 0, 1)
    acc = step
    for w in range(1, limit + 1):
        if (eta @ acc @ eta.inverse()).in_gamma0(level):
            return w
        acc = acc @ step
    raise RuntimeError("no stabilizer found")


def kloosterman_moduli(q: int, cusp: Cusp, bound: int) -> list[int]:
    """{nu c' : gcd(c', q') = 1, nu c' <= bound}."""
    if bound > 10**4:
        raise ValueError("bound must be <= 10^4")
    nu, qp = cusp.nu, q // cusp.nu
    return [nu * cp for cp in range(1, bound // nu + 1) if math.gcd(cp, qp) == 1]


def realized_moduli(q: int, cusp: Cusp, entry_bound: int = 500) -> set[int]:
    """Lower-left entries C > 0 of gamma eta_a, gamma = (*, *; q r', t) in Gamma_0(q)
    with |q r'|, |t| <= entry_bound."""
    eta = cusp_data(q, cusp).eta
    out = set()
    for lower in range(-entry_bound, entry_bound + 1):
        if lower % q:
            continue
        for t in range(-entry_bound, entry_bound + 1):
            if math.gcd(lower, t) != 1:
                continue
            c = lower * eta.a + t * eta.c
            if c > 0:
                out.add(c)
    return out


@dataclass(frozen=True)
class KloostermanQuery:
    q: int
    cusp: Cusp
    m: int
    n: int
    c: int

    def __post_init__(self):
        if self.c < 1:
            raise ValueError("c must be positive")


@dataclass(frozen=True)
class KloostermanValue:
    value: complex
    terms: int

    @property
    def empty(self) -> bool:
        return self.terms == 0


def kloosterman_terms(level: int, eta: Mat2, c: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    """Classes (a mod c, d mod c*width) of matrices (a, b; c, d) in Gamma_0(level) eta.

    Row (c, d) occurs iff gcd(c, d) = 1 and (c, d) eta^{-1} has first entry
    divisible by level, i.e. c d_eta - d c_eta = 0 (mod level)."""
    mod = c * width
    d = np.arange(mod, dtype=np.int64)
    ok = (np.gcd(d, c) == 1) & ((c * eta.d - d * eta.c) % level == 0)
    d = d[ok]
    if c == 1:
        a = np.zeros_like(d)
    else:
        a = np.array([pow(int(x), -1, c) for x in d], dtype=np.int64)
    return a, d


def kloosterman_general(level: int, eta: Mat2, m: int, n: int, c: int,
                        width: int | None = None) -> KloostermanValue:
    """S(m, n; c sqrt(width)) for the coset Gamma_0(level) eta paired with infinity."""
    width = width or width_formula(level, eta)
    a, d = kloosterman_terms(level, eta, c, width)
    if d.size == 0:
        return KloostermanValue(0j, 0)
    mod = c * width
    num = (m * width * a + n * d) % mod
    return KloostermanValue(ordered_sum(e_rational(num, mod)), int(d.size))


def kloosterman_sum(kq: KloostermanQuery) -> KloostermanValue:
    data = cusp_data(kq.q, kq.cusp)
    return kloosterman_general(kq.q, data.eta, kq.m, kq.n, kq.c, data.qdoubleprime)


def kloosterman_enumerated(kq: KloostermanQuery) -> complex:
    """Independent evaluation: walk gamma = (p, s; q r', t) in Gamma_0(q), form gamma eta
    and keep one representative per double coset.  Entry search bound 10 c q''."""
    data = cusp_data(kq.q, kq.cusp)
    eta, w, q, c = data.eta, data.qdoubleprime, kq.q, kq.c
    bound = 10 * c * w
    seen = {}
    for rp in range(-bound // q - 1, bound // q + 2):
        lower = q * rp
        # bottom-left of gamma eta is lower*mu + t*nu = c
        num = c - lower * eta.a
        if num % eta.c:
            continue
        t = num // eta.c
        if math.gcd(lower, t) != 1:
            continue
        gamma = extend_bottom_row(lower, t)
        prod = gamma @ eta
        assert prod.c == c
        key = prod.d % (c * w)
        if key not in seen:
            seen[key] = prod.a % c
    total = 0j
    for dd, aa in sorted(seen.items()):
        total += complex(np.exp(2j * np.pi * Fraction(kq.m * aa * w + kq.n * dd, c * w)))
    return total


def classical_kloosterman(m: int, n: int, c: int) -> complex:
    """Sum over d mod c coprime to c of e((m dbar + n d) / c), straight loop."""
    total = 0j
    for d in range(c):
        if math.gcd(d, c) == 1:
            dbar = pow(d, -1, c) if c > 1 else 0
            total += complex(np.exp(2j * np.pi * ((m * dbar + n * d) % c) / c))
    return total


def weil_bound(m: int, n: int, c: int) -> float:
    return divisor_count(c) * math.sqrt(math.gcd(m, n, c)) * math.sqrt(c)


# ---------------------------------------------------------------------------
# divisible cosets of Gamma' = Gamma_0(N alpha) in Gamma = Gamma_0(alpha)


def _p1_prime_power(p: int, e: int) -> list[tuple[int, int]]:
    pe = p**e
    pts = [(c, 1) for c in range(pe)]
    pts += [(1, d) for d in range(0, pe, p)]
    return pts


def p1_points(n: int) -> list[tuple[int, int]]:
    """All points of P^1(Z/n) as pairs (c, d) mod n, glued by CRT from prime powers."""
    from .arith import factorize

    pts = [(0, 0)]
    mod = 1
    for p, e in factorize(n):
        pe = p**e
        inv = inverse_mod(mod % pe, pe)
        new = []
        for c, d in pts:
            for c2, d2 in _p1_prime_power(p, e):
                cc = c + mod * ((c2 - c) * inv % pe)
                dd = d + mod * ((d2 - d) * inv % pe)
                new.append((cc, dd))
        pts, mod = new, mod * pe
    if n == 1:
        return [(0, 1)]
    return sorted(pts)


def lift_row(c: int, d: int, n: int) -> tuple[int, int]:
    """Coprime integers congruent to (c, d) mod n (c kept, d shifted by multiples of n)."""
    c = c % n or n
    d = d % n
    while math.gcd(c, d) != 1:
        d += n
    return c, d


@dataclass(frozen=True)
class CosetLabel:
    """Gamma_0(level) eta, labelled by the bottom row of eta in P^1(Z/level)."""

    level: int
    point: tuple[int, int]
    eta: Mat2 = field(compare=False)

    @property
    def width(self) -> int:
        return width_formula(self.level, self.eta)

    def contains_row(self, c: int, d: int) -> bool:
        return (c * self.eta.d - d * self.eta.c) % self.level == 0

    def contains_row_vec(self, c, d):
        return (c * self.eta.d - d * self.eta.c) % self.level == 0


def coset_labels(alpha: int, N: int) -> list[CosetLabel]:
    """Gamma_0(N alpha) \\ Gamma_0(alpha): points (c : d) of P^1(Z/N alpha) with alpha | c."""
    n1 = N * alpha
    out = []
    for c, d in p1_points(n1):
        if c % alpha:
            continue
        lc, ld = lift_row(c, d, n1) if n1 > 1 else (0, 1)
        eta = extend_bottom_row(lc, ld)
        out.append(CosetLabel(n1, (c, d), eta))
    return out


def divisible_cosets(f: QuadPoly, qform: BQForm, N: int) -> list[CosetLabel]:
    """V_j(N alpha): the cosets Gamma' eta with N alpha | q_j(c_eta, d_eta)."""
    if not qf_member(f, qform):
        raise ValueError(f"{qform} is not in Q_f")
    if not 1 <= N <= 500:
        raise ValueError("need 1 <= N <= 500")
    n1 = N * f.alpha
    return [lab for lab in coset_labels(f.alpha, N) if qform(lab.eta.c, lab.eta.d) % n1 == 0]


def divisible_width_check(f: QuadPoly, qform: BQForm, N: int) -> list[int]:
    return [lab.width for lab in divisible_cosets(f, qform, N)]


def random_gamma0(level: int, rng, bound: int = 50) -> Mat2:
    """A random element of Gamma_0(level) with bottom row entries of size about bound."""
    while True:
        c = level * int(rng.integers(-bound, bound + 1))
        d = int(rng.integers(-bound, bound + 1))
        if math.gcd(c, d) == 1:
            m = extend_bottom_row(c, d)
            k = int(rng.integers(-5, 6))
            return Mat2(m.a + k * c, m.b + k * d, c, d)
