"""Exact integer kernels: factorization, modular square roots, CRT and a few
multiplicative functions.

Everything here works on Python ints and is pure; residues are always
normalized to ``[0, modulus)``.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from functools import lru_cache

MAX_MODULUS = 2**63
TRIAL_LIMIT = 10**6
# Candidate sets in the singular (p | 2a) root search may not grow past this.
ENUMERATION_LIMIT = 10**7

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


class ModulusTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class Factorization:
    n: int
    factors: tuple[tuple[int, int], ...]

    def __post_init__(self):
        prod = 1
        for p, e in self.factors:
            if e < 1:
                raise ValueError("exponents must be positive")
            prod *= p**e
        if prod != self.n:
            raise ValueError(f"factors do not multiply to {self.n}")

    def __iter__(self):
        return iter(self.factors)

    def primes(self) -> list[int]:
        return [p for p, _ in self.factors]


def is_probable_prime(n: int) -> bool:
    """Miller-Rabin with the first twelve prime bases; deterministic below 3.3e24."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_brent(n: int, rng: random.Random) -> int:
    if n % 2 == 0:
        return 2
    while True:
        y, c, m = rng.randrange(1, n), rng.randrange(1, n), 128
        g = r = q = 1
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g


def _split(n: int, out: dict[int, int], rng: random.Random) -> None:
    if n == 1:
        return
    if is_probable_prime(n):
        out[n] = out.get(n, 0) + 1
        return
    d = _pollard_brent(n, rng)
    _split(d, out, rng)
    _split(n // d, out, rng)


def factorize(n: int) -> Factorization:
    """Factor ``1 <= n <= 2**63``: trial division to 10**6, then Pollard-Brent."""
    if n < 1:
        raise ValueError("n must be positive")
    if n > MAX_MODULUS:
        raise ModulusTooLarge("modulus too large")
    out: dict[int, int] = {}
    m = n
    for p in (2, 3, 5):
        while m % p == 0:
            out[p] = out.get(p, 0) + 1
            m //= p
    # wheel mod 30
    p, steps, i = 7, (4, 2, 4, 2, 4, 6, 2, 6), 0
    while p * p <= m and p <= TRIAL_LIMIT:
        while m % p == 0:
            out[p] = out.get(p, 0) + 1
            m //= p
        p += steps[i]
        i = (i + 1) % 8
    if m > 1:
        if p * p > m:
            out[m] = out.get(m, 0) + 1
        else:
            # seeded so that the output order of the search never leaks
            _split(m, out, random.Random(m))
    return Factorization(n, tuple(sorted(out.items())))


def divisors(n: int) -> list[int]:
    divs = [1]
    for p, e in factorize(n):
        divs = [d * p**k for d in divs for k in range(e + 1)]
    return sorted(divs)


def divisor_count(n: int) -> int:
    return math.prod(e + 1 for _, e in factorize(n))


def euler_phi(n: int) -> int:
    result = n
    for p, _ in factorize(n):
        result -= result // p
    return result


def psi_index(n: int) -> int:
    """Index of Gamma_0(n) in SL_2(Z): n * prod(1 + 1/p)."""
    result = n
    for p, _ in factorize(n):
        result += result // p
    return result


def inverse_mod(a: int, m: int) -> int:
    return pow(a, -1, m)


def crt_combine(residues) -> tuple[int, int]:
    """Combine ``[(r_i, m_i), ...]`` with pairwise coprime moduli into ``(r, M)``."""
    r, m = 0, 1
    for ri, mi in residues:
        if mi < 1:
            raise ValueError("moduli must be positive")
        if math.gcd(m, mi) != 1:
            raise ValueError(f"moduli not coprime: {m} and {mi}")
        # r + m*t = ri (mod mi)
        t = (ri - r) * inverse_mod(m % mi, mi) % mi if mi > 1 else 0
        r += m * t
        m *= mi
        r %= m
    return r, m


def _tonelli_shanks(a: int, p: int) -> int | None:
    a %= p
    if a == 0:
        return 0
    if p == 2:
        return a
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t, r = t * c % p, r * b % p
    return r


def lift_roots(poly, p: int, e: int, limit: int = ENUMERATION_LIMIT) -> list[int]:
    """All roots mod ``p**e`` of an integer polynomial, by digit-wise lifting.

    ``poly`` is a coefficient tuple, constant term first. Each root mod
    ``p**(k+1)`` reduces to a root mod ``p**k``, so testing the ``p`` digit
    extensions of every root at each level is exhaustive.
    """
    def value(x, mod):
        acc = 0
        for coeff in reversed(poly):
            acc = (acc * x + coeff) % mod
        return acc

    roots = [r for r in range(p) if value(r, p) == 0]
    pk = p
    for _ in range(1, e):
        nxt = pk * p
        roots = [r + t * pk for r in roots for t in range(p) if value(r + t * pk, nxt) == 0]
        if len(roots) > limit:
            raise ModulusTooLarge(f"root set mod {p}^{e} exceeds {limit} candidates")
        pk = nxt
    return sorted(roots)


@lru_cache(maxsize=65536)
def _sqrt_mod_prime_power(a: int, p: int, e: int) -> tuple[int, ...]:
    pe = p**e
    a %= pe
    if (2 * a) % p == 0:
        return tuple(lift_roots((-a, 0, 1), p, e))
    r = _tonelli_shanks(a, p)
    if r is None:
        return ()
    pk = p
    for _ in range(1, e):
        pk *= p
        r = (r - (r * r - a) * inverse_mod(2 * r, pk)) % pk
    return tuple(sorted({r, (pe - r) % pe}))


def sqrt_mod_prime_power(a: int, p: int, e: int) -> list[int]:
    """Sorted residues ``r mod p**e`` with ``r*r == a``."""
    if e < 1:
        raise ValueError("exponent must be >= 1")
    if p**e > MAX_MODULUS:
        raise ModulusTooLarge("modulus too large")
    return list(_sqrt_mod_prime_power(a % p**e, p, e))


def is_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


def smallest_prime_factors(limit: int):
    """Sieve of least prime factors for ``0..limit`` as a numpy int array."""
    import numpy as np

    spf = np.zeros(limit + 1, dtype=np.int64)
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == 0:
            block = spf[p * p :: p]
            block[block == 0] = p
    idx = np.arange(limit + 1)
    spf[spf == 0] = idx[spf == 0]
    return spf


def factor_with_spf(n: int, spf) -> list[tuple[int, int]]:
    out = []
    while n > 1:
        p = int(spf[n])
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        out.append((p, e))
    return out
