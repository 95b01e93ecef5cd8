"""Roots of quadratic congruences f(v) = 0 (mod n) and the quadratic harmonic
rho_h(n) = sum over roots v of e(h v / n).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .arith import (
    crt_combine,
    factor_with_spf,
    factorize,
    inverse_mod,
    is_square,
    lift_roots,
    smallest_prime_factors,
    sqrt_mod_prime_power,
)
from .phase import e_rational, ordered_sum

BRUTEFORCE_LIMIT = 10**6


class ReduciblePolynomial(ValueError):
    pass


@dataclass(frozen=True)
class QuadPoly:
    """f(X) = alpha X^2 + beta X + gamma with non-square discriminant."""

    alpha: int
    beta: int
    gamma: int
    disc: int = field(init=False)

    def __post_init__(self):
        if self.alpha < 1:
            raise ValueError("alpha must be >= 1")
        disc = self.beta**2 - 4 * self.alpha * self.gamma
        if is_square(disc):
            raise ReduciblePolynomial(f"discriminant {disc} is a perfect square")
        object.__setattr__(self, "disc", disc)

    @property
    def positive_disc(self) -> bool:
        return self.disc > 0

    def __call__(self, x: int) -> int:
        return (self.alpha * x + self.beta) * x + self.gamma

    def __str__(self):
        return f"{self.alpha}X^2{self.beta:+d}X{self.gamma:+d}"

    @classmethod
    def parse(cls, text: str) -> "QuadPoly":
        a, b, c = (int(s) for s in text.split(","))
        return cls(a, b, c)


@dataclass(frozen=True)
class RootSet:
    modulus: int
    roots: tuple[int, ...]

    def __len__(self):
        return len(self.roots)

    def __iter__(self):
        return iter(self.roots)


@lru_cache(maxsize=1 << 16)
def _roots_prime_power(f: QuadPoly, p: int, e: int) -> tuple[int, ...]:
    pe = p**e
    if p == 2 or f.alpha % p == 0:
        return tuple(lift_roots((f.gamma, f.beta, f.alpha), p, e))
    # 4 alpha f(v) = (2 alpha v + beta)^2 - disc, and 2 alpha is a unit
    inv = inverse_mod(2 * f.alpha, pe)
    return tuple(sorted((eta - f.beta) * inv % pe for eta in sqrt_mod_prime_power(f.disc, p, e)))


def _combine(f: QuadPoly, factors) -> list[int]:
    roots, mod = [0], 1
    for p, e in factors:
        pe = p**e
        local = _roots_prime_power(f, p, e)
        if not local:
            return []
        inv = inverse_mod(mod % pe, pe) if pe > 1 else 0
        # x = r + mod * ((s - r) * inv mod pe)
        roots = [r + mod * ((s - r) * inv % pe) for r in roots for s in local]
        mod *= pe
    return sorted(roots)


def roots_mod(f: QuadPoly, n: int) -> RootSet:
    """Z_f(n) via prime-power roots glued with CRT."""
    if n < 1:
        raise ValueError("n must be positive")
    return RootSet(n, tuple(_combine(f, factorize(n).factors)))


def completed_roots(f: QuadPoly, n: int) -> RootSet:
    """Z'_f(n): eta = 2 alpha v + beta mod 2 alpha n for every root v."""
    mod = 2 * f.alpha * n
    return RootSet(mod, tuple(sorted((2 * f.alpha * v + f.beta) % mod for v in roots_mod(f, n))))


def rho(f: QuadPoly, h: int, n: int) -> complex:
    roots = roots_mod(f, n).roots
    if not roots:
        return 0j
    nums = np.array([h * v % n for v in roots], dtype=np.int64)
    return ordered_sum(e_rational(nums, n))


def rho_bruteforce(f: QuadPoly, h: int, n: int) -> complex:
    """Direct loop over v = 0..n-1; independent of the factorization path."""
    if n < 1:
        raise ValueError("n must be positive")
    if n > BRUTEFORCE_LIMIT:
        raise ValueError(f"n={n} too large for brute force (limit {BRUTEFORCE_LIMIT})")
    v = np.arange(n, dtype=np.int64)
    a, b, c = f.alpha % n, f.beta % n, f.gamma % n
    vals = ((a * v % n) * v % n + b * v % n + c) % n
    roots = v[vals == 0]
    if roots.size == 0:
        return 0j
    phases = np.exp(2j * np.pi * ((h * roots) % n) / n)
    return complex(phases.sum())


class RootTable:
    """Root sets for every n in a range, sharing one least-prime-factor sieve.

    Used by the range evaluators; ``pairs(lo, hi, step)`` returns flat arrays
    of (n, v) for all n in [lo, hi] divisible by ``step``.
    """

    def __init__(self, f: QuadPoly, limit: int):
        self.f = f
        self.limit = limit
        self.spf = smallest_prime_factors(max(limit, 2))

    def roots(self, n: int) -> list[int]:
        if n == 1:
            return [0]
        return _combine(self.f, factor_with_spf(n, self.spf))

    def pairs(self, lo: int, hi: int, step: int = 1):
        if hi > self.limit:
            raise ValueError("range exceeds sieve limit")
        lo = max(lo, 1)
        start = -(-lo // step) * step
        ns, vs = [], []
        for n in range(start, hi + 1, step):
            r = self.roots(n)
            ns.extend([n] * len(r))
            vs.extend(r)
        return np.array(ns, dtype=np.int64), np.array(vs, dtype=np.int64)


def rho_range(f: QuadPoly, h: int, lo: int, hi: int, step: int = 1, table: RootTable | None = None):
    """Return (n values, rho_h(n) values, root counts) for step | n in [lo, hi]."""
    table = table or RootTable(f, hi)
    lo = max(lo, 1)
    start = -(-lo // step) * step
    ns = np.arange(start, hi + 1, step, dtype=np.int64)
    pn, pv = table.pairs(lo, hi, step)
    if ns.size == 0:
        return ns, np.zeros(0, complex), np.zeros(0, np.int64)
    idx = (pn - start) // step
    phases = e_rational((h * pv) % pn, pn) if pn.size else np.zeros(0, complex)
    re = np.bincount(idx, weights=phases.real, minlength=ns.size)
    im = np.bincount(idx, weights=phases.imag, minlength=ns.size)
    counts = np.bincount(idx, minlength=ns.size)
    return ns, re + 1j * im, counts


def tau_bound_constant(f: QuadPoly, n_max: int) -> float:
    """max |Z_f(n)| / tau(4 alpha n) over n <= n_max (sanity constant c0)."""
    from .arith import divisor_count

    worst = 0.0
    for n in range(1, n_max + 1):
        worst = max(worst, len(roots_mod(f, n)) / divisor_count(4 * f.alpha * n))
    return worst
