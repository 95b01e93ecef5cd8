"""Binary quadratic forms [u, r, v] = uX^2 + rXY + vY^2 under SL_2(Z),
Pell solutions and automorphs, and orbit representatives for Gamma_0(alpha)
acting on the forms attached to a quadratic polynomial.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .arith import inverse_mod, is_square, psi_index
from .congruence import QuadPoly, completed_roots

ENTRY_LIMIT = 2**62
COSET_LIMIT = 10**5
PELL_ASCENT_CAP = 10**6


@dataclass(frozen=True)
class Mat2:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError(f"determinant of {self} is not 1")

    def __matmul__(self, o: "Mat2") -> "Mat2":
        return Mat2(self.a * o.a + self.b * o.c, self.a * o.b + self.b * o.d,
                    self.c * o.a + self.d * o.c, self.c * o.b + self.d * o.d)

    def inverse(self) -> "Mat2":
        return Mat2(self.d, -self.b, -self.c, self.a)

    def __neg__(self) -> "Mat2":
        return Mat2(-self.a, -self.b, -self.c, -self.d)

    def __pow__(self, k: int) -> "Mat2":
        base = self if k >= 0 else self.inverse()
        result, k = IDENTITY, abs(k)
        while k:
            if k & 1:
                result = result @ base
            base = base @ base
            k >>= 1
        return result

    def transpose(self) -> "Mat2":
        return Mat2(self.a, self.c, self.b, self.d)

    @property
    def trace(self) -> int:
        return self.a + self.d

    def in_gamma0(self, level: int) -> bool:
        return self.c % level == 0

    def entries(self) -> tuple[int, int, int, int]:
        return self.a, self.b, self.c, self.d


IDENTITY = Mat2(1, 0, 0, 1)
S_GEN = Mat2(0, -1, 1, 0)
T_GEN = Mat2(1, 1, 0, 1)


@dataclass(frozen=True)
class BQForm:
    u: int
    r: int
    v: int

    @property
    def disc(self) -> int:
        return self.r * self.r - 4 * self.u * self.v

    def __call__(self, x, y):
        return self.u * x * x + self.r * x * y + self.v * y * y

    @property
    def content(self) -> int:
        return math.gcd(self.u, self.r, self.v)

    def as_tuple(self) -> tuple[int, int, int]:
        return self.u, self.r, self.v


def act(xi: Mat2, q: BQForm) -> BQForm:
    """(xi . q)(X, Y) = q((X, Y) xi); a left action of SL_2 on forms."""
    a, b, c, d = xi.entries()
    out = BQForm(q(a, b), 2 * q.u * a * c + 2 * q.v * b * d + q.r * (a * d + b * c), q(c, d))
    if max(abs(out.u), abs(out.r), abs(out.v)) >= ENTRY_LIMIT:
        raise OverflowError("form coefficient exceeds 2^62")
    return out


def qf_member(f: QuadPoly, q: BQForm) -> bool:
    return (q.v % f.alpha == 0 and (q.r - f.beta) % (2 * f.alpha) == 0
            and q.disc == f.disc)


@dataclass(frozen=True)
class PellFund:
    tau0: int
    upsilon0: int

    def __post_init__(self):
        if self.tau0 <= 0 or self.upsilon0 <= 0:
            raise ValueError("Pell solution must be positive")


def _floor_quadratic(p: int, q: int, disc: int) -> int:
    """floor((p + sqrt(disc)) / q) for non-square disc."""
    s = math.isqrt(disc)
    if q > 0:
        return (p + s) // q
    return -((p + s) // -q) - 1


def pell_fundamental(delta: int) -> PellFund:
    """Least solution of tau^2 - delta * upsilon^2 = 4 in positive integers.

    Walks the continued fraction of the reduced quadratic irrational attached
    to the order of discriminant delta (or 4 delta) until a unit appears; a
    unit of norm -1 is squared.
    """
    if delta <= 0 or is_square(delta):
        raise ValueError("delta must be a positive non-square")
    scale = 1
    D = delta
    if delta % 4 in (2, 3):
        D, scale = 4 * delta, 2
    sigma = D % 2
    P, Q = -sigma, 2
    p1, p2, q1, q2 = 1, 0, 0, 1
    for _ in range(10**7):
        a = _floor_quadratic(P, Q, D)
        p1, p2 = a * p1 + p2, p1
        q1, q2 = a * q1 + q2, q1
        x, y = p1, q1
        if y > 0:
            norm = x * x + sigma * x * y + y * y * (sigma - D) // 4
            if norm in (1, -1):
                if norm == -1:
                    x, y = x * x + y * y * (D - sigma) // 4, 2 * x * y + sigma * y * y
                tau, ups = 2 * x + sigma * y, y
                # tau^2 - D ups^2 = 4 with D = delta * scale^2
                return PellFund(tau, ups * scale)
        P = a * Q - P
        Q = (D - P * P) // Q
    raise RuntimeError("continued fraction did not reach a unit")


def pell_ascent(delta: int, cap: int = PELL_ASCENT_CAP) -> PellFund | None:
    """Exhaustive search upsilon = 1, 2, ... <= cap; None if nothing found."""
    for ups in range(1, cap + 1):
        t2 = 4 + delta * ups * ups
        t = math.isqrt(t2)
        if t * t == t2:
            return PellFund(t, ups)
    return None


def _primitive_automorph(q: BQForm) -> Mat2:
    g = q.content
    u, r, v = q.u // g, q.r // g, q.v // g
    pell = pell_fundamental(q.disc // (g * g))
    t, s = pell.tau0, pell.upsilon0
    return Mat2((t + s * r) // 2, -s * u, s * v, (t - s * r) // 2)


def automorph_generator(f: QuadPoly, q: BQForm) -> Mat2:
    """Generator T0 of the automorphs of q lying in Gamma_0(alpha), modulo -I.

    For primitive q in Q_f this is ((tau0 + u0 r)/2, -u0 u; u0 v, (tau0 - u0 r)/2)
    with (tau0, u0) the fundamental Pell solution.
    """
    if f.disc <= 0:
        raise ValueError("automorphs are infinite cyclic only for positive discriminant")
    if not qf_member(f, q):
        raise ValueError(f"{q} is not in Q_f")
    base = _primitive_automorph(q)
    gen = base
    while not gen.in_gamma0(f.alpha):
        gen = gen @ base
    assert act(gen, q) == q
    return gen


def sl2_automorph(q: BQForm) -> Mat2:
    return _primitive_automorph(q)


def hooley_check(xi: Mat2, q: BQForm) -> Fraction:
    """Exact residual of r(xi)/v(xi) - [2a/c - (r c + 2 v d)/(c v(xi))]; always 0."""
    if xi.c == 0:
        raise ZeroDivisionError("c must be nonzero")
    moved = act(xi, q)
    if moved.v == 0:
        raise ZeroDivisionError("v(xi) must be nonzero")
    lhs = Fraction(moved.r, moved.v)
    rhs = Fraction(2 * xi.a, xi.c) - Fraction(q.r * xi.c + 2 * q.v * xi.d, xi.c * moved.v)
    return lhs - rhs


def forms_with_v(f: QuadPoly, n: int) -> list[BQForm]:
    """Representatives of Gamma_inf \\ Q_f[n alpha], one per completed root."""
    v = n * f.alpha
    return [BQForm((eta * eta - f.disc) // (4 * v), eta, v) for eta in completed_roots(f, n)]


def extend_bottom_row(c: int, d: int) -> Mat2:
    """Complete (c, d) to a matrix in SL_2(Z), taking the top-left entry of least |a|."""
    if math.gcd(c, d) != 1:
        raise ValueError("bottom row must be coprime")
    if c == 0:
        return Mat2(d, 0, 0, d)
    m = abs(c)
    if m == 1:
        a = 0
    else:
        a = inverse_mod(d % m, m)
        if 2 * a > m:
            a -= m
    b = (a * d - 1) // c
    return Mat2(a, b, c, d)


def r_mod_2v(q: BQForm, bottom: tuple[int, int]) -> tuple[int, int]:
    """Return (r(xi) mod |2 v(xi)|, v(xi)) for any xi with the given bottom row."""
    xi = extend_bottom_row(*bottom)
    moved = act(xi, q)
    if moved.v == 0:
        raise ValueError("q(c, d) = 0")
    return moved.r % abs(2 * moved.v), moved.v


# ---------------------------------------------------------------------------
# cosets of Gamma_0(N) and Schreier generators


def p1_key(c: int, d: int, n: int) -> tuple[int, int]:
    """Canonical representative of (c : d) in P^1(Z/n) (least over unit scalings)."""
    c, d = c % n, d % n
    if n == 1:
        return (0, 0)
    best = None
    for lam in range(1, n):
        if math.gcd(lam, n) == 1:
            key = (lam * c % n, lam * d % n)
            if best is None or key < best:
                best = key
    return best


def coset_transversal(level: int) -> dict[tuple[int, int], Mat2]:
    """Gamma_0(level) \\ SL_2(Z) by BFS from the identity under right S, T moves."""
    if psi_index(level) > COSET_LIMIT:
        raise ValueError(f"index of Gamma_0({level}) exceeds coset limit {COSET_LIMIT}")
    start = p1_key(0, 1, level)
    reps = {start: IDENTITY}
    queue = deque([start])
    while queue:
        key = queue.popleft()
        t = reps[key]
        for g in (S_GEN, T_GEN):
            m = t @ g
            k = p1_key(m.c, m.d, level)
            if k not in reps:
                reps[k] = m
                queue.append(k)
    return reps


def schreier_generators(level: int) -> list[Mat2]:
    """Generators of Gamma_0(level) as t_x g t_{xg}^{-1}, g in {S, T}."""
    reps = coset_transversal(level)
    gens, seen = [], set()
    for key, t in reps.items():
        for g in (S_GEN, T_GEN):
            m = t @ g
            h = m @ reps[p1_key(m.c, m.d, level)].inverse()
            assert h.in_gamma0(level)
            canon = h.entries() if (h.a, h.b) >= (0, 0) else (-h).entries()
            if h in (IDENTITY, -IDENTITY) or canon in seen:
                continue
            seen.add(canon)
            gens.append(h)
    return gens


def _height(q: BQForm):
    return (max(abs(q.u), abs(q.r), abs(q.v)), abs(q.u) + abs(q.r) + abs(q.v), q.as_tuple())


@dataclass
class OrbitSet:
    representatives: list[BQForm]
    class_count: int
    exact: bool | None = None
    small: list[BQForm] = field(default_factory=list)  # least-height member per class


def forms_in_box(f: QuadPoly, bound: int) -> list[BQForm]:
    out = []
    for r in range(-bound, bound + 1):
        if (r - f.beta) % (2 * f.alpha):
            continue
        num = r * r - f.disc
        for v in range(-bound, bound + 1):
            if v == 0 or v % f.alpha or num % (4 * v):
                continue
            u = num // (4 * v)
            if abs(u) <= bound:
                out.append(BQForm(u, r, v))
    return out


def orbit_partition_bounded(f: QuadPoly, coeff_bound: int) -> OrbitSet:
    """Split the forms of Q_f inside the coefficient box into classes joined by
    Gamma_0(alpha) generators.

    Classes the box splits are over-counted and orbits with no member in the
    box are missed, so the count is only trusted when it matches an exact
    class count (see ``orbit_representatives``)."""
    if coeff_bound > 200:
        raise ValueError("coeff_bound must be <= 200")
    forms = forms_in_box(f, coeff_bound)
    index = {q: i for i, q in enumerate(forms)}
    parent = list(range(len(forms)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    gens = schreier_generators(f.alpha)
    moves = gens + [g.inverse() for g in gens]
    for q, i in index.items():
        for g in moves:
            j = index.get(act(g, q))
            if j is not None:
                a, b = find(i), find(j)
                if a != b:
                    parent[max(a, b)] = min(a, b)
    classes: dict[int, list[BQForm]] = {}
    for q, i in index.items():
        classes.setdefault(find(i), []).append(q)
    groups = sorted(classes.values(), key=lambda m: min(q.as_tuple() for q in m))
    reps = [min(members, key=BQForm.as_tuple) for members in groups]
    small = [min(members, key=_height) for members in groups]
    return OrbitSet(reps, len(reps), small=small)


# ---------------------------------------------------------------------------
# independent class count: reduction cycles plus coset orbits


def _reduced_forms(delta: int) -> list[BQForm]:
    root = math.isqrt(delta)
    out = []
    for b in range(1, root + 1):
        if (b - delta) % 2:
            continue
        ac = (b * b - delta) // 4
        for a in range(1, -ac + 1):
            if ac % a:
                continue
            for sa in (a, -a):
                # |sqrt(D) - 2|a|| < b < sqrt(D)
                if _is_reduced(sa, b, delta):
                    out.append(BQForm(sa, b, ac // sa))
    return out


def _is_reduced(a: int, b: int, delta: int) -> bool:
    # b < sqrt(D)  and  |sqrt(D) - 2|a|| < b, exact in integers
    if b <= 0 or b * b >= delta:
        return False
    t = 2 * abs(a)
    # sqrt(D) - t < b  and  t - sqrt(D) < b
    lhs1 = (t + b) ** 2 > delta
    lhs2 = t - b <= 0 or (t - b) ** 2 < delta
    return lhs1 and lhs2


def _rho_step(q: BQForm) -> BQForm:
    a, b, c = q.u, q.r, q.v
    delta = q.disc
    m = 2 * abs(c)
    s = -b % m
    root = math.isqrt(delta)
    if abs(c) * abs(c) > delta:  # |c| > sqrt(D): -|c| < s <= |c|
        if s > abs(c):
            s -= m
    else:  # sqrt(D) - 2|c| < s < sqrt(D), i.e. the largest s < sqrt(D)
        s += ((root - s) // m) * m
        if s * s >= delta and s > 0:
            s -= m
    return BQForm(c, s, (s * s - delta) // (4 * c))


def sl2_classes(delta: int) -> list[BQForm]:
    """One reduced representative per SL_2(Z)-class of forms of discriminant delta."""
    reduced = set(_reduced_forms(delta))
    reps, seen = [], set()
    for q in sorted(reduced, key=BQForm.as_tuple):
        if q in seen:
            continue
        cycle, cur = [], q
        while cur not in cycle:
            cycle.append(cur)
            cur = _rho_step(cur)
        seen.update(cycle)
        reps.append(q)
    return reps


def class_count_oracle(f: QuadPoly) -> int:
    """|Gamma_0(alpha) \\ Q_f| computed without touching the coefficient box.

    For each SL_2(Z)-class [q] the Gamma_0(alpha)-orbits inside [q] and Q_f
    correspond to orbits of Aut(q) on the admissible cosets Gamma_0(alpha) xi.
    """
    reps = coset_transversal(f.alpha)
    total = 0
    for q in sl2_classes(f.disc):
        aut = sl2_automorph(q)
        admissible = {k for k, xi in reps.items() if qf_member(f, act(xi, q))}
        seen = set()
        for k in admissible:
            if k in seen:
                continue
            total += 1
            cur = k
            while cur not in seen:
                seen.add(cur)
                m = reps[cur] @ aut
                cur = p1_key(m.c, m.d, f.alpha)
    return total


def orbit_representatives(f: QuadPoly, coeff_bound: int = 60) -> OrbitSet:
    """Bounded partition, flagged exact when it agrees with the oracle count."""
    orbits = orbit_partition_bounded(f, coeff_bound)
    orbits.exact = orbits.class_count == class_count_oracle(f)
    return orbits
