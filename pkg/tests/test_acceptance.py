"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as they
happen; they are also collected into the terminal summary.
"""
import math
import time

import numpy as np
import pytest

from quadcong.arith import divisor_count, euler_phi
from quadcong.cli import main as cli_main
from quadcong.congruence import QuadPoly, rho, rho_bruteforce, roots_mod
from quadcong.forms import (BQForm, Mat2, coset_transversal, extend_bottom_row, forms_with_v,
                            hooley_check, p1_key, pell_fundamental, sl2_automorph)
from quadcong.hecke import (Cusp, KloostermanQuery, classical_kloosterman, coset_labels,
                            cusp_count_formula, cusp_data, cusp_equivalent,
                            cusp_representatives, divisible_cosets, kloosterman_moduli,
                            kloosterman_sum, random_gamma0, realized_moduli, weil_bound,
                            width_by_stabilizer, width_formula)
from quadcong.partition import psi_weight, t_function
from quadcong.poincare import (PoincareConfig, _y_intervals, c_max_of, fourier_G_grid,
                               poincare_P, poincare_Q, poisson_identity_check,
                               small_representatives)
from quadcong.weyl import (SmoothWeight, WeylQuery, dyadic_range, exponent_scan,
                           smoothing_gap_bound, weyl_discrete, weyl_smooth)

from oracles import pell_discriminants, pell_oracle

CORPUS = [QuadPoly(1, 0, -2), QuadPoly(2, 1, -2), QuadPoly(1, 1, -1)]
X2M2 = CORPUS[0]
POISSON_FORM = BQForm(-2, 0, 1)


def poisson_config(N, h=1):
    return PoincareConfig(X2M2, POISSON_FORM, 1e4, N, 4.0, h=h)


def test_c01_rho_oracle(criterion):
    c = criterion(1, "rho vs brute force, n <= 5000, h in {0,1,2}")
    start = time.perf_counter()
    worst = 0.0
    for f in CORPUS:
        for n in range(1, 5001):
            for h in (0, 1, 2):
                worst = max(worst, abs(rho(f, h, n) - rho_bruteforce(f, h, n)))
    elapsed = time.perf_counter() - start
    c.check(worst < 1e-9 and elapsed < 60, f"max err {worst:.2e}, {elapsed:.1f} s")


def test_c02_roots_forms_bijection(criterion):
    c = criterion(2, "|forms_with_v| = |roots_mod|, n <= 300")
    bad = [(str(f), n) for f in CORPUS for n in range(1, 301)
           if len(forms_with_v(f, n)) != len(roots_mod(f, n))]
    c.check(not bad, f"{len(bad)} mismatches over {3 * 300} cases")


def random_bounded_sl2(rng, bound=50):
    while True:
        cc, dd = (int(v) for v in rng.integers(-bound, bound + 1, 2))
        if cc != 0 and math.gcd(cc, dd) == 1:
            m = extend_bottom_row(cc, dd)
            if max(abs(m.a), abs(m.b)) <= bound:
                return m


def test_c03_hooley_identity(criterion):
    c = criterion(3, "Hooley identity exact residual")
    rng = np.random.default_rng(2024)
    nonzero = done = 0
    while done < 1000:
        xi = random_bounded_sl2(rng)
        q = BQForm(*(int(v) for v in rng.integers(-50, 51, 3)))
        if q(xi.c, xi.d) == 0:
            continue
        nonzero += hooley_check(xi, q) != 0
        done += 1
    c.check(nonzero == 0, f"{nonzero} nonzero residuals in {done} samples")


def test_c04_pell(criterion):
    c = criterion(4, "Pell fundamental solutions, Delta <= 500")
    spots = {5: (3, 1), 8: (6, 2), 17: (66, 16)}
    mismatches, via = [], {"ascent": 0, "sympy": 0}
    for delta in pell_discriminants(500):
        p = pell_fundamental(delta)
        expected, how = pell_oracle(delta)
        via[how] += 1
        if (p.tau0, p.upsilon0) != expected or p.tau0**2 - delta * p.upsilon0**2 != 4:
            mismatches.append(delta)
    for delta, sol in spots.items():
        p = pell_fundamental(delta)
        if (p.tau0, p.upsilon0) != sol:
            mismatches.append(delta)
    c.check(not mismatches, f"mismatches {mismatches}; oracle: {via['ascent']} by ascent, "
                            f"{via['sympy']} by sympy beyond the ascent cap")


def cusp_orbits_on_cosets(q):
    """Cusp classes as orbits of right translation by T on Gamma_0(q)\\SL_2(Z)."""
    keys = set(coset_transversal(q))
    seen, orbits = set(), 0
    for k in keys:
        if k in seen:
            continue
        orbits += 1
        cur = k
        while cur not in seen:
            seen.add(cur)
            cur = p1_key(cur[0], cur[0] + cur[1], q)
    return orbits


def test_c05_cusp_count(criterion):
    c = criterion(5, "cusp count = sum phi(gcd(nu, q/nu)), q <= 100")
    start = time.perf_counter()
    bad = []
    for q in range(1, 101):
        reps = cusp_representatives(q)
        formula = sum(euler_phi(math.gcd(nu, q // nu)) for nu in range(1, q + 1) if q % nu == 0)
        if not (len(reps) == formula == cusp_orbits_on_cosets(q) == cusp_count_formula(q)):
            bad.append(q)
    elapsed = time.perf_counter() - start
    c.check(not bad and elapsed < 10, f"failures {bad}, {elapsed:.2f} s")


def test_c06_width(criterion):
    c = criterion(6, "width formula = stabilizer search, q <= 50")
    bad = []
    for q in range(1, 51):
        for cusp in cusp_representatives(q):
            eta = cusp_data(q, cusp).eta
            if q // math.gcd(q, cusp.nu**2) != width_by_stabilizer(q, eta):
                bad.append((q, str(cusp)))
    c.check(not bad, f"mismatches {bad}")


def test_c07_kloosterman_level_one(criterion):
    c = criterion(7, "level-1 Kloosterman reduction and Weil bound, c <= 50")
    worst, weil_fail = 0.0, []
    inf = Cusp.infinity(1)
    for cc in range(1, 51):
        for m in (0, 1, -1, 2):
            for n in (0, 1, -1, 2):
                classical = classical_kloosterman(m, n, cc)
                general = kloosterman_sum(KloostermanQuery(1, inf, m, n, cc)).value
                worst = max(worst, abs(general - classical))
                if abs(classical) > weil_bound(m, n, cc) + 1e-9:
                    weil_fail.append((m, n, cc))
    c.check(worst < 1e-10 and not weil_fail,
            f"max err {worst:.2e}, Weil violations {weil_fail}")


def test_c08_moduli_containment(criterion):
    c = criterion(8, "Kloosterman moduli two-way containment, bound 500")
    bad = []
    for q in (4, 6, 9, 12):
        for cusp in cusp_representatives(q):
            listed = set(kloosterman_moduli(q, cusp, 500))
            realized = {m for m in realized_moduli(q, cusp, 500) if m <= 500}
            if listed != realized:
                bad.append((q, str(cusp), sorted(listed ^ realized)[:5]))
    c.check(not bad, f"differences {bad}")


def test_c09_partition_of_unity(criterion):
    c = criterion(9, "T-function orbit sums, Delta in {5, 8, 17}")
    autos = {5: sl2_automorph(BQForm(1, 1, -1)), 8: Mat2(3, -2, -4, 3),
             17: sl2_automorph(BQForm(2, 1, -2))}
    worst, count = 0.0, 0
    for T in autos.values():
        p = t_function(T)
        for br in (p.inner, p.outer):
            # 100 points per branch, log-spaced in distance to the fixed points
            s = np.linspace(-8 * br.length, 8 * br.length, 100)
            s = np.sign(s) * np.expm1(np.abs(s) / (4 * br.length)) * br.length
            for x in (br.inverse_sigma(float(v)) for v in s):
                if not np.isfinite(x) or p.near_fixed(x):
                    continue
                worst = max(worst, abs(p.orbit_sum(x, 30) - 1))
                count += 1
    c.check(worst < 1e-10, f"max |sum - 1| = {worst:.2e} over {count} points")


def test_c10_psi_partition(criterion):
    c = criterion(10, "psi automorph partition, 50 random xi")
    f, q = X2M2, BQForm(1, 0, -2)
    T0 = Mat2(3, -2, -4, 3)
    w = psi_weight(q, T0)
    rng = np.random.default_rng(10)
    powers = [T0**k for k in range(-25, 26)]
    worst = 0.0
    for _ in range(50):
        xi = random_gamma0(1, rng, 50)
        total = 0.0
        for Tk in powers:
            m = xi @ Tk
            total += float(w(m.c, m.d)) if m.d else 0.0
        worst = max(worst, abs(total - 1))
    c.check(worst < 1e-9, f"max |sum - 1| = {worst:.2e}")


def test_c11_divisible_cosets(criterion):
    c = criterion(11, "divisible cosets: size, coset invariance, widths")
    worst_size, width_bad, invariance_bad = 0.0, [], 0
    rng = np.random.default_rng(11)
    for f in CORPUS:
        for qf in small_representatives(f):
            for N in range(1, 201):
                V = divisible_cosets(f, qf, N)
                worst_size = max(worst_size, len(V) / divisor_count(N))
                for lab in V:
                    if not N / 10 <= lab.width <= 10 * N:
                        width_bad.append((str(f), N, lab.width))
            for N in (5, 7, 12):
                n1 = N * f.alpha
                for lab in coset_labels(f.alpha, N):
                    member = qf(lab.eta.c, lab.eta.d) % n1 == 0
                    for _ in range(100):
                        g = random_gamma0(n1, rng, 40) @ lab.eta
                        invariance_bad += (qf(g.c, g.d) % n1 == 0) != member
    ok = worst_size <= 10 and not width_bad and invariance_bad == 0
    c.check(ok, f"max |V|/tau(N) = {worst_size:.2f}, width violations {len(width_bad)}, "
                f"membership changes {invariance_bad}")


def test_c12_poisson_identity(criterion):
    c = criterion(12, "Poisson/Kloosterman identity, N in {1,2,3}")
    start = time.perf_counter()
    parts, ok = [], True
    for N in (1, 2, 3):
        rep = poisson_identity_check(poisson_config(N))
        ok &= rep.abs_err < 1e-4 * (1 + abs(rep.lhs))
        parts.append(f"N={N} err {rep.abs_err:.1e} (c_max {rep.c_max}, K {rep.kappa_max})")
    elapsed = time.perf_counter() - start
    c.check(ok and elapsed < 300, "; ".join(parts) + f"; {elapsed:.0f} s")


def test_c13_p_q_gap(criterion):
    c = criterion(13, "|P - Q| <= 10 h")
    parts, ok = [], True
    for N in (1, 2, 3):
        for h in (1, 3):
            cfg = poisson_config(N, h)
            gap = abs(poincare_P(cfg) - poincare_Q(cfg))
            ok &= gap <= 10 * h
            parts.append(f"N={N},h={h}: {gap:.3f}")
    c.check(ok, ", ".join(parts))


def test_c14_smoothing_gap(criterion):
    c = criterion(14, "|W - W_g| within the smoothing envelope")
    worst = 0.0
    for f in CORPUS:
        for x in (2.0**12, 2.0**14):
            for N in (1, 3, 5):
                for y1 in (4.0, 16.0):
                    q = WeylQuery(f, 1, x, N)
                    gap = abs(weyl_discrete(q).value - weyl_smooth(q, SmoothWeight(x, y1)).value)
                    worst = max(worst, gap / smoothing_gap_bound(x, N, y1, divisor_count(N)))
    c.check(worst <= 1, f"max gap / envelope = {worst:.3f}")


def test_c15_empirical_cancellation(criterion):
    c = criterion(15, "exponent scan slopes")
    start = time.perf_counter()
    xs = dyadic_range(10, 18)
    s1 = exponent_scan(X2M2, 1, 1, xs)
    s0 = exponent_scan(X2M2, 0, 1, xs)
    elapsed = time.perf_counter() - start
    ok = s1.slope < 0.95 and abs(s0.slope - 1) <= 0.1 and elapsed < 600
    c.check(ok, f"h=1 slope {s1.slope:.3f} (se {s1.stderr:.3f}), h=0 slope {s0.slope:.4f}, "
                f"{elapsed:.0f} s")


def test_c16_G_decay(criterion):
    c = criterion(16, "G envelope for kappa in [2NY1, 8NY1]")
    worst = 0.0
    # 2X^2+X-2 is left out: its sector bound gives c_max = 21251 moduli
    configs = [PoincareConfig(f, qf, 1e4, N, 4.0)
               for f in (CORPUS[0], CORPUS[2]) for qf in small_representatives(f)
               for N in (1, 2, 3)]
    for cfg in configs:
        N = cfg.N
        NY = N * cfg.Y1
        K = int(8 * NY)
        ks = np.arange(-K, K + 1)
        sel = np.abs(ks) >= 2 * NY
        env = 100 * math.sqrt(cfg.x) * (NY / np.abs(ks[sel])) ** 2
        for cc in range(1, c_max_of(cfg) + 1):
            if _y_intervals(cfg, cc):
                G = fourier_G_grid(cfg, cc, K)
                worst = max(worst, float((np.abs(G[sel]) / env).max()))
    c.check(worst <= 1, f"max |G| / envelope = {worst:.4f} over {len(configs)} configs")


def run_cli(capsys, argv):
    code = cli_main(argv)
    return code, capsys.readouterr().out


def test_c17_determinism(criterion, capsys):
    c = criterion(17, "determinism across runs and threads")
    scan = ["scan", "--poly", "2,1,-2", "--h", "1", "--N", "2", "--x-start", "1024",
            "--x-end", "65536", "--seed", "7"]
    weyl = ["weyl", "--poly", "1,0,-2", "--h", "2", "--x", "50000", "--Y1", "8", "--seed", "7"]
    outs = {}
    for t in ("1", "1", "2", "8"):
        for name, argv in (("scan", scan), ("weyl", weyl)):
            code, out = run_cli(capsys, argv + ["--threads", t])
            assert code == 0
            outs.setdefault((name, t), []).append(out)
    same_runs = all(len(set(v)) == 1 for v in outs.values())

    def fields(text):
        # numeric cells only; header and label cells are compared via the byte check
        out = []
        for line in text.splitlines():
            for cell in line.split(","):
                try:
                    out.append(float(cell))
                except ValueError:
                    pass
        return out

    same_threads = all(fields(outs[(n, t)][0]) == fields(outs[(n, "1")][0])
                       for n in ("scan", "weyl") for t in ("2", "8"))
    c.check(same_runs and same_threads,
            f"byte-identical repeats: {same_runs}; identical fields at 2 and 8 threads: {same_threads}")
