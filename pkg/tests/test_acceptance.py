"""Acceptance criteria, one test each.

Every test records a one-line PASS/FAIL verdict with its measured numbers;
the lines are printed as the tests run (``-s``) and again in the terminal
summary.  Running this file directly prints the same lines.
"""
import math
import time
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from carpetdyn import dioph as D
from carpetdyn import ifs as I
from carpetdyn import latflow as L
from carpetdyn import shift as S
from carpetdyn.arith import INF, Place
from carpetdyn.report import rng_for
from carpetdyn.sadic import build_walk, lie
from carpetdyn.sadic.growth import growth_audit, sample_words
from carpetdyn.sadic.suite import run_identity_suite

RESULTS: dict[int, str] = {}


def record(k: int, title: str, ok: bool, detail: str, elapsed: float) -> None:
    line = f"ACCEPTANCE {k} {'PASS' if ok else 'FAIL'}  {title}: {detail} [{elapsed:.2f} s]"
    RESULTS[k] = line
    print(line)


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def test_1_exact_identity_suite():
    with Timer() as tm:
        checks = {name: run_identity_suite(make(), n_points=20, n_pairs=50, n_gamma=100, max_gamma_n=12)
                  for name, make in (("middle-thirds", I.middle_thirds), ("carpet", I.sierpinski_carpet),
                                     ("rho=2/3,y=1/5", I.two_thirds_example))}
    bad = [(name, c.name, str(c.place)) for name, cs in checks.items() for c in cs if not c.ok]
    n = sum(len(cs) for cs in checks.values())
    ok = not bad and tm.elapsed < 1.0
    record(1, "exact-identity suite", ok, f"{n} checks over 3 IFS, failures={bad or 'none'}", tm.elapsed)
    assert not bad
    assert tm.elapsed < 1.0


def test_2_growth_law():
    with Timer() as tm:
        walk = build_walk(I.middle_thirds())
        P3 = Place(3)
        words = sample_words(2, walk.ifs.probs, 50, 40, seed=7)
        gens3 = [h.at(P3) for h in walk.hbar]
        exact_ok = True
        for word in words:
            g = None
            for n, letter in enumerate(word, start=1):
                g = gens3[letter - 1] if g is None else gens3[letter - 1] @ g
                norm = lie.op_norm(lie.AdOperator(P3, lie.adjoint_matrix(g), 1)).value
                exact_ok &= norm == 3 ** n
        audit = growth_audit(walk, range(10, 41), n_words=50, seed=7, places=[INF])
        rates = np.array([r.log_norm / r.n for r in audit.rows])
    lo, hi = float(rates.min()), float(rates.max())
    inside = math.log(3) - 0.2 <= lo and hi <= math.log(3) + 0.2
    ok = exact_ok and inside and tm.elapsed < 10
    record(2, "growth law", ok, f"sigma=3 exact 3^n for n<=40: {exact_ok}; sigma=inf log-norm/n in "
           f"[{lo:.4f}, {hi:.4f}] vs log3={math.log(3):.4f}+-0.2", tm.elapsed)
    assert exact_ok and inside and tm.elapsed < 10


def test_3_prefix_ergodic_theorem():
    with Timer() as tm:
        space = S.ShiftSpace.uniform(2)
        tails = list(product((1, 2), repeat=3))
        families = [S.make_prefix_sets("uniform", 2, n=n) for n in range(1, 5)]
        families += [S.make_prefix_sets("first-hit", 2, s=s, L=L) for s in (1, 2) for L in (1, 2, 3)]
        exact_ok = True
        n_checked = 0
        for depth in (1, 2, 3):
            for c in product((1, 2), repeat=depth):
                for P in families:
                    if P.min_length >= depth:
                        exact_ok &= S.cylinder_exactness(c, P, space, tails)
                        n_checked += 1
        sets = [S.make_prefix_sets("uniform", 2, n=n) for n in range(1, 13)]
        tab = S.ergodic_convergence_test(S.weighted_hits(12), sets, space, n_tails=100, seed=3)
    n12 = tab.rows[-1]
    ratio = n12[1] / n12[3]
    ok = exact_ok and ratio <= 3 and tm.elapsed < 30
    record(3, "prefix ergodic theorem", ok, f"cylinder averages exact in {n_checked} cases: {exact_ok}; n=12 max_dev={n12[1]:.3g} "
           f"= {ratio:.2f} reference CLT bars (ref {n12[2]:.5f}, exact {float(tab.exact_reference):.5f})",
           tm.elapsed)
    assert exact_ok and ratio <= 3 and tm.elapsed < 30


def test_4_centralizer_structure():
    with Timer() as tm:
        found = []
        d1_inf = None
        ok = True
        for make in (I.middle_thirds, I.sierpinski_carpet, I.two_thirds_example):
            walk = build_walk(make())
            d = walk.d
            for p in walk.places:
                z = lie.centralizer([lie.adjoint(h, p, check=False) for h in walk.hbar])
                kind = walk.partition.kind(p)
                if kind == "ue":
                    ok &= z.shape[0] == 0
                elif kind == "dt":
                    ok &= z.shape[0] == d * d and lie.same_span(z, lie.coordinate_subspace(lie.idx_block(d), d))
                found.append(f"{make.__name__}@{p}:{z.shape[0]}")
                if d == 1 and p.is_infinite:
                    d1_inf = z.shape[0]
    ok &= d1_inf == 1
    ok_all = ok and tm.elapsed < 1.0
    record(4, "centralizer structure", ok_all, f"dims {', '.join(found)} (d=1 at inf -> {d1_inf})",
           tm.elapsed)
    assert ok and tm.elapsed < 1.0


def test_5_equidistribution_desk_scale():
    with Timer() as tm:
        cantor = I.middle_thirds()
        rep = L.siegel_statistic(cantor, 8.0, 1.5, 10_000, seed=1, r=[1.0])
        prof = L.nondivergence_profile(cantor, 8.0, [0.05], 10_000, seed=1, r=[1.0])
    target = math.pi * 1.5 ** 2
    rel = abs(rep.estimate - target) / target
    bars = abs(rep.estimate - target) / rep.clt_bar
    frac = prof.fractions[0]
    siegel_ok = rel <= 0.05 and bars <= 3
    ok = siegel_ok and frac < 0.05 and tm.elapsed < 120
    record(5, "equidistribution at desk scale", ok,
           f"Siegel {rep.estimate:.4f} +- {rep.clt_bar:.4f} vs {target:.4f} (rel err {rel:.1%}, {bars:.1f} bars); "
           f"P[lambda1<0.05]={frac:.4f}", tm.elapsed)
    assert frac < 0.05
    assert siegel_ok, "finite-t Siegel mean for the Cantor measure is biased upward; see the decisions ledger"


def test_6_theta_nullity():
    with Timer() as tm:
        tab = D.measure_zero_experiment(I.middle_thirds(), None, L.SUP, thresholds=(0.01,),
                                        T_ladder=(100, 1000, 10_000), n_samples=1000, seed=0)
    ba, bab = tab.ba_fraction[:, 0], tab.ba_bar[:, 0]
    di, dib = tab.di_fraction, tab.di_bar
    mono = lambda f, b: all(f[i + 1] <= f[i] + 2 * math.hypot(b[i], b[i + 1]) for i in range(len(f) - 1))
    ok = mono(ba, bab) and mono(di, dib) and tm.elapsed < 300
    record(6, "theta-nullity experiments", ok, f"BA survival {np.round(ba, 4).tolist()}, Dirichlet(eps={tab.eps:.2f}) "
           f"{np.round(di, 4).tolist()} for T=1e2,1e3,1e4", tm.elapsed)
    assert ok


def test_7_dani_panel():
    with Timer() as tm:
        rng = rng_for(2024, 99)
        rationals = []
        while len(rationals) < 5:
            q = int(rng.integers(2, 200))
            rationals.append(Fraction(int(rng.integers(1, q)), q))
        golden = D.QuadraticIrrational.golden_conjugate()
        panel = D.dani_panel([golden] + rationals, T=10_000, c=0.2, c_dyn=0.2)
    g = panel[0]
    golden_ok = g.ba_arithmetic and g.ba_dynamic and g.min_margin >= 0.2 and g.inf_systole >= 0.2
    rat_ok = all(e.min_margin == 0 and not e.ba_arithmetic and not e.ba_dynamic for e in panel[1:])
    ok = golden_ok and rat_ok and tm.elapsed < 30
    record(7, "Dani correspondence panel", ok, f"golden margin={g.min_margin:.4f} inf-systole={g.inf_systole:.4f}; "
           f"rationals {[str(r) for r in rationals]} non-BA both ways: {rat_ok}", tm.elapsed)
    assert ok


def _brute(b, norm, box=10):
    n = b.shape[1]
    cs = np.array([c for c in product(range(-box, box + 1), repeat=n) if any(c)], dtype=float)
    vals = [norm(b @ c) for c in cs]
    return min(vals)


def test_8_oracle_equivalence():
    with Timer() as tm:
        rng = np.random.default_rng(8)
        mismatches = 0
        for i in range(200):
            n = 2 if i % 2 == 0 else 3
            while True:
                b = rng.normal(size=(n, n))
                if L.condition_number(b) < 30:
                    break
            b /= abs(np.linalg.det(b)) ** (1 / n)
            norm = L.SUP if i % 4 < 2 else L.EUCLID
            sv = L.shortest_vector(b, norm)
            mine = norm(b @ np.asarray(sv.coefficients, dtype=float))
            mismatches += mine != _brute(b, norm)
        s = I.sample_theta(I.middle_thirds(), 100_000, seed=1)
        x = s.points[:, 0]
        bar = x.std(ddof=1) / math.sqrt(x.size)
        mean_bars = abs(x.mean() - 0.5) / bar
    ok = mismatches == 0 and mean_bars <= 3
    record(8, "oracle equivalence", ok, f"shortest_vector vs +-10 brute force: {mismatches} mismatches / 200; "
           f"theta mean {x.mean():.5f} ({mean_bars:.2f} CLT bars from 1/2)", tm.elapsed)
    assert ok


def test_9_friendliness():
    with Timer() as tm:
        cantor = I.middle_thirds()
        eps = I.geometric_ladder(1 / 3, 1 / 3, 6)
        alpha = I.point_decay_exponent(cantor, [0.0], eps, 100_000, seed=0)
        a = I.estimate_friendliness(cantor, 100_000, 6, seed=0, scale_top=0.5, scale_ratio=1 / 3)
        b = I.estimate_friendliness(cantor, 100_000, 6, seed=0, scale_top=0.3, scale_ratio=1 / 2)
    target = math.log(2) / math.log(3)
    var = max(a.federer_D, b.federer_D) / min(a.federer_D, b.federer_D)
    ok = abs(alpha - target) <= 0.1 and var <= 1.5
    record(9, "friendliness", ok, f"alpha-hat at 0 = {alpha:.4f} vs {target:.4f}; federer_D {a.federer_D:.3f} "
           f"(ladder 0.5*3^-j) vs {b.federer_D:.3f} (ladder 0.3*2^-j), ratio {var:.2f}", tm.elapsed)
    assert ok


if __name__ == "__main__":
    for name, fn in sorted((k, v) for k, v in dict(globals()).items() if k.startswith("test_")):
        try:
            fn()
        except AssertionError:
            pass
