"""The full exact-identity suite for one IFS, as a list of named checks."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from carpetdyn.arith import qidentity
from carpetdyn.report import rng_for
from carpetdyn.sadic.lie import CertificateError, adjoint, eigen_split, subalgebra_suite
from carpetdyn.sadic.walk import (CheckResult, IdentityFailure, IndexingError, WalkElement, build_walk,
                                  prefix_swap_gamma, verify_crucial_identity, verify_k_hbar, verify_solenoid_identity,
                                  verify_ue_agreement)


def random_rational(rng, max_den: int = 50) -> Fraction:
    q = int(rng.integers(1, max_den + 1))
    return Fraction(int(rng.integers(-2 * q, 2 * q + 1)), q)


def random_word(rng, k: int, length: int) -> list[int]:
    return [int(a) + 1 for a in rng.integers(0, k, size=length)]


def sign_flipped(lam: WalkElement) -> WalkElement:
    """Negative control: flip the sign of the translation column."""
    mats = []
    for p, m in lam.mats:
        m = m.copy()
        m[:-1, -1] = -m[:-1, -1]
        mats.append((p, m))
    return WalkElement(tuple(mats), lam.label + "~")


def run_identity_suite(ifs, n_points: int = 20, n_pairs: int = 50, n_gamma: int = 100, max_gamma_n: int = 12,
                       max_word: int = 6, seed: int = 0, corrupt_lambda: bool = False) -> list[CheckResult]:
    rng = rng_for(seed, 21)
    walk = build_walk(ifs)
    d, k = ifs.d, ifs.k
    out: list[CheckResult] = []

    lam = [sign_flipped(l) if any(c != 0 for c in y) else l for l, y in zip(walk.lam, ifs.translations)] \
        if corrupt_lambda else None
    for _ in range(n_points):
        x = [random_rational(rng) for _ in range(d)]
        res = verify_crucial_identity(walk, x, lam)
        bad = [r for r in res if not r.ok]
        out.append(bad[0] if bad else CheckResult("crucial identity", True, f"x={[str(c) for c in x]}"))
    out += verify_k_hbar(walk)
    out += verify_ue_agreement(walk)
    w = {p: [random_rational(rng) for _ in range(d)] for p in walk.places}
    out += verify_solenoid_identity(walk, w)

    ok_fun = True
    for _ in range(n_pairs):
        w1 = walk.word(random_word(rng, k, int(rng.integers(1, max_word + 1))))
        w2 = walk.word(random_word(rng, k, int(rng.integers(1, max_word + 1))))
        for p in walk.places:
            lhs = adjoint(w1 @ w2, p, check=False).matrix
            rhs = adjoint(w1, p, check=False).matrix @ adjoint(w2, p, check=False).matrix
            if not np.array_equal(lhs, rhs):
                ok_fun = False
                out.append(CheckResult("Ad functoriality", False, f"{w1.label},{w2.label}", p))
                break
    out.append(CheckResult("Ad functoriality", ok_fun, f"{n_pairs} random pairs"))
    ok_br = True
    for h in walk.hbar:
        for p in walk.places:
            try:
                adjoint(h, p, check=True)
            except CertificateError as exc:
                ok_br = False
                out.append(CheckResult("bracket preservation", False, str(exc), p))
    if ok_br:
        out.append(CheckResult("bracket preservation", True))

    try:
        reg = subalgebra_suite(walk)
        out.append(CheckResult("subalgebra certificates", True, f"{len(reg.certificates)} certificates"))
    except CertificateError as exc:
        out.append(CheckResult("subalgebra certificates", False, f"{exc} ({exc.generator})", exc.place))
    ok, detail = eigen_split(d, ifs.rho)
    out.append(CheckResult("eigenvalues rho^-1, 1, rho", ok, detail))

    ok_g = True
    for _ in range(n_gamma):
        n = int(rng.integers(1, max_gamma_n + 1))
        a, b = random_word(rng, k, n), random_word(rng, k, n)
        try:
            prefix_swap_gamma(walk, a, b, n)
        except (IdentityFailure, IndexingError) as exc:
            ok_g = False
            out.append(CheckResult("prefix swap", False, str(exc), getattr(exc, "place", None)))
            break
    out.append(CheckResult("prefix swap gamma", ok_g, f"{n_gamma} random (a, b, n)"))

    ok_s = True
    for _ in range(20):
        word = random_word(rng, k, int(rng.integers(1, max_word + 1)))
        g = WalkElement.from_dict({p: qidentity(d + 1) for p in walk.places})
        for i in word:
            g = walk.lam[i - 1] @ g if rng.random() < 0.5 else walk.lam[i - 1].inverse() @ g
        n_id = len(g.identity_places())
        ok_s &= n_id in (0, len(walk.places))
    out.append(CheckResult("no partially trivial element in <lambda_i>", ok_s))
    return out
