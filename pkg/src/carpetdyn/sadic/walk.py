"""Random-walk elements h_i, hbar_i, k_i, b and lambda_i as per-place rational matrices.

Every matrix lives in PGL_{d+1}, so comparisons are up to a nonzero scalar.
Word products follow the convention hbar_1^n = hbar_{i_n} ... hbar_{i_1}.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from carpetdyn.arith import (INF, Place, abs_at_place, as_fraction, projectively_equal, q, qidentity,
                             qinverse)
from carpetdyn.sadic.places import PlacePartition, derive_places


class IdentityFailure(AssertionError):
    def __init__(self, message: str, place: Place | None = None, difference=None):
        super().__init__(message)
        self.place = place
        self.difference = difference


class IndexingError(AssertionError):
    """Closed-form translation of a prefix-swap element disagrees with the product."""

    def __init__(self, product_y0, closed_form_y0):
        super().__init__(f"direct product gives y0={product_y0}, closed form gives {closed_form_y0}")
        self.product_y0 = product_y0
        self.closed_form_y0 = closed_form_y0


def affine(scale: Fraction, col: Sequence, d: int) -> np.ndarray:
    """[[scale * Id_d, col], [0, 1]]."""
    m = qidentity(d + 1)
    for j in range(d):
        m[j, j] = q(scale)
        m[j, d] = q(col[j])
    return m


def u_matrix(x: Sequence) -> np.ndarray:
    x = [as_fraction(c) for c in x]
    return affine(Fraction(1), x, len(x))


@dataclass(frozen=True)
class WalkElement:
    mats: tuple[tuple[Place, np.ndarray], ...]
    label: str = ""

    @classmethod
    def from_dict(cls, mats: dict, label: str = "") -> "WalkElement":
        return cls(tuple((p, mats[p]) for p in sorted(mats, key=Place.sort_key)), label)

    @property
    def places(self) -> tuple[Place, ...]:
        return tuple(p for p, _ in self.mats)

    def at(self, place: Place) -> np.ndarray:
        for p, m in self.mats:
            if p == place:
                return m
        raise KeyError(f"no coordinate at place {place}")

    def __matmul__(self, other: "WalkElement") -> "WalkElement":
        return WalkElement(tuple((p, m @ other.at(p)) for p, m in self.mats), f"{self.label}*{other.label}")

    def inverse(self) -> "WalkElement":
        return WalkElement(tuple((p, qinverse(m)) for p, m in self.mats), f"{self.label}^-1")

    def equals(self, other: "WalkElement") -> bool:
        return all(projectively_equal(m, other.at(p)) for p, m in self.mats)

    def differing_places(self, other: "WalkElement") -> list[Place]:
        return [p for p, m in self.mats if not projectively_equal(m, other.at(p))]

    def is_identity_at(self, place: Place) -> bool:
        m = self.at(place)
        return projectively_equal(m, qidentity(m.shape[0]))

    def identity_places(self) -> list[Place]:
        return [p for p in self.places if self.is_identity_at(p)]

    def matrix_norm(self, place: Place):
        """Max entry absolute value at a finite place, after scaling the (d+1, d+1) entry to 1."""
        m = self.at(place)
        m = m / m[-1, -1] if m[-1, -1] != 0 else m
        return max(abs_at_place(v, place).value for v in m.flat)


def identity_element(places: Sequence[Place], d: int, label: str = "Id") -> WalkElement:
    return WalkElement(tuple((p, qidentity(d + 1)) for p in places), label)


def embed_at_infinity(m: np.ndarray, places: Sequence[Place], label: str = "") -> WalkElement:
    """Element equal to ``m`` at infinity and to the identity elsewhere (how u(x) sits in G^S)."""
    n = m.shape[0]
    return WalkElement(tuple((p, m if p.is_infinite else qidentity(n)) for p in places), label)


def diagonal_embedding(m: np.ndarray, places: Sequence[Place], label: str = "") -> WalkElement:
    return WalkElement(tuple((p, m.copy()) for p in places), label)


@dataclass(frozen=True)
class Walk:
    ifs: object
    partition: PlacePartition
    h: tuple[WalkElement, ...]
    hbar: tuple[WalkElement, ...]
    k: tuple[WalkElement, ...]
    b: WalkElement
    lam: tuple[WalkElement, ...]

    @property
    def d(self) -> int:
        return self.ifs.d

    @property
    def places(self) -> tuple[Place, ...]:
        return self.partition.S

    def word(self, letters: Sequence[int], which: str = "hbar") -> WalkElement:
        """Product g_{i_n} ... g_{i_1} for a 1-based word (i_1, ..., i_n)."""
        gens = getattr(self, which)
        out = identity_element(self.places, self.d, "Id")
        for i in letters:
            out = gens[i - 1] @ out
        return WalkElement(out.mats, f"{which}[{''.join(map(str, letters))}]")

    def reversed_word(self, letters: Sequence[int], which: str = "hbar") -> WalkElement:
        """Product g_{i_1} ... g_{i_n}."""
        return self.word(list(reversed(letters)), which)

    def group_F_generators(self) -> tuple[WalkElement, ...]:
        """Generator data of the compact group F; its closure is not computed."""
        return self.k


def build_walk(ifs, partition: PlacePartition | None = None) -> Walk:
    P = partition or derive_places(ifs)
    d, rho = ifs.d, ifs.rho
    zero = [Fraction(0)] * d
    hs, hbars, ks, lams = [], [], [], []
    for i, y in enumerate(ifs.translations, start=1):
        neg = [-c for c in y]
        full = affine(rho, neg, d)
        diag = affine(rho, zero, d)
        h, hb, k = {}, {}, {}
        for p in P.S:
            kind = P.kind(p)
            h[p] = diag if p.is_infinite else full
            hb[p] = {"ue": full, "dt": diag, "tr": qidentity(d + 1)}[kind]
            if kind == "ue" or p.is_infinite:
                k[p] = qidentity(d + 1)
            elif kind == "dt":
                k[p] = affine(Fraction(1), neg, d)
            else:
                k[p] = full
        hs.append(WalkElement.from_dict(h, f"h{i}"))
        hbars.append(WalkElement.from_dict(hb, f"hbar{i}"))
        ks.append(WalkElement.from_dict(k, f"k{i}"))
        lams.append(diagonal_embedding(full, P.S, f"lambda{i}"))
    inv = affine(1 / rho, zero, d)
    b = WalkElement.from_dict({p: inv if P.kind(p) == "ue" else qidentity(d + 1) for p in P.S}, "b")
    return Walk(ifs, P, tuple(hs), tuple(hbars), tuple(ks), b, tuple(lams))


# exact identities ----------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str = ""
    place: Place | None = None
    difference: object = None


def verify_crucial_identity(walk: Walk, x: Sequence, lam: Sequence[WalkElement] | None = None) -> list[CheckResult]:
    """h_i u(x) = u(f_i(x)) lambda_i in G^S for every i (u embedded at infinity only)."""
    x = [as_fraction(c) for c in x]
    lam = walk.lam if lam is None else lam
    ifs = walk.ifs
    out = []
    ux = embed_at_infinity(u_matrix(x), walk.places)
    for i in range(ifs.k):
        lhs = walk.h[i] @ ux
        rhs = embed_at_infinity(u_matrix(ifs.apply(i + 1, x)), walk.places) @ lam[i]
        bad = lhs.differing_places(rhs)
        if bad:
            p = bad[0]
            out.append(CheckResult(f"crucial[{i + 1}]", False, f"fails at place {p}", p, lhs.at(p) - rhs.at(p)))
        else:
            out.append(CheckResult(f"crucial[{i + 1}]", True))
    return out


def verify_k_hbar(walk: Walk) -> list[CheckResult]:
    out = []
    for i in range(len(walk.h)):
        prod = walk.k[i] @ walk.hbar[i]
        bad = prod.differing_places(walk.h[i])
        out.append(CheckResult(f"k{i + 1}*hbar{i + 1}=h{i + 1}", not bad,
                               f"fails at {bad[0]}" if bad else "", bad[0] if bad else None))
    return out


def verify_ue_agreement(walk: Walk) -> list[CheckResult]:
    out = []
    for i in range(len(walk.h)):
        bad = [p for p in walk.partition.S_ue if not projectively_equal(walk.h[i].at(p), walk.hbar[i].at(p))]
        out.append(CheckResult(f"h{i + 1}=hbar{i + 1} on S_ue", not bad, "" if not bad else f"fails at {bad[0]}"))
    return out


def verify_solenoid_identity(walk: Walk, w: dict) -> list[CheckResult]:
    """h_i w lambda_i^{-1} = u(y_i)(h_i w h_i^{-1}) for w = (u(x_sigma)) in U_S.

    Also checks that conjugation by h_i is x -> rho x at every place.
    ``w`` maps each place to a rational vector.
    """
    places = walk.places
    W = WalkElement.from_dict({p: u_matrix(w[p]) for p in places}, "w")
    out = []
    for i, y in enumerate(walk.ifs.translations):
        h, lam = walk.h[i], walk.lam[i]
        conj = h @ W @ h.inverse()
        uy = embed_at_infinity(u_matrix(y), places)
        lhs = h @ W @ lam.inverse()
        rhs = uy @ conj
        scaled = WalkElement.from_dict({p: u_matrix([walk.ifs.rho * c for c in w[p]]) for p in places})
        ok = lhs.equals(rhs) and conj.equals(scaled)
        out.append(CheckResult(f"solenoid[{i + 1}]", ok))
    return out


def solenoid_series_check(q: int, a: int, p: int, n_terms: int = 30) -> dict:
    """z = sum_{i>=0} a q^i = a/(1-q) in Q_p for p | q, and (1/q) z = a/q + z.

    Returns the exact identity verdict and the p-adic sizes of the partial-sum
    errors, which are p^{-N v_p(q)}.
    """
    from carpetdyn.arith import padic_abs

    if q % p:
        raise ValueError("p must divide q")
    z = Fraction(a, 1 - q)
    identity = Fraction(1, q) * z == Fraction(a, q) + z
    errs, partial = [], Fraction(0)
    for i in range(n_terms):
        partial += a * Fraction(q) ** i
        errs.append(padic_abs(partial - z, p))
    return {"identity": identity, "z": z, "partial_errors": errs}


# prefix swap ------------------------------------------------------------------------

@dataclass
class GammaResult:
    element: WalkElement
    y0: tuple[Fraction, ...]
    norms: dict


def closed_form_y0(ifs, a: Sequence[int], b: Sequence[int], n: int) -> tuple[Fraction, ...]:
    """sum_{j=1}^n rho^{n-j} (y_{b_{n-j+1}} - y_{a_j})."""
    rho = ifs.rho
    out = [Fraction(0)] * ifs.d
    for j in range(1, n + 1):
        yb, ya = ifs.translations[b[n - j] - 1], ifs.translations[a[j - 1] - 1]
        out = [o + rho ** (n - j) * (cb - ca) for o, cb, ca in zip(out, yb, ya)]
    return tuple(out)


def prefix_swap_gamma(walk: Walk, a: Sequence[int], b: Sequence[int], n: int) -> GammaResult:
    """gamma(a, n, b) = (hbar_{a_n} ... hbar_{a_1}) (hbar_{b_1} ... hbar_{b_n})^{-1}.

    Asserts gamma is the identity off S_ue and equals u(y0) on S_ue, where the
    product is ground truth and the closed form must match it.
    """
    if len(a) < n or len(b) < n:
        raise ValueError("both words need length >= n")
    a, b = tuple(a[:n]), tuple(b[:n])
    g = walk.word(a) @ walk.reversed_word(b).inverse()
    d = walk.d
    for p in walk.places:
        if p not in walk.partition.S_ue and not g.is_identity_at(p):
            raise IdentityFailure(f"gamma is not the identity at {p}", p, g.at(p))
    y0_cf = closed_form_y0(walk.ifs, a, b, n)
    y0 = None
    for p in walk.partition.S_ue:
        m = g.at(p)
        m = m / m[d, d]
        y_here = tuple(m[j, d] for j in range(d))
        if not projectively_equal(m, u_matrix(y_here)):
            raise IdentityFailure(f"gamma is not unipotent at {p}", p, m)
        if y0 is None:
            y0 = y_here
        elif y_here != y0:
            raise IdentityFailure("gamma translations differ across S_ue places", p, m)
    if y0 is None:
        y0 = tuple(Fraction(0) for _ in range(d))
    y0 = tuple(as_fraction(c) for c in y0)
    if y0 != y0_cf:
        raise IndexingError(y0, y0_cf)
    norms = {p: g.matrix_norm(p) for p in walk.partition.S_ue}
    return GammaResult(WalkElement(g.mats, f"gamma({a},{n},{b})"), y0, norms)
