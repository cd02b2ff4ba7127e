"""Exact rationals, place absolute values and small exact linear algebra.

Scalars at the API boundary are :class:`fractions.Fraction` values, always
reduced with a positive denominator.  Matrices are numpy arrays of
``dtype=object`` holding gmpy2 ``mpq`` rationals (same semantics, much faster
arithmetic), so ``@`` stays exact.  The two types mix freely and compare equal.
"""
from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np
from gmpy2 import mpq

Rational = Union[int, Fraction]

_WHEEL_BASE = (2, 3, 5)
_WHEEL_STEPS = (4, 2, 4, 2, 4, 6, 2, 6)  # gaps between residues coprime to 30


class ArithError(ValueError):
    pass


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions and exact strings like ``"-2/3"`` to a Fraction.

    Floats are rejected: every algebraic identity downstream is checked with
    zero tolerance, so inputs have to be bit-exact.
    """
    if isinstance(value, bool):
        raise ArithError(f"not a rational: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, numbers.Rational):
        return Fraction(int(value.numerator), int(value.denominator))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ArithError(f"cannot parse rational {value!r}") from exc
    raise ArithError(f"not an exact rational: {value!r} ({type(value).__name__})")


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return factorize(n) == [n]


def factorize(n: int) -> list[int]:
    """Prime factors of ``n`` with multiplicity, in ascending order.

    Trial division over a mod-30 wheel.  Only meant for the small numbers that
    appear as numerators and denominators of IFS data.
    """
    if n < 1:
        raise ArithError("factorize expects a positive integer")
    out: list[int] = []
    for p in _WHEEL_BASE:
        while n % p == 0:
            out.append(p)
            n //= p
    f, i = 7, 0
    while f * f <= n:
        while n % f == 0:
            out.append(f)
            n //= f
        f += _WHEEL_STEPS[i]
        i = (i + 1) % len(_WHEEL_STEPS)
    if n > 1:
        out.append(n)
    return out


def prime_divisors(n: int) -> set[int]:
    n = abs(int(n))
    return set(factorize(n)) if n else set()


@dataclass(frozen=True)
class Place:
    """The archimedean place (``prime=None``) or the p-adic place ``prime``."""

    prime: int | None = None

    def __post_init__(self):
        if self.prime is not None and not is_prime(self.prime):
            raise ArithError(f"place tag {self.prime} is not prime")

    @property
    def is_infinite(self) -> bool:
        return self.prime is None

    def sort_key(self) -> tuple[int, int]:
        return (0, 0) if self.prime is None else (1, self.prime)

    def __str__(self) -> str:
        return "inf" if self.prime is None else str(self.prime)

    @classmethod
    def parse(cls, text: str) -> "Place":
        text = str(text).strip().lower()
        if text in ("inf", "oo", "infinity", "∞"):
            return INF
        return cls(int(text))


INF = Place(None)


def sorted_places(places: Iterable[Place]) -> list[Place]:
    return sorted(places, key=Place.sort_key)


@dataclass(frozen=True)
class PlaceValue:
    place: Place
    value: Fraction

    def __float__(self) -> float:
        return float(self.value)

    def log(self) -> float:
        return math.log(self.value) if self.value else -math.inf


def valuation(x: Rational, p: int) -> int:
    """Additive p-adic valuation of a nonzero rational."""
    x = as_fraction(x)
    if x == 0:
        raise ArithError("valuation of zero is +infinity")
    v = 0
    num, den = abs(x.numerator), x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def abs_at_place(x: Rational, place: Place) -> PlaceValue:
    x = as_fraction(x)
    if x == 0:
        return PlaceValue(place, Fraction(0))
    if place.is_infinite:
        return PlaceValue(place, abs(x))
    return PlaceValue(place, Fraction(place.prime) ** (-valuation(x, place.prime)))


def padic_abs(x: Rational, p: int) -> Fraction:
    return abs_at_place(x, Place(p)).value


def svec_norm(v: Sequence[Rational], place: Place):
    """Max-norm at a finite place (exact Fraction), Euclidean norm at infinity (float)."""
    if len(v) == 0:
        raise ArithError("norm of an empty vector")
    if place.is_infinite:
        return math.sqrt(sum(float(c) ** 2 for c in v))
    return max(abs_at_place(c, place).value for c in v)


# exact matrices -----------------------------------------------------------

def q(value) -> mpq:
    """Exact matrix entry from any exact rational input."""
    return value if isinstance(value, type(mpq())) else mpq(as_fraction(value))


def qmatrix(rows) -> np.ndarray:
    """Object array of mpq entries from nested sequences of exact rationals."""
    arr = np.array(rows, dtype=object)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    out = np.empty(arr.shape, dtype=object)
    for idx, val in np.ndenumerate(arr):
        out[idx] = q(val)
    return out


def qidentity(n: int) -> np.ndarray:
    out = qzeros((n, n))
    for i in range(n):
        out[i, i] = mpq(1)
    return out


def qzeros(shape) -> np.ndarray:
    out = np.empty(shape, dtype=object)
    out.fill(mpq(0))
    return out


def rref(a: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over Q and the pivot columns."""
    m = np.array(a, dtype=object, copy=True)
    rows, cols = m.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        piv = next((i for i in range(r, rows) if m[i, c] != 0), None)
        if piv is None:
            continue
        if piv != r:
            m[[r, piv]] = m[[piv, r]]
        m[r] = m[r] / m[r, c]
        for i in range(rows):
            if i != r and m[i, c] != 0:
                m[i] = m[i] - m[i, c] * m[r]
        pivots.append(c)
        r += 1
    return m, pivots


def rank(a: np.ndarray) -> int:
    if a.size == 0:
        return 0
    return len(rref(a)[1])


def nullspace(a: np.ndarray) -> np.ndarray:
    """Basis of {x : a x = 0} as the rows of the returned array."""
    a = np.asarray(a, dtype=object)
    cols = a.shape[1]
    if a.shape[0] == 0:
        return qidentity(cols)
    m, pivots = rref(a)
    free = [c for c in range(cols) if c not in pivots]
    basis = qzeros((len(free), cols))
    for k, f in enumerate(free):
        basis[k, f] = mpq(1)
        for i, p in enumerate(pivots):
            basis[k, p] = -m[i, f]
    return basis


def row_space(a: np.ndarray) -> np.ndarray:
    """Canonical basis (nonzero rref rows) of the row span."""
    a = np.asarray(a, dtype=object)
    if a.shape[0] == 0:
        return a
    m, pivots = rref(a)
    return m[: len(pivots)]


def qinverse(a: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    m, pivots = rref(np.hstack([a, qidentity(n)]))
    if pivots[:n] != list(range(n)):
        raise ArithError("matrix is singular")
    return m[:, n:]


def qdet(a: np.ndarray) -> Fraction:
    m = np.array(a, dtype=object, copy=True)
    n = m.shape[0]
    det = mpq(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i, c] != 0), None)
        if piv is None:
            return mpq(0)
        if piv != c:
            m[[c, piv]] = m[[piv, c]]
            det = -det
        det *= m[c, c]
        for i in range(c + 1, n):
            if m[i, c] != 0:
                m[i] = m[i] - (m[i, c] / m[c, c]) * m[c]
    return det


def is_zero(a: np.ndarray) -> bool:
    return all(v == 0 for v in np.asarray(a, dtype=object).flat)


def projectively_equal(a: np.ndarray, b: np.ndarray) -> bool:
    """True iff ``a = c * b`` for some nonzero rational ``c``."""
    if a.shape != b.shape:
        return False
    ref = next(((i, v) for i, v in np.ndenumerate(b) if v != 0), None)
    if ref is None:
        return is_zero(a)
    idx, bv = ref
    if a[idx] == 0:
        return False
    c = a[idx] / bv
    return all(x == c * y for x, y in zip(a.flat, b.flat))


def to_float(a) -> np.ndarray:
    return np.array(np.asarray(a, dtype=object), dtype=float)
