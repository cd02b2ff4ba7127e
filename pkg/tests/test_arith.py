import math
from fractions import Fraction

import numpy as np
import pytest
from gmpy2 import mpq
from hypothesis import given
from hypothesis import strategies as st

from carpetdyn.arith import (INF, ArithError, Place, abs_at_place, as_fraction, factorize, nullspace,
                             prime_divisors, projectively_equal, qdet, qidentity, qinverse, qmatrix, rank,
                             svec_norm, valuation)

rationals = st.fractions(max_denominator=10**6).filter(lambda x: abs(x) < 10**9)
nonzero = rationals.filter(lambda x: x != 0)
small_primes = st.sampled_from([2, 3, 5, 7, 11, 13])


@pytest.mark.parametrize("n, expected", [(1, []), (12, [2, 2, 3]), (9699690, [2, 3, 5, 7, 11, 13, 17, 19])])
def test_factorize_examples(n, expected):
    assert sorted(factorize(n)) == expected


def test_factorize_rejects_nonpositive():
    with pytest.raises(ArithError):
        factorize(0)


@pytest.mark.parametrize("x, place, expected", [
    (Fraction(1, 3), Place(3), Fraction(3)),
    (6, Place(3), Fraction(1, 3)),
    (Fraction(2, 3), INF, Fraction(2, 3)),
    (0, Place(5), Fraction(0)),
])
def test_abs_at_place_examples(x, place, expected):
    assert abs_at_place(x, place).value == expected


@pytest.mark.parametrize("v, place, expected", [
    ((0, 0), Place(2), 0), ((0, 0), INF, 0),
    ((Fraction(1, 3), 9), Place(3), 3),
    ((3, 4), INF, 5.0),
])
def test_svec_norm_examples(v, place, expected):
    assert svec_norm(v, place) == expected


def test_place_must_be_prime():
    with pytest.raises(ArithError):
        Place(4)
    assert Place.parse("inf") == INF and Place.parse("7") == Place(7)


def test_as_fraction_accepts_exact_inputs_only():
    assert as_fraction("2/6") == Fraction(1, 3)
    assert as_fraction(mpq(3, 9)) == Fraction(1, 3)
    with pytest.raises(ArithError):
        as_fraction(0.1)


@given(rationals, rationals, small_primes)
def test_ultrametric_inequality(x, y, p):
    P = Place(p)
    assert abs_at_place(x + y, P).value <= max(abs_at_place(x, P).value, abs_at_place(y, P).value)


@given(nonzero, nonzero, small_primes)
def test_multiplicativity(x, y, p):
    P = Place(p)
    assert abs_at_place(x * y, P).value == abs_at_place(x, P).value * abs_at_place(y, P).value


@given(nonzero)
def test_product_formula(x):
    primes = prime_divisors(abs(x.numerator) * x.denominator)
    prod = abs_at_place(x, INF).value
    for p in primes:
        prod *= abs_at_place(x, Place(p)).value
    assert prod == 1


@given(st.lists(st.integers(2, 2**16), min_size=1, max_size=4))
def test_factorize_round_trip(factors):
    n = math.prod(factors)
    out = factorize(n)
    assert math.prod(out) == n
    assert all(Place(p) for p in out)  # every factor is prime


@given(nonzero, small_primes)
def test_valuation_matches_power(x, p):
    v = valuation(x, p)
    rest = x / Fraction(p) ** v
    assert rest.numerator % p and rest.denominator % p


def test_exact_linear_algebra():
    a = qmatrix([[1, 2], [3, 4]])
    assert qdet(a) == -2
    assert np.array_equal(a @ qinverse(a), qidentity(2))
    sing = qmatrix([[1, 2, 3], [2, 4, 6]])
    assert rank(sing) == 1
    ns = nullspace(sing)
    assert ns.shape[0] == 2 and all(v == 0 for v in (sing @ ns.T).flat)


def test_projective_equality_modulo_scalar():
    a = qmatrix([["1/3", 0], [0, 1]])
    assert projectively_equal(a, a * mpq(-7, 2))
    assert not projectively_equal(a, qidentity(2))
