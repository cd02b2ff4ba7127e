from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carpetdyn import shift as S

HALF = S.ShiftSpace.uniform(2)


def test_uniform_prefix_set():
    P = S.make_prefix_sets("uniform", 2, n=2)
    assert P.words == ((1, 1), (1, 2), (2, 1), (2, 2))


def test_first_hit_prefix_set():
    P = S.make_prefix_sets("first-hit", 2, s=1, L=3)
    assert set(P.words) == {(1,), (2, 1), (2, 2, 1), (2, 2, 2)}


@pytest.mark.parametrize("words", [
    [(1,), (1, 2), (2,)],          # prefix violation
    [(1,), (2, 1)],                # does not cover
    [(1, 1), (1, 2), (2,), (3,)],  # letter out of range
])
def test_bad_prefix_sets_rejected(words):
    with pytest.raises(S.PrefixSetError):
        S.CompletePrefixSet(tuple(words), 2)


def test_size_guard():
    with pytest.raises(S.PrefixSetError):
        S.make_prefix_sets("uniform", 4, n=13)


def test_shift_space_validation():
    with pytest.raises(ValueError):
        S.ShiftSpace(2, (Fraction(1, 2), Fraction(1, 3)))
    assert S.ShiftSpace.parse(2, "0.3,0.7").p == (Fraction(3, 10), Fraction(7, 10))  # decimals are exact
    assert not S.ShiftSpace(2, (0.3, 0.7)).exact
    assert S.ShiftSpace.parse(3, "1/2,1/4,1/4").exact


# prefix averages ----------------------------------------------------------------

def test_constant_average_is_one():
    P = S.make_prefix_sets("first-hit", 3, s=2, L=4)
    space = S.ShiftSpace.parse(3, "1/2,1/3,1/6")
    assert S.prefix_average(S.constant(), P, space, ()).value == 1


@pytest.mark.parametrize("c", [c for n in (1, 2, 3) for c in product((1, 2), repeat=n)])
def test_cylinder_average_exact(c):
    space = S.ShiftSpace(2, (Fraction(1, 3), Fraction(2, 3)))
    P = S.make_prefix_sets("uniform", 2, n=3)
    tails = list(product((1, 2), repeat=3))
    assert S.cylinder_exactness(c, P, space, tails)


def test_tail_only_functional_averages_to_itself():
    g = S.weighted_hits(3)
    P = S.make_prefix_sets("uniform", 2, n=4)
    f = S.shifted(g, 4)
    for tail in product((1, 2), repeat=3):
        assert S.prefix_average(f, P, HALF, tail).value == g(tail)


def test_average_bounded_by_sup():
    bad = S.WordFunctional(lambda w: Fraction(5), 1, 1.0)
    with pytest.raises(AssertionError):
        S.prefix_average(bad, S.make_prefix_sets("uniform", 2, n=1), HALF, ())


def test_exact_mean_of_hits():
    assert S.exact_mean(S.weighted_hits(12), HALF) == sum(Fraction(1, 2 ** (i + 1)) for i in range(1, 13))


# properties --------------------------------------------------------------------

probs = st.lists(st.integers(1, 9), min_size=2, max_size=4).map(
    lambda xs: tuple(Fraction(x, sum(xs)) for x in xs))


@given(probs, st.integers(1, 4))
def test_partition_exactness(p, L):
    space = S.ShiftSpace(len(p), p)
    P = S.make_prefix_sets("first-hit", len(p), s=1, L=L)
    assert sum(space.cylinder(a) for a in P.words) == 1


@given(probs, st.data())
def test_cylinder_symmetry(p, data):
    space = S.ShiftSpace(len(p), p)
    w = data.draw(st.lists(st.integers(1, len(p)), min_size=1, max_size=8))
    assert space.cylinder(w) == space.cylinder(w[::-1])


@given(st.integers(1, 3), st.integers(1, 3), st.lists(st.integers(1, 2), min_size=3, max_size=3))
@settings(max_examples=30)
def test_tower_property(n, extra, tail):
    """Averaging over a refinement equals averaging over the coarse set for tail-free integrands."""
    space = S.ShiftSpace(2, (Fraction(1, 3), Fraction(2, 3)))
    f = S.weighted_hits(n)
    coarse = S.make_prefix_sets("uniform", 2, n=n)
    fine = S.make_prefix_sets("uniform", 2, n=n + extra)
    assert S.prefix_average(f, coarse, space, tail).value == S.prefix_average(f, fine, space, tail).value


# convergence test ---------------------------------------------------------------

def test_indicator_deviation_zero():
    sets = [S.make_prefix_sets("uniform", 2, n=n) for n in (1, 2, 3)]
    tab = S.ergodic_convergence_test(S.cylinder_indicator((1,)), sets, HALF, n_tails=20, seed=0, n_ref=1000)
    assert tab.exact_reference == Fraction(1, 2)
    for P in sets:
        for tail in product((1, 2), repeat=2):
            assert S.prefix_average(S.cylinder_indicator((1,)), P, HALF, tail).value == Fraction(1, 2)


def test_constant_deviation_zero():
    sets = [S.make_prefix_sets("uniform", 2, n=n) for n in (1, 2)]
    tab = S.ergodic_convergence_test(S.constant(), sets, HALF, n_tails=10, seed=0, n_ref=500)
    assert all(row[1] == 0 for row in tab.rows)


def test_deviations_shrink():
    sets = [S.make_prefix_sets("uniform", 2, n=n) for n in (1, 3, 6)]
    tab = S.ergodic_convergence_test(S.weighted_hits(6), sets, HALF, n_tails=50, seed=1, n_ref=20_000)
    devs = [row[1] for row in tab.rows]
    assert devs[0] > devs[1] > devs[2]


def test_min_lengths_must_increase():
    sets = [S.make_prefix_sets("uniform", 2, n=2)] * 2
    with pytest.raises(ValueError):
        S.ergodic_convergence_test(S.constant(), sets, HALF)


def test_float_probabilities_path():
    space = S.ShiftSpace(2, (0.3, 0.7))
    P = S.make_prefix_sets("uniform", 2, n=3)
    val = S.prefix_average(S.cylinder_indicator((2, 2)), P, space, (1,)).value
    assert isinstance(val, float) and val == pytest.approx(0.49)
