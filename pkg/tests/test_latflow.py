import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from carpetdyn import ifs as I
from carpetdyn import latflow as L


def brute_force_min(basis, norm, box=10):
    n = basis.shape[1]
    best = math.inf
    for c in itertools.product(range(-box, box + 1), repeat=n):
        if any(c):
            best = min(best, norm(basis @ np.array(c, dtype=float)))
    return best


def random_basis(rng, n):
    while True:
        b = rng.normal(size=(n, n))
        if L.condition_number(b) < 50:
            return b / abs(np.linalg.det(b)) ** (1 / n)


# embedding and flow -----------------------------------------------------------

def test_embed_zero_is_integer_lattice():
    lat = L.embed([0, 0])
    assert lat.exact and np.array_equal(lat.float_basis(), np.eye(3))


def test_embed_half():
    lat = L.embed([Fraction(1, 2)])
    assert lat.det() == 1
    assert np.array_equal(lat.float_basis(), np.array([[1, 0.5], [0, 1]]))
    assert [lat.basis[i, 1] for i in range(2)] == [Fraction(1, 2), 1]


def test_embed_float_input():
    lat = L.embed([0.25, math.sqrt(2) - 1])
    assert not lat.exact and abs(lat.det() - 1) < 1e-12


def test_flow_examples():
    lat = L.embed([Fraction(1, 2)])
    a = L.DiagonalSequence.weighted([1.0])
    assert np.array_equal(L.flow(lat, a, 0).float_basis(), lat.float_basis())
    out = L.flow(lat, a, math.log(2)).float_basis()
    assert np.allclose(out, [[2, 1], [0, 0.5]], atol=1e-14)


def test_determinant_preserved_over_many_steps():
    lat = L.embed([0.3, 0.7])
    a = L.DiagonalSequence.weighted([0.5, 0.5], dt=0.001)
    for n, cur in L.flow_steps(lat, a, 10_000):
        pass
    assert n == 10_000 and abs(cur.det() - 1) < 1e-9


def test_flow_overflow_guard():
    with pytest.raises(L.FlowOverflowError):
        L.flow(L.embed([0.5]), L.DiagonalSequence.weighted([1.0]), 700)


def test_non_traceless_sequence_rejected():
    bad = L.DiagonalSequence(lambda n: np.array([n, n]))
    with pytest.raises(L.LatticeError):
        bad(1)


@given(st.floats(-20, 20), st.floats(-20, 20), st.floats(0, 1), st.floats(0, 1))
def test_flow_group_action(s, t, x1, x2):
    lat = L.embed([x1, x2])
    a = L.DiagonalSequence.weighted([0.3, 0.7])
    two = L.flow(L.flow(lat, a, s), a, t).float_basis()
    one = L.flow(lat, a, s + t).float_basis()
    # entries reach e^{40}; compare at 1e-8 relative to the entry scale
    assert np.all(np.abs(two - one) <= 1e-8 * np.maximum(1.0, np.abs(one)))


@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.integers(0, 2**32))
def test_sup_systole_scaling_inequality(c, seed):
    b = random_basis(np.random.default_rng(seed), 3)
    scaled = np.exp(np.array(c))[:, None] * b
    assert L.systole(scaled, L.SUP) <= math.exp(max(c)) * L.systole(b, L.SUP) * (1 + 1e-9)


# shortest vectors ----------------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("norm", [L.SUP, L.EUCLID])
def test_integer_lattice_systole(n, norm):
    sv = L.shortest_vector(np.eye(n), norm)
    assert sv.length == 1 and np.count_nonzero(sv.vector) == 1


def test_shortest_vector_example():
    b = np.array([[2.0, 1.0], [0.0, 0.5]])
    sv = L.shortest_vector(b, L.EUCLID)
    assert sv.length == pytest.approx(1.0)
    assert sv.vector[0] == pytest.approx(0.0) and abs(sv.vector[1]) == pytest.approx(1.0)
    assert brute_force_min(b, L.EUCLID, 8) == pytest.approx(1.0)


def test_shortest_vector_exact_basis_gives_exact_vector():
    # (a + 2b/7, b) has sup norm >= 1 unless b = 0
    sv = L.shortest_vector(L.embed([Fraction(2, 7)]), L.SUP)
    assert all(isinstance(v, Fraction) for v in sv.vector)
    assert sv.length == 1
    flowed = L.shortest_vector(L.flow(L.embed([Fraction(2, 7)]), L.DiagonalSequence.weighted([1.0]), math.log(7)))
    b = np.array([[7.0, 2.0], [0.0, 1 / 7]])
    assert flowed.length == pytest.approx(brute_force_min(b, L.EUCLID))


@given(st.integers(0, 2**32), st.sampled_from([2, 3]), st.sampled_from(["sup", "euclidean"]))
def test_shortest_vector_matches_brute_force(seed, n, norm):
    norm = L.parse_norm(norm)
    b = random_basis(np.random.default_rng(seed), n)
    box = 10 if n == 2 else 5
    assert L.shortest_vector(b, norm).length == pytest.approx(brute_force_min(b, norm, box), rel=1e-12)


def test_lll_returns_unimodular_transform():
    rng = np.random.default_rng(0)
    b = random_basis(rng, 3) @ np.array([[1, 5, 2], [0, 1, 7], [0, 0, 1]])
    red, u = L.lll_reduce(b)
    assert np.allclose(b @ u, red) and round(abs(np.linalg.det(u))) == 1


def test_badly_conditioned_lattice_rejected():
    with pytest.raises(L.ConditionError):
        L.shortest_vector(np.diag([1e-9, 1e9]))


def test_custom_norm_needs_constants():
    l1 = L.NormSpec("custom", lambda v: float(np.abs(v).sum()))
    with pytest.raises(L.LatticeError):
        L.shortest_vector(np.eye(2), l1)
    l1c = L.NormSpec("custom", lambda v: float(np.abs(v).sum()), c_lo=1.0)
    assert L.shortest_vector(np.eye(2), l1c).length == 1


def test_custom_norm_must_be_homogeneous():
    with pytest.raises(L.LatticeError):
        L.NormSpec("custom", lambda v: float(np.abs(v).sum()) ** 2, c_lo=1.0)


# drift --------------------------------------------------------------------------

def test_drift_examples():
    rep = L.drift_check(L.DiagonalSequence.weighted([0.5, 0.5]), 20)
    assert rep.drifts and np.allclose(rep.trace, 0.5 * np.arange(21))
    wall = L.DiagonalSequence(lambda n: np.array([0.0, n, -n]))
    assert not L.drift_check(wall, 20).drifts
    alt = L.DiagonalSequence(lambda n: np.array([(-1) ** n * n, -(-1) ** n * n]))
    assert not L.drift_check(alt, 20).drifts


# Monte Carlo over theta ----------------------------------------------------------

def test_siegel_at_time_zero_small_ball_is_zero():
    rep = L.siegel_statistic(I.lebesgue_interval(), 0.0, 0.5, 500, seed=0)
    assert rep.estimate == 0.0


def test_siegel_at_time_zero_matches_enumeration():
    leb = I.lebesgue_interval()
    n, R = 300, 1.3
    rep = L.siegel_statistic(leb, 0.0, R, n, seed=2)
    pts = I.sample_theta(leb, n, seed=2).points
    exact = [sum(1 for c in itertools.product(range(-4, 5), repeat=2) if any(c)
                 and math.hypot(c[0] + c[1] * p[0], c[1]) <= R) for p in pts]
    assert rep.estimate == np.mean(exact)


def test_siegel_volume_scaling_lebesgue():
    leb = I.lebesgue_interval()
    small = L.siegel_statistic(leb, 6.0, 0.75, 3000, seed=0)
    big = L.siegel_statistic(leb, 6.0, 1.5, 3000, seed=0)
    assert big.extra["target"] == pytest.approx(4 * small.extra["target"])
    assert big.estimate / small.estimate == pytest.approx(4, rel=0.15)


def test_siegel_independent_of_workers(cantor):
    a = L.siegel_statistic(cantor, 4.0, 1.5, 1200, seed=3, workers=1)
    b = L.siegel_statistic(cantor, 4.0, 1.5, 1200, seed=3, workers=3)
    assert a.to_dict() == b.to_dict()


def test_nondivergence_extremes(cantor):
    prof = L.nondivergence_profile(cantor, 6.0, [0.0, 0.05, 2.0], 1000, seed=0)
    assert prof.fractions[0] == 0.0 and prof.fractions[2] == 1.0
    assert list(prof.fractions) == sorted(prof.fractions)


def test_trajectory_csv_columns():
    rows = L.trajectory_rows([Fraction(1, 3)], None, [0.0, 1.0], L.SUP, eps=[0.5])
    text = L.trajectory_csv(rows, [0.5])
    assert text.splitlines()[0] == "n_or_t,lambda1_euclid,lambda1_norm,in_Keps_0.5"
    assert rows[0][1:3] == [1.0, 1.0]


def test_base_point_panel_unimodular():
    for g in L.base_point_panel(2, 5, seed=1):
        assert abs(np.linalg.det(g) - 1) < 1e-10


def test_nondivergence_over_base_point_panel(cantor):
    # a_t u(x) g Z^2 for the identity and a few random g: little mass near the cusp
    xs = I.sample_theta(cantor, 400, seed=5).points
    for g in L.base_point_panel(1, 4, seed=2):
        below = sum(L.systole(L.flowed_basis(x, (1.0,), 6.0) @ g) < 0.05 for x in xs)
        assert below / len(xs) < 0.05
