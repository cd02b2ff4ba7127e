import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carpetdyn import ifs as I
from carpetdyn.schemas import SchemaError


# validation ------------------------------------------------------------------

def test_validate_middle_thirds_strong(cantor):
    rep = I.validate(cantor)
    assert rep.separation == "strong" and rep.spanning_irreducible


def test_validate_carpet_open_set(carpet):
    rep = I.validate(carpet)
    assert rep.separation == "open-set" and rep.spanning_irreducible


def test_collinear_translations_not_spanning():
    flat = I.CarpetIFS(2, "1/3", [("0", "0"), ("1/3", "0"), ("2/3", "0")])
    assert not I.validate(flat).spanning_irreducible


def test_non_digit_system_needs_assertion(two_thirds):
    assert I.validate(two_thirds).separation == "unknown"
    asserted = I.CarpetIFS(1, "2/3", two_thirds.translations, separation_assertion="open-set")
    assert I.validate(asserted).separation == "open-set"


@pytest.mark.parametrize("kwargs", [
    dict(d=1, rho="1", translations=[("0",), ("1",)]),
    dict(d=1, rho="1/3", translations=[("0",)]),
    dict(d=2, rho="1/3", translations=[("0",), ("1",)]),
    dict(d=1, rho="1/3", translations=[("0",), ("2/3",)], probs=(0.2, 0.2)),
])
def test_bad_ifs_rejected(kwargs):
    with pytest.raises(I.IFSError):
        I.CarpetIFS(**kwargs)


def test_float_data_rejected():
    with pytest.raises(I.IFSError):
        I.CarpetIFS(1, 0.3333, [(0,), (0.6667,)])


def test_json_round_trip(tmp_path, carpet):
    path = tmp_path / "c.json"
    I.dump_ifs(carpet, path)
    assert I.load_ifs(path) == carpet


def test_json_requires_rational_strings(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"d": 1, "rho": 0.5, "translations": [["0"], ["1/2"]]}))
    with pytest.raises((SchemaError, I.IFSError)):
        I.load_ifs(path)


# coding map ----------------------------------------------------------------

def test_cod_fixed_points(cantor):
    for letter, target in ((1, 0.0), (2, 1.0)):
        p = I.cod(cantor, [letter] * 30)
        assert abs(p.coords[0] - target) <= p.truncation_error
        assert p.truncation_error <= 3.0 ** -30 * cantor.diam_bound() * (1 + 1e-12)


def test_cod_alternating_word_is_three_quarters(cantor):
    p = I.cod(cantor, [2, 1] * 15)
    assert abs(p.coords[0] - 0.75) <= p.truncation_error
    x = Fraction(3, 4)
    assert cantor.apply(2, cantor.apply(1, (x,))) == (x,)


words = st.lists(st.integers(1, 2), min_size=1, max_size=25)


@given(words, words, words)
def test_cod_lipschitz_in_word_metric(prefix, t1, t2):
    cantor = I.middle_thirds()
    a = I.cod(cantor, prefix + t1).coords
    b = I.cod(cantor, prefix + t2).coords
    assert np.linalg.norm(a - b) <= (1 / 3) ** len(prefix) * cantor.diam_bound() + 1e-15


@given(st.lists(st.integers(1, 8), min_size=1, max_size=12))
def test_cod_exact_matches_float(w):
    carpet = I.sierpinski_carpet()
    exact = I.cod_exact(carpet, w)
    assert np.allclose([float(c) for c in exact], I.cod(carpet, w).coords, atol=1e-14)


# sampling --------------------------------------------------------------------

def test_sample_mean_is_one_half(cantor):
    s = I.sample_theta(cantor, 100_000, seed=1)
    x = s.points[:, 0]
    bar = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - 0.5) < 3 * bar


def test_no_sample_in_middle_gap(cantor):
    s = I.sample_theta(cantor, 20_000, seed=2)
    x = s.points[:, 0]
    e = s.truncation_error
    assert not np.any((x > 1 / 3 + e) & (x < 2 / 3 - e))


def test_sampling_is_deterministic_and_prefix_stable(carpet):
    a = I.sample_theta(carpet, 1500, seed=7).points
    b = I.sample_theta(carpet, 1500, seed=7).points
    c = I.sample_theta(carpet, 600, seed=7).points
    assert np.array_equal(a, b) and np.array_equal(a[:600], c)
    assert not np.array_equal(a, I.sample_theta(carpet, 1500, seed=8).points)


def test_iter_theta_matches_batch(cantor):
    it = I.iter_theta(cantor, seed=4)
    first = np.array([next(it).coords for _ in range(700)])
    assert np.array_equal(first, I.sample_theta(cantor, 700, seed=4).points)


def test_stationarity_on_a_box(carpet):
    """theta(B) against sum p_i theta(f_i^-1 B), estimated from one cloud."""
    pts = I.sample_theta(carpet, 40_000, seed=3).points
    lo, hi = np.array([0.1, 0.2]), np.array([0.55, 0.7])
    inside = lambda z: np.all((z >= lo) & (z <= hi), axis=1)
    direct = inside(pts).astype(float)
    mix = np.zeros(len(pts))
    for i, p in enumerate(carpet.probs, start=1):
        mix += p * inside(I.push_through_word(carpet, [i], pts))
    diff = direct - mix
    assert abs(diff.mean()) < 3 * diff.std(ddof=1) / math.sqrt(len(diff)) + 1e-12


def test_attractor_stationarity(cantor):
    s = I.sample_theta(cantor, 5000, seed=5)
    images = np.vstack([I.push_through_word(cantor, [i], s.points) for i in (1, 2)])
    from scipy.spatial import cKDTree

    dist, _ = cKDTree(images).query(s.points)
    # each sample is itself the image of a sample with one letter dropped, up to truncation
    assert np.quantile(dist, 0.99) < 0.01


def test_limit_measure_contraction(carpet):
    base = I.sample_theta(carpet, 2000, seed=6).points
    b = [3, 1, 4, 1, 5, 2, 6, 5, 3, 5]
    for n in (2, 5, 10):
        cloud = I.push_through_word(carpet, b[:n], base)
        diam = np.max(np.linalg.norm(cloud[:, None] - cloud[None, :200], axis=2))
        assert diam <= (1 / 3) ** n * math.sqrt(2) + 1e-12
        target = I.cod(carpet, b[:n] + [1] * 40).coords
        assert np.max(np.linalg.norm(cloud - target, axis=1)) <= (1 / 3) ** n * carpet.diam_bound()


# conjugation -------------------------------------------------------------------

def test_conjugate_identity_and_shift(cantor):
    assert I.conjugate(cantor, 1) == cantor
    shifted = I.conjugate(cantor, 1, ("-1/2",))
    assert sorted(y[0] for y in shifted.translations) == [Fraction(-1, 3), Fraction(1, 3)]


def test_conjugate_dilation_scales_attractor(cantor):
    big = I.conjugate(cantor, 3)
    pts = I.sample_theta(big, 5000, seed=0).points[:, 0]
    assert pts.min() >= -1e-12 and pts.max() <= 3 + 1e-12
    assert pts.max() > 2.9 and pts.min() < 0.1


def test_conjugate_rejects_zero(cantor):
    with pytest.raises(I.IFSError):
        I.conjugate(cantor, 0)


# density ratios --------------------------------------------------------------

def test_density_ratio_whole_space_is_one(cantor):
    assert np.all(I.density_ratio_trace(cantor, I.HalfSpace.whole(), [1, 2, 1], 2000) == 1.0)


def test_density_ratio_complement_and_containment(cantor):
    neg = I.HalfSpace((Fraction(1),), Fraction(0), strict=True)
    assert np.all(I.density_ratio_trace(cantor, neg, [2] * 6, 2000) == 0.0)
    left = I.HalfSpace((Fraction(1),), Fraction(1, 3))
    assert np.all(I.density_ratio_trace(cantor, left, [1] * 6, 2000) == 1.0)


def test_density_ratio_needs_separation(two_thirds):
    with pytest.raises(I.IFSError):
        I.density_ratio_trace(two_thirds, I.HalfSpace.whole(), [1], 100)


# friendliness -----------------------------------------------------------------

def test_lebesgue_decay_exponent_near_one():
    est = I.estimate_friendliness(I.lebesgue_interval(), 50_000, seed=0)
    assert abs(est.decay_alpha - 1) < 0.15


def test_cantor_point_decay_exponent(cantor):
    eps = I.geometric_ladder(1 / 3, 1 / 3, 6)
    alpha = I.point_decay_exponent(cantor, [0.0], eps, 100_000, seed=0)
    assert abs(alpha - math.log(2) / math.log(3)) < 0.1


def test_federer_ratio_missing_ball_raises(cantor):
    cloud = np.array([[0.0], [1.0]])
    with pytest.raises(I.InsufficientSamplesError):
        I.federer_ratios(cloud, np.array([[0.5]]), [0.01])
