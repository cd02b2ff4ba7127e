"""Carpet iterated function systems x -> rho*x + y_i and their Bernoulli measures.

Maps are indexed 1..k throughout, matching how words are written.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
from scipy.spatial import cKDTree

from carpetdyn.arith import ArithError, as_fraction, qmatrix, rank
from carpetdyn.report import BLOCK_SIZE, rng_for

Word = tuple[int, ...]
SEPARATIONS = ("strong", "open-set", "unknown")
DEFAULT_TRUNCATION = 64


class IFSError(ValueError):
    pass


class InsufficientSamplesError(IFSError):
    pass


@dataclass(frozen=True)
class CarpetIFS:
    d: int
    rho: Fraction
    translations: tuple[tuple[Fraction, ...], ...]
    probs: tuple[float, ...] = ()
    separation_assertion: str | None = None

    def __post_init__(self):
        try:
            rho = as_fraction(self.rho)
            ys = tuple(tuple(as_fraction(c) for c in y) for y in self.translations)
        except ArithError as exc:
            raise IFSError(str(exc)) from exc
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "translations", ys)
        k = len(ys)
        if self.d < 1:
            raise IFSError("dimension must be positive")
        if k < 2:
            raise IFSError("a carpet IFS needs at least two maps")
        if any(len(y) != self.d for y in ys):
            raise IFSError("translation vectors must have length d")
        if not 0 < abs(rho) < 1:
            raise IFSError(f"contraction ratio must satisfy 0 < |rho| < 1, got {rho}")
        probs = tuple(float(p) for p in self.probs) if self.probs else (1.0 / k,) * k
        if len(probs) != k or any(not p > 0 for p in probs) or abs(sum(probs) - 1) > 1e-12:
            raise IFSError("probability vector must have k positive entries summing to 1")
        object.__setattr__(self, "probs", probs)
        if self.separation_assertion not in (None, "strong", "open-set"):
            raise IFSError(f"unknown separation assertion {self.separation_assertion!r}")

    @property
    def k(self) -> int:
        return len(self.translations)

    @property
    def rho_float(self) -> float:
        return float(self.rho)

    def translation_array(self) -> np.ndarray:
        return np.array([[float(c) for c in y] for y in self.translations])

    def apply(self, i: int, x: Sequence) -> tuple:
        """f_i(x) for a 1-based map index; exact when x is rational."""
        y = self.translations[i - 1]
        return tuple(self.rho * xj + yj for xj, yj in zip(x, y))

    def fixed_point(self, i: int) -> tuple[Fraction, ...]:
        return tuple(yj / (1 - self.rho) for yj in self.translations[i - 1])

    def diam_bound(self, x0: Sequence = ()) -> float:
        x0 = x0 or (0,) * self.d
        far = max(_norm2([float(c) for c in self.fixed_point(i)]) for i in range(1, self.k + 1))
        return 2 * far + _norm2([float(c) for c in x0])

    def check_word(self, w: Sequence[int]) -> Word:
        w = tuple(int(a) for a in w)
        if any(not 1 <= a <= self.k for a in w):
            raise IFSError(f"word {w} has letters outside 1..{self.k}")
        return w

    # serialisation -------------------------------------------------------

    def to_dict(self) -> dict:
        out = {
            "d": self.d,
            "rho": str(self.rho),
            "translations": [[str(c) for c in y] for y in self.translations],
            "probs": list(self.probs),
        }
        if self.separation_assertion:
            out["separation_assertion"] = self.separation_assertion
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "CarpetIFS":
        for key in ("rho",):
            if not isinstance(data.get(key), str):
                raise IFSError("rho must be an exact rational string such as \"1/3\"")
        trs = data.get("translations")
        if not trs or any(not isinstance(c, str) for y in trs for c in y):
            raise IFSError("translations must be lists of exact rational strings")
        return cls(
            d=int(data["d"]),
            rho=data["rho"],
            translations=tuple(tuple(y) for y in trs),
            probs=tuple(data.get("probs") or ()),
            separation_assertion=data.get("separation_assertion"),
        )


def _norm2(v) -> float:
    return math.sqrt(sum(c * c for c in v))


def load_ifs(path: str | Path) -> CarpetIFS:
    from carpetdyn.schemas import validate_document

    data = json.loads(Path(path).read_text())
    validate_document(data, "ifs")
    return CarpetIFS.from_dict(data)


def dump_ifs(ifs: CarpetIFS, path: str | Path) -> None:
    Path(path).write_text(json.dumps(ifs.to_dict(), indent=2) + "\n")


# examples ----------------------------------------------------------------

def missing_digit(b: int, digits: Sequence[int], probs: Sequence[float] = ()) -> CarpetIFS:
    return CarpetIFS(1, Fraction(1, b), tuple((Fraction(a, b),) for a in digits), tuple(probs))


def middle_thirds(probs: Sequence[float] = ()) -> CarpetIFS:
    return missing_digit(3, (0, 2), probs)


def sierpinski_carpet() -> CarpetIFS:
    digits = [(a, b) for a in range(3) for b in range(3) if (a, b) != (1, 1)]
    return CarpetIFS(2, Fraction(1, 3), tuple((Fraction(a, 3), Fraction(b, 3)) for a, b in digits))


def menger_sponge() -> CarpetIFS:
    digits = [(a, b, c) for a in range(3) for b in range(3) for c in range(3)
              if [a, b, c].count(1) < 2]
    return CarpetIFS(3, Fraction(1, 3), tuple(tuple(Fraction(t, 3) for t in v) for v in digits))


def lebesgue_interval() -> CarpetIFS:
    """rho = 1/2 with digits {0, 1}: the Bernoulli(1/2,1/2) measure is Lebesgue on [0, 1]."""
    return missing_digit(2, (0, 1))


def two_thirds_example() -> CarpetIFS:
    """rho = 2/3 with translations {0, 1/5}; exercises all three place types."""
    return CarpetIFS(1, Fraction(2, 3), ((Fraction(0),), (Fraction(1, 5),)))


# validation --------------------------------------------------------------

@dataclass(frozen=True)
class ValidationReport:
    separation: str
    spanning_irreducible: bool
    digit_system: bool
    digits: tuple[tuple[int, ...], ...] | None = None


def digit_vectors(ifs: CarpetIFS) -> tuple[tuple[int, ...], ...] | None:
    """Integer cell corners b*f_i([0,1]^d) when rho = +-1/b and cells sit on the grid."""
    rho = ifs.rho
    if rho.numerator not in (1, -1):
        return None
    b = rho.denominator
    shift = min(rho, 0)
    out = []
    for y in ifs.translations:
        corner = [b * (c + shift) for c in y]
        if any(v.denominator != 1 or not 0 <= v < b for v in corner):
            return None
        out.append(tuple(int(v) for v in corner))
    return tuple(out)


def validate(ifs: CarpetIFS) -> ValidationReport:
    """Separation type and the spanning surrogate for irreducibility.

    Separation is decided only for digit systems: distinct grid cells give the
    open set condition with U = (0,1)^d, and pairwise disjoint closed cells
    (sup-distance of digit vectors >= 2) give strong separation.  Anything
    else is ``unknown`` unless the IFS carries an explicit assertion.
    """
    y0 = ifs.translations[0]
    diffs = [[yj - y0j for yj, y0j in zip(y, y0)] for y in ifs.translations[1:]]
    spanning = rank(qmatrix(diffs)) == ifs.d
    digits = digit_vectors(ifs)
    if digits is not None:
        if len(set(digits)) < len(digits):
            sep = "unknown"
        else:
            far = all(max(abs(a - b) for a, b in zip(u, v)) >= 2
                      for i, u in enumerate(digits) for v in digits[i + 1:])
            sep = "strong" if far else "open-set"
    else:
        sep = ifs.separation_assertion or "unknown"
    return ValidationReport(sep, spanning, digits is not None, digits)


# coding map and sampling ---------------------------------------------------

@dataclass(frozen=True)
class AttractorPoint:
    coords: np.ndarray
    truncation_error: float


def cod(ifs: CarpetIFS, w: Sequence[int], x0: Sequence = ()) -> AttractorPoint:
    """f_{w_1} o ... o f_{w_n}(x0), computed exactly and rounded once."""
    w = ifs.check_word(w)
    if not w:
        raise IFSError("cod needs a non-empty word")
    x = tuple(as_fraction(c) for c in x0) if x0 else (Fraction(0),) * ifs.d
    for i in reversed(w):
        x = ifs.apply(i, x)
    err = float(abs(ifs.rho)) ** len(w) * ifs.diam_bound(x0)
    return AttractorPoint(np.array([float(c) for c in x]), err)


def cod_exact(ifs: CarpetIFS, w: Sequence[int], x0: Sequence = ()) -> tuple[Fraction, ...]:
    x = tuple(as_fraction(c) for c in x0) if x0 else (Fraction(0),) * ifs.d
    for i in reversed(ifs.check_word(w)):
        x = ifs.apply(i, x)
    return x


def sample_words(ifs: CarpetIFS, rng: np.random.Generator, n: int, length: int) -> np.ndarray:
    """i.i.d. letters (0-based) with law p, shape (n, length)."""
    return rng.choice(ifs.k, size=(n, length), p=np.asarray(ifs.probs))


def points_from_letters(ifs: CarpetIFS, letters: np.ndarray) -> np.ndarray:
    """Evaluate cod on truncated 0-based words by Horner's rule from the tail."""
    ys = ifs.translation_array()
    rho = ifs.rho_float
    x = np.zeros((letters.shape[0], ifs.d))
    for j in range(letters.shape[1] - 1, -1, -1):
        x = rho * x + ys[letters[:, j]]
    return x


@dataclass(frozen=True)
class ThetaSample:
    points: np.ndarray
    truncation_error: float
    seed: int
    n_trunc: int

    def __len__(self) -> int:
        return self.points.shape[0]

    def __iter__(self) -> Iterator[AttractorPoint]:
        for p in self.points:
            yield AttractorPoint(p, self.truncation_error)


def sample_block(ifs: CarpetIFS, seed: int, block_index: int, size: int, n_trunc: int) -> np.ndarray:
    rng = rng_for(seed, 0, block_index)
    return points_from_letters(ifs, sample_words(ifs, rng, size, n_trunc))


def sample_theta(ifs: CarpetIFS, n: int, n_trunc: int = DEFAULT_TRUNCATION, seed: int = 0) -> ThetaSample:
    """n i.i.d. draws from theta truncated at word length ``n_trunc``.

    Draws are produced in fixed-size seeded blocks, so the first m points of a
    run of length n > m coincide with a run of length m.
    """
    if n_trunc < 1:
        raise IFSError("n_trunc must be >= 1")
    blocks = []
    for bi, start in enumerate(range(0, n, BLOCK_SIZE)):
        size = min(BLOCK_SIZE, n - start)
        blocks.append(sample_block(ifs, seed, bi, BLOCK_SIZE, n_trunc)[:size])
    pts = np.vstack(blocks) if blocks else np.zeros((0, ifs.d))
    err = float(abs(ifs.rho)) ** n_trunc * ifs.diam_bound()
    return ThetaSample(pts, err, seed, n_trunc)


def iter_theta(ifs: CarpetIFS, n_trunc: int = DEFAULT_TRUNCATION, seed: int = 0) -> Iterator[AttractorPoint]:
    err = float(abs(ifs.rho)) ** n_trunc * ifs.diam_bound()
    bi = 0
    while True:
        for p in sample_block(ifs, seed, bi, BLOCK_SIZE, n_trunc):
            yield AttractorPoint(p, err)
        bi += 1


def push_through_word(ifs: CarpetIFS, w: Sequence[int], points: np.ndarray) -> np.ndarray:
    """Apply f_{w_1} o ... o f_{w_n} to every row of ``points``."""
    ys = ifs.translation_array()
    out = np.array(points, dtype=float, copy=True)
    for i in reversed(ifs.check_word(w)):
        out = ifs.rho_float * out + ys[i - 1]
    return out


# conjugation -------------------------------------------------------------

def conjugate(ifs: CarpetIFS, c, v: Sequence = ()) -> CarpetIFS:
    """The IFS {f o f_i o f^-1} for the dilation f(x) = c x + v."""
    c = as_fraction(c)
    if c == 0:
        raise IFSError("conjugating map must be invertible (c != 0)")
    v = tuple(as_fraction(t) for t in v) if v else (Fraction(0),) * ifs.d
    ys = tuple(tuple(c * yj + (1 - ifs.rho) * vj for yj, vj in zip(y, v)) for y in ifs.translations)
    return CarpetIFS(ifs.d, ifs.rho, ys, ifs.probs, ifs.separation_assertion)


# density ratios ------------------------------------------------------------

@dataclass(frozen=True)
class HalfSpace:
    """{x : normal . x <= offset} (or < when strict); ``normal=None`` is all of R^d."""

    normal: tuple[Fraction, ...] | None
    offset: Fraction = Fraction(0)
    strict: bool = False

    @classmethod
    def whole(cls) -> "HalfSpace":
        return cls(None)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        if self.normal is None:
            return np.ones(pts.shape[0], dtype=bool)
        val = pts @ np.array([float(c) for c in self.normal])
        return val < float(self.offset) if self.strict else val <= float(self.offset)


def density_ratio_trace(ifs: CarpetIFS, region: HalfSpace, w: Sequence[int], n_samples: int = 20000,
                        seed: int = 0, n_trunc: int = DEFAULT_TRUNCATION) -> np.ndarray:
    """theta(B cap f_n(K)) / theta(f_n(K)) for each prefix length n of ``w``.

    Conditional Monte Carlo: theta restricted to f_n(K) and renormalised is
    the image of theta under f_n, so the ratio is the fraction of pushed
    forward samples that land in B.  The same base cloud is reused for all n.
    """
    if validate(ifs).separation == "unknown":
        raise IFSError("density ratios need strong separation or the open set condition")
    if n_samples <= 0:
        raise InsufficientSamplesError("no samples to estimate the ratio from")
    w = ifs.check_word(w)
    base = sample_theta(ifs, n_samples, n_trunc, seed).points
    ratios = []
    for n in range(1, len(w) + 1):
        pts = push_through_word(ifs, w[:n], base)
        ratios.append(float(np.mean(region.contains(pts))))
    return np.array(ratios)


# friendliness ----------------------------------------------------------------

@dataclass(frozen=True)
class FriendlinessEstimate:
    federer_D: float
    decay_C: float
    decay_alpha: float
    sample_count: int
    seed: int
    federer_by_scale: tuple[float, ...] = ()
    alpha_samples: tuple[float, ...] = ()
    extra: dict = field(default_factory=dict)


def geometric_ladder(top: float, ratio: float, n: int) -> np.ndarray:
    return top * ratio ** np.arange(n)


def federer_ratios(cloud: np.ndarray, centers: np.ndarray, radii: Sequence[float],
                   tree: cKDTree | None = None) -> np.ndarray:
    """Empirical theta(B(x,3r)) / theta(B(x,r)), shape (len(radii), len(centers))."""
    tree = tree or cKDTree(cloud)
    out = np.empty((len(radii), len(centers)))
    for j, r in enumerate(radii):
        small = tree.query_ball_point(centers, r, return_length=True)
        big = tree.query_ball_point(centers, 3 * r, return_length=True)
        if np.any(small == 0):
            raise InsufficientSamplesError(f"a ball of radius {r:g} received no samples")
        out[j] = big / small
    return out


def decay_profile(cloud: np.ndarray, center: np.ndarray, normal: np.ndarray, r: float,
                  eps: Sequence[float], through: np.ndarray | None = None) -> np.ndarray:
    """theta(B(center,r) cap L^(eps)) / theta(B(center,r)) for L = {z : normal.(z - through) = 0}."""
    through = center if through is None else through
    in_ball = np.linalg.norm(cloud - center, axis=1) <= r
    denom = in_ball.sum()
    if denom == 0:
        raise InsufficientSamplesError(f"ball of radius {r:g} received no samples")
    dist = np.abs((cloud - through) @ normal) / np.linalg.norm(normal)
    return np.array([(in_ball & (dist <= e)).sum() / denom for e in eps])


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    x, y = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def estimate_friendliness(ifs: CarpetIFS, n_samples: int = 100_000, n_scales: int = 6, seed: int = 0,
                          *, n_centers: int = 200, n_planes: int = 40, scale_top: float = 0.5,
                          scale_ratio: float = 1 / 3, ball_radius: float = 0.5,
                          eps_ratio: float = 1 / 3, n_eps: int = 6) -> FriendlinessEstimate:
    """Federer constant and (C, alpha) absolute-decay estimates from a theta sample.

    ``federer_D`` is the largest empirical 3r/r ball-mass ratio over sampled
    support centres and the scale ladder ``scale_top * scale_ratio**j``.
    For decay, each random hyperplane passes through a sampled support point
    with an integer normal in [-3, 3]^d; its log-log slope of mass ratio
    against eps/r is one alpha sample.  ``decay_alpha`` is the median slope and
    ``decay_C`` the smallest C making every measured ratio obey C (eps/r)^alpha.
    """
    rep = validate(ifs)
    if rep.separation == "unknown":
        raise IFSError("friendliness estimates need a known separation condition")
    cloud = sample_theta(ifs, n_samples, seed=seed).points
    rng = rng_for(seed, 1)
    tree = cKDTree(cloud)
    centers = cloud[rng.choice(n_samples, size=n_centers, replace=False)]
    radii = geometric_ladder(scale_top, scale_ratio, n_scales)
    fed = federer_ratios(cloud, centers, radii, tree)
    fed_by_scale = fed.max(axis=1)

    eps = geometric_ladder(ball_radius * eps_ratio, eps_ratio, n_eps)
    alphas, pairs = [], []
    for _ in range(n_planes):
        c = cloud[rng.integers(n_samples)]
        normal = np.zeros(ifs.d)
        while not normal.any():
            normal = rng.integers(-3, 4, size=ifs.d).astype(float)
        prof = decay_profile(cloud, c, normal, ball_radius, eps)
        keep = prof > 0
        if keep.sum() < 2:
            continue
        alphas.append(loglog_slope(eps[keep] / ball_radius, prof[keep]))
        pairs.append((eps[keep] / ball_radius, prof[keep]))
    if not alphas:
        raise InsufficientSamplesError("no hyperplane neighbourhood received enough samples")
    alpha = float(np.median(alphas))
    big_c = max(float(np.max(p / s ** alpha)) for s, p in pairs)
    return FriendlinessEstimate(
        federer_D=float(fed_by_scale.max()), decay_C=big_c, decay_alpha=alpha,
        sample_count=n_samples, seed=seed, federer_by_scale=tuple(float(v) for v in fed_by_scale),
        alpha_samples=tuple(alphas), extra={"radii": radii.tolist(), "eps": eps.tolist()})


def point_decay_exponent(ifs: CarpetIFS, point: Sequence[float], eps: Sequence[float],
                         n_samples: int = 100_000, seed: int = 0) -> float:
    """log-log slope of theta(B(point, eps)) against eps.

    In d = 1 a hyperplane is a point, so this is the absolute-decay exponent
    for the hyperplane ``{point}`` with the ball B(point, 1).
    """
    cloud = sample_theta(ifs, n_samples, seed=seed).points
    dist = np.linalg.norm(cloud - np.asarray(point, dtype=float), axis=1)
    mass = np.array([(dist <= e).mean() for e in eps])
    if np.any(mass == 0):
        raise InsufficientSamplesError("an eps-neighbourhood received no samples")
    return loglog_slope(eps, mass)
