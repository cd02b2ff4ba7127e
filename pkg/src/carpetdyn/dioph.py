"""Weighted badly approximable / Dirichlet improvable classification.

Every verdict is "up to horizon": the horizon used is stored on the report.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from carpetdyn.arith import ArithError, as_fraction
from carpetdyn.latflow import (EUCLID, SUP, DiagonalSequence, NormSpec, WeightVector, flowed_basis,
                               lll_reduce, shortest_vector)
from carpetdyn.report import bernoulli_bar, rng_for

DEFAULT_DT = 0.02


class DiophError(ValueError):
    pass


# quadratic irrationals ---------------------------------------------------------

@dataclass(frozen=True)
class QuadraticIrrational:
    """(a + b sqrt(D)) / c with D > 0 not a perfect square and b, c != 0."""

    a: int
    b: int
    D: int
    c: int

    def __post_init__(self):
        if self.D <= 0 or math.isqrt(self.D) ** 2 == self.D:
            raise DiophError("D must be a positive non-square")
        if self.b == 0 or self.c == 0:
            raise DiophError("b and c must be nonzero")

    def __float__(self) -> float:
        return (self.a + self.b * math.sqrt(self.D)) / self.c

    def __str__(self) -> str:
        return f"({self.a}{self.b:+d}*sqrt({self.D}))/{self.c}"

    @classmethod
    def golden_conjugate(cls) -> "QuadraticIrrational":
        """(sqrt 5 - 1) / 2 = [0; 1, 1, 1, ...]."""
        return cls(-1, 1, 5, 2)

    @classmethod
    def parse(cls, text: str) -> "QuadraticIrrational":
        """``a,b,D,c`` as four integers."""
        a, b, d, c = (int(t) for t in text.split(","))
        return cls(a, b, d, c)

    def continued_fraction(self, n_terms: int) -> list[int]:
        """First partial quotients, exact integer arithmetic."""
        dd = self.b * self.b * self.D
        p, q = self.a, self.c
        if self.b < 0:
            p, q = -p, -q
        # normalise so that q divides dd - p^2
        if (dd - p * p) % q:
            m = abs(q)
            p, q, dd = p * m, q * m, dd * m * m
        s = math.isqrt(dd)
        out = []
        for _ in range(n_terms):
            a = (p + s) // q if q > 0 else _floor_neg(p, s, q)
            out.append(a)
            p = a * q - p
            q = (dd - p * p) // q
        return out


def _floor_neg(p: int, s: int, q: int) -> int:
    """floor((p + sqrt(D)) / q) for q < 0, where s = isqrt(D) and sqrt(D) is irrational."""
    # (p + sqrt D)/q = -(p + sqrt D)/|q|; floor(-y) = -floor(y) - 1 for irrational y
    return -((p + s) // (-q)) - 1


def convergents(cf: Sequence[int]) -> list[Fraction]:
    h0, h1, k0, k1 = 1, cf[0], 0, 1
    out = [Fraction(h1, k1)]
    for a in cf[1:]:
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        out.append(Fraction(h1, k1))
    return out


def continued_fraction_rational(x) -> list[int]:
    x = as_fraction(x)
    out = []
    while True:
        a = math.floor(x)
        out.append(a)
        x -= a
        if x == 0:
            return out
        x = 1 / x


def _coerce_point(x) -> tuple[list, bool]:
    """(coordinates, exact) where exact coordinates are Fractions."""
    if isinstance(x, (QuadraticIrrational, Fraction, int, float, str, np.floating)):
        x = [x]
    coords, exact = [], True
    for c in x:
        if isinstance(c, QuadraticIrrational):
            coords.append(float(c))
            exact = False
            continue
        try:
            coords.append(as_fraction(c))
        except ArithError:
            coords.append(float(c))
            exact = False
    if not exact:
        coords = [float(c) for c in coords]
    return coords, exact


# badly approximable ---------------------------------------------------------------

@dataclass
class BAReport:
    x: list
    r: tuple[float, ...]
    horizon_T: int
    margin_trace: np.ndarray
    min_margin: float

    def running_min(self) -> np.ndarray:
        return np.minimum.accumulate(self.margin_trace[:, 1])

    def is_ba(self, c: float) -> bool:
        return self.min_margin >= c


def _distances(coords, exact: bool, qs: np.ndarray) -> np.ndarray:
    """|Q x_i - round(Q x_i)| for each Q, shape (len(qs), d); exact zeros are kept exact."""
    d = len(coords)
    out = np.empty((len(qs), d))
    for i, c in enumerate(coords):
        if exact:
            num, den = c.numerator, c.denominator
            rem = (qs * (num % den)) % den  # Q x mod 1 times den, exact in int64 for small data
            rem = np.minimum(rem, den - rem)
            out[:, i] = rem / den
        else:
            v = qs * c
            out[:, i] = np.abs(v - np.round(v))
    return out


def margins(coords, exact: bool, r: Sequence[float], T: int) -> np.ndarray:
    qs = np.arange(1, T + 1, dtype=np.int64)
    dist = _distances(coords, exact, qs)
    inv = 1 / np.asarray(r, dtype=float)
    return qs * np.max(dist ** inv, axis=1)


def ba_test(x, r: WeightVector | Sequence[float] | None = None, T: int = 10_000) -> BAReport:
    """Scan Q = 1..T of Q * max_i |Q x_i - P_i|^{1/r_i} with P_i the nearest integer."""
    if T < 1:
        raise DiophError("horizon T must be >= 1")
    coords, exact = _coerce_point(x)
    w = _weights(r, len(coords))
    m = margins(coords, exact, w, T)
    trace = np.column_stack([np.arange(1, T + 1), m])
    return BAReport(coords, w, T, trace, float(m.min()))


def _weights(r, d) -> tuple[float, ...]:
    if r is None:
        return WeightVector.equal(d).r
    return r.r if isinstance(r, WeightVector) else WeightVector(tuple(r)).r


# critical radius -------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalRadius:
    norm: NormSpec
    epsilon_norm: float
    provenance: str


def critical_radius(norm: NormSpec, d: int, user_value: float | None = None) -> CriticalRadius:
    """Largest eps for which some unimodular lattice misses the punctured eps-ball.

    Sup norm: 1 in every dimension (Minkowski plus Z^{d+1}).  Euclidean in the
    plane: (4/3)^{1/4}, attained by the hexagonal lattice.
    """
    if norm.kind == "sup":
        return CriticalRadius(norm, 1.0, "exact")
    if norm.kind == "euclidean" and d == 1:
        return CriticalRadius(norm, (4 / 3) ** 0.25, "exact")
    if user_value is None:
        raise DiophError("critical radius for this norm/dimension must be supplied by the user")
    if not user_value > 0:
        raise DiophError("critical radius must be positive")
    return CriticalRadius(norm, float(user_value), "user-supplied")


def hexagonal_lattice() -> np.ndarray:
    s = (4 / 3) ** 0.25
    return s * np.array([[1.0, 0.5], [0.0, math.sqrt(3) / 2]])


# Dirichlet improvability -------------------------------------------------------------

@dataclass
class DirichletReport:
    x: list
    r: tuple[float, ...]
    norm: NormSpec
    eps: float
    t0: float
    T: float
    dt: float
    always_below: bool
    systole_trace: np.ndarray
    arithmetic_always_below: bool | None = None
    agreement: bool | None = None
    extra: dict = field(default_factory=dict)


def systole_trace(coords, r, times: Sequence[float], norm: NormSpec = SUP) -> np.ndarray:
    """lambda_1(a_t Lambda_x) on an increasing time grid, with incremental reduction."""
    xf = np.array([float(c) for c in coords])
    times = list(times)
    if not times:
        return np.zeros((0, 2))
    b = lll_reduce(flowed_basis(xf, r, times[0]))[0]
    expo = np.array(list(r) + [-1.0])
    out = []
    prev = times[0]
    for t in times:
        b = np.exp(expo * (t - prev))[:, None] * b
        b = lll_reduce(b)[0]
        prev = t
        out.append((t, shortest_vector(b, norm).length))
    return np.array(out)


def arithmetic_sup_systole(coords, exact: bool, r, times: Sequence[float], q_max: int) -> np.ndarray:
    """lambda_1 in the sup norm computed directly from the Diophantine data.

    Nonzero vectors are (e^{r_i t}(Q x_i - P_i), e^{-t} Q).  For Q = 0 the
    best vector has sup norm e^{min r_i t} >= 1, otherwise P_i is the nearest
    integer and only 1 <= Q <= q_max matter as long as e^{-t} q_max exceeds
    the answer.
    """
    qs = np.arange(1, q_max + 1, dtype=np.int64)
    dist = _distances(coords, exact, qs)
    r = np.asarray(r)
    out = []
    for t in times:
        cand = np.maximum(np.max(dist * np.exp(r * t), axis=1), qs * math.exp(-t))
        best = min(float(cand.min()), math.exp(float(r.min()) * t))
        out.append(best)
    return np.array(out)


def _grid(t0: float, T: float, dt: float) -> np.ndarray:
    n = int(math.floor((T - t0) / dt + 1e-9))
    return t0 + dt * np.arange(n + 1)


def dirichlet_test(x, r=None, norm: NormSpec = SUP, eps: float = 0.5, t0: float = 0.0, T: float = 10.0,
                   dt: float = DEFAULT_DT, refine: int = 4) -> DirichletReport:
    """Does lambda_1(a_t Lambda_x) stay <= eps for every grid time in [t0, T]?

    Where the systole crosses eps between neighbouring grid points the step is
    bisected ``refine`` times and the extra samples join the trace.  For the
    sup norm the arithmetic formulation is evaluated independently on the same
    times and its verdict is reported next to the dynamical one.
    """
    crit = critical_radius(norm, len(_coerce_point(x)[0]))
    if eps >= crit.epsilon_norm:
        raise DiophError(f"eps={eps} is not below the critical radius {crit.epsilon_norm}")
    if dt > 0.1:
        raise DiophError("grid resolution dt must be <= 0.1")
    coords, exact = _coerce_point(x)
    w = _weights(r, len(coords))
    grid = _grid(t0, T, dt)
    tr = systole_trace(coords, w, grid, norm)
    extra_t = []
    for (ta, la), (tb, lb) in zip(tr[:-1], tr[1:]):
        if (la <= eps) != (lb <= eps):
            extra_t.extend(ta + (tb - ta) * np.arange(1, 2 ** refine) / 2 ** refine)
    if extra_t:
        more = np.array([(t, _systole_at(coords, w, t, norm)) for t in extra_t])
        tr = np.vstack([tr, more])
        tr = tr[np.argsort(tr[:, 0], kind="stable")]
    below = bool(np.all(tr[:, 1] <= eps))
    rep = DirichletReport(coords, w, norm, eps, t0, T, dt, below, tr)
    if norm.kind == "sup":
        q_max = int(math.ceil(eps * math.exp(T))) + 1
        ar = arithmetic_sup_systole(coords, exact, w, tr[:, 0], q_max)
        rep.arithmetic_always_below = bool(np.all(ar <= eps))
        rep.agreement = rep.arithmetic_always_below == below
        # Q <= eps e^T only certifies values up to eps, so compare below the threshold
        rep.extra["max_abs_systole_gap"] = float(np.max(np.abs(np.minimum(ar, eps) - np.minimum(tr[:, 1], eps))))
    return rep


def _systole_at(coords, r, t, norm) -> float:
    return systole_trace(coords, r, [t], norm)[0, 1]


def dirichlet_along(x, a: DiagonalSequence, ns: Sequence[int], norm: NormSpec = SUP, eps: float = 0.5) -> dict:
    """Dirichlet-type check along an arbitrary diagonal sequence a_n."""
    coords, _ = _coerce_point(x)
    xf = np.array([float(c) for c in coords])
    lam = []
    for n in ns:
        b = np.exp(a(n))[:, None] * flowed_basis(xf, [1.0 / len(xf)] * len(xf), 0.0)
        lam.append(shortest_vector(b, norm).length)
    lam = np.array(lam)
    return {"n": list(ns), "systole": lam, "always_below": bool(np.all(lam <= eps))}


# fractal experiment -------------------------------------------------------------

@dataclass
class DecayTable:
    T_ladder: tuple[int, ...]
    thresholds: tuple[float, ...]
    ba_fraction: np.ndarray  # (len(T), len(thresholds))
    ba_bar: np.ndarray
    di_fraction: np.ndarray  # (len(T),)
    di_bar: np.ndarray
    eps: float
    n_samples: int
    seed: int

    def rows(self) -> list[list]:
        out = []
        for i, T in enumerate(self.T_ladder):
            for j, c in enumerate(self.thresholds):
                out.append(["ba_survival", T, c, float(self.ba_fraction[i, j]), float(self.ba_bar[i, j])])
            out.append(["dirichlet_up_to_horizon", T, self.eps, float(self.di_fraction[i]), float(self.di_bar[i])])
        return out


def measure_zero_experiment(ifs, r=None, norm: NormSpec = SUP, thresholds: Sequence[float] = (0.01,),
                            T_ladder: Sequence[int] = (100, 1000, 10_000), n_samples: int = 1000, seed: int = 0,
                            eps: float | None = None, t0: float | None = None, dt: float = DEFAULT_DT,
                            n_trunc: int = 64) -> DecayTable:
    """Survival fractions of BA margins and of Dirichlet improvability for x ~ theta.

    Both statistics are evaluated on one sample set and nested in T (the
    margin minimum over Q <= T and the Dirichlet window [t0, log T] only
    grow), so the tabulated fractions are nonincreasing by construction.
    The Dirichlet part uses the sup-norm arithmetic path with
    eps = 0.9 * critical radius unless given; t0 defaults to log of the
    smallest horizon.
    """
    from carpetdyn.ifs import sample_theta

    if norm.kind != "sup":
        raise DiophError("the fractal experiment uses the sup-norm arithmetic path")
    w = _weights(r, ifs.d)
    T_ladder = tuple(sorted(int(T) for T in T_ladder))
    eps = 0.9 * critical_radius(norm, ifs.d).epsilon_norm if eps is None else eps
    t0 = math.log(T_ladder[0]) / 2 if t0 is None else t0
    pts = sample_theta(ifs, n_samples, n_trunc, seed).points
    t_max = math.log(T_ladder[-1])
    grid = _grid(t0, t_max, dt)
    q_max = int(math.ceil(eps * math.exp(t_max))) + 1
    ba = np.zeros((len(T_ladder), len(thresholds)))
    di = np.zeros(len(T_ladder))
    for x in pts:
        coords = [float(c) for c in x]
        m = np.minimum.accumulate(margins(coords, False, w, T_ladder[-1]))
        lam = arithmetic_sup_systole(coords, False, w, grid, q_max)
        ok = np.cumprod(lam <= eps).astype(bool)
        for i, T in enumerate(T_ladder):
            ba[i] += [m[T - 1] >= c for c in thresholds]
            idx = np.searchsorted(grid, math.log(T), side="right") - 1
            di[i] += bool(ok[idx]) if idx >= 0 else True
    ba /= n_samples
    di /= n_samples
    bar = np.vectorize(lambda f: bernoulli_bar(f, n_samples))
    return DecayTable(T_ladder, tuple(thresholds), ba, bar(ba), di, bar(di), eps, n_samples, seed)


# Dani panel ------------------------------------------------------------------------

@dataclass
class PanelEntry:
    label: str
    min_margin: float
    inf_systole: float
    ba_arithmetic: bool
    ba_dynamic: bool

    @property
    def agree(self) -> bool:
        return self.ba_arithmetic == self.ba_dynamic


def dani_panel(points: Sequence, r=None, T: int = 10_000, c: float = 0.2, c_dyn: float = 0.2,
               dt: float = DEFAULT_DT, norm: NormSpec = EUCLID) -> list[PanelEntry]:
    """Classify each point as BA-up-to-horizon arithmetically and dynamically.

    Arithmetic: min over Q <= T of the margin is >= c.  Dynamic: the systole
    of a_t Lambda_x stays >= c_dyn for t in [0, log T].
    """
    out = []
    for x in points:
        coords, exact = _coerce_point(x)
        w = _weights(r, len(coords))
        rep = ba_test(x, w, T)
        tr = systole_trace(coords, w, _grid(0.0, math.log(T), dt), norm)
        inf_sys = float(tr[:, 1].min())
        out.append(PanelEntry(str(x), rep.min_margin, inf_sys, rep.min_margin >= c, inf_sys >= c_dyn))
    return out


def random_panel(n: int, seed: int = 0, max_den: int = 60) -> list:
    """Mixed panel of random rationals and random quadratic irrationals in (0, 1)."""
    rng = rng_for(seed, 11)
    out = []
    while len(out) < n:
        if rng.random() < 0.5:
            q = int(rng.integers(2, max_den))
            out.append(Fraction(int(rng.integers(1, q)), q))
        else:
            dd = int(rng.integers(2, 50))
            if math.isqrt(dd) ** 2 == dd:
                continue
            qi = QuadraticIrrational(int(rng.integers(-7, 8)), 1, dd, int(rng.integers(2, 9)))
            v = float(qi) % 1
            qi = QuadraticIrrational(qi.a - math.floor(float(qi)) * qi.c, qi.b, qi.D, qi.c)
            if 0 < v < 1:
                out.append(qi)
    return out
