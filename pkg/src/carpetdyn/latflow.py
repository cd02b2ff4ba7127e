"""Unimodular lattices Lambda_x = u(x) Z^{d+1}, diagonal flows and systoles.

Bases are stored column-wise: column j is the j-th basis vector.  The exact
variant holds Fractions (det = 1 exactly); the flow variant holds doubles.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from typing import Callable, Sequence

import numpy as np

from carpetdyn.arith import ArithError, as_fraction, qdet, to_float
from carpetdyn.report import (ExperimentReport, bernoulli_bar, blocked_map, clt_bar, config_hash,
                              emit_csv, rng_for)

LLL_DELTA = 0.99
COND_LIMIT = 1e12
RENORM_EVERY = 32
OVERFLOW_GUARD = 600.0


class LatticeError(ValueError):
    pass


class FlowOverflowError(OverflowError):
    pass


class ConditionError(LatticeError):
    pass


# data types --------------------------------------------------------------

@dataclass(frozen=True)
class UnimodularLattice:
    basis: np.ndarray
    exact: bool = False
    log_det_drift: float = 0.0

    def __post_init__(self):
        b = self.basis
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise LatticeError("basis must be square")
        if self.exact:
            if qdet(b) != 1:
                raise LatticeError("exact lattice must have determinant exactly 1")
        else:
            det = float(np.linalg.det(np.asarray(b, dtype=float)))
            if abs(det - 1) > 1e-9:
                raise LatticeError(f"determinant {det!r} is not 1 within 1e-9")

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def float_basis(self) -> np.ndarray:
        return to_float(self.basis) if self.exact else np.asarray(self.basis, dtype=float)

    def det(self):
        return qdet(self.basis) if self.exact else float(np.linalg.det(self.basis))


@dataclass(frozen=True)
class WeightVector:
    r: tuple[float, ...]

    def __post_init__(self):
        r = tuple(float(v) for v in self.r)
        if not r or any(not v > 0 for v in r) or abs(sum(r) - 1) > 1e-12:
            raise LatticeError("weights must be positive and sum to 1")
        object.__setattr__(self, "r", r)

    @property
    def d(self) -> int:
        return len(self.r)

    @classmethod
    def equal(cls, d: int) -> "WeightVector":
        return cls((1.0 / d,) * d)

    @classmethod
    def parse(cls, text: str) -> "WeightVector":
        return cls(tuple(float(Fraction(t)) for t in text.split(",")))


@dataclass(frozen=True)
class NormSpec:
    """A norm on R^n with constants c_lo |v|_2 <= |v| <= c_hi |v|_2.

    ``c_lo`` depends on the ambient dimension for the sup norm, so it is
    looked up through :meth:`lower_constant`.
    """

    kind: str = "euclidean"
    func: Callable[[np.ndarray], float] | None = None
    c_lo: float | None = None
    c_hi: float | None = None

    def __post_init__(self):
        if self.kind not in ("sup", "euclidean", "custom"):
            raise LatticeError(f"unknown norm kind {self.kind!r}")
        if self.kind == "custom":
            if self.func is None:
                raise LatticeError("custom norm needs an evaluation callback")
            rng = np.random.default_rng(12345)
            for _ in range(8):
                v = rng.normal(size=3)
                s = rng.uniform(0.1, 10)
                nv = self.func(v)
                if not nv > 0 or not math.isclose(self.func(s * v), s * nv, rel_tol=1e-9):
                    raise LatticeError("custom norm fails positivity or homogeneity spot checks")

    def __call__(self, v: np.ndarray) -> float:
        v = np.asarray(v, dtype=float)
        if self.kind == "sup":
            return float(np.max(np.abs(v)))
        if self.kind == "euclidean":
            return float(np.linalg.norm(v))
        return float(self.func(v))

    def lower_constant(self, n: int) -> float:
        if self.kind == "sup":
            return 1 / math.sqrt(n)
        if self.kind == "euclidean":
            return 1.0
        if self.c_lo is None:
            raise LatticeError("custom norm needs a user-supplied lower equivalence constant c_lo")
        return self.c_lo


SUP = NormSpec("sup")
EUCLID = NormSpec("euclidean")


def parse_norm(name: str) -> NormSpec:
    return {"sup": SUP, "euclidean": EUCLID, "euclid": EUCLID}[name]


@dataclass(frozen=True)
class DiagonalSequence:
    """n -> X^(n) with sum(X) = 0; the flow element is diag(exp(X^(n)))."""

    exponents: Callable[[float], np.ndarray]
    label: str = "custom"

    def __call__(self, n: float) -> np.ndarray:
        x = np.asarray(self.exponents(n), dtype=float)
        if abs(x.sum()) > 1e-12 * max(1.0, float(np.abs(x).max())):
            raise LatticeError(f"exponents at {n} are not trace-zero")
        return x

    @classmethod
    def weighted(cls, r: WeightVector | Sequence[float], dt: float = 1.0) -> "DiagonalSequence":
        """a_t^(r) = diag(e^{r_1 t}, ..., e^{r_d t}, e^{-t}) sampled at t = n dt."""
        w = r if isinstance(r, WeightVector) else WeightVector(tuple(r))
        vec = np.array(list(w.r) + [-1.0])
        return cls(lambda n, vec=vec, dt=dt: vec * (n * dt), label=f"weighted{list(w.r)}")

    @classmethod
    def fixed(cls, xs: Sequence[Sequence[float]]) -> "DiagonalSequence":
        table = [np.asarray(x, dtype=float) for x in xs]
        return cls(lambda n: table[int(n)], label="table")


# embedding and flow --------------------------------------------------------

def embed(x: Sequence) -> UnimodularLattice:
    """Lambda_x = u(x) Z^{d+1}, u(x) = [[Id, x], [0, 1]]."""
    d = len(x)
    try:
        xs = [as_fraction(c) for c in x]
        exact = True
    except ArithError:
        exact = False
    if exact:
        b = np.full((d + 1, d + 1), Fraction(0), dtype=object)
        for i in range(d + 1):
            b[i, i] = Fraction(1)
        for i, c in enumerate(xs):
            b[i, d] = c
        return UnimodularLattice(b, exact=True)
    xf = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xf)):
        raise LatticeError("embedding needs finite coordinates")
    b = np.eye(d + 1)
    b[:d, d] = xf
    return UnimodularLattice(b)


def _check_guard(x: np.ndarray) -> None:
    if np.any(np.abs(x) > OVERFLOW_GUARD):
        raise FlowOverflowError(f"flow exponent {float(np.abs(x).max()):.1f} exceeds the guard {OVERFLOW_GUARD}")


def apply_diagonal(lat: UnimodularLattice, x: np.ndarray) -> UnimodularLattice:
    _check_guard(x)
    b = np.exp(x)[:, None] * lat.float_basis()
    return UnimodularLattice(b, exact=False, log_det_drift=lat.log_det_drift)


def flow(lat: UnimodularLattice, a: DiagonalSequence, n: float) -> UnimodularLattice:
    """diag(exp(X^(n))) Lambda."""
    return apply_diagonal(lat, a(n))


def renormalize(basis: np.ndarray) -> tuple[np.ndarray, float]:
    det = float(np.linalg.det(basis))
    if det <= 0:
        raise LatticeError("flow basis lost orientation")
    return basis / det ** (1 / basis.shape[0]), math.log(det)


def flow_steps(lat: UnimodularLattice, a: DiagonalSequence, n_steps: int, reduce: bool = False):
    """Yield (n, lattice) for n = 0..n_steps, multiplying by diag(e^{X(n)-X(n-1)}).

    The determinant is renormalised to 1 every RENORM_EVERY steps, with the
    removed log-determinant accumulated in ``log_det_drift``.  With ``reduce``
    the basis is LLL-reduced incrementally, which keeps it well conditioned.
    """
    b = lat.float_basis().copy()
    drift = lat.log_det_drift
    prev = np.zeros(lat.dim)
    yield 0, lat
    for n in range(1, n_steps + 1):
        x = a(n)
        _check_guard(x)
        b = np.exp(x - prev)[:, None] * b
        prev = x
        if n % RENORM_EVERY == 0:
            b, ld = renormalize(b)
            drift += abs(ld)
        if reduce:
            b = lll_reduce(b)[0]
        yield n, UnimodularLattice(b, exact=False, log_det_drift=drift)


# reduction and enumeration ------------------------------------------------

def lll_reduce(basis: np.ndarray, delta: float = LLL_DELTA) -> tuple[np.ndarray, np.ndarray]:
    """LLL on the columns of ``basis``; returns (reduced, U) with reduced = basis @ U."""
    b = np.array(basis, dtype=float, copy=True)
    n = b.shape[1]
    u = np.eye(n, dtype=np.int64)

    def gso(b):
        bstar = np.zeros_like(b)
        mu = np.zeros((n, n))
        nrm = np.zeros(n)
        for i in range(n):
            v = b[:, i].copy()
            for j in range(i):
                mu[i, j] = b[:, i] @ bstar[:, j] / nrm[j]
                v -= mu[i, j] * bstar[:, j]
            bstar[:, i] = v
            nrm[i] = v @ v
        return mu, nrm

    mu, nrm = gso(b)
    k = 1
    guard = 0
    while k < n:
        guard += 1
        if guard > 100000:
            raise LatticeError("LLL did not terminate")
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                b[:, k] -= q * b[:, j]
                u[:, k] -= q * u[:, j]
                mu[k, : j + 1] -= q * np.append(mu[j, :j], 1.0)
        if nrm[k] >= (delta - mu[k, k - 1] ** 2) * nrm[k - 1]:
            k += 1
        else:
            b[:, [k - 1, k]] = b[:, [k, k - 1]]
            u[:, [k - 1, k]] = u[:, [k, k - 1]]
            mu, nrm = gso(b)
            k = max(k - 1, 1)
    return b, u


def enumerate_ball(basis: np.ndarray, radius: float) -> np.ndarray:
    """Integer coefficient vectors c != 0 with |basis @ c|_2 <= radius (Fincke-Pohst).

    Only one of each pair +-c is returned (the one whose last nonzero
    coordinate is positive).
    """
    b = np.asarray(basis, dtype=float)
    n = b.shape[1]
    gram = b.T @ b
    r = np.linalg.cholesky(gram).T  # upper triangular, gram = r^T r
    diag = np.diag(r)
    q = r / diag[:, None]
    r2 = radius * radius * (1 + 1e-12) + 1e-300
    out: list[tuple[int, ...]] = []
    c = [0] * n

    def rec(i: int, rem: float):
        centre = -sum(q[i, j] * c[j] for j in range(i + 1, n))
        half = math.sqrt(max(rem, 0.0)) / diag[i]
        lo, hi = math.ceil(centre - half - 1e-12), math.floor(centre + half + 1e-12)
        for v in range(lo, hi + 1):
            t = diag[i] * (v - centre)
            left = rem - t * t
            if left < -1e-12 * r2:
                continue
            c[i] = v
            if i == 0:
                out.append(tuple(c))
            else:
                rec(i - 1, left)
        c[i] = 0

    rec(n - 1, r2)
    res = []
    for cv in out:
        nz = [v for v in cv if v]
        if nz and nz[-1] > 0:
            res.append(cv)
    return np.array(res, dtype=np.int64).reshape(-1, n)


def condition_number(basis: np.ndarray) -> float:
    return float(np.linalg.cond(np.asarray(basis, dtype=float)))


@dataclass(frozen=True)
class ShortestVector:
    vector: np.ndarray
    length: float
    coefficients: np.ndarray


def shortest_vector(lat: UnimodularLattice | np.ndarray, norm: NormSpec = EUCLID) -> ShortestVector:
    """Exact minimiser of ``norm`` over nonzero lattice vectors.

    LLL first, then every vector in the Euclidean ball of radius
    best / c_lo is enumerated, where best is the norm of the shortest reduced
    basis vector and c_lo |v|_2 <= |v|.  No vector outside that ball can beat
    ``best``, so the minimum over the enumeration is certified.
    Accepts any full-rank basis, not only determinant one.
    """
    if isinstance(lat, UnimodularLattice):
        orig = lat.basis if lat.exact else lat.float_basis()
        fb = lat.float_basis()
    else:
        orig = np.asarray(lat)
        fb = np.asarray(lat, dtype=float)
    n = fb.shape[0]
    red, u = lll_reduce(fb)
    if condition_number(red) > COND_LIMIT:
        raise ConditionError("basis condition number exceeds 1e12 even after reduction")
    best = min(norm(red[:, j]) for j in range(n))
    coeffs = enumerate_ball(red, best / norm.lower_constant(n))
    orig_coeffs = coeffs @ u.T  # coefficient vectors in the original basis
    best_len, best_c = math.inf, None
    for c in orig_coeffs:
        v = _combine(orig, c)
        length = norm(to_float(v) if v.dtype == object else v)
        if length < best_len:
            best_len, best_c = length, c
    vec = _combine(orig, best_c)
    return ShortestVector(vec, best_len, np.asarray(best_c))


def _combine(basis: np.ndarray, c: np.ndarray) -> np.ndarray:
    if basis.dtype == object:
        return basis @ np.array([int(v) for v in c], dtype=object)
    return basis @ np.asarray(c, dtype=float)


def systole(lat, norm: NormSpec = EUCLID) -> float:
    return shortest_vector(lat, norm).length


def count_in_ball(basis: np.ndarray, radius: float) -> int:
    """#{v in L \\ {0} : |v|_2 <= radius}."""
    red, _ = lll_reduce(basis)
    return 2 * len(enumerate_ball(red, radius))


# drift ---------------------------------------------------------------------

@dataclass(frozen=True)
class DriftReport:
    drifts: bool
    trace: np.ndarray
    threshold: float


def drift_check(a: DiagonalSequence, horizon: int, d: int | None = None, threshold: float = 1.0) -> DriftReport:
    """Trace of min(X_1..X_d) for n = 0..horizon.

    Verdict: nondecreasing over the second half of the horizon and above
    ``threshold`` at n = horizon.
    """
    if horizon < 1:
        raise LatticeError("horizon must be >= 1")
    xs = [a(n) for n in range(horizon + 1)]
    d = len(xs[0]) - 1 if d is None else d
    trace = np.array([float(np.min(x[:d])) for x in xs])
    tail = trace[horizon // 2:]
    ok = bool(np.all(np.diff(tail) >= 0) and trace[-1] > threshold)
    return DriftReport(ok, trace, threshold)


# Monte Carlo over theta ------------------------------------------------------

def flowed_basis(x: np.ndarray, r: Sequence[float], t: float) -> np.ndarray:
    d = len(x)
    b = np.eye(d + 1)
    b[:d, d] = x
    expo = np.array(list(r) + [-1.0]) * t
    _check_guard(expo)
    return np.exp(expo)[:, None] * b


def _siegel_block(ifs, seed, r, t, radius, n_trunc, bi, start, stop):
    from carpetdyn.ifs import sample_block
    from carpetdyn.report import BLOCK_SIZE

    pts = sample_block(ifs, seed, bi, BLOCK_SIZE, n_trunc)[: stop - start]
    return np.array([count_in_ball(flowed_basis(p, r, t), radius) for p in pts], dtype=float)


def _systole_block(ifs, seed, r, t, n_trunc, bi, start, stop):
    from carpetdyn.ifs import sample_block
    from carpetdyn.report import BLOCK_SIZE

    pts = sample_block(ifs, seed, bi, BLOCK_SIZE, n_trunc)[: stop - start]
    return np.array([systole(flowed_basis(p, r, t)) for p in pts])


def ball_volume(n: int, radius: float) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * radius ** n


def _weights(r, d) -> tuple[float, ...]:
    if r is None:
        return WeightVector.equal(d).r
    return r.r if isinstance(r, WeightVector) else WeightVector(tuple(r)).r


def siegel_statistic(ifs, t: float, radius: float, n_samples: int, seed: int = 0,
                     r: WeightVector | Sequence[float] | None = None, n_trunc: int = 64,
                     workers: int | None = None) -> ExperimentReport:
    """Mean over x ~ theta of #(a_t Lambda_x \\ {0}) cap B(0, R).

    Under Haar measure this mean is vol(B_R) (Siegel), which is reported as
    ``extra['target']``.
    """
    w = _weights(r, ifs.d)
    start = time.perf_counter()
    fn = partial(_siegel_block, ifs, seed, w, t, radius, n_trunc)
    counts = np.concatenate(blocked_map(fn, n_samples, workers=workers)) if n_samples else np.zeros(0)
    cfg = {"op": "siegel", "ifs": ifs.to_dict(), "t": t, "R": radius, "n": n_samples, "r": list(w),
           "n_trunc": n_trunc}
    target = ball_volume(ifs.d + 1, radius)
    return ExperimentReport("siegel_statistic", float(counts.mean()) if n_samples else math.nan, clt_bar(counts),
                            n_samples, seed, config_hash(cfg),
                            {"target": target, "t": t, "R": radius, "weights": list(w)},
                            time.perf_counter() - start)


@dataclass(frozen=True)
class NondivergenceProfile:
    eps: tuple[float, ...]
    fractions: tuple[float, ...]
    bars: tuple[float, ...]
    n_samples: int
    seed: int
    systoles: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))


def nondivergence_profile(ifs, t: float, eps_ladder: Sequence[float], n_samples: int, seed: int = 0,
                          r=None, n_trunc: int = 64, workers: int | None = None) -> NondivergenceProfile:
    """P[lambda_1(a_t Lambda_x) < eps] for x ~ theta, on a common sample."""
    w = _weights(r, ifs.d)
    fn = partial(_systole_block, ifs, seed, w, t, n_trunc)
    lam = np.concatenate(blocked_map(fn, n_samples, workers=workers))
    fr = [float(np.mean(lam < e)) for e in eps_ladder]
    return NondivergenceProfile(tuple(float(e) for e in eps_ladder), tuple(fr),
                                tuple(bernoulli_bar(f, n_samples) for f in fr), n_samples, seed, lam)


def base_point_panel(d: int, n: int, seed: int = 0, spread: float = 0.5) -> list[np.ndarray]:
    """Identity plus ``n`` random det-1 matrices g = exp(small traceless)."""
    from scipy.linalg import expm

    rng = rng_for(seed, 7)
    out = [np.eye(d + 1)]
    for _ in range(n):
        m = rng.normal(scale=spread, size=(d + 1, d + 1))
        m -= np.trace(m) / (d + 1) * np.eye(d + 1)
        out.append(expm(m))
    return out


# trajectory output -----------------------------------------------------------

def trajectory_rows(x: Sequence, r, times: Sequence[float], norm: NormSpec = SUP,
                    eps: Sequence[float] = ()) -> list[list]:
    """Rows (t, lambda1_euclid, lambda1_norm, in_K_eps...) along a_t^(r) Lambda_x."""
    xf = np.array([float(as_fraction(c)) if isinstance(c, (str, Fraction)) else float(c) for c in x])
    w = _weights(r, len(xf))
    rows = []
    for t in times:
        b = lll_reduce(flowed_basis(xf, w, t))[0]
        le = systole(b, EUCLID)
        ln = le if norm.kind == "euclidean" else systole(b, norm)
        rows.append([float(t), le, ln] + [int(ln >= e) for e in eps])
    return rows


def trajectory_csv(rows, eps: Sequence[float] = (), path=None, meta=None) -> str:
    header = ["n_or_t", "lambda1_euclid", "lambda1_norm"] + [f"in_Keps_{e:g}" for e in eps]
    return emit_csv(header, rows, path, meta)
