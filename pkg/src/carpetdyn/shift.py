"""Bernoulli shift, complete prefix sets and prefix ergodic averages.

Letters are 1..k.  Measures of cylinders are exact Fractions when the
probability vector is rational.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from fractions import Fraction
from itertools import product
from typing import Callable, Sequence

import numpy as np

from carpetdyn.report import clt_bar, rng_for

Word = tuple[int, ...]
SIZE_GUARD = 10**7
EXHAUSTIVE_CHECK = 10**6


class PrefixSetError(ValueError):
    pass


@dataclass(frozen=True)
class ShiftSpace:
    k: int
    p: tuple

    def __post_init__(self):
        if self.k < 2 or len(self.p) != self.k:
            raise ValueError("need k >= 2 letters and k probabilities")
        exact = all(isinstance(v, (Fraction, int)) for v in self.p)
        p = tuple(Fraction(v) for v in self.p) if exact else tuple(float(v) for v in self.p)
        if any(not v > 0 for v in p):
            raise ValueError("probabilities must be positive")
        if (exact and sum(p) != 1) or (not exact and abs(math.fsum(p) - 1) > 1e-12):
            raise ValueError("probabilities must sum to 1")
        object.__setattr__(self, "p", p)

    @property
    def exact(self) -> bool:
        return isinstance(self.p[0], Fraction)

    @classmethod
    def uniform(cls, k: int) -> "ShiftSpace":
        return cls(k, tuple(Fraction(1, k) for _ in range(k)))

    @classmethod
    def parse(cls, k: int, text: str) -> "ShiftSpace":
        parts = text.split(",")
        try:
            return cls(k, tuple(Fraction(t) for t in parts))
        except ValueError:
            return cls(k, tuple(float(t) for t in parts))

    def cylinder(self, word: Sequence[int]):
        """beta([a_1 ... a_n]) = prod p_{a_i}."""
        if self.exact:
            out = Fraction(1)
            for a in word:
                out *= self.p[a - 1]
            return out
        return float(np.prod(np.array([self.p[a - 1] for a in word], dtype=np.longdouble)))

    def sample(self, rng: np.random.Generator, n: int, length: int) -> np.ndarray:
        return rng.choice(self.k, size=(n, length), p=np.array([float(v) for v in self.p])) + 1


@dataclass(frozen=True)
class CompletePrefixSet:
    """Finite set of words whose cylinders partition the shift space."""

    words: tuple[Word, ...]
    k: int

    def __post_init__(self):
        words = tuple(sorted(set(tuple(int(a) for a in w) for w in self.words)))
        if not words or any(len(w) == 0 for w in words):
            raise PrefixSetError("a complete prefix set needs nonempty words")
        if any(not 1 <= a <= self.k for w in words for a in w):
            raise PrefixSetError("letters out of range")
        object.__setattr__(self, "words", words)
        bad = _prefix_violation(words)
        if bad:
            raise PrefixSetError(f"{bad[0]} is a prefix of {bad[1]}")
        kraft = sum(Fraction(1, self.k ** len(w)) for w in words)
        if kraft != 1:
            raise PrefixSetError(f"cylinders do not cover the shift space (Kraft sum {kraft})")
        if self.k ** self.max_length <= EXHAUSTIVE_CHECK:
            S = set(words)
            for long in product(range(1, self.k + 1), repeat=self.max_length):
                hits = sum(long[:n] in S for n in range(1, self.max_length + 1))
                if hits != 1:
                    raise PrefixSetError(f"{long} has {hits} prefixes in the set")

    @property
    def min_length(self) -> int:
        return min(len(w) for w in self.words)

    @property
    def max_length(self) -> int:
        return max(len(w) for w in self.words)

    def __len__(self) -> int:
        return len(self.words)


def _prefix_violation(words: Sequence[Word]):
    # after lexicographic sorting a prefix sits right before some word it prefixes
    for a, b in zip(words, words[1:]):
        if b[: len(a)] == a:
            return a, b
    return None


def make_prefix_sets(kind: str, k: int, n: int | None = None, s: int | None = None,
                     L: int | None = None) -> CompletePrefixSet:
    """``uniform``: all words of length n.  ``first-hit``: words ending at the
    first occurrence of s, plus the s-free words of length L."""
    if kind == "uniform":
        if not n or n < 1:
            raise PrefixSetError("uniform prefix sets need n >= 1")
        if k ** n > SIZE_GUARD:
            raise PrefixSetError(f"k^n = {k ** n} exceeds the size guard {SIZE_GUARD}")
        return CompletePrefixSet(tuple(product(range(1, k + 1), repeat=n)), k)
    if kind == "first-hit":
        if not L or L < 1 or s is None or not 1 <= s <= k:
            raise PrefixSetError("first-hit prefix sets need L >= 1 and a letter s")
        if (k - 1) ** L * L > SIZE_GUARD:
            raise PrefixSetError("first-hit set exceeds the size guard")
        others = [a for a in range(1, k + 1) if a != s]
        words = []
        for j in range(L):
            words += [w + (s,) for w in product(others, repeat=j)]
        words += list(product(others, repeat=L))
        return CompletePrefixSet(tuple(words), k)
    raise PrefixSetError(f"unknown prefix set kind {kind!r}")


# word functionals ------------------------------------------------------------------

@dataclass(frozen=True)
class WordFunctional:
    """A function of the first ``depth`` letters of an infinite word."""

    fn: Callable[[Word], object]
    depth: int
    sup: float
    label: str = "f"
    _memo: dict = field(default_factory=dict, compare=False, repr=False)

    def __call__(self, word: Sequence[int]):
        if len(word) < self.depth:
            raise ValueError(f"functional of depth {self.depth} evaluated on {len(word)} letters")
        key = tuple(word[: self.depth])
        try:
            return self._memo[key]
        except KeyError:
            val = self._memo[key] = self.fn(key)
            return val


def constant(c=Fraction(1)) -> WordFunctional:
    return WordFunctional(lambda w: c, 0, abs(float(c)), f"const({c})")


def cylinder_indicator(c: Sequence[int]) -> WordFunctional:
    c = tuple(c)
    return WordFunctional(lambda w: Fraction(int(w == c)), len(c), 1.0, f"1[{''.join(map(str, c))}]")


def weighted_hits(depth: int, letter: int = 1) -> WordFunctional:
    """f(b) = sum_{i <= depth} 2^{-i} 1{b_i = letter}; Lipschitz for the 2-adic word metric."""
    weights = [Fraction(1, 2 ** i) for i in range(1, depth + 1)]
    return WordFunctional(lambda w: sum((wt for wt, a in zip(weights, w) if a == letter), Fraction(0)), depth,
                          1.0, f"hits{depth}")


def shifted(g: WordFunctional, drop: int) -> WordFunctional:
    """b -> g(sigma^drop b)."""
    return WordFunctional(lambda w: g(w[drop:]), g.depth + drop, g.sup, f"{g.label}o shift^{drop}")


def exact_mean(f: WordFunctional, space: ShiftSpace):
    """Integral of f over beta by enumerating all words of length f.depth."""
    if space.k ** f.depth > SIZE_GUARD:
        raise ValueError("exact mean enumeration exceeds the size guard")
    if f.depth == 0:
        return f(())
    vals = [f(w) * space.cylinder(w) for w in product(range(1, space.k + 1), repeat=f.depth)]
    return sum(vals, Fraction(0)) if space.exact else math.fsum(float(v) for v in vals)


@dataclass(frozen=True)
class PrefixAverage:
    value: object
    prefix_set: CompletePrefixSet
    label: str

    def __float__(self) -> float:
        return float(self.value)


@lru_cache(maxsize=64)
def _cylinder_weights(P: CompletePrefixSet, space: ShiftSpace) -> tuple:
    return tuple(space.cylinder(a) for a in P.words)


def prefix_average(f: WordFunctional, P: CompletePrefixSet, space: ShiftSpace, tail: Sequence[int]) -> PrefixAverage:
    """sum_{a in P} f(ab) beta([a])."""
    tail = tuple(int(t) for t in tail)
    if P.min_length + len(tail) < f.depth:
        raise ValueError("tail too short for the functional's depth")
    terms = [f(a + tail) * w for a, w in zip(P.words, _cylinder_weights(P, space))]
    exact = space.exact and all(isinstance(t, (Fraction, int)) for t in terms)
    value = sum(terms, Fraction(0)) if exact else math.fsum(float(t) for t in terms)
    if abs(float(value)) > f.sup * (1 + 1e-12):
        raise AssertionError("prefix average exceeds sup|f|")
    return PrefixAverage(value, P, f.label)


@dataclass
class ConvergenceTable:
    rows: list  # (n, max_dev, ref_value, clt_bar)
    reference: float
    reference_bar: float
    exact_reference: object | None


def ergodic_convergence_test(f: WordFunctional, prefix_sets: Sequence[CompletePrefixSet], space: ShiftSpace,
                             n_tails: int = 100, seed: int = 0, n_ref: int = 100_000) -> ConvergenceTable:
    """max over random tails b of |A_{P_n} f(b) - int f dbeta_hat| for each prefix set.

    The reference integral is a Monte Carlo mean over ``n_ref`` words with its
    CLT bar; when the probabilities are rational the exact integral is also
    reported for comparison.
    """
    mins = [P.min_length for P in prefix_sets]
    if any(b <= a for a, b in zip(mins, mins[1:])):
        raise ValueError("minimum prefix lengths must strictly increase")
    rng = rng_for(seed, 13)
    ref_words = space.sample(rng, n_ref, max(f.depth, 1))
    ref_vals = np.array([float(f(tuple(w))) for w in ref_words])
    ref, bar = float(ref_vals.mean()), clt_bar(ref_vals)
    tails = space.sample(rng_for(seed, 14), n_tails, max(f.depth, 1))
    rows = []
    for P in prefix_sets:
        devs = [abs(float(prefix_average(f, P, space, tuple(b)).value) - ref) for b in tails]
        rows.append([P.min_length, max(devs), ref, bar])
    exact = None
    if space.k ** f.depth <= SIZE_GUARD:
        exact = exact_mean(f, space)
    return ConvergenceTable(rows, ref, bar, exact)


def cylinder_exactness(c: Sequence[int], P: CompletePrefixSet, space: ShiftSpace, tails: Sequence[Sequence[int]]) -> bool:
    """The prefix average of 1_[c] equals beta([c]) exactly for every tail."""
    f = cylinder_indicator(c)
    target = space.cylinder(c)
    return all(prefix_average(f, P, space, t).value == target for t in tails)

