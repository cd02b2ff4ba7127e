"""Exterior powers of the adjoint action at S_ue places and the subspaces W^(r)."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from carpetdyn.arith import Place, q
from carpetdyn.report import rng_for
from carpetdyn.sadic.lie import (adjoint_matrix, compound, dim, ultrametric_direction_distance, w_r_subsets,
                                 wedge_subsets)


@dataclass
class ExteriorReport:
    r: int
    place: Place
    w_basis: list  # index subsets spanning W^(r) inside the wedge basis
    invariant: bool
    violating_generator: str | None
    direction_fraction: float | None = None
    n_words: int = 0
    distances: list | None = None


def _invariant_under(A: np.ndarray, r: int, w_sets: list) -> bool:
    """span{e_S : S in w_sets} is invariant iff every minor A[T, S] with T outside vanishes."""
    inside = set(w_sets)
    outside = [T for T in wedge_subsets(_d_from_m(A.shape[0]), r) if T not in inside]
    if not outside:
        return True
    block = compound(A, r, rows=outside, cols=w_sets)
    return all(v == 0 for v in block.flat)


def _d_from_m(m: int) -> int:
    d = 1
    while dim(d) < m:
        d += 1
    return d


def exterior_power_suite(walk, place: Place, r: int, v=None, m: int = 25, eta: Fraction = Fraction(1, 243),
                         n_words: int = 200, seed: int = 0, max_d: int = 2) -> ExteriorReport:
    """W^(r) at an S_ue place, its exact invariance, and a direction-convergence Monte Carlo.

    Monte Carlo (r = 1 only for a general ``v``; for r > 1 ``v`` is a wedge
    vector in the basis ordered by ``wedge_subsets``): for random words b
    of length m, the fraction with dist([Ad(hbar_1^m) v], W^(r)) < eta, where
    the distance is the ultrametric wedge-quotient metric for a coordinate
    subspace.
    """
    d = walk.d
    if d > max_d:
        raise ValueError(f"exterior suite is limited to d <= {max_d}")
    if place not in walk.partition.S_ue:
        raise ValueError("exterior suite runs at S_ue places")
    w_sets = w_r_subsets(d, r)
    ads = [adjoint_matrix(h.at(place)) for h in walk.hbar]
    bad = None
    for i, A in enumerate(ads):
        if not _invariant_under(A, r, w_sets):
            bad = f"hbar{i + 1}"
            break
    rep = ExteriorReport(r, place, w_sets, bad is None, bad)
    if v is None:
        return rep
    all_sets = wedge_subsets(d, r)
    comps = ads if r == 1 else [compound(A, r) for A in ads]
    inside = {all_sets.index(S) for S in w_sets}
    rng = rng_for(seed, 5)
    words = rng.choice(walk.ifs.k, size=(n_words, m), p=np.asarray(walk.ifs.probs))
    v = np.array([q(c) for c in v], dtype=object)
    hits, dists = 0, []
    for word in words:
        x = v
        for letter in word:
            x = comps[letter] @ x
        dist = ultrametric_direction_distance(x, inside, place)
        dists.append(dist)
        hits += dist < eta
    rep.direction_fraction = hits / n_words
    rep.n_words = n_words
    rep.distances = dists
    return rep


def basis_vector(d: int, label: tuple) -> list:
    """Coordinate vector of a basis element of the model algebra by label, e.g. ("E", 1, 0)."""
    from carpetdyn.sadic.lie import basis_labels

    out = [Fraction(0)] * dim(d)
    out[basis_labels(d).index(label)] = Fraction(1)
    return out
