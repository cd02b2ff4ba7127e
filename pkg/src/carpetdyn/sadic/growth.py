"""Norm growth of hbar_1^n = hbar_{i_n} ... hbar_{i_1} at each place."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from carpetdyn.arith import abs_at_place, qidentity
from carpetdyn.report import rng_for
from carpetdyn.sadic.lie import AdOperator, adjoint_matrix, log_op_norm

MAX_WORD_LENGTH = 60


@dataclass
class GrowthRow:
    place: str
    n: int
    word_index: int
    log_norm: float
    target: float

    @property
    def gap(self) -> float:
        return self.log_norm - self.target


@dataclass
class GrowthAudit:
    rows: list
    constants: dict  # place -> empirical C with |log norm - target| <= log C

    def csv_rows(self) -> list[list]:
        out = []
        for r in self.rows:
            logc = math.log(self.constants[r.place])
            out.append([r.place, r.n, r.word_index, r.log_norm, r.target - logc, r.target + logc])
        return out


def growth_rate(place, rho) -> float:
    """|log |rho|_sigma|: the expected exponential rate at S_ue and S_dt places."""
    return abs(math.log(abs_at_place(rho, place).value))


def sample_words(k: int, probs: Sequence[float], n_words: int, length: int, seed: int) -> np.ndarray:
    rng = rng_for(seed, 3)
    return rng.choice(k, size=(n_words, length), p=np.asarray(probs)) + 1


def growth_audit(walk, word_lengths: Sequence[int], n_words: int = 20, seed: int = 0,
                 places=None, max_length: int = MAX_WORD_LENGTH) -> GrowthAudit:
    """log ||Ad(hbar_1^n)||_sigma against n |log |rho|_sigma| for random words.

    Trivial places get target 0 (hbar is the identity there).  The reported
    constant for a place is exp(max |log norm - target|) over all rows.
    """
    lengths = sorted(set(int(n) for n in word_lengths))
    if lengths[-1] > max_length:
        raise ValueError(f"word length {lengths[-1]} exceeds the exact-product cap {max_length}")
    P = walk.partition
    places = list(P.S) if places is None else list(places)
    words = sample_words(walk.ifs.k, walk.ifs.probs, n_words, lengths[-1], seed)
    rows = []
    for p in places:
        kind = P.kind(p)
        rate = 0.0 if kind == "tr" else growth_rate(p, walk.ifs.rho)
        gens = [h.at(p) for h in walk.hbar]
        for w_idx, word in enumerate(words):
            m = qidentity(walk.d + 1)
            want = set(lengths)
            for n, letter in enumerate(word, start=1):
                m = gens[letter - 1] @ m
                if n in want:
                    A = AdOperator(p, adjoint_matrix(m), walk.d)
                    rows.append(GrowthRow(str(p), n, w_idx, log_op_norm(A), n * rate))
    consts = {}
    for p in places:
        gaps = [abs(r.gap) for r in rows if r.place == str(p)]
        consts[str(p)] = math.exp(max(gaps)) if gaps else 1.0
    return GrowthAudit(rows, consts)
