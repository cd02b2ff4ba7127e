"""The model Lie algebra sl_{d+1} over Q, the adjoint action and the named subalgebras.

Basis order: off-diagonal E_ab (row-major, a != b), then H_j = E_jj - E_{j+1,j+1}.
Indices are 0-based, so the last row/column is index d.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from gmpy2 import mpq

from carpetdyn.arith import (Place, PlaceValue, abs_at_place, nullspace, qidentity, qinverse, qzeros, rank,
                             row_space, to_float)


class CertificateError(AssertionError):
    def __init__(self, message: str, generator: str = "", place: Place | None = None):
        super().__init__(message)
        self.generator = generator
        self.place = place


@lru_cache(maxsize=None)
def basis_labels(d: int) -> tuple:
    n = d + 1
    off = tuple(("E", a, b) for a in range(n) for b in range(n) if a != b)
    return off + tuple(("H", j, j + 1) for j in range(d))


def dim(d: int) -> int:
    return (d + 1) ** 2 - 1


def basis_matrix(d: int, k: int) -> np.ndarray:
    kind, a, b = basis_labels(d)[k]
    m = qzeros((d + 1, d + 1))
    if kind == "E":
        m[a, b] = mpq(1)
    else:
        m[a, a], m[b, b] = mpq(1), mpq(-1)
    return m


def coords(X: np.ndarray) -> np.ndarray:
    """Coordinates of a traceless matrix; diagonal part uses c_j = x_0 + ... + x_j."""
    n = X.shape[0]
    off = [X[a, b] for a in range(n) for b in range(n) if a != b]
    run, diag = mpq(0), []
    for j in range(n - 1):
        run += X[j, j]
        diag.append(run)
    if run + X[n - 1, n - 1] != 0:
        raise ValueError("matrix is not traceless")
    return np.array(off + diag, dtype=object)


def from_coords(v: Sequence, d: int) -> np.ndarray:
    out = qzeros((d + 1, d + 1))
    for k, c in enumerate(v):
        if c:
            out = out + c * basis_matrix(d, k)
    return out


def bracket(X, Y):
    return X @ Y - Y @ X


@dataclass(frozen=True)
class AdOperator:
    place: Place | None
    matrix: np.ndarray
    d: int

    def __matmul__(self, other: "AdOperator") -> "AdOperator":
        return AdOperator(self.place, self.matrix @ other.matrix, self.d)

    def apply(self, v):
        return self.matrix @ np.asarray(v, dtype=object)


def adjoint_matrix(g: np.ndarray) -> np.ndarray:
    """Columns are coords(g B_k g^-1); g E_ab g^-1 is the outer product of column a and row b."""
    d = g.shape[0] - 1
    gi = qinverse(g)
    cols = []
    for kind, a, b in basis_labels(d):
        if kind == "E":
            img = np.multiply.outer(g[:, a], gi[b, :])
        else:
            img = np.multiply.outer(g[:, a], gi[a, :]) - np.multiply.outer(g[:, b], gi[b, :])
        cols.append(coords(img))
    return np.array(cols, dtype=object).T


@lru_cache(maxsize=None)
def structure_constants(d: int) -> tuple:
    """coords([B_a, B_b]) for a < b, as sparse ((a, b), ((k, c), ...)) entries."""
    m = dim(d)
    out = []
    for a in range(m):
        for b in range(a + 1, m):
            c = coords(bracket(basis_matrix(d, a), basis_matrix(d, b)))
            out.append(((a, b), tuple((k, v) for k, v in enumerate(c) if v != 0)))
    return tuple(out)


def check_bracket(A: np.ndarray, d: int) -> bool:
    """A([B_a, B_b]) = [A B_a, A B_b] on all basis pairs."""
    imgs = [from_coords(A[:, k], d) for k in range(dim(d))]
    for (a, b), terms in structure_constants(d):
        lhs = sum((c * A[:, k] for k, c in terms), np.zeros(dim(d), dtype=object) * mpq(0))
        if not np.array_equal(lhs, coords(bracket(imgs[a], imgs[b]))):
            return False
    return True


def adjoint(g, place: Place | None = None, check: bool = True) -> AdOperator:
    """Ad of a WalkElement at ``place`` (or of a plain matrix)."""
    mat = g.at(place) if hasattr(g, "at") else g
    d = mat.shape[0] - 1
    A = adjoint_matrix(mat)
    if check and not check_bracket(A, d):
        raise CertificateError("adjoint matrix does not preserve brackets", getattr(g, "label", ""), place)
    return AdOperator(place, A, d)


def op_norm(A: AdOperator, place: Place | None = None):
    """Finite place: max entry absolute value (exact PlaceValue). Infinity: spectral norm."""
    place = A.place if place is None else place
    if place is None or place.is_infinite:
        return float(np.linalg.norm(to_float(A.matrix), 2))
    return PlaceValue(place, max(abs_at_place(v, place).value for v in A.matrix.flat))


def log_op_norm(A: AdOperator, place: Place | None = None) -> float:
    v = op_norm(A, place)
    return v.log() if isinstance(v, PlaceValue) else math.log(v)


# subspaces ---------------------------------------------------------------------

def coordinate_subspace(indices: Sequence[int], d: int) -> np.ndarray:
    out = qzeros((len(indices), dim(d)))
    for r, k in enumerate(indices):
        out[r, k] = mpq(1)
    return out


def _idx(d: int, pred) -> list[int]:
    return [k for k, lab in enumerate(basis_labels(d)) if pred(lab)]


def idx_u(d):
    return _idx(d, lambda l: l[0] == "E" and l[2] == d)


def idx_u_minus(d):
    return _idx(d, lambda l: l[0] == "E" and l[1] == d)


def idx_p(d):
    return _idx(d, lambda l: not (l[0] == "E" and l[1] == d))


def idx_block(d):
    return _idx(d, lambda l: l[0] == "H" or (l[1] != d and l[2] != d))


def idx_all(d):
    return list(range(dim(d)))


def same_span(A: np.ndarray, B: np.ndarray) -> bool:
    ra, rb = _r(A), _r(B)
    if ra != rb:
        return False
    return ra == 0 or _r(np.vstack([A, B])) == ra


def _r(A):
    return rank(A) if A.shape[0] else 0


def contains(big: np.ndarray, small: np.ndarray) -> bool:
    if small.shape[0] == 0:
        return True
    if big.shape[0] == 0:
        return _r(small) == 0
    return _r(np.vstack([big, small])) == _r(big)


def is_invariant(V: np.ndarray, A: np.ndarray) -> bool:
    """A V subset of V, with V given by basis rows."""
    if V.shape[0] == 0:
        return True
    return contains(V, (A @ V.T).T)


def direct_sum(parts: Sequence[np.ndarray], total: np.ndarray) -> bool:
    rows = [p for p in parts if p.shape[0]]
    if not rows:
        return _r(total) == 0
    stacked = np.vstack(rows)
    return _r(stacked) == sum(_r(p) for p in rows) and same_span(stacked, total)


def centralizer(ops: Sequence[AdOperator]) -> np.ndarray:
    """Basis rows of {X : Ad(g) X = X for every g}."""
    d = ops[0].d
    m = dim(d)
    stack = np.vstack([op.matrix - qidentity(m) for op in ops])
    return row_space(nullspace(stack)) if m else qzeros((0, m))


@dataclass
class SubalgebraRegistry:
    d: int
    spaces: dict = field(default_factory=dict)  # name -> {place: basis rows}
    certificates: list = field(default_factory=list)

    def get(self, name: str, place: Place) -> np.ndarray:
        return self.spaces[name][place]

    def dims(self) -> dict:
        return {name: {str(p): int(_r(v)) for p, v in per.items()} for name, per in self.spaces.items()}


def named_subspace(name: str, kind: str, d: int) -> np.ndarray:
    """The displayed subspace ``name`` at a place of type ``kind`` (ue/dt/tr)."""
    empty = qzeros((0, dim(d)))
    table = {
        "u": idx_u(d),
        "p": idx_p(d),
        "h_fne": {"dt": idx_p(d), "tr": idx_all(d), "ue": []}[kind],
        "w_st": {"ue": idx_u(d), "dt": idx_all(d), "tr": idx_all(d)}[kind],
        "u_minus_dt": idx_u_minus(d) if kind == "dt" else [],
        "w_bc": {"ue": idx_u(d), "dt": idx_u_minus(d), "tr": []}[kind],
        "V_ex": {"ue": idx_all(d), "dt": idx_u_minus(d), "tr": []}[kind],
        "z_expected": {"ue": [], "dt": idx_block(d), "tr": idx_all(d)}[kind],
    }
    idx = table[name]
    return coordinate_subspace(idx, d) if idx else empty


SUBSPACES = ("u", "p", "h_fne", "w_st", "u_minus_dt", "w_bc", "V_ex")
INVARIANT = ("u", "p", "h_fne", "w_st", "V_ex", "w_bc")


def subalgebra_suite(walk, raise_on_failure: bool = True) -> SubalgebraRegistry:
    """Build the named subspaces per place and certify the displayed relations exactly."""
    d = walk.d
    P = walk.partition
    reg = SubalgebraRegistry(d)
    certs = reg.certificates

    def cert(name, ok, gen="", place=None):
        certs.append((name, bool(ok), gen, str(place) if place is not None else ""))
        if not ok and raise_on_failure:
            raise CertificateError(f"certificate failed: {name}", gen, place)

    for name in SUBSPACES:
        reg.spaces[name] = {p: named_subspace(name, P.kind(p), d) for p in P.S}
    ads = {p: [adjoint(h, p, check=False) for h in walk.hbar] for p in P.S}
    reg.spaces["z"] = {p: centralizer(ads[p]) for p in P.S}

    for p in P.S:
        kind = P.kind(p)
        for name in INVARIANT:
            V = reg.get(name, p)
            for i, A in enumerate(ads[p]):
                cert(f"Ad-invariance of {name}", is_invariant(V, A.matrix), f"hbar{i + 1}", p)
        z, hf, ws = reg.get("z", p), reg.get("h_fne", p), reg.get("w_st", p)
        cert("z in h_fne", contains(hf, z), "", p)
        cert("h_fne in w_st", contains(ws, hf), "", p)
        cert("w_st = h_fne + w_bc", direct_sum([hf, reg.get("w_bc", p)], ws), "", p)
        g_ue = coordinate_subspace(idx_all(d), d) if kind == "ue" else qzeros((0, dim(d)))
        cert("V_ex = u_minus_dt + g_ue", direct_sum([reg.get("u_minus_dt", p), g_ue], reg.get("V_ex", p)), "", p)
        cert("dim p = d^2 + d", _r(reg.get("p", p)) == d * d + d, "", p)
        cert("centralizer has the displayed shape", same_span(z, named_subspace("z_expected", kind, d)), "", p)
        if kind == "ue":
            U = reg.get("u", p)
            for i, A in enumerate(ads[p]):
                scaled = all(np.array_equal(A.matrix @ row, walk.ifs.rho * row) for row in U)
                cert("Ad(hbar) acts on u by rho", scaled, f"hbar{i + 1}", p)
    ok, detail = eigen_split(d, walk.ifs.rho)
    cert("eigenvalues rho^-1, 1, rho of Ad(diag(rho,..,rho,1)^-1)", ok, detail)
    return reg


def eigen_split(d: int, rho: Fraction) -> tuple[bool, str]:
    """Ad(diag(rho Id, 1)^{-1}) is rho^{-1} on u, 1 on the block-diagonal part, rho on u^-."""
    g = qidentity(d + 1)
    for j in range(d):
        g[j, j] = rho
    A = adjoint_matrix(qinverse(g))
    for idx, lam in ((idx_u(d), 1 / rho), (idx_block(d), mpq(1)), (idx_u_minus(d), rho)):
        for k in idx:
            e = coordinate_subspace([k], d)[0]
            if not np.array_equal(A @ e, lam * e):
                return False, f"basis element {basis_labels(d)[k]} is not an eigenvector for {lam}"
    return True, ""


# exterior powers -----------------------------------------------------------------

def compound(A: np.ndarray, r: int, rows: Sequence[tuple] | None = None,
             cols: Sequence[tuple] | None = None) -> np.ndarray:
    """r-th compound matrix (all r x r minors), optionally restricted to row/col index sets."""
    from itertools import combinations

    from carpetdyn.arith import qdet

    n = A.shape[0]
    subsets = list(combinations(range(n), r))
    rows = subsets if rows is None else list(rows)
    cols = subsets if cols is None else list(cols)
    out = qzeros((len(rows), len(cols)))
    for i, R in enumerate(rows):
        for j, C in enumerate(cols):
            out[i, j] = qdet(A[np.ix_(R, C)])
    return out


def wedge_subsets(d: int, r: int) -> list[tuple]:
    from itertools import combinations

    return list(combinations(range(dim(d)), r))


def w_r_subsets(d: int, r: int) -> list[tuple]:
    """Index sets spanning W^(r): wedges inside u for r <= d, u^{wedge d} wedge p otherwise."""
    from itertools import combinations

    U = idx_u(d)
    if not 1 <= r <= d * d + d:
        raise ValueError("r must lie in 1..d^2+d")
    if r <= d:
        return [tuple(sorted(c)) for c in combinations(U, r)]
    rest = [k for k in idx_p(d) if k not in U]
    return [tuple(sorted(U + list(c))) for c in combinations(rest, r - d)]


def ultrametric_direction_distance(v: Sequence, inside: set, place: Place) -> Fraction:
    """dist([v], W) for a coordinate subspace W: max_{c not in W}|v_c| / max_c |v_c|."""
    vals = [abs_at_place(c, place).value for c in v]
    top = max(vals)
    if top == 0:
        raise ValueError("zero vector has no direction")
    out = max((x for k, x in enumerate(vals) if k not in inside), default=Fraction(0))
    return out / top
