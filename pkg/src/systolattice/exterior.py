"""Exterior powers of R^n in lexicographic wedge coordinates.

A p-vector in Lambda^p R^n is stored as its C(n, p) coefficients against
e_{i1} ^ ... ^ e_{ip} with i1 < ... < ip, ordered lexicographically
(``itertools.combinations`` order).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .errors import DegenerateLatticeError, LatticeFormatError
from .lattice import Lattice


@lru_cache(maxsize=None)
def wedge_indices(n: int, p: int) -> tuple:
    """Lexicographic list of p-subsets of range(n)."""
    return tuple(itertools.combinations(range(n), p))


@lru_cache(maxsize=None)
def _position(n: int, p: int) -> dict:
    return {I: k for k, I in enumerate(wedge_indices(n, p))}


def _perm_sign(seq) -> int:
    """Sign of the permutation sorting ``seq`` (distinct entries)."""
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def degree_from_length(n: int, length: int) -> int:
    for p in range(n + 1):
        if comb(n, p) == length:
            return p
    raise ValueError(f"no degree p with C({n}, p) = {length}")


@dataclass(frozen=True, eq=False)
class PVector:
    n: int
    p: int
    coords: np.ndarray

    def __post_init__(self):
        if not 0 <= self.p <= self.n:
            raise ValueError(f"degree p={self.p} outside [0, {self.n}]")
        coords = np.array(self.coords, dtype=float).reshape(-1)
        if coords.size != comb(self.n, self.p):
            raise ValueError(
                f"expected {comb(self.n, self.p)} coordinates for degree {self.p} in R^{self.n}, "
                f"got {coords.size}"
            )
        if not np.all(np.isfinite(coords)):
            raise ValueError("coordinates must be finite")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    @classmethod
    def basis_element(cls, n: int, indices) -> "PVector":
        """e_{i1} ^ ... ^ e_{ip} for 0-based ``indices`` (any order, with sign)."""
        indices = tuple(indices)
        c = np.zeros(comb(n, len(indices)))
        if len(set(indices)) == len(indices):
            c[_position(n, len(indices))[tuple(sorted(indices))]] = _perm_sign(indices)
        return cls(n, len(indices), c)

    @classmethod
    def from_vector(cls, v) -> "PVector":
        v = np.asarray(v, dtype=float)
        return cls(v.size, 1, v)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))

    def __add__(self, other):
        _check_same(self, other)
        return PVector(self.n, self.p, self.coords + other.coords)

    def __sub__(self, other):
        _check_same(self, other)
        return PVector(self.n, self.p, self.coords - other.coords)

    def __mul__(self, c):
        return PVector(self.n, self.p, float(c) * self.coords)

    __rmul__ = __mul__

    def __neg__(self):
        return PVector(self.n, self.p, -self.coords)

    def __xor__(self, other):
        return wedge(self, other)

    def dot(self, other) -> float:
        _check_same(self, other)
        return float(self.coords @ other.coords)

    def to_json(self) -> dict:
        return {"n": self.n, "p": self.p, "coords": self.coords.tolist()}

    @classmethod
    def from_json(cls, obj) -> "PVector":
        if isinstance(obj, (str, bytes)):
            obj = json.loads(obj)
        try:
            n, p, coords = obj["n"], obj["p"], obj["coords"]
        except (KeyError, TypeError):
            raise LatticeFormatError("p-vector record needs fields 'n', 'p', 'coords'") from None
        try:
            return cls(int(n), int(p), coords)
        except ValueError as exc:
            raise LatticeFormatError(str(exc)) from None

    def __repr__(self):
        return f"PVector(n={self.n}, p={self.p}, coords={np.array2string(self.coords, precision=4)})"


def _check_same(a, b):
    if a.n != b.n or a.p != b.p:
        raise ValueError(f"mismatched p-vectors: (n={a.n}, p={a.p}) vs (n={b.n}, p={b.p})")


@lru_cache(maxsize=None)
def _wedge_table(n: int, p: int, q: int):
    """(i, j, k, sign) arrays: e_I ^ e_J = sign * e_K."""
    pos = _position(n, p + q)
    rows = []
    for i, I in enumerate(wedge_indices(n, p)):
        sI = set(I)
        for j, J in enumerate(wedge_indices(n, q)):
            if sI.isdisjoint(J):
                rows.append((i, j, pos[tuple(sorted(I + J))], _perm_sign(I + J)))
    if not rows:
        return tuple(np.zeros(0, dtype=int) for _ in range(4))
    return tuple(np.array(col) for col in zip(*rows))


def wedge(a: PVector, b: PVector) -> PVector:
    if a.n != b.n:
        raise ValueError(f"ambient dimension mismatch: {a.n} vs {b.n}")
    if a.p + b.p > a.n:
        raise ValueError(f"degree {a.p} + {b.p} exceeds ambient dimension {a.n}")
    i, j, k, s = _wedge_table(a.n, a.p, b.p)
    out = np.zeros(comb(a.n, a.p + b.p))
    np.add.at(out, k, s * a.coords[i] * b.coords[j])
    return PVector(a.n, a.p + b.p, out)


def wedge_vectors(vectors) -> PVector:
    """Wedge of the rows of ``vectors`` (p x n)."""
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    p, n = V.shape
    return PVector(n, p, compound_matrix(V, p)[0] if p else [1.0])


@lru_cache(maxsize=None)
def _star_table(n: int, p: int):
    pos = _position(n, n - p)
    perm = np.empty(comb(n, p), dtype=int)
    sign = np.empty(comb(n, p))
    for i, I in enumerate(wedge_indices(n, p)):
        J = tuple(k for k in range(n) if k not in I)
        perm[i] = pos[J]
        sign[i] = _perm_sign(I + J)
    return perm, sign


def hodge_star(a: PVector) -> PVector:
    """Euclidean Hodge star, standard orientation: a ^ *a = |a|^2 e_1^...^e_n."""
    perm, sign = _star_table(a.n, a.p)
    out = np.zeros(comb(a.n, a.n - a.p))
    out[perm] = sign * a.coords
    return PVector(a.n, a.n - a.p, out)


def hodge_star_coords(coords, n: int, p: int) -> np.ndarray:
    perm, sign = _star_table(n, p)
    out = np.zeros_like(np.asarray(coords, dtype=float))
    out[..., perm] = sign * np.asarray(coords, dtype=float)
    return out


def compound_matrix(M, p: int) -> np.ndarray:
    """p-th compound: entry (I, J) is the minor det M[I, J].

    Row I of the compound of a basis matrix is the wedge of rows I.
    """
    M = np.asarray(M, dtype=float)
    r, c = M.shape
    rows = wedge_indices(r, p)
    cols = wedge_indices(c, p)
    if p == 0:
        return np.ones((1, 1))
    ri = np.array(rows)
    ci = np.array(cols)
    sub = M[ri[:, None, :, None], ci[None, :, None, :]]
    return np.linalg.det(sub)


def exterior_power_lattice(L: Lattice, p: int) -> Lattice:
    """Lambda^p L: wedges of p distinct basis vectors, lexicographic order."""
    n = L.dim
    if not 1 <= p <= n:
        raise ValueError(f"degree p={p} outside [1, {n}]")
    W = compound_matrix(L.basis, p)
    # det of the p-th compound is det^C(n-1, p-1); compare with that identity
    # rather than a Hadamard ratio, which is astronomically large here
    expected = L.covolume ** comb(n - 1, p - 1)
    got = abs(np.linalg.det(W))
    if not np.isfinite(got) or abs(got - expected) > 1e-6 * expected:
        raise DegenerateLatticeError(
            f"wedge basis of degree {p} is degenerate: |det| = {got:.6e}, expected {expected:.6e}"
        )
    return Lattice._unchecked(W)


def skew_matrix(coords, n: int) -> np.ndarray:
    """Skew-symmetric matrix A with A[i, j] = coefficient of e_i ^ e_j (i < j)."""
    A = np.zeros((n, n))
    iu = np.array(wedge_indices(n, 2)).T
    A[iu[0], iu[1]] = coords
    return A - A.T


def canonical_coefficients(coords, n: int) -> np.ndarray:
    """Normal form a_1 >= a_2 >= ... >= 0 of a 2-vector.

    Any 2-vector is sum_k a_k f_{2k-1} ^ f_{2k} in a suitable orthonormal
    frame; the a_k are the singular values of the skew matrix, each of which
    appears twice.
    """
    s = np.linalg.svd(skew_matrix(coords, n), compute_uv=False)
    return s[0 : 2 * (n // 2) : 2]


def index_table(n: int, p: int) -> list:
    """Human-readable coordinate labels, 1-based (``e1^e3`` etc.)."""
    return ["^".join(f"e{i + 1}" for i in I) for I in wedge_indices(n, p)]
