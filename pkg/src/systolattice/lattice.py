"""Full-rank lattices in R^b: Gram data, covolume, duals and LLL reduction.

Lattices are stored by their basis rows.  Everything else (Gram matrix,
covolume, dual) is derived from the basis.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLatticeError, LatticeFormatError, ReductionError

RANK_TOL = 1e-10
DUAL_COND_MAX = 1e12
RANDOM_COND_MAX = 1e6
LLL_DELTA = 0.99
LLL_MAX_ITER = 100_000


def _rank_deficiency(basis):
    """Name of the failed invariant, or None if the basis is full rank."""
    if basis.ndim != 2 or basis.shape[0] != basis.shape[1] or basis.shape[0] == 0:
        return f"basis must be a non-empty square matrix, got shape {basis.shape}"
    if not np.all(np.isfinite(basis)):
        return "basis entries must be finite"
    row_norms = np.linalg.norm(basis, axis=1)
    det = abs(np.linalg.det(basis))
    if det <= RANK_TOL * np.prod(row_norms) or det == 0.0:
        return (
            f"full rank: |det| = {det:.3e} is not above "
            f"{RANK_TOL:g} * product of row norms ({np.prod(row_norms):.3e})"
        )
    return None


@dataclass(frozen=True, eq=False)
class Lattice:
    """Full-rank lattice spanned by the rows of ``basis``."""

    basis: np.ndarray
    covolume: float = field(init=False)

    def __post_init__(self):
        basis = np.array(self.basis, dtype=float)
        if basis.ndim == 1 and basis.size == 1:
            basis = basis.reshape(1, 1)
        problem = _rank_deficiency(basis)
        if problem is not None:
            raise DegenerateLatticeError(problem)
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "covolume", float(abs(np.linalg.det(basis))))

    @classmethod
    def _unchecked(cls, basis) -> "Lattice":
        # for bases full rank by construction (inverse of a checked basis)
        obj = object.__new__(cls)
        basis = np.array(basis, dtype=float)
        basis.setflags(write=False)
        object.__setattr__(obj, "basis", basis)
        object.__setattr__(obj, "covolume", float(abs(np.linalg.det(basis))))
        return obj

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def gram(self) -> np.ndarray:
        g = self.basis @ self.basis.T
        return (g + g.T) / 2

    def scaled(self, c: float) -> "Lattice":
        return Lattice(c * self.basis)

    def transformed(self, unimodular) -> "Lattice":
        """Same lattice, basis rows replaced by ``unimodular @ basis``."""
        return Lattice(np.asarray(unimodular, dtype=float) @ self.basis)

    def coordinates(self, vectors) -> np.ndarray:
        """Coefficients of ambient ``vectors`` (rows) in this basis."""
        return np.linalg.solve(self.basis.T, np.asarray(vectors, dtype=float).T).T

    def contains(self, vectors, tol: float = 1e-6) -> bool:
        c = self.coordinates(np.atleast_2d(vectors))
        return bool(np.all(np.abs(c - np.round(c)) <= tol))

    def __repr__(self):
        return f"Lattice(dim={self.dim}, covolume={self.covolume:.6g})"

    # JSON ---------------------------------------------------------------

    def to_json(self) -> dict:
        return {"dim": self.dim, "basis": self.basis.tolist()}

    @classmethod
    def from_json(cls, obj) -> "Lattice":
        return lattice_from_json(obj)


def lattice_from_json(obj) -> Lattice:
    """Parse ``{"dim": n, "basis": [[row], ...]}``.

    Raises LatticeFormatError naming the first invariant that fails.
    """
    if isinstance(obj, (str, bytes)):
        try:
            obj = json.loads(obj)
        except json.JSONDecodeError as exc:
            raise LatticeFormatError(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise LatticeFormatError("lattice record must be a JSON object")
    if "basis" not in obj:
        raise LatticeFormatError("missing field 'basis'")
    rows = obj["basis"]
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise LatticeFormatError("field 'basis' must be a non-empty list of rows")
    dim = obj.get("dim", len(rows))
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise LatticeFormatError(f"field 'dim' must be a positive integer, got {dim!r}")
    if len(rows) != dim or any(len(r) != dim for r in rows):
        raise LatticeFormatError(
            f"basis must be square with dim={dim} rows of length {dim} (non-square input)"
        )
    try:
        basis = np.array(rows, dtype=float)
    except (TypeError, ValueError):
        raise LatticeFormatError("basis entries must be numbers") from None
    problem = _rank_deficiency(basis)
    if problem is not None:
        raise LatticeFormatError(f"rank-deficient basis; failed invariant: {problem}")
    return Lattice(basis)


def load_lattice(path) -> Lattice:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise LatticeFormatError(f"{path}: invalid JSON: {exc}") from None
    return lattice_from_json(obj)


def save_lattice(lattice: Lattice, path) -> None:
    with open(path, "w") as fh:
        json.dump(lattice.to_json(), fh)


def covolume(L: Lattice) -> float:
    return L.covolume


def dual(L: Lattice) -> Lattice:
    """Dual lattice; its basis B* satisfies B* @ B.T = I."""
    if np.linalg.cond(L.basis) > DUAL_COND_MAX:
        raise DegenerateLatticeError(
            f"condition number {np.linalg.cond(L.basis):.3e} exceeds {DUAL_COND_MAX:g}"
        )
    # the inverse of a full-rank basis is full rank; only conditioning can fail
    return Lattice._unchecked(np.linalg.inv(L.basis).T)


def _gso_r(basis):
    # basis.T = Q R; column k of R holds b_k in the Gram-Schmidt frame
    return np.linalg.qr(basis.T, mode="r")


def lll_transform(basis, delta: float = LLL_DELTA, max_iter: int = LLL_MAX_ITER):
    """LLL-reduce the rows of ``basis``.

    Returns ``(reduced, U)`` with ``U`` integer unimodular and
    ``reduced == U @ basis`` (recomputed from U, so no drift accumulates).
    """
    if not 0.25 < delta < 1:
        raise ValueError(f"delta must lie in (1/4, 1), got {delta}")
    B0 = np.asarray(basis, dtype=float)
    n = B0.shape[0]
    B = B0.copy()
    U = np.eye(n, dtype=np.int64)
    if n == 1:
        return B, U
    k = 1
    it = 0
    while k < n:
        it += 1
        if it > max_iter:
            raise ReductionError(f"LLL did not converge after {max_iter} iterations")
        R = _gso_r(B)
        for j in range(k - 1, -1, -1):
            q = round(R[j, k] / R[j, j])
            if q:
                B[k] -= q * B[j]
                U[k] -= q * U[j]
                R[:, k] -= q * R[:, j]
        if R[k, k] ** 2 + R[k - 1, k] ** 2 >= delta * R[k - 1, k - 1] ** 2:
            k += 1
        else:
            B[[k - 1, k]] = B[[k, k - 1]]
            U[[k - 1, k]] = U[[k, k - 1]]
            k = max(k - 1, 1)
    return U.astype(float) @ B0, U


def lll_reduce(L: Lattice, delta: float = LLL_DELTA) -> Lattice:
    reduced, _ = lll_transform(L.basis, delta)
    return Lattice(reduced)


def lovasz_holds(basis, delta: float = LLL_DELTA, tol: float = 1e-9) -> bool:
    """Check size reduction and the Lovasz condition for ``basis`` rows."""
    R = _gso_r(np.asarray(basis, dtype=float))
    n = R.shape[0]
    for k in range(1, n):
        for j in range(k):
            if abs(R[j, k] / R[j, j]) > 0.5 + tol:
                return False
        lhs = R[k, k] ** 2 + R[k - 1, k] ** 2
        if lhs < (delta - tol) * R[k - 1, k - 1] ** 2:
            return False
    return True


def random_lattice(dim: int, seed: int) -> Lattice:
    """Gaussian random basis rescaled to covolume 1 (deterministic in seed)."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = np.random.default_rng(seed)
    while True:
        B = rng.standard_normal((dim, dim))
        if np.linalg.cond(B) <= RANDOM_COND_MAX:
            break
    B = B / abs(np.linalg.det(B)) ** (1.0 / dim)
    return Lattice(B)


def hexagonal(covol: float = 1.0) -> Lattice:
    """The A2 lattice scaled to the requested covolume."""
    B = np.array([[1.0, 0.0], [0.5, math.sqrt(3) / 2]])
    return Lattice(B * math.sqrt(covol / (math.sqrt(3) / 2)))


def integer_lattice(dim: int) -> Lattice:
    return Lattice(np.eye(dim))


def is_unimodular(M, tol: float = 1e-6) -> bool:
    M = np.asarray(M, dtype=float)
    return bool(np.all(np.abs(M - np.round(M)) <= tol) and abs(abs(np.linalg.det(M)) - 1) <= tol)
