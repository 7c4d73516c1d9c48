"""Lattice-point enumeration and successive minima under a NormSpec.

Enumeration is Fincke-Pohst on an LLL-reduced basis, done breadth-first
with numpy so that a whole layer of the search tree expands at once.
Candidates for a general norm N come from a Euclidean ball, using the
constant a with N(x) >= a |x| (see ``NormSpec.euclid_constants``).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import BudgetExceededError, SystolatticeError
from .lattice import Lattice, dual, lll_transform
from .norms import EUCLIDEAN, NormSpec

ENUM_CAP = 10_000_000
INDEP_TOL = 1e-10
# relative slack on radius comparisons, so boundary points are not lost to rounding
RADIUS_SLACK = 1e-9
TIE_TOL = 1e-12


def _sign_normalize(C):
    """Flip rows so the first nonzero entry is positive."""
    C = np.asarray(C)
    if C.size == 0:
        return C
    first = np.argmax(C != 0, axis=1)
    s = np.sign(C[np.arange(len(C)), first])
    s[s == 0] = 1
    return C * s[:, None]


def _fincke_pohst(R, radius, cap):
    """All nonzero c with |R c| <= radius, one of each +-pair.

    R is upper triangular.  Coordinates are fixed from the last to the first;
    the unique all-zero prefix is restricted to c_k >= 0 so that exactly one
    of c, -c survives.
    """
    b = R.shape[0]
    r2 = radius * radius * (1 + RADIUS_SLACK)
    diag = np.abs(np.diag(R))
    prefix = np.zeros((1, 0), dtype=np.int64)  # columns k+1..b-1
    partial = np.zeros(1)
    for k in range(b - 1, -1, -1):
        if prefix.shape[1]:
            center = -(prefix @ R[k, k + 1 :]) / R[k, k]
        else:
            center = np.zeros(len(prefix))
        half = np.sqrt(np.maximum(r2 - partial, 0.0)) / diag[k]
        lo = np.ceil(center - half - 1e-12).astype(np.int64)
        hi = np.floor(center + half + 1e-12).astype(np.int64)
        zero = ~prefix.any(axis=1)
        lo[zero] = np.maximum(lo[zero], 0)
        counts = np.maximum(hi - lo + 1, 0)
        total = int(counts.sum())
        if total > cap:
            raise BudgetExceededError(
                f"enumeration needs more than {cap} nodes (radius {radius:.6g})",
                partial={"radius": radius, "level": b - k, "nodes": total},
            )
        parent = np.repeat(np.arange(len(prefix)), counts)
        offset = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        ck = lo[parent] + offset
        partial = partial[parent] + (diag[k] * (ck - center[parent])) ** 2
        prefix = np.column_stack([ck, prefix[parent]])
        keep = partial <= r2
        prefix, partial = prefix[keep], partial[keep]
    nonzero = prefix.any(axis=1)
    return prefix[nonzero]


@dataclass(frozen=True)
class _Reduced:
    basis: np.ndarray  # reduced rows, = U @ original
    U: np.ndarray
    R: np.ndarray


def _reduce(L: Lattice) -> _Reduced:
    B, U = lll_transform(L.basis)
    R = np.linalg.qr(B.T, mode="r")
    return _Reduced(B, U, R)


def _enumerate(L, radius, cap=ENUM_CAP, red=None):
    """(coefficients in L's basis, vectors) with Euclidean norm <= radius."""
    red = red or _reduce(L)
    c = _fincke_pohst(red.R, radius, cap)
    coeffs = _sign_normalize(c @ red.U)
    vecs = coeffs.astype(float) @ L.basis
    keep = np.linalg.norm(vecs, axis=1) <= radius * (1 + RADIUS_SLACK)
    return coeffs[keep], vecs[keep]


def _radius_scale(norm, dim):
    return norm.euclid_constants(dim)[0]


def enumerate_points(L: Lattice, norm: NormSpec = EUCLIDEAN, radius: float = 1.0, cap: int = ENUM_CAP):
    """Nonzero lattice vectors with norm(v) <= radius, one per +-pair.

    Returned as an (N, b) array of ambient vectors, sorted by norm value and
    then by coefficient vector.  For heuristic norms the filter uses the
    computed value.
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    a = _radius_scale(norm, L.dim)
    coeffs, vecs = _enumerate(L, radius / a, cap)
    if len(vecs) == 0:
        return vecs
    vals = norm.evaluate(vecs)[0]
    keep = vals <= radius * (1 + RADIUS_SLACK)
    coeffs, vecs, vals = coeffs[keep], vecs[keep], vals[keep]
    order = _tie_order(vals, coeffs)
    return vecs[order]


def _tie_order(vals, coeffs):
    """Sort by value; values equal up to TIE_TOL are ordered by coefficients."""
    if len(vals) == 0:
        return np.zeros(0, dtype=int)
    order = np.argsort(vals, kind="stable")
    v = vals[order]
    # group boundaries where consecutive values differ by more than the tolerance
    gap = np.diff(v) > TIE_TOL * np.maximum(1.0, np.abs(v[1:]))
    group = np.concatenate([[0], np.cumsum(gap)])
    keys = [coeffs[order][:, j] for j in range(coeffs.shape[1] - 1, -1, -1)]
    sub = np.lexsort(keys + [group])
    return order[sub]


@dataclass(frozen=True, eq=False)
class MinimaProfile:
    """Successive minima lambda_1 <= ... <= lambda_k with attaining vectors.

    ``lower``/``upper`` bracket the true minima; they coincide with
    ``values`` when the norm is exact.
    """

    norm: NormSpec
    values: np.ndarray
    vectors: np.ndarray
    coefficients: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    heuristic: bool = False
    enumerated: int = field(default=0, compare=False)

    def __len__(self):
        return len(self.values)

    def to_json(self) -> dict:
        return {
            "norm": str(self.norm),
            "values": self.values.tolist(),
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "heuristic": self.heuristic,
            "vectors": self.vectors.tolist(),
            "coefficients": self.coefficients.astype(int).tolist(),
        }


class _Independence:
    def __init__(self, dim):
        self.Q = np.zeros((0, dim))

    def test(self, x):
        r = x - self.Q.T @ (self.Q @ x)
        # second pass for numerical orthogonality
        r = r - self.Q.T @ (self.Q @ r)
        return np.linalg.norm(r) > INDEP_TOL * np.linalg.norm(x), r

    def add(self, r):
        self.Q = np.vstack([self.Q, r / np.linalg.norm(r)])


def _greedy(vals, coeffs, vecs, k, dim):
    """Indices of the greedy independent selection in tie order."""
    ind = _Independence(dim)
    chosen = []
    for i in _tie_order(vals, coeffs):
        ok, r = ind.test(vecs[i])
        if ok:
            ind.add(r)
            chosen.append(i)
            if len(chosen) == k:
                break
    return chosen


def successive_minima(L: Lattice, norm: NormSpec = EUCLIDEAN, count: int = None, cap: int = ENUM_CAP):
    """First ``count`` successive minima of L under ``norm`` (default: all).

    Greedy over all lattice points with norm <= r, sorted by value with ties
    broken by coefficients; r starts at the smallest norm among the reduced
    basis rows and doubles, never exceeding the count-th smallest such norm
    (which always suffices).
    """
    b = L.dim
    k = b if count is None else int(count)
    if not 1 <= k <= b:
        raise ValueError(f"count must lie in [1, {b}], got {count}")
    red = _reduce(L)
    a = _radius_scale(norm, b)
    heuristic = not norm.is_exact(b)
    if heuristic:
        # computed values never exceed A |x| (first LP round / Euclidean bound)
        e_rows = np.sort(np.linalg.norm(red.basis, axis=1))
        r_cap = norm.euclid_constants(b)[1] * e_rows[k - 1]
        r = min(a * e_rows[0], r_cap)
    else:
        row_vals = np.sort(norm.evaluate(red.basis)[0])
        r_cap = row_vals[k - 1]
        r = min(row_vals[0], r_cap)
    while True:
        coeffs, vecs = _enumerate(L, r / a, cap, red)
        if heuristic:
            sel, vals, lo, hi = _lazy_greedy(norm, coeffs, vecs, k, b, r, a)
        else:
            vals = norm.evaluate(vecs)[0] if len(vecs) else np.zeros(0)
            inside = vals <= r * (1 + RADIUS_SLACK)
            coeffs, vecs, vals = coeffs[inside], vecs[inside], vals[inside]
            sel = _greedy(vals, coeffs, vecs, k, b)
            lo = hi = vals
        if len(sel) == k or r >= r_cap:
            break
        r = min(2 * r, r_cap)
    if len(sel) < k:
        raise SystolatticeError(f"found only {len(sel)} independent vectors below {r_cap:.6g}")
    sel = np.array(sel)
    values = vals[sel]
    lower, upper = lo[sel], hi[sel]
    if heuristic:
        # certified brackets from the Euclidean sandwich
        e = successive_minima(L, EUCLIDEAN, k, cap).values
        ea, eA = norm.euclid_constants(b)
        upper = np.minimum(np.maximum.accumulate(upper), eA * e)
        # greedy minima of a pointwise lower bound (the comass ascent) are lower bounds
        lower = np.maximum(ea * e, values) if norm.kind == "comass" else ea * e
    return MinimaProfile(
        norm=norm,
        values=values,
        vectors=vecs[sel],
        coefficients=coeffs[sel],
        lower=lower,
        upper=upper,
        heuristic=heuristic,
        enumerated=len(vecs),
    )


def _lazy_greedy(norm, coeffs, vecs, k, dim, r, a):
    """Greedy selection evaluating an expensive norm only when needed.

    Unevaluated points sit in the heap keyed by the bound a|x| <= norm(x);
    a point is used only once its computed value is the smallest key.
    """
    n_pts = len(vecs)
    vals = np.full(n_pts, np.inf)
    lo = np.full(n_pts, np.nan)
    hi = np.full(n_pts, np.nan)
    heap = [(a * float(np.linalg.norm(vecs[i])), 0, tuple(coeffs[i]), i) for i in range(n_pts)]
    heapq.heapify(heap)
    ind = _Independence(dim)
    chosen = []
    limit = r * (1 + RADIUS_SLACK)
    while heap and len(chosen) < k:
        key, stage, c, i = heapq.heappop(heap)
        if key > limit:
            break
        if stage == 0:
            v, lo[i], hi[i], _ = norm.bounds(vecs[i])
            vals[i] = v
            heapq.heappush(heap, (v, 1, c, i))
            continue
        # gather everything tied with this value, evaluating stragglers first
        group = [(c, i)]
        while heap and heap[0][0] <= key + TIE_TOL * max(1.0, key):
            k2, s2, c2, i2 = heapq.heappop(heap)
            if s2 == 0:
                v, lo[i2], hi[i2], _ = norm.bounds(vecs[i2])
                vals[i2] = v
                heapq.heappush(heap, (v, 1, c2, i2))
            else:
                group.append((c2, i2))
        for _, j in sorted(group):
            if len(chosen) == k:
                break
            ok, res = ind.test(vecs[j])
            if ok:
                ind.add(res)
                chosen.append(j)
    return chosen, vals, lo, hi


def shortest_vector(L: Lattice, norm: NormSpec = EUCLIDEAN):
    p = successive_minima(L, norm, 1)
    return float(p.values[0]), p.vectors[0]


# -- minima to basis ----------------------------------------------------------


def _column_hnf(M):
    """Lower-triangular H and unimodular V (Python ints) with M V = H."""
    n = len(M)
    H = [list(map(int, row)) for row in M]
    V = [[int(i == j) for j in range(n)] for i in range(n)]

    def colop(a, b, x, y, z, w):
        # (col a, col b) <- (x a + y b, z a + w b)
        for T in (H, V):
            for row in T:
                ra, rb = row[a], row[b]
                row[a], row[b] = x * ra + y * rb, z * ra + w * rb

    for i in range(n):
        for j in range(i + 1, n):
            if H[i][j] == 0:
                continue
            a, b = H[i][i], H[i][j]
            g, x, y = _egcd(a, b)
            # [x, -b/g; y, a/g] has determinant 1
            colop(i, j, x, y, -b // g, a // g)
        if H[i][i] == 0:
            raise SystolatticeError("minima vectors are linearly dependent")
        if H[i][i] < 0:
            for T in (H, V):
                for row in T:
                    row[i] = -row[i]
    return H, V


def _egcd(a, b):
    """g, x, y with g = gcd(a, b) = x a + y b (g > 0)."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


@dataclass(frozen=True, eq=False)
class MinimaBasis:
    basis: Lattice
    coefficients: np.ndarray  # integer rows in the input basis, |det| = 1
    norms: np.ndarray
    bounds: np.ndarray  # max(1, i/2) * lambda_i
    heuristic: bool = False

    @property
    def within_bounds(self) -> bool:
        return bool(np.all(self.norms <= self.bounds * (1 + 1e-9)))


def minima_basis(profile: MinimaProfile, L: Lattice) -> MinimaBasis:
    """Turn b independent minima vectors into a basis of L.

    Write the minima coefficient matrix as M = H W with H integer lower
    triangular and W unimodular.  Where |h_ii| = 1, m_i already extends the
    partial basis and is kept.  Otherwise v_i is the new basis vector w_i of
    L meet span(m_1..m_i) with its m_j-coordinates (j < i) reduced into
    [-1/2, 1/2]; the triangle inequality then gives |v_i| <= (i/2) lambda_i.
    """
    b = L.dim
    if len(profile) != b:
        raise ValueError(f"profile has {len(profile)} vectors, need {b}")
    M = [[int(x) for x in row] for row in np.asarray(profile.coefficients)]
    H, _ = _column_hnf(M)
    # theta = H^-1 (lower triangular, rational): w_i = sum_j theta_ij m_j
    theta = [[Fraction(0)] * b for _ in range(b)]
    for i in range(b):
        theta[i][i] = Fraction(1, H[i][i])
        for j in range(i - 1, -1, -1):
            s = sum(H[i][t] * theta[t][j] for t in range(j, i))
            theta[i][j] = -s / H[i][i]
    rows = []
    for i in range(b):
        if H[i][i] == 1:
            t = [Fraction(int(j == i)) for j in range(b)]
        else:
            t = [theta[i][j] - (round(theta[i][j]) if j < i else 0) for j in range(b)]
        coeff = [sum(t[j] * M[j][c] for j in range(b)) for c in range(b)]
        if any(x.denominator != 1 for x in coeff):
            raise SystolatticeError("minima basis construction left the lattice")
        rows.append([int(x) for x in coeff])
    C = np.array(rows, dtype=np.int64)
    if abs(round(np.linalg.det(C.astype(float)))) != 1:
        raise SystolatticeError("minima basis is not unimodular; enumeration is inconsistent")
    vecs = C.astype(float) @ L.basis
    norms = profile.norm.evaluate(vecs)[0]
    factors = np.maximum(1.0, np.arange(1, b + 1) / 2)
    return MinimaBasis(Lattice(vecs), C, norms, factors * profile.values, profile.heuristic)


# -- transference -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TransferenceProduct:
    i: int
    product: float
    lower: float
    upper: float
    heuristic: bool
    primal: np.ndarray
    dual: np.ndarray


def transference_products(L: Lattice, norm: NormSpec = EUCLIDEAN, cap: int = ENUM_CAP):
    """lambda_i(L, norm) * lambda_{b-i+1}(L*, dual norm) for i = 1..b."""
    b = L.dim
    P = successive_minima(L, norm, b, cap)
    D = successive_minima(dual(L), norm.dual(), b, cap)
    out = []
    for i in range(1, b + 1):
        j = b - i
        out.append(
            TransferenceProduct(
                i=i,
                product=float(P.values[i - 1] * D.values[j]),
                lower=float(P.lower[i - 1] * D.lower[j]),
                upper=float(P.upper[i - 1] * D.upper[j]),
                heuristic=P.heuristic or D.heuristic,
                primal=P.vectors[i - 1],
                dual=D.vectors[j],
            )
        )
    return out


def brute_force_minima(L: Lattice, box: int = 10, norm: NormSpec = EUCLIDEAN, reduce: bool = True):
    """Reference minima from every coefficient vector in [-box, box]^b.

    With ``reduce`` the box is taken in an LLL-reduced basis; a box in a
    badly conditioned input basis can miss the minima altogether.
    """
    b = L.dim
    if reduce:
        L = Lattice(lll_transform(L.basis)[0])
    grids = np.meshgrid(*([np.arange(-box, box + 1)] * b), indexing="ij")
    C = np.stack([g.ravel() for g in grids], axis=1)
    C = C[C.any(axis=1)]
    V = C @ L.basis
    vals = norm.evaluate(V)[0]
    sel = _greedy(vals, C, V, b, b)
    return vals[np.array(sel)]
