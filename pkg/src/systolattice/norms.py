"""Mass and comass norms on Lambda^p R^n, and the NormSpec abstraction.

comass(w) = max <w, e_1 ^ ... ^ e_p> over orthonormal p-frames
mass(v)   = max <v, w> over comass(w) <= 1

Exact closed forms are used in degrees 1, n-1, n (Euclidean) and 2, n-2
(normal form of a 2-vector).  Other degrees fall back to optimization and
are flagged ``heuristic``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from math import comb

import numpy as np
from scipy.optimize import linprog, minimize

from .errors import OptimizerError, SystolatticeError
from .exterior import (
    PVector,
    canonical_coefficients,
    hodge_star_coords,
    skew_matrix,
    wedge_indices,
)


@dataclass(frozen=True)
class OptimizerOptions:
    starts: int = 32
    seed: int = 0
    tol: float = 1e-10
    max_iter: int = 10_000
    step: float = 0.1
    # cutting-plane mass
    mass_tol: float = 1e-9
    cut_max_iter: int = 200
    cut_starts: int = 4
    refine_every: int = 10
    refine_gap: float = 1e-2
    polish: int = 4


GRADIENT_PHASE = 200


DEFAULT_OPTIONS = OptimizerOptions()


@dataclass(frozen=True, eq=False)
class ComassResult:
    value: float
    frame: np.ndarray
    heuristic: bool
    # every local optimum reached, one per start (used as cuts by the mass LP)
    candidates: tuple = field(default=(), repr=False)

    def __iter__(self):
        yield self.value
        yield self.frame


@dataclass(frozen=True, eq=False)
class MassResult:
    value: float
    lower: float
    upper: float
    heuristic: bool
    iterations: int = 0
    converged: bool = True
    # v == sum_j weights[j] * simple[j] up to ``residual``
    weights: np.ndarray = field(default=None, repr=False)
    simple: np.ndarray = field(default=None, repr=False)
    residual: float = 0.0

    def __float__(self):
        return self.value


def _as_coords(w, n=None, p=None):
    if isinstance(w, PVector):
        return w.coords, w.n, w.p
    w = np.asarray(w, dtype=float).reshape(-1)
    if n is None or p is None:
        raise ValueError("raw coordinates need explicit n and p")
    if w.size != comb(n, p):
        raise ValueError(f"expected {comb(n, p)} coordinates, got {w.size}")
    return w, n, p


def closed_form_available(n: int, p: int) -> bool:
    return p in (1, 2, n - 2, n - 1, n)


# -- frames -----------------------------------------------------------------


def _orthonormalize(E):
    """Row-orthonormalize a stack of p x n frames, keeping orientation."""
    Q, R = np.linalg.qr(np.swapaxes(E, -1, -2))
    d = np.sign(np.diagonal(R, axis1=-2, axis2=-1))
    d[d == 0] = 1.0
    return np.swapaxes(Q * d[..., None, :], -1, -2)


def _complement_frame(F, n):
    F = np.atleast_2d(F)
    if F.shape[0] == 0:
        return np.eye(n)
    _, _, Vt = np.linalg.svd(F)
    return Vt[F.shape[0] :]


def frame_value(w, frames, n, p):
    """<w, e_1 ^ ... ^ e_p> for a stack of frames (..., p, n)."""
    idx = np.array(wedge_indices(n, p))
    sub = frames[..., :, idx]  # (..., p, m, p)
    minors = np.linalg.det(np.moveaxis(sub, -3, -2))
    return minors @ w


def _frame_gradient(w, E, n, p):
    """d/dE of frame_value, by multilinearity in each row."""
    S = E.shape[0]
    eye = np.eye(n)
    mod = np.broadcast_to(E[:, None, None, :, :], (S, p, n, p, n)).copy()
    for k in range(p):
        mod[:, k, :, k, :] = eye
    return frame_value(w, mod, n, p)  # (S, p, n)


def _orient(frame, w, n, p):
    if frame.shape[0] and frame_value(w, frame[None], n, p)[0] < 0:
        frame = frame.copy()
        frame[0] = -frame[0]
    return frame


def _comass_closed(w, n, p):
    euclid = float(np.linalg.norm(w))
    if p == n:
        frame = np.eye(n)
        return abs(float(w[0])), _orient(frame, w, n, p)
    if p == 1:
        frame = (w / euclid if euclid else np.eye(n)[0])[None, :]
        return euclid, frame
    if p == n - 1:
        normal = hodge_star_coords(w, n, p)  # a vector in R^n
        frame = _complement_frame(normal[None, :] if euclid else np.eye(n)[:1], n)
        return euclid, _orient(frame, w, n, p)
    if p == 2:
        A = skew_matrix(w, n)
        U, s, Vt = np.linalg.svd(A)
        frame = np.vstack([U[:, 0], Vt[0]])
        return float(s[0]), _orient(frame, w, n, p)
    if p == n - 2:
        star = hodge_star_coords(w, n, p)
        val, f2 = _comass_closed(star, n, 2)
        frame = _complement_frame(f2, n)
        return val, _orient(frame, w, n, p)
    raise ValueError(f"no closed form for comass in degree {p} of R^{n}")


def _chart_objective(w, E0, C, n, p):
    """-<w, xi(F)> on the graph chart F = E0 + Y C of the Grassmannian.

    xi(F) is the unit simple p-vector of span(F); value and gradient are
    GL+-invariant so F need not be orthonormal.
    """

    def fg(y):
        F = E0 + y.reshape(p, n - p) @ C
        M = F @ F.T
        vol = math.sqrt(np.linalg.det(M))
        fv = frame_value(w, F[None], n, p)[0]
        G = _frame_gradient(w, F[None], n, p)[0]
        gF = (G - fv * np.linalg.solve(M, F)) / vol
        return -fv / vol, -(gF @ C.T).ravel()

    return fg


def _polish(w, E0, n, p, tol, maxiter):
    """BFGS refinement of one frame; returns (value, frame, converged)."""
    if p == n:
        return float(frame_value(w, E0[None], n, p)[0]), E0, True, 0
    C = _complement_frame(E0, n)
    fg = _chart_objective(w, E0, C, n, p)
    res = minimize(
        fg,
        np.zeros(p * (n - p)),
        jac=True,
        method="BFGS",
        options={"gtol": tol, "maxiter": max(1, maxiter)},
    )
    F = E0 + res.x.reshape(p, n - p) @ C
    E = _orthonormalize(F[None])[0]
    val = float(frame_value(w, E[None], n, p)[0])
    # status 2: no further progress possible in floating point
    return val, E, res.status in (0, 2), res.nit


def comass_ascent(w, n=None, p=None, opts: OptimizerOptions = DEFAULT_OPTIONS, warm=None):
    """Multi-start projected-gradient ascent over orthonormal p-frames.

    All starts run as one batch of gradient steps (re-orthonormalized after
    each step); the best few are then refined by BFGS in a local chart,
    which copes with the nearly flat ridges that appear when the top
    canonical coefficients almost coincide.  The value is a lower bound on
    the comass.  ``warm`` frames, if given, replace the first random starts.
    """
    w, n, p = _as_coords(w, n, p)
    if p < 1:
        raise ValueError("comass needs degree p >= 1")
    rng = np.random.default_rng(opts.seed)
    S = max(1, opts.starts)
    E = rng.standard_normal((S, p, n))
    # deterministic start at the largest coordinate p-plane
    top = wedge_indices(n, p)[int(np.argmax(np.abs(w)))]
    E[0] = np.eye(n)[list(top)]
    if warm is not None:
        warm = np.asarray(warm, dtype=float).reshape(-1, p, n)[: S - 1]
        E[1 : 1 + len(warm)] = warm
    E = _orthonormalize(E)
    f = frame_value(w, E, n, p)
    E[f < 0, 0] *= -1
    f = np.abs(f)

    gtol = opts.tol * max(1.0, float(np.linalg.norm(w)))
    step = np.full(S, opts.step)
    done = np.zeros(S, dtype=bool)
    used = 0
    for used in range(1, min(opts.max_iter, GRADIENT_PHASE) + 1):
        active = ~done
        if not active.any():
            break
        Ea = E[active]
        G = _frame_gradient(w, Ea, n, p)
        G = G - (G @ np.swapaxes(Ea, -1, -2)) @ Ea
        gnorm = np.linalg.norm(G.reshape(len(Ea), -1), axis=1)
        t = step[active][:, None, None]
        En = _orthonormalize(Ea + t * G)
        fn = frame_value(w, En, n, p)
        ok = fn > f[active]
        ai = np.flatnonzero(active)
        acc = ai[ok]
        E[acc] = En[ok]
        f[acc] = fn[ok]
        step[acc] = np.minimum(step[acc] * 1.5, 10.0)
        step[ai[~ok]] *= 0.5
        # converged once the next trial update is below tol
        done[ai] = (gnorm < gtol) | (step[ai] * gnorm < opts.tol)

    order = np.argsort(-f, kind="stable")
    for s in order[: max(1, opts.polish)]:
        if done[s]:
            continue
        val, Es, ok, nit = _polish(w, E[s], n, p, gtol, opts.max_iter - used)
        if val >= f[s]:
            E[s], f[s] = Es, val
        done[s] = ok
    if not done.any():
        best = int(np.argmax(f))
        raise OptimizerError(
            f"comass ascent: all {S} starts hit the iteration cap {opts.max_iter}",
            best=(float(f[best]), E[best]),
        )
    # every start's value is attained by a frame, so all are valid lower bounds
    fmax = f.max()
    ties = np.flatnonzero(f >= fmax - 1e-12 * max(1.0, fmax))
    pick = min(ties, key=lambda s: tuple(np.round(E[s].ravel(), 12)))
    return ComassResult(float(f[pick]), E[pick].copy(), True, tuple(E))


def comass(w, n=None, p=None, opts: OptimizerOptions = DEFAULT_OPTIONS, method: str = "auto"):
    """Comass of a p-covector; returns ComassResult (unpacks to value, frame).

    ``method``: "auto" (closed form when available), "closed", or "ascent".
    """
    w, n, p = _as_coords(w, n, p)
    if p < 1:
        raise ValueError("comass needs degree p >= 1")
    if method == "closed" or (method == "auto" and closed_form_available(n, p)):
        value, frame = _comass_closed(w, n, p)
        return ComassResult(value, frame, False, (frame,))
    if method not in ("auto", "ascent"):
        raise ValueError(f"unknown comass method {method!r}")
    return comass_ascent(w, n, p, opts)


def _closed_batch(X, n, p, kind):
    """Closed-form mass or comass of each row of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if p in (1, n - 1, n):
        return np.linalg.norm(X, axis=1)
    if p == n - 2 and p != 2:
        X = hodge_star_coords(X, n, p)
    A = np.zeros((len(X), n, n))
    iu = np.array(wedge_indices(n, 2)).T
    A[:, iu[0], iu[1]] = X
    A = A - np.swapaxes(A, 1, 2)
    coef = np.linalg.svd(A, compute_uv=False)[:, 0 : 2 * (n // 2) : 2]
    return coef.sum(axis=1) if kind == "mass" else coef[:, 0]


def _mass_closed(v, n, p):
    if p in (1, n - 1, n):
        return float(np.linalg.norm(v))
    if p == 2:
        return float(canonical_coefficients(v, n).sum())
    if p == n - 2:
        return _mass_closed(hodge_star_coords(v, n, p), n, 2)
    raise ValueError(f"no closed form for mass in degree {p} of R^{n}")


def _wedge_jacobian(F, n, p):
    """Unit simple p-vector of frame F and its derivative in the entries of F."""
    c = _simple_coords(F[None], n, p)[0]
    mod = np.broadcast_to(F, (p, n, p, n)).copy()
    for k in range(p):
        mod[k, :, k, :] = np.eye(n)
    J = _simple_coords(mod, n, p)  # (p, n, m)
    nc = np.linalg.norm(c)
    xi = c / nc
    J = J / nc
    J = J - np.einsum("m,abk,k->abm", xi, J, xi)
    return xi, J


def _polish_decomposition(v, n, p, y, frames, maxiter=200):
    """Locally minimize sum c_j subject to sum c_j xi(F_j) = v.

    Weights and frames move together (SLSQP, frames in graph charts).
    Returns (weights, simple, residual, multiplier) where the multiplier
    solves the KKT system by least squares; it is the candidate dual optimum.
    """
    r, m = len(y), v.size
    d = p * (n - p)
    charts = [_complement_frame(F, n) for F in frames]

    def unpack(x):
        Ys = x[r:].reshape(r, p, n - p)
        return x[:r], [frames[j] + Ys[j] @ charts[j] for j in range(r)]

    def parts(x):
        c, Fs = unpack(x)
        out = [_wedge_jacobian(F, n, p) for F in Fs]
        return c, out

    def cons(x):
        c, out = parts(x)
        return sum(c[j] * out[j][0] for j in range(r)) - v

    def cjac(x):
        c, out = parts(x)
        jac = np.zeros((m, r + r * d))
        for j, (xi, J) in enumerate(out):
            jac[:, j] = xi
            jac[:, r + j * d : r + (j + 1) * d] = c[j] * np.einsum(
                "abm,qb->maq", J, charts[j]
            ).reshape(m, d)
        return jac

    grad = np.concatenate([np.ones(r), np.zeros(r * d)])
    x0 = np.concatenate([y, np.zeros(r * d)])
    x = x0
    # SLSQP corrupts its workspace when equality constraints outnumber the
    # variables; such small supports are left as the LP found them
    if r * (1 + d) >= m:
        res = minimize(
            lambda x: (x[:r].sum(), grad),
            x0,
            jac=True,
            method="SLSQP",
            constraints=[{"type": "eq", "fun": cons, "jac": cjac}],
            bounds=[(0, None)] * r + [(None, None)] * (r * d),
            options={"maxiter": maxiter, "ftol": 1e-15},
        )
        if np.all(np.isfinite(res.x)):
            x = res.x
    c, out = parts(x)
    simple = np.array([o[0] for o in out])
    resid = v - c @ simple
    # stationarity: grad = jac^T lam on the coordinates with c_j > 0
    jac = cjac(x)
    active = np.concatenate([c > 1e-12 * max(c.sum(), 1e-300), np.repeat(c > 0, d)])
    lam = np.linalg.lstsq(jac[:, active].T, grad[active], rcond=None)[0]
    return c, simple, float(np.linalg.norm(resid)), lam


def mass_cutting_plane(v, n=None, p=None, opts: OptimizerOptions = DEFAULT_OPTIONS):
    """Mass by cutting planes on the comass unit ball, with local refinement.

    Kelley rounds solve max <v, w> s.t. <w, xi> <= 1 over the simple unit
    p-vectors found so far and separate with a comass ascent.  The LP dual
    is a decomposition v = sum y_j xi_j; every few rounds its weights and
    frames are refined jointly, and the KKT multiplier of the refined
    decomposition is tried as a dual point.

    ``upper`` = sum of weights + sqrt(m) * |residual| is certified.
    ``lower`` = <v, w> / comass(w) is as good as the comass ascent.
    """
    v, n, p = _as_coords(v, n, p)
    m = v.size
    euclid = float(np.linalg.norm(v))
    if euclid == 0.0:
        return MassResult(0.0, 0.0, 0.0, False, weights=np.zeros(0), simple=np.zeros((0, m)))
    root = math.sqrt(m)
    Xi = np.vstack([np.eye(m), -np.eye(m)])
    frames = []
    for sgn in (1.0, -1.0):
        for I in wedge_indices(n, p):
            F = np.eye(n)[list(I)]
            F[0] *= sgn
            frames.append(F)
    sub = replace(opts, starts=opts.cut_starts, polish=1)
    lower, upper = euclid, root * euclid
    best = (np.zeros(0), np.zeros((0, m)), euclid)
    warm = None
    converged = False
    it = 0

    def try_dual(w, seed):
        nonlocal lower
        sep = comass_ascent(w, n, p, replace(sub, seed=seed), warm=warm)
        if sep.value > 0:
            lower = max(lower, float(v @ w) / sep.value)
        return sep

    def add_cuts(sep, w):
        nonlocal Xi
        new = [F for F in sep.candidates if _simple_coords(F, n, p) @ w > 1 + 1e-12]
        for F in new:
            xi = _simple_coords(F, n, p)
            G = F.copy()
            G[0] = -G[0]
            Xi = np.vstack([Xi, xi, -xi])
            frames.extend([F, G])
        return bool(new)

    for it in range(1, opts.cut_max_iter + 1):
        res = linprog(-v, A_ub=Xi, b_ub=np.ones(len(Xi)), bounds=(None, None), method="highs")
        if res.status != 0:
            raise SystolatticeError(f"mass LP failed: {res.message}")
        w = res.x
        y = np.maximum(-res.ineqlin.marginals, 0.0)
        rn = float(np.linalg.norm(v - Xi.T @ y))
        if y.sum() + root * rn < upper:
            upper = float(y.sum() + root * rn)
            keep = y > 0
            best = (y[keep], Xi[keep], rn)
        sep = try_dual(w, opts.seed + it)
        if it % opts.refine_every == 0 or upper - lower <= opts.refine_gap * upper:
            keep = np.flatnonzero(y > 1e-12 * y.sum())
            c, simple, rc, lam = _polish_decomposition(v, n, p, y[keep], [frames[j] for j in keep])
            cert = float(c.sum() + root * rc)
            if cert < upper:
                upper = cert
                pos = c > 0
                best = (c[pos], simple[pos], rc)
            if np.all(np.isfinite(lam)) and np.any(lam):
                add_cuts(try_dual(lam, opts.seed + 7919 * it), lam)
        if upper - lower <= opts.mass_tol * upper:
            converged = True
            break
        if not add_cuts(sep, w) and it % opts.refine_every:
            # LP optimum already feasible: force a refinement next round
            continue
        warm = sep.frame[None]
    weights, simple, rn = best
    return MassResult(
        value=upper,
        lower=lower,
        upper=upper,
        heuristic=True,
        iterations=it,
        converged=converged,
        weights=weights,
        simple=simple,
        residual=rn,
    )


def _simple_coords(frame, n, p):
    idx = np.array(wedge_indices(n, p))
    return np.linalg.det(np.moveaxis(frame[..., idx], -3, -2))


def mass(v, n=None, p=None, opts: OptimizerOptions = DEFAULT_OPTIONS, method: str = "auto"):
    """Mass norm of a p-vector; returns MassResult.

    Closed forms are exact (lower == upper == value, heuristic False).
    The cutting-plane path returns a certified upper bound as ``value``
    with the Euclidean norm as certified ``lower``.
    """
    v, n, p = _as_coords(v, n, p)
    if p < 1:
        raise ValueError("mass needs degree p >= 1")
    if method == "closed" or (method == "auto" and closed_form_available(n, p)):
        val = _mass_closed(v, n, p)
        return MassResult(val, val, val, False)
    if method not in ("auto", "cutting_plane"):
        raise ValueError(f"unknown mass method {method!r}")
    res = mass_cutting_plane(v, n, p, opts)
    return replace(res, lower=float(np.linalg.norm(v)))


# -- NormSpec ---------------------------------------------------------------

KINDS = ("euclidean", "mass", "comass", "l2_homology", "l2_dual")
_DUAL_KIND = {
    "euclidean": "euclidean",
    "mass": "comass",
    "comass": "mass",
    "l2_homology": "l2_dual",
    "l2_dual": "l2_homology",
}


def ambient_dim(length: int, p: int) -> int:
    n = p
    while comb(n, p) < length:
        n += 1
    if comb(n, p) != length:
        raise ValueError(f"no n with C(n, {p}) = {length}")
    return n


@dataclass(frozen=True)
class NormSpec:
    """A norm on some R^m.

    For mass/comass, R^m = Lambda^p R^n with m = C(n, p); ``n`` may be left
    unset and is then inferred from the vector length.  The l2 kinds are
    Euclidean norms multiplied by ``scale``.
    """

    kind: str = "euclidean"
    p: int = None
    n: int = None
    scale: float = 1.0
    opts: OptimizerOptions = field(default=DEFAULT_OPTIONS, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown norm kind {self.kind!r}; expected one of {KINDS}")
        if self.kind in ("mass", "comass") and (self.p is None or self.p < 1):
            raise ValueError(f"{self.kind} norm needs a degree p >= 1")

    @classmethod
    def parse(cls, text: str, opts: OptimizerOptions = DEFAULT_OPTIONS) -> "NormSpec":
        """``euclidean``, ``mass:P`` or ``comass:P``."""
        text = text.strip()
        if text == "euclidean":
            return cls("euclidean", opts=opts)
        kind, sep, deg = text.partition(":")
        if kind in ("mass", "comass") and sep:
            try:
                p = int(deg)
            except ValueError:
                raise ValueError(f"bad degree in norm spec {text!r}") from None
            return cls(kind, p=p, opts=opts)
        raise ValueError(f"bad norm spec {text!r}; expected euclidean, mass:P or comass:P")

    def __str__(self):
        if self.kind in ("mass", "comass"):
            return f"{self.kind}:{self.p}"
        if self.kind.startswith("l2"):
            return f"{self.kind}(scale={self.scale:.6g})"
        return self.kind

    def dual(self) -> "NormSpec":
        scale = 1.0 / self.scale if self.kind.startswith("l2") else 1.0
        return replace(self, kind=_DUAL_KIND[self.kind], scale=scale)

    def _n(self, length):
        return self.n if self.n is not None else ambient_dim(length, self.p)

    def euclid_constants(self, length: int):
        """(a, A) with a*|x| <= norm(x) <= A*|x|."""
        if self.kind == "euclidean":
            return 1.0, 1.0
        if self.kind.startswith("l2"):
            return self.scale, self.scale
        n = self._n(length)
        if self.p in (1, n - 1, n):
            return 1.0, 1.0
        if self.p in (2, n - 2):
            # |x|^2 is the sum of squared canonical coefficients, at most n // 2 of them
            root = math.sqrt(n // 2)
        else:
            root = math.sqrt(comb(n, self.p))
        if self.kind == "mass":
            return 1.0, root
        return 1.0 / root, 1.0

    def is_exact(self, length: int) -> bool:
        if self.kind in ("mass", "comass"):
            return closed_form_available(self._n(length), self.p)
        return True

    def bounds(self, x):
        """(value, lower, upper, heuristic) at ambient vector ``x``."""
        x = np.asarray(x, dtype=float)
        if self.kind == "euclidean":
            v = float(np.linalg.norm(x))
            return v, v, v, False
        if self.kind.startswith("l2"):
            v = self.scale * float(np.linalg.norm(x))
            return v, v, v, False
        n = self._n(x.size)
        if self.kind == "mass":
            r = mass(x, n, self.p, self.opts)
            return r.value, r.lower, r.upper, r.heuristic
        r = comass(x, n, self.p, self.opts)
        e = float(np.linalg.norm(x))
        return r.value, r.value, (e if r.heuristic else r.value), r.heuristic

    def evaluate(self, X):
        """Row-wise (values, lower, upper, heuristic) for a stack of vectors."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        e = np.linalg.norm(X, axis=1)
        if self.kind == "euclidean":
            return e, e, e, False
        if self.kind.startswith("l2"):
            v = self.scale * e
            return v, v, v, False
        n = self._n(X.shape[1])
        if closed_form_available(n, self.p):
            v = _closed_batch(X, n, self.p, self.kind)
            return v, v, v, False
        rows = [self.bounds(x) for x in X]
        val, lo, hi = (np.array([r[i] for r in rows]) for i in range(3))
        return val, lo, hi, True

    def __call__(self, x) -> float:
        return self.bounds(x)[0]


EUCLIDEAN = NormSpec("euclidean")
