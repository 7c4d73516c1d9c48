"""Inequality checks on flat tori and lattices, emitted as certificates.

Right-hand sides use only provable constants: gamma'_b <= gamma_b <= 2b/3
for b >= 2 and gamma'_1 = 1.  Where an inequality involves an existential
constant, the certificate checks a provable flat-torus bound instead and
reports the normalized ratio in ``params`` so that ensembles show growth.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np

from .lattice import Lattice
from .lattice import dual
from .minima import ENUM_CAP, successive_minima, transference_products
from .norms import DEFAULT_OPTIONS, EUCLIDEAN, NormSpec, OptimizerOptions
from .torus import (
    FlatTorus,
    codim1_systole,
    conformal_systole,
    l2_homology_minima,
    stable_systole,
)

REL_TOL = 1e-9

INEQUALITIES = (
    "THM_A",
    "THM_B_57",
    "COR_C_61",
    "COR_D",
    "THM_E",
    "THM_81",
    "BANASZCZYK_41",
    "TRANSFER_71",
    "MINKOWSKI_710",
    "HERMITE_22",
)

PASS = "PASS"
FAIL = "FAIL"
HEURISTIC_PASS = "HEURISTIC-PASS"
HEURISTIC_INCONCLUSIVE = "HEURISTIC-INCONCLUSIVE"
ERROR = "ERROR"
STATUSES = (PASS, FAIL, HEURISTIC_PASS, HEURISTIC_INCONCLUSIVE, ERROR)


def _plain(x):
    """Recursively convert numpy data to JSON-native Python values."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


@dataclass(frozen=True, eq=False)
class Certificate:
    inequality_id: str
    params: dict
    lhs: float
    rhs: float
    ratio: float
    witnesses: dict
    status: str
    heuristic: bool = False
    message: str = ""

    def __post_init__(self):
        if self.inequality_id not in INEQUALITIES:
            raise ValueError(f"unknown inequality id {self.inequality_id!r}")
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        object.__setattr__(self, "params", _plain(self.params))
        object.__setattr__(self, "witnesses", _plain(self.witnesses))
        for name in ("lhs", "rhs", "ratio"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def to_json(self) -> dict:
        return {
            "inequality_id": self.inequality_id,
            "params": self.params,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "witnesses": self.witnesses,
            "status": self.status,
            "heuristic": self.heuristic,
            "message": self.message,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, obj) -> "Certificate":
        if isinstance(obj, (str, bytes)):
            obj = json.loads(obj)
        return cls(
            inequality_id=obj["inequality_id"],
            params=obj["params"],
            lhs=obj["lhs"],
            rhs=obj["rhs"],
            ratio=obj["ratio"],
            witnesses=obj["witnesses"],
            status=obj["status"],
            heuristic=obj.get("heuristic", False),
            message=obj.get("message", ""),
        )

    @property
    def ok(self) -> bool:
        return self.status in (PASS, HEURISTIC_PASS)


def _ratio(lhs, rhs):
    return lhs / rhs if rhs else math.inf


def _status(lhs, rhs, heuristic=False, lhs_upper=None):
    """PASS/FAIL for exact inputs; for heuristic inputs the certified upper
    bound of the left side decides between HEURISTIC-PASS and -INCONCLUSIVE."""
    if not heuristic:
        return PASS if lhs <= rhs * (1 + REL_TOL) else FAIL
    bound = lhs if lhs_upper is None else lhs_upper
    return HEURISTIC_PASS if bound <= rhs * (1 + REL_TOL) else HEURISTIC_INCONCLUSIVE


def _make(iid, params, lhs, rhs, witnesses, heuristic=False, lhs_upper=None, status=None, message=""):
    return Certificate(
        inequality_id=iid,
        params=params,
        lhs=lhs,
        rhs=rhs,
        ratio=_ratio(lhs, rhs),
        witnesses=witnesses,
        status=status or _status(lhs, rhs, heuristic, lhs_upper),
        heuristic=heuristic,
        message=message,
    )


# -- constants ----------------------------------------------------------------


@dataclass(frozen=True)
class ConstantsTable:
    b: int
    gamma_upper: float
    gamma_prime_upper: float
    gamma_prime_lower: float
    lower_provenance: str
    upper_provenance: str

    def to_json(self) -> dict:
        return dict(self.__dict__)


class ConstantsStore:
    """Provenance-tagged values sharper than the default chain.

    Lower bounds usually come from ``search_dual_critical``; upper bounds
    only enter right-hand sides when ``use_upper`` is set.
    """

    def __init__(self, use_upper: bool = False):
        self.use_upper = use_upper
        self._lower = {}
        self._upper = {}

    def record_lower(self, b: int, value: float, provenance: str):
        if value > self._lower.get(b, (1.0, ""))[0]:
            self._lower[b] = (float(value), provenance)

    def record_upper(self, b: int, value: float, provenance: str):
        if value < self._upper.get(b, (math.inf, ""))[0]:
            self._upper[b] = (float(value), provenance)

    def lower(self, b):
        return self._lower.get(b)

    def upper(self, b):
        return self._upper.get(b) if self.use_upper else None


def gamma_upper(b: int) -> float:
    return 1.0 if b == 1 else 2.0 * b / 3.0


def gamma_constants(b: int, store: ConstantsStore = None) -> ConstantsTable:
    if b < 1:
        raise ValueError("rank b must be >= 1")
    g = gamma_upper(b)
    up, up_src = g, ("gamma'_1 = 1" if b == 1 else "gamma'_b <= gamma_b <= 2b/3")
    lo, lo_src = 1.0, "Z^b"
    if store is not None:
        if store.upper(b) and store.upper(b)[0] < up:
            up, up_src = store.upper(b)
        if store.lower(b):
            lo, lo_src = store.lower(b)
    return ConstantsTable(b, g, up, lo, lo_src, up_src)


# -- dual-critical search -----------------------------------------------------


def dual_critical_objective(L: Lattice) -> float:
    """lambda_1(L) * lambda_1(L*), invariant under scaling and change of basis."""
    a = successive_minima(L, EUCLIDEAN, 1).values[0]
    b = successive_minima(dual(L), EUCLIDEAN, 1).values[0]
    return float(a * b)


@dataclass(frozen=True)
class SearchOptions:
    starts: int = 8
    seed: int = 0
    iters: int = 400
    step: float = 0.2
    min_step: float = 1e-9
    patience: int = 0  # failures before halving the step; 0 means 4 * b^2
    method: str = "lp"  # "lp": linearized trust-region moves; "random": perturbations only
    near: float = 0.15  # vectors within (1 + near) * lambda_1 enter the linear model


@dataclass(frozen=True, eq=False)
class SearchResult:
    lattice: Lattice
    objective: float
    history: tuple  # best-so-far after every iteration
    start: int
    seed: int

    def __iter__(self):
        yield self.lattice
        yield self.objective

    def to_json(self) -> dict:
        return {
            "b": self.lattice.dim,
            "objective": self.objective,
            "basis": self.lattice.basis.tolist(),
            "start": self.start,
            "seed": self.seed,
            "iterations": len(self.history),
        }


def _unit_triangular(T):
    T = np.tril(T)
    return T / abs(np.prod(np.diag(T))) ** (1.0 / len(T))


def _near_minimal(T, G, near):
    """Integer coefficients of the vectors of L = rows(T) within (1+near) lambda_1."""
    from .minima import _enumerate

    L = Lattice(T)
    lam = successive_minima(L, EUCLIDEAN, 1).values[0]
    C, _ = _enumerate(L, lam * (1 + near))
    return C.astype(float), lam


def _lp_move(T, step, near):
    """Trust-region LP step on the Gram matrix G = T T^T.

    Maximizes the linearization of log lambda_1(L)^2 + log lambda_1(L*)^2
    over symmetric X with |X_ij| <= step * scale, using every vector within
    (1 + near) of the minimum as a piece of each min.
    """
    from scipy.optimize import linprog

    b = len(T)
    G = T @ T.T
    Gi = np.linalg.inv(G)
    S, _ = _near_minimal(T, G, near)
    Sd, _ = _near_minimal(np.linalg.inv(T).T, Gi, near)
    iu = np.triu_indices(b)
    mult = np.where(iu[0] == iu[1], 1.0, 2.0)

    def sym_coeffs(M):
        # <M, X> for symmetric X in terms of its upper-triangular entries
        return M[:, iu[0], iu[1]] * mult

    qa = np.einsum("ki,ij,kj->k", S, G, S)
    qb = np.einsum("ki,ij,kj->k", Sd, Gi, Sd)
    A = np.einsum("ki,kj->kij", S, S) / qa[:, None, None]
    Y = Sd @ Gi
    B = -np.einsum("ki,kj->kij", Y, Y) / qb[:, None, None]
    # each piece sits log(q / q_min) above the current minimum
    gaps = np.concatenate([np.log(qa / qa.min()), np.log(qb / qb.min())])
    nv = len(iu[0])
    # variables: X (nv), u, w ; maximize u + w
    rows = [np.concatenate([-sym_coeffs(A), np.ones((len(A), 1)), np.zeros((len(A), 1))], axis=1),
            np.concatenate([-sym_coeffs(B), np.zeros((len(B), 1)), np.ones((len(B), 1))], axis=1)]
    scale = np.abs(G).max()
    res = linprog(
        np.concatenate([np.zeros(nv), [-1.0, -1.0]]),
        A_ub=np.vstack(rows),
        b_ub=gaps,
        bounds=[(-step * scale, step * scale)] * nv + [(None, None)] * 2,
        method="highs",
    )
    if res.status != 0:
        return None
    X = np.zeros((b, b))
    X[iu] = res.x[:nv]
    X = X + np.triu(X, 1).T
    try:
        return np.linalg.cholesky(G + X)
    except np.linalg.LinAlgError:
        return None


def search_dual_critical(b: int, opts: SearchOptions = SearchOptions(), store: ConstantsStore = None) -> SearchResult:
    """Hill climbing for lambda_1(L) lambda_1(L*) over covolume-1 lattices.

    Bases are lower triangular with positive diagonal, which fixes the
    rotation gauge.  Each start alternates linearized LP moves on the Gram
    matrix with random perturbations of the basis, keeps strict improvements
    and halves the step after a run of failures.  The result
    is a lower bound for gamma'_b (both factors from exact enumeration).
    """
    if b < 1:
        raise ValueError("b must be >= 1")
    if b == 1:
        L = Lattice([[1.0]])
        return SearchResult(L, 1.0, (1.0,), 0, opts.seed)
    mask = np.tril(np.ones((b, b), dtype=bool))
    patience = opts.patience or 4 * b * b
    best = None
    history = []
    for s in range(opts.starts):
        rng = np.random.default_rng([opts.seed, s])
        T = np.eye(b) + 0.5 * np.tril(rng.standard_normal((b, b)), -1)
        T = _unit_triangular(T)
        f = dual_critical_objective(Lattice(T))
        step, fails = opts.step, 0
        lp_step = opts.step if opts.method == "lp" else 0.0
        for it in range(opts.iters):
            use_lp = lp_step >= opts.min_step and it % 2 == 0
            if use_lp:
                cand = _lp_move(T, lp_step, opts.near)
            else:
                cand = T + step * np.where(mask, rng.standard_normal((b, b)), 0.0)
            improved = False
            if cand is not None and np.all(np.diag(cand) > 0):
                cand = _unit_triangular(cand)
                fc = dual_critical_objective(Lattice(cand))
                if fc > f:
                    T, f, improved = cand, fc, True
            if use_lp:
                lp_step = min(2 * lp_step, opts.step) if improved else lp_step / 2
            elif improved:
                fails = 0
            else:
                fails += 1
                if fails >= patience:
                    step, fails = step / 2, 0
            if best is None or f > best[1]:
                best = (T.copy(), f, s)
            history.append(best[1])
            if step < opts.min_step and lp_step < opts.min_step:
                break
    L = Lattice(best[0])
    if store is not None:
        store.record_lower(b, best[1], f"search_dual_critical(b={b}, seed={opts.seed}, starts={opts.starts})")
    return SearchResult(L, best[1], tuple(history), best[2], opts.seed)


# -- verifiers ----------------------------------------------------------------


def verify_transference(L: Lattice, cap: int = ENUM_CAP):
    """1 <= lambda_i(L) lambda_{b-i+1}(L*) <= b, one certificate per i."""
    b = L.dim
    out = []
    for t in transference_products(L, EUCLIDEAN, cap):
        low_ok = t.product >= 1 - REL_TOL
        status = _status(t.product, b) if low_ok else FAIL
        out.append(
            _make(
                "TRANSFER_71",
                {"b": b, "i": t.i, "lower_bound": 1.0},
                t.product,
                float(b),
                {"primal": t.primal, "dual": t.dual},
                status=status,
                message="" if low_ok else "product below 1",
            )
        )
    return out


def verify_banaszczyk_general(L: Lattice, p: int, opts: OptimizerOptions = DEFAULT_OPTIONS, cap: int = ENUM_CAP):
    """lambda_i(Lambda^p L, mass) * lambda_{b-i+1}((Lambda^p L)*, comass).

    The constant in the general transference bound is existential; the
    right side here is the provable sandwich bound A * b, where
    mass <= A |x| and comass <= |x| on Lambda^p R^n.
    """
    from .exterior import exterior_power_lattice

    n = L.dim
    E = exterior_power_lattice(L, p)
    b = E.dim
    norm = NormSpec("mass", p=p, n=n, opts=opts)
    A = norm.euclid_constants(b)[1] * norm.dual().euclid_constants(b)[1]
    rhs = A * b
    scale = b * (1 + math.log(b))
    out = []
    for t in transference_products(E, norm, cap):
        out.append(
            _make(
                "BANASZCZYK_41",
                {
                    "n": n,
                    "p": p,
                    "b": b,
                    "i": t.i,
                    "normalized_ratio": t.product / scale,
                    "bounds": [t.lower, t.upper],
                    "rhs_rule": "sandwich: A * b",
                },
                t.product,
                rhs,
                {"primal": t.primal, "dual": t.dual},
                heuristic=t.heuristic,
                lhs_upper=t.upper,
            )
        )
    return out


def verify_corollary_c(T: FlatTorus, store: ConstantsStore = None, cap: int = ENUM_CAP) -> Certificate:
    """stsys_1 * sys_{n-1} <= gamma'_n * vol."""
    n = T.n
    s1 = stable_systole(T, 1, cap=cap)
    sn = codim1_systole(T, cap)
    lhs = s1.value * sn.value
    const = gamma_constants(n, store)
    rhs = const.gamma_prime_upper * T.volume
    exact_product = lhs / T.volume
    return _make(
        "COR_C_61",
        {
            "n": n,
            "volume": T.volume,
            "gamma_prime_upper": const.gamma_prime_upper,
            "gamma_prime_lower": const.gamma_prime_lower,
            "lower_provenance": const.lower_provenance,
            "exact_product": exact_product,
            "equality_ratio": exact_product / const.gamma_prime_lower,
        },
        lhs,
        rhs,
        {"stsys_1": s1.witness, "sys_codim1": sn.witness},
    )


def verify_theorem_b(
    T: FlatTorus,
    p: int,
    q: int = None,
    store: ConstantsStore = None,
    opts: OptimizerOptions = DEFAULT_OPTIONS,
    cap: int = ENUM_CAP,
) -> Certificate:
    """stsys_p * stsys_q <= C(n,p) gamma'_b vol with b = C(n,p), p + q = n."""
    n = T.n
    q = n - p if q is None else q
    if p + q != n or p < 1 or q < 1:
        raise ValueError(f"need p, q >= 1 with p + q = n = {n}, got p={p}, q={q}")
    sp = codim1_systole(T, cap) if p == n - 1 else stable_systole(T, p, opts, cap)
    sq = codim1_systole(T, cap) if q == n - 1 else stable_systole(T, q, opts, cap)
    b = comb(n, p)
    const = gamma_constants(b, store)
    lhs = sp.value * sq.value
    rhs = b * const.gamma_prime_upper * T.volume
    heur = sp.heuristic or sq.heuristic
    up = (sp.bounds[1] if sp.bounds else sp.value) * (sq.bounds[1] if sq.bounds else sq.value)
    return _make(
        "THM_B_57",
        {"n": n, "p": p, "q": q, "b": b, "gamma_prime_upper": const.gamma_prime_upper, "volume": T.volume},
        lhs,
        rhs,
        {"stsys_p": sp.witness, "stsys_q": sq.witness},
        heuristic=heur,
        lhs_upper=up,
    )


def verify_corollary_d(T: FlatTorus, opts: OptimizerOptions = DEFAULT_OPTIONS, cap: int = ENUM_CAP) -> Certificate:
    """conf_p^2 <= (lambda_1 / lambda_b) C(n,p) b with n = 2p, b = C(n,p)."""
    n = T.n
    if n % 2:
        raise ValueError(f"needs even n, got {n}")
    p = n // 2
    b = comb(n, p)
    conf = conformal_systole(T, p, opts, cap)
    prof = l2_homology_minima(T, p, b, cap)
    ratio = float(prof.values[0] / prof.values[-1])
    lhs = conf.value**2
    rhs = ratio * b * b
    up = conf.bounds[1] ** 2 if conf.bounds else lhs
    return _make(
        "COR_D",
        {"n": n, "p": p, "b": b, "l2_ratio": ratio, "assumptions": list(conf.assumptions)},
        lhs,
        rhs,
        {"conformal": conf.witness, "l2_first": prof.vectors[0], "l2_last": prof.vectors[-1]},
        heuristic=conf.heuristic,
        lhs_upper=up,
    )


def verify_theorem_a(
    T: FlatTorus, degrees, opts: OptimizerOptions = DEFAULT_OPTIONS, cap: int = ENUM_CAP
) -> Certificate:
    """prod_j stsys_{k_j} against stsys_k, k = sum k_j.

    On a torus every cohomology class is a sum of cup products, so the
    existential C(k) is replaced by an explicit bound.  Take dual minima
    a_j of (Lambda^{k_j} L)* under comass; some wedge of them pairs with the
    minimal k-class h to a nonzero integer, and comass is submultiplicative
    up to k! / prod k_j!.  With the sandwich transference
    lambda_1(mass) lambda_b(comass) <= A_j b_j this gives

        prod stsys_{k_j} <= (k! / prod k_j!) prod (A_j b_j) stsys_k.

    ``empirical_constant`` divides the left side by
    prod b_j (1 + log b_j) * stsys_k.
    """
    degrees = [int(d) for d in degrees]
    n = T.n
    k = sum(degrees)
    if not degrees or min(degrees) < 1 or k > n:
        raise ValueError(f"need degrees k_j >= 1 with sum <= n = {n}, got {degrees}")
    reports = [stable_systole(T, d, opts, cap) for d in degrees]
    top = stable_systole(T, k, opts, cap)
    lhs = math.prod(r.value for r in reports)
    lhs_up = math.prod(r.bounds[1] if r.bounds else r.value for r in reports)
    top_lo = top.bounds[0] if top.bounds else top.value
    multinomial = factorial(k) / math.prod(factorial(d) for d in degrees)
    sandwich, scale = 1.0, 1.0
    for d in degrees:
        b = comb(n, d)
        sandwich *= NormSpec("mass", p=d, n=n).euclid_constants(b)[1] * b
        scale *= b * (1 + math.log(b))
    rhs = multinomial * sandwich * top_lo
    return _make(
        "THM_A",
        {
            "n": n,
            "degrees": degrees,
            "k": k,
            "betti": [comb(n, d) for d in degrees],
            "stsys_k": top.value,
            "empirical_constant": lhs / (scale * top.value),
            "rhs_rule": "(k!/prod k_j!) * prod(A_j b_j) * stsys_k",
        },
        lhs,
        rhs,
        {"stsys_factors": [r.witness for r in reports], "stsys_k": top.witness},
        heuristic=any(r.heuristic for r in reports) or top.heuristic,
        lhs_upper=lhs_up,
    )


def verify_theorem_e(T: FlatTorus, p: int, opts: OptimizerOptions = DEFAULT_OPTIONS, cap: int = ENUM_CAP) -> Certificate:
    """stsys_p against vol^(1/k), n = k p.

    C(n) is existential, so the checked right side is the provable bound
    A sqrt(gamma_b) vol^(1/k) (Hermite on Lambda^p L, covolume vol^C(n-1,p-1));
    ``empirical_constant`` is stsys_p / ((b (1 + log b))^((k-1)/k) vol^(1/k)).
    """
    n = T.n
    if n % p:
        raise ValueError(f"n = {n} is not a multiple of p = {p}")
    k = n // p
    b = comb(n, p)
    s = stable_systole(T, p, opts, cap)
    A = NormSpec("mass", p=p, n=n).euclid_constants(b)[1]
    vk = T.volume ** (1.0 / k)
    rhs = A * math.sqrt(gamma_upper(b)) * vk
    emp = s.value / ((b * (1 + math.log(b))) ** ((k - 1) / k) * vk)
    return _make(
        "THM_E",
        {"n": n, "p": p, "k": k, "b": b, "empirical_constant": emp, "rhs_rule": "A * sqrt(gamma_b) * vol^(1/k)"},
        s.value,
        rhs,
        {"stsys_p": s.witness},
        heuristic=s.heuristic,
        lhs_upper=s.bounds[1] if s.bounds else None,
    )


def theorem_81_constant(n: int, p: int) -> float:
    b = comb(n, p)
    return (b * factorial(n) / factorial(p) ** 3) ** (1 / 3) * b ** (2 / 3)


def verify_theorem_81(T: FlatTorus, p: int, opts: OptimizerOptions = DEFAULT_OPTIONS, cap: int = ENUM_CAP) -> Certificate:
    """stsys_p <= (C(n,p) n! / (p!)^3)^(1/3) b^(2/3) vol^(1/3), n = 3p."""
    n = T.n
    if n != 3 * p:
        raise ValueError(f"needs n = 3p, got n={n}, p={p}")
    s = stable_systole(T, p, opts, cap)
    rhs = theorem_81_constant(n, p) * T.volume ** (1 / 3)
    return _make(
        "THM_81",
        {"n": n, "p": p, "b": comb(n, p), "volume": T.volume},
        s.value,
        rhs,
        {"stsys_p": s.witness},
        heuristic=s.heuristic,
        lhs_upper=s.bounds[1] if s.bounds else None,
    )


def ball_volume(b: int) -> float:
    return math.pi ** (b / 2) / math.gamma(b / 2 + 1)


def verify_minkowski(L: Lattice, D: float = None, cap: int = ENUM_CAP) -> Certificate:
    """vol(unit ball) <= (2D)^b covol(L) whenever lambda_1(L) >= 1/D (default D = 1/lambda_1)."""
    b = L.dim
    lam = float(successive_minima(L, EUCLIDEAN, 1, cap).values[0])
    if D is None:
        D = 1.0 / lam
    lhs = ball_volume(b)
    rhs = (2 * D) ** b * L.covolume
    params = {"b": b, "D": D, "lambda_1": lam, "covolume": L.covolume}
    if lam * D < 1 - REL_TOL:
        return _make(
            "MINKOWSKI_710", params, lhs, rhs, {}, status=ERROR,
            message=f"precondition lambda_1 >= 1/D fails: {lam:.12g} < {1 / D:.12g}",
        )
    return _make("MINKOWSKI_710", params, lhs, rhs, {})


def verify_hermite(L: Lattice, cap: int = ENUM_CAP) -> Certificate:
    """lambda_1^2 / covol^(2/b) <= gamma_b <= 2b/3."""
    b = L.dim
    prof = successive_minima(L, EUCLIDEAN, 1, cap)
    lhs = float(prof.values[0] ** 2 / L.covolume ** (2 / b))
    return _make("HERMITE_22", {"b": b}, lhs, gamma_upper(b), {"shortest": prof.vectors[0]})
