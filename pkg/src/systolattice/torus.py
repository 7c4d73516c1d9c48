"""Systoles of flat tori T^n = R^n / L.

Integral p-homology of T^n is the lattice Lambda^p L inside Lambda^p R^n,
and its stable norm is the mass norm.  Every computation runs on the
covolume-1 rescaling L0 and is carried back by homogeneity: a p-class
scales like c^p under L -> cL, the total volume like c^n.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .exterior import exterior_power_lattice
from .lattice import Lattice, dual
from .minima import ENUM_CAP, MinimaProfile, successive_minima
from .norms import DEFAULT_OPTIONS, EUCLIDEAN, NormSpec, OptimizerOptions

CONSTANT_FORM = "constant-form-minimizer"


@dataclass(frozen=True, eq=False)
class FlatTorus:
    lattice: Lattice
    volume: float = field(init=False)

    def __post_init__(self):
        if not isinstance(self.lattice, Lattice):
            object.__setattr__(self, "lattice", Lattice(self.lattice))
        object.__setattr__(self, "volume", self.lattice.covolume)

    @property
    def n(self) -> int:
        return self.lattice.dim

    def betti(self, p: int) -> int:
        return comb(self.n, p)

    def normalized(self) -> Lattice:
        """L0 = vol^(-1/n) L, the unit-volume torus."""
        return self.lattice.scaled(self.volume ** (-1.0 / self.n))

    def scaled(self, c: float) -> "FlatTorus":
        return FlatTorus(self.lattice.scaled(c))


@dataclass(frozen=True, eq=False)
class SystoleReport:
    kind: str  # stable | codim1 | conformal
    n: int
    p: int
    value: float
    volume: float
    witness: np.ndarray  # ambient coordinates of the minimizing class
    coefficients: np.ndarray  # integer coordinates of the class
    heuristic: bool = False
    bounds: tuple = None
    assumptions: tuple = ()

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "p": self.p,
            "value": self.value,
            "volume": self.volume,
            "heuristic": self.heuristic,
            "bounds": list(self.bounds) if self.bounds is not None else None,
            "assumptions": list(self.assumptions),
            "witness": np.asarray(self.witness).tolist(),
            "coefficients": np.asarray(self.coefficients).astype(int).tolist(),
        }


def _check_degree(T, p):
    if not 1 <= p <= T.n:
        raise ValueError(f"degree p={p} outside [1, {T.n}]")


def _unit_mass_minimum(T: FlatTorus, p: int, opts: OptimizerOptions, cap: int):
    E = exterior_power_lattice(T.normalized(), p)
    norm = NormSpec("mass", p=p, n=T.n, opts=opts)
    return successive_minima(E, norm, 1, cap)


def stable_systole(T: FlatTorus, p: int, opts: OptimizerOptions = DEFAULT_OPTIONS, cap: int = ENUM_CAP) -> SystoleReport:
    """stsys_p = lambda_1(Lambda^p L0, mass) * vol^(p/n)."""
    _check_degree(T, p)
    prof = _unit_mass_minimum(T, p, opts, cap)
    s = T.volume ** (p / T.n)
    bounds = (float(prof.lower[0] * s), float(prof.upper[0] * s)) if prof.heuristic else None
    return SystoleReport(
        kind="stable",
        n=T.n,
        p=p,
        value=float(prof.values[0] * s),
        volume=T.volume,
        witness=prof.vectors[0] * s,
        coefficients=prof.coefficients[0],
        heuristic=prof.heuristic,
        bounds=bounds,
    )


def codim1_systole(T: FlatTorus, cap: int = ENUM_CAP) -> SystoleReport:
    """sys_{n-1} = vol * lambda_1(L*): a dual vector u is the (n-1)-class of
    the hyperplanes u^perp, whose area per unit cell is vol * |u|."""
    if T.n < 2:
        raise ValueError("codimension-1 systole needs n >= 2")
    prof = successive_minima(dual(T.lattice), EUCLIDEAN, 1, cap)
    return SystoleReport(
        kind="codim1",
        n=T.n,
        p=T.n - 1,
        value=float(T.volume * prof.values[0]),
        volume=T.volume,
        witness=prof.vectors[0],
        coefficients=prof.coefficients[0],
    )


def l2_homology_minima(T: FlatTorus, p: int, count: int = None, cap: int = ENUM_CAP) -> MinimaProfile:
    """Successive minima of Lambda^p L under |h|_L2 = |h| / sqrt(vol).

    Harmonic forms on a flat torus are the constant ones, so the L2 norm of
    a class is its Euclidean norm over the square root of the volume.
    Computed at unit volume and rescaled by vol^(p/n - 1/2).
    """
    _check_degree(T, p)
    b = comb(T.n, p)
    k = b if count is None else count
    E = exterior_power_lattice(T.normalized(), p)
    prof = successive_minima(E, EUCLIDEAN, k, cap)
    s = T.volume ** (p / T.n - 0.5)
    norm = NormSpec("l2_homology", scale=1.0 / np.sqrt(T.volume))
    return MinimaProfile(
        norm=norm,
        values=prof.values * s,
        vectors=prof.vectors * T.volume ** (p / T.n),
        coefficients=prof.coefficients,
        lower=prof.lower * s,
        upper=prof.upper * s,
        heuristic=False,
        enumerated=prof.enumerated,
    )


def conformal_systole(
    T: FlatTorus, p: int = None, opts: OptimizerOptions = DEFAULT_OPTIONS, cap: int = ENUM_CAP
) -> SystoleReport:
    """conf_p = min ||h||_L2 over nonzero integral p-classes, n = 2p.

    On constant forms ||h||_L2 = mass(h) / sqrt(vol), which for n = 2p is
    scale invariant and equals lambda_1(Lambda^p L0, mass).  That constants
    minimize the comass-type L2 norm is assumed and tagged for p >= 2.
    """
    n = T.n
    if p is None:
        p = n // 2
    if n != 2 * p:
        raise ValueError(f"conformal systole needs n = 2p, got n={n}, p={p}")
    prof = _unit_mass_minimum(T, p, opts, cap)
    s = T.volume ** (p / n)
    return SystoleReport(
        kind="conformal",
        n=n,
        p=p,
        value=float(prof.values[0]),
        volume=T.volume,
        witness=prof.vectors[0] * s,
        coefficients=prof.coefficients[0],
        heuristic=prof.heuristic,
        bounds=(float(prof.lower[0]), float(prof.upper[0])) if prof.heuristic else None,
        assumptions=(CONSTANT_FORM,) if p >= 2 else (),
    )
