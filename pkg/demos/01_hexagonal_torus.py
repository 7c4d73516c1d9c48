"""The hexagonal torus is the extremal shape in dimension two.

For a flat 2-torus the product of its shortest closed geodesic with the
shortest geodesic of the dual picture, divided by the area, is at most
gamma'_2.  We compute that product on the hexagonal torus, then let the
dual-critical search find the same number from random starting shapes.
"""

from math import sqrt

from systolattice import FlatTorus, SearchOptions, codim1_systole, hexagonal, search_dual_critical, stable_systole
from systolattice.verifiers import ConstantsStore, gamma_constants, verify_corollary_c

T = FlatTorus(hexagonal())
s1 = stable_systole(T, 1)
c1 = codim1_systole(T)
print(f"hexagonal torus, area {T.volume:.6f}")
print(f"  shortest loop        {s1.value:.12f}   (4/3)^(1/4) = {(4 / 3) ** 0.25:.12f}")
print(f"  product / area       {s1.value * c1.value / T.volume:.12f}   2/sqrt(3)   = {2 / sqrt(3):.12f}")

store = ConstantsStore()
res = search_dual_critical(2, SearchOptions(starts=8, iters=300, seed=0), store)
print(f"\nsearch over 2-d shapes: best lambda_1 * lambda_1* = {res.objective:.12f} (start {res.start})")
G = res.lattice.gram
print(f"  Gram matrix of the optimum (scaled so G00 = 1):\n  {G / G[0, 0]}")
print(f"  constants table after search: {gamma_constants(2, store)}")

cert = verify_corollary_c(T, store)
print(f"\ncertificate: {cert.status}, lhs {cert.lhs:.9f} <= rhs {cert.rhs:.9f} (provable bound 4/3)")
print(f"  equality ratio against the searched optimum: {cert.params['equality_ratio']:.9f}")
