"""Mass and comass on exterior powers.

Degree-2 norms have a closed form through the canonical form of a skew
matrix.  The optimizers (multi-start comass ascent, cutting-plane mass)
reproduce it, and they are the only option in middle degrees, where the
values are labelled heuristic and come with certified brackets.
"""

from math import comb

import numpy as np

from systolattice import OptimizerOptions, PVector, comass, mass
from systolattice.exterior import canonical_coefficients, wedge_vectors

E = PVector.basis_element
w = E(4, (0, 1)) + E(4, (2, 3))
print("e1^e2 + e3^e4 in R^4")
print(f"  |w| = {w.norm():.6f}, mass = {mass(w).value:.6f}, comass = {comass(w).value:.6f}")

rng = np.random.default_rng(1)
opts = OptimizerOptions(starts=16)
print("\nrandom 2-vectors: closed form vs optimizers")
print(f"  {'n':>2} {'canonical coefficients':>34} {'mass':>10} {'|diff|':>9} {'comass':>10} {'|diff|':>9}")
for n in (4, 5, 6):
    v = rng.standard_normal(comb(n, 2))
    a = canonical_coefficients(v, n)
    m, m_opt = mass(v, n, 2).value, mass(v, n, 2, opts, method="cutting_plane").value
    c, c_opt = comass(v, n, 2).value, comass(v, n, 2, opts, method="ascent").value
    coeffs = np.array2string(a, precision=4)
    print(f"  {n:>2} {coeffs:>34} {m:10.6f} {abs(m - m_opt):9.1e} {c:10.6f} {abs(c - c_opt):9.1e}")

print("\nmiddle degree: 3-vectors in R^6")
s = wedge_vectors(rng.standard_normal((3, 6)))
r = mass(s, opts=opts)
print(f"  simple vector: |s| = {s.norm():.6f}, mass in [{r.lower:.6f}, {r.upper:.6f}] heuristic={r.heuristic}")
v = rng.standard_normal(20)
r = mass(v, 6, 3, opts)
cm = comass(v, 6, 3, opts)
print(f"  generic vector: |v| = {np.linalg.norm(v):.6f}, mass in [{r.lower:.6f}, {r.upper:.6f}], comass >= {cm.value:.6f}")
