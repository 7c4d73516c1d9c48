"""Searching for dual-critical lattices.

The search maximizes lambda_1(L) * lambda_1(L*) over unit-determinant
lower-triangular bases, alternating a linear-programming step on the Gram
matrix with random perturbations.  Known optima: 2/sqrt(3) (b=2, hexagonal),
sqrt(3/2) (b=3), sqrt(2) (b=4, D4).
"""

import time
from math import sqrt

from systolattice import SearchOptions, search_dual_critical

known = {1: 1.0, 2: 2 / sqrt(3), 3: sqrt(1.5), 4: sqrt(2)}
for b in range(1, 6):
    t0 = time.perf_counter()
    r = search_dual_critical(b, SearchOptions(starts=4, iters=300))
    ref = known.get(b)
    tail = f"known {ref:.9f}, gap {ref - r.objective:.1e}" if ref else "no reference value"
    print(f"b={b}: {r.objective:.9f}  ({time.perf_counter() - t0:4.1f}s)  {tail}")
