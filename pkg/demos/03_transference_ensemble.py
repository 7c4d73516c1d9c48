"""How tight is transference on random lattices?

For each rank b we sample seeded random unit-covolume lattices and record
lambda_i(L) * lambda_{b-i+1}(L*).  Every product lies in [1, b]; the table
shows where the samples actually land.
"""

import numpy as np

from systolattice import random_lattice, transference_products

print(f"{'b':>2} {'min':>8} {'median':>8} {'max':>8} {'max/b':>7}")
for b in range(2, 9):
    ps = np.array([t.product for s in range(60) for t in transference_products(random_lattice(b, s))])
    print(f"{b:>2} {ps.min():8.4f} {np.median(ps):8.4f} {ps.max():8.4f} {ps.max() / b:7.3f}")
