"""Systoles of flat 4-tori in degree two.

On T^4 the integral 2-classes form the lattice Lambda^2 L of rank 6, and
the stable norm is the mass norm, which is exact here.  We compare the
stable 2-systole with the conformal 2-systole and run the degree-two
verifiers on a small ensemble.
"""

from math import sqrt

from systolattice import FlatTorus, conformal_systole, random_lattice, stable_systole
from systolattice.verifiers import verify_corollary_d, verify_theorem_b

print(f"{'seed':>4} {'vol':>7} {'stsys_2/sqrt(vol)':>18} {'conf_2':>9} {'CorD ratio':>11} {'ThmB ratio':>11}")
for seed in range(8):
    T = FlatTorus(random_lattice(4, seed).scaled(0.5 + 0.25 * seed))
    st = stable_systole(T, 2).value / sqrt(T.volume)
    conf = conformal_systole(T)
    d = verify_corollary_d(T)
    b = verify_theorem_b(T, 2, 2)
    print(f"{seed:>4} {T.volume:7.3f} {st:18.9f} {conf.value:9.6f} {d.ratio:11.5f} {b.ratio:11.5f}")
print(f"\nconformal values assume: {conf.assumptions}")
