"""
Fuglede-Kadison determinant and Brown measure of a matrix
==========================================================

On M_n with the normalized trace the determinant is |det x|^(1/n) and the
Brown measure is the eigenvalue counting measure.
"""

import math

import numpy as np

from fkrank import brown_from_grid, brown_measure, fk_det, fk_logdet, GridSpec
from fkrank.harness.generators import example53_discretization, ginibre, nilpotent_upper

rng = np.random.default_rng(0)

# multiplicative and blind to the adjoint
x, y = ginibre(rng, 6), ginibre(rng, 6)
print("det(xy) - det(x)det(y):", fk_det(x @ y) - fk_det(x) * fk_det(y))
print("det(x*) - det(x):      ", fk_det(x.conj().T) - fk_det(x))

# a diagonal discretization of multiplication by t on [0, 1]
x = example53_discretization(512)
for lam in (0.0, 0.25, 0.5, 0.75):
    exact = math.exp(-1) * (lam ** lam * (1 - lam) ** (1 - lam) if lam else 1.0)
    print(f"lambda={lam:<5} det(x - lambda) = {fk_det(x - lam * np.eye(512)):.6f}  limit {exact:.6f}")
print("log det(x - 2):", fk_logdet(x - 2 * np.eye(512)), " limit", 2 * math.log(2) - 1)

# log det(x - lambda) is the log potential of the Brown measure
x = ginibre(rng, 8)
mu = brown_measure(x)
lam = 2.5 + 0.5j
print("log potential gap:", fk_logdet(x - lam * np.eye(8)) - mu.integrate(lambda t: math.log(abs(t - lam))))

# a nilpotent matrix has all its Brown mass at the origin
print(brown_measure(nilpotent_upper(rng, 5)).to_json())

# the same measure seen through a lattice Laplacian of log det
gm = brown_from_grid(ginibre(rng, 6) / 2, GridSpec.square(-1.5, 1.5, 48))
print("grid total mass:", round(gm.total_mass, 4))
