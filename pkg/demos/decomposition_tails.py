"""How the tail convention decides whether the commutator decomposition is exact.

Draws a random zero-average symbol b and function f on a 1-D grid and compares
[b, I]f with the four-term expansion under each tail convention. Only the
convention that sums over every ancestor of the root closes the identity.
"""
import numpy as np

from dyadfrac import DyadicCube, GridFunction, Tails, commutator_dyadic, decomposition_terms
from dyadfrac.experiments import random_haar_polynomial

root = DyadicCube.unit(1)
L, alpha = 7, 0.5
rng = np.random.default_rng(0)
b = random_haar_polynomial(rng, root, L)
f = random_haar_polynomial(rng, root, L)

terms = decomposition_terms(b, f, alpha)
expansion = terms.recombine().values
scale = np.max(np.abs(b.values)) * np.max(np.abs(f.values))
for tails in Tails:
    direct = commutator_dyadic(b, f, alpha, tails=tails).values
    print(f"{tails.value:>12}: max |[b,I]f - expansion| / (|b| |f|) = {np.max(np.abs(direct - expansion)) / scale:.3e}")
