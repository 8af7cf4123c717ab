"""A two-dimensional configuration where the descendant-weight paraproduct escapes I_alpha|f|.

f is the indicator of the corner cell at depth L and g the Haar function of its
parent P. The descendant weight of f on P collects every ancestor of P with
multiplicity 2^n - 1, while I_alpha|f| on the siblings of the corner cell counts
them once, so the square-function inequality fails. The weaker bound with
constant 1 + 2^alpha still holds.
"""
import numpy as np

from dyadfrac import DyadicCube, GridFunction, build_lattice, dyadic_frac_integral, haar_forward, haar_function
from dyadfrac.experiments import domination_trial
from dyadfrac.grid import upsample
from dyadfrac.operators import descendant_weights

root = DyadicCube.unit(2)
for L, alpha in ((3, 1.25), (4, 0.75), (5, 1.0)):
    values = np.zeros((2 ** L, 2 ** L))
    values[0, 0] = 1.0
    f = GridFunction(root, L, values)
    g = haar_function(DyadicCube(L - 1, (0, 0), root.grid), (0, 0), root, L)
    _, gap = domination_trial(f, g, alpha)
    weights = descendant_weights(haar_forward(f).levels, build_lattice(root, L), alpha)
    i_abs = dyadic_frac_integral(abs(f), alpha).values
    ratio = max(np.max(np.abs(upsample(w, L - k)) / i_abs) for k, w in enumerate(weights))
    print(f"L={L} alpha={alpha}: signed gap {gap:+.4f}, max |A|/I|f| = {ratio:.3f} <= 1 + 2^alpha = {1 + 2 ** alpha:.3f}")
