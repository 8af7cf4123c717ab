"""Dyadic and continuum fractional operators, and the commutator decomposition.

Sums over lattice levels are accumulated coarsest first so outputs do not
depend on anything but the inputs. With ``Tails.DESCENDANTS`` the geometric
series over cubes below the finest cells is added in closed form; with
``Tails.EXTENDED`` the standard ancestor tower above the root is added too. Both
assume ``f`` vanishes outside the root.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import OutsideRootError, UnsupportedDimensionError
from .grid import GridFunction, ResolvedLattice, Tails, block_sum, build_lattice, upsample
from .haar import child_values, cube_volumes, haar_forward, merge_children, synthesize


def c_alpha(alpha: float) -> float:
    """``sum_{k>=1} 2^(-k alpha) = 1 / (2^alpha - 1)``."""
    return 1.0 / (2.0 ** alpha - 1.0)


def ancestor_factor(alpha: float, n: int) -> float:
    """``sum_{k>=1} 2^(k(alpha-n))``: the ancestor tower sum relative to the root."""
    ratio = 2.0 ** (alpha - n)
    return ratio / (1.0 - ratio)


def _lattice_for(f: GridFunction, lattice) -> ResolvedLattice:
    if lattice is None:
        return build_lattice(f.root, f.resolution)
    if lattice.root != f.root or lattice.depth != f.resolution:
        raise ValueError("lattice must have the root and depth of the grid function")
    return lattice


def _tails(lattice: ResolvedLattice, tails) -> Tails:
    return lattice.tail_mode if tails is None else Tails(tails)


def _check_alpha(alpha, n, closed_below=False):
    ok = (0 <= alpha < n) if closed_below else (0 < alpha < n)
    if not ok:
        raise ValueError(f"alpha={alpha} outside the admissible range for n={n}")


def dyadic_frac_integral(f: GridFunction, alpha: float, lattice=None, tails=None) -> GridFunction:
    """``sum_Q |Q|^(alpha/n) <f>_Q 1_Q`` on the finest cells of the root."""
    n = f.n
    _check_alpha(alpha, n)
    lattice = _lattice_for(f, lattice)
    mode = _tails(lattice, tails)
    L = f.resolution
    vols = cube_volumes(lattice)
    out = np.zeros(f.shape)
    for k, avg in enumerate(f.pyramid):
        out += upsample(vols[k] ** (alpha / n) * avg, L - k)
    if mode.below:
        out += c_alpha(alpha) * vols[L] ** (alpha / n) * f.values
    if mode.above:
        out += vols[0] ** (alpha / n - 1.0) * f.integral() * ancestor_factor(alpha, n)
    return f.with_values(out)


def frac_maximal(f: GridFunction, alpha: float, lattice=None, tails=None) -> GridFunction:
    """Pointwise max over lattice cubes ``Q`` containing ``x`` of ``|Q|^(alpha/n) <|f|>_Q``.

    Cubes below the finest cells never exceed the cell itself, and along the
    ancestor tower the values decrease geometrically, so the extended mode
    only needs the parent of the root.
    """
    n = f.n
    _check_alpha(alpha, n, closed_below=True)
    lattice = _lattice_for(f, lattice)
    mode = _tails(lattice, tails)
    L = f.resolution
    vols = cube_volumes(lattice)
    g = abs(f)
    out = np.zeros(f.shape)
    for k, avg in enumerate(g.pyramid):
        np.maximum(out, upsample(vols[k] ** (alpha / n) * avg, L - k), out=out)
    if mode.above:
        top = vols[0] ** (alpha / n - 1.0) * g.integral() * 2.0 ** (alpha - n)
        np.maximum(out, top, out=out)
    return f.with_values(out)


def square_function(f: GridFunction, lattice=None) -> GridFunction:
    lattice = _lattice_for(f, lattice)
    coeffs = haar_forward(f, lattice)
    vols = cube_volumes(lattice)
    L = f.resolution
    out = np.zeros(f.shape)
    for k, arr in enumerate(coeffs.levels):
        out += upsample((arr ** 2).sum(axis=-1) / vols[k], L - k)
    return f.with_values(np.sqrt(out))


def descendant_weights(fh_levels, lattice: ResolvedLattice, alpha: float) -> list:
    """For every lattice cube P, ``sum_{Q strictly above P, eta} f(Q,eta) h_Q^eta(P) |Q|^(alpha/n)``.

    Only cubes inside the root are summed. Entry ``k`` has shape ``(2^k,)*n``.
    """
    n = lattice.n
    vols = cube_volumes(lattice)
    acc = [np.zeros((1,) * n)]
    for k, arr in enumerate(fh_levels):
        step = child_values(arr, vols[k]) * vols[k] ** (alpha / n)
        acc.append(merge_children(acc[-1][..., None] + step, n))
    return acc


@dataclass(frozen=True)
class DecompositionTerms:
    pi_010: GridFunction
    pi_001: GridFunction
    t1: GridFunction
    t2: GridFunction
    c_alpha: float

    def recombine(self) -> GridFunction:
        c = self.c_alpha
        return c * self.t1 - c * self.pi_010 - self.pi_001 - self.t2


def decomposition_terms(b: GridFunction, f: GridFunction, alpha: float, lattice=None) -> DecompositionTerms:
    """The two paraproducts and the two remainder terms of the commutator.

    ``h_Q^eta(P)`` is the constant value of ``h_Q^eta`` on the child of ``Q``
    containing ``P``. The inner sum of ``t2`` runs over ancestors inside the root
    and then the standard tower above it, in closed form.
    """
    if not b.compatible(f):
        raise ValueError("b and f must share a lattice")
    n = f.n
    _check_alpha(alpha, n)
    lattice = _lattice_for(f, lattice)
    L = lattice.depth
    vols = cube_volumes(lattice)
    bh = haar_forward(b, lattice).levels
    fh = haar_forward(f, lattice).levels
    avg_f = f.pyramid
    s = [vols[k] ** (alpha / n) for k in range(L + 1)]

    pi_010 = synthesize(lattice, [bh[k] * (avg_f[k] * s[k])[..., None] for k in range(L)])

    beta = [(bh[k] * fh[k]).sum(axis=-1) for k in range(L)]
    out = np.zeros(f.shape)
    for k in range(L):
        out += upsample(beta[k] * s[k] / vols[k], L - k)
    pi_001 = f.with_values(out)

    weights = descendant_weights(fh, lattice, alpha)
    t1 = synthesize(lattice, [bh[k] * weights[k][..., None] for k in range(L)])

    below = [np.zeros((2 ** k,) * n) for k in range(L)]
    for k in range(L - 2, -1, -1):
        below[k] = block_sum(beta[k + 1] + below[k + 1], 1)
    out = np.zeros(f.shape)
    for k in range(L):
        out += upsample(below[k] * s[k] / vols[k], L - k)
    total = math.fsum(float(x.sum()) for x in beta)
    out += vols[0] ** (alpha / n - 1.0) * ancestor_factor(alpha, n) * total
    t2 = f.with_values(out)

    return DecompositionTerms(pi_010, pi_001, t1, t2, c_alpha(alpha))


def _centred(b: GridFunction) -> GridFunction:
    # Commutators ignore additive constants; removing one exactly makes constant b give exact zeros.
    return b - b.flat[0]


def commutator_dyadic(b: GridFunction, f: GridFunction, alpha: float, lattice=None, tails=None) -> GridFunction:
    """``b I f - I(b f)`` with the same tail semantics in both applications."""
    if not b.compatible(f):
        raise ValueError("b and f must share a lattice")
    bc = _centred(b)
    return bc * dyadic_frac_integral(f, alpha, lattice, tails) - dyadic_frac_integral(bc * f, alpha, lattice, tails)


# -- continuum Riesz potential ------------------------------------------------

def _points(f: GridFunction, eval_points) -> np.ndarray:
    pts = np.asarray(eval_points, dtype=float)
    return pts.reshape(-1, f.n)


def _cell_integrals_1d(edges: np.ndarray, x: np.ndarray, alpha: float) -> np.ndarray:
    """``[i, j] = int_{edges[j]}^{edges[j+1]} |x_i - y|^(alpha-1) dy``, exactly."""
    t = edges[None, :] - x[:, None]
    prim = np.sign(t) * np.abs(t) ** alpha / alpha
    return np.diff(prim, axis=1)


def riesz_matrix_1d(root, resolution: int, alpha: float, points) -> np.ndarray:
    """Matrix taking 1-D cell values to the Riesz potential at ``points``."""
    h = root.side * 2.0 ** (-resolution)
    edges = root.lower[0] + h * np.arange(2 ** resolution + 1)
    return _cell_integrals_1d(edges, np.asarray(points, dtype=float).reshape(-1), alpha)


def _corner_rectangle(a: float, b: float, alpha: float) -> float:
    """``int_0^a int_0^b |y|^(alpha-2) dy`` in polar coordinates about the corner."""
    if a <= 0.0 or b <= 0.0:
        return 0.0
    theta = math.atan2(b, a)
    first, _ = integrate.quad(lambda t: (a / math.cos(t)) ** alpha, 0.0, theta, epsabs=0, epsrel=1e-13)
    second, _ = integrate.quad(lambda t: (b / math.sin(t)) ** alpha, theta, math.pi / 2, epsabs=0, epsrel=1e-13)
    return (first + second) / alpha


def continuum_frac_integral(f: GridFunction, alpha: float, eval_points) -> np.ndarray:
    """``int f(y) |x - y|^(alpha - n) dy`` at each evaluation point.

    1-D is exact (closed-form antiderivative on each cell). 2-D uses the
    midpoint rule on every cell except the one containing ``x``, which is
    integrated exactly as four rectangles cornered at ``x``; the error is first
    order in the cell size for points near cells they do not belong to.
    """
    n = f.n
    _check_alpha(alpha, n)
    pts = _points(f, eval_points)
    if n == 1:
        mat = riesz_matrix_1d(f.root, f.resolution, alpha, pts[:, 0])
        return (mat * f.flat[None, :]).sum(axis=1)
    if n != 2:
        raise UnsupportedDimensionError("continuum operator implemented for n = 1, 2")
    h = f.cell_side
    side = 2 ** f.resolution
    lo = f.root.lower
    cx = lo[0] + h * (np.arange(side) + 0.5)
    cy = lo[1] + h * (np.arange(side) + 0.5)
    out = np.empty(len(pts))
    for i, (x, y) in enumerate(pts):
        dist = np.hypot((cx - x)[:, None], (cy - y)[None, :])
        with np.errstate(divide="ignore"):
            kern = dist ** (alpha - 2.0) * h * h
        ix, iy = math.floor((x - lo[0]) / h), math.floor((y - lo[1]) / h)
        if 0 <= ix < side and 0 <= iy < side:
            x0, y0 = lo[0] + ix * h, lo[1] + iy * h
            kern[ix, iy] = sum(_corner_rectangle(a, b, alpha)
                               for a in (x - x0, x0 + h - x) for b in (y - y0, y0 + h - y))
        out[i] = (kern * f.values).sum()
    return out


def commutator_continuum(b: GridFunction, f: GridFunction, alpha: float, eval_points) -> np.ndarray:
    """``b(x) I f(x) - I(b f)(x)`` at each evaluation point."""
    if not b.compatible(f):
        raise ValueError("b and f must share a lattice")
    shift = b.flat[0]
    bc = b - shift
    pts = _points(f, eval_points)
    try:
        bx = bc(pts)
    except OutsideRootError:
        # b vanishes off the root, so the shifted symbol equals -shift there
        bx = np.array([bc(p)[0] if b.root.contains(p) else -shift for p in pts])
    return bx * continuum_frac_integral(f, alpha, pts) - continuum_frac_integral(bc * f, alpha, pts)
