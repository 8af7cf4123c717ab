"""Tensor-product Haar system on a resolved dyadic lattice.

Signature bit 1 selects the normalized indicator factor ``|I|^-1/2 1_I`` and bit
0 the oscillating factor (``+|I|^-1/2`` on the left half, ``-|I|^-1/2`` on the
right). The all-ones signature is the normalized indicator of the cube; it is
not part of the orthonormal family, and its role on the root is played by
``root_average``.

Coefficients are stored densely per level: ``levels[l]`` has shape
``(2^l,)*n + (2^n - 1,)`` with signatures in :func:`signatures` order.
"""
from __future__ import annotations

import itertools

import numpy as np

from .errors import OutsideRootError, ResolutionError
from .grid import DyadicCube, GridFunction, ResolvedLattice, build_lattice, cube_slice


def signatures(n: int) -> list:
    """All ``eps`` in ``{0,1}^n`` except all-ones, lexicographic."""
    return [eps for eps in itertools.product((0, 1), repeat=n) if not all(eps)]


def sign_table(n: int) -> np.ndarray:
    """``table[c, s]``: sign of the ``s``-th signature on child ``c`` of a cube."""
    children = list(itertools.product((0, 1), repeat=n))
    table = np.empty((len(children), 2 ** n - 1))
    for s, eps in enumerate(signatures(n)):
        for c, bits in enumerate(children):
            table[c, s] = (-1) ** sum(b for b, e in zip(bits, eps) if e == 0)
    return table


def split_children(arr: np.ndarray, n: int) -> np.ndarray:
    """``(2m,)*n`` -> ``(m,)*n + (2^n,)`` with children in lexicographic order."""
    m = arr.shape[0] // 2
    shape = []
    for _ in range(n):
        shape += [m, 2]
    out = arr.reshape(shape)
    out = out.transpose(list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2)))
    return out.reshape((m,) * n + (2 ** n,))


def merge_children(arr: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`split_children`."""
    m = arr.shape[0]
    out = arr.reshape((m,) * n + (2,) * n)
    order = []
    for i in range(n):
        order += [i, n + i]
    return out.transpose(order).reshape((2 * m,) * n)


class HaarCoefficients:
    """Haar coefficients of a grid function plus its root average."""

    def __init__(self, lattice: ResolvedLattice, levels, root_average: float):
        n = lattice.n
        if len(levels) != lattice.depth:
            raise ValueError("need one coefficient array per non-finest level")
        for k, arr in enumerate(levels):
            if arr.shape != (2 ** k,) * n + (2 ** n - 1,):
                raise ValueError(f"bad coefficient shape at level {k}: {arr.shape}")
        self.lattice = lattice
        self.levels = [np.asarray(a, dtype=float) for a in levels]
        self.root_average = float(root_average)

    @classmethod
    def zeros(cls, lattice: ResolvedLattice, root_average: float = 0.0):
        n = lattice.n
        return cls(lattice, [np.zeros((2 ** k,) * n + (2 ** n - 1,)) for k in range(lattice.depth)],
                   root_average)

    @classmethod
    def from_entries(cls, lattice: ResolvedLattice, entries: dict, root_average: float = 0.0):
        """Build from a ``{(cube, signature): value}`` mapping."""
        out = cls.zeros(lattice, root_average)
        sigs = {eps: s for s, eps in enumerate(signatures(lattice.n))}
        for (cube, eps), value in entries.items():
            out.levels[_level_of(lattice, cube)][cube.local_index(lattice.root) + (sigs[tuple(eps)],)] = value
        return out

    @property
    def n(self) -> int:
        return self.lattice.n

    def __getitem__(self, key) -> float:
        cube, eps = key
        s = signatures(self.n).index(tuple(eps))
        return float(self.levels[_level_of(self.lattice, cube)][cube.local_index(self.lattice.root) + (s,)])

    def items(self):
        """Nonzero ``((cube, signature), value)`` pairs, level-major."""
        sigs = signatures(self.n)
        root = self.lattice.root
        for k, arr in enumerate(self.levels):
            for pos in zip(*np.nonzero(arr)):
                idx = tuple(int(i) for i in pos[:-1])
                cube = DyadicCube(root.level + k,
                                  tuple((j << k) + i for i, j in zip(idx, root.index)), root.grid)
                yield (cube, sigs[pos[-1]]), float(arr[pos])

    @property
    def entries(self) -> dict:
        return dict(self.items())

    def energy(self) -> float:
        return float(sum((a ** 2).sum() for a in self.levels))

    def map_levels(self, func) -> "HaarCoefficients":
        return HaarCoefficients(self.lattice, [func(k, a) for k, a in enumerate(self.levels)],
                                self.root_average)


def _level_of(lattice: ResolvedLattice, cube: DyadicCube) -> int:
    if not cube.is_within(lattice.root):
        raise OutsideRootError(f"{cube} is outside the lattice root")
    k = cube.level - lattice.root.level
    if k >= lattice.depth:
        raise ResolutionError(f"{cube} is at or below the finest level")
    return k


def cube_volumes(lattice: ResolvedLattice) -> np.ndarray:
    """Volume of the cubes of each generation below the root."""
    return lattice.root.volume * 2.0 ** (-lattice.n * np.arange(lattice.depth + 1))


def haar_function(cube: DyadicCube, eps, root: DyadicCube, resolution: int) -> GridFunction:
    """Cell values of ``h_Q^eps`` as a grid function on ``root``."""
    eps = tuple(eps)
    n = root.n
    if len(eps) != n:
        raise ValueError("signature length must equal the dimension")
    offset = cube.level - root.level
    if not cube.is_within(root):
        raise OutsideRootError(f"{cube} is outside {root}")
    if offset >= resolution:
        raise ResolutionError("a Haar function needs at least one finer level inside its cube")
    span = 2 ** (resolution - offset)
    factors = []
    for e in eps:
        if e:
            factors.append(np.ones(span))
        else:
            factors.append(np.concatenate([np.ones(span // 2), -np.ones(span // 2)]))
    block = factors[0]
    for fac in factors[1:]:
        block = np.multiply.outer(block, fac)
    values = np.zeros((2 ** resolution,) * n)
    values[cube_slice(root, resolution, cube)] = block * cube.volume ** -0.5
    return GridFunction(root, resolution, values)


def haar_forward(f: GridFunction, lattice: ResolvedLattice = None) -> HaarCoefficients:
    if lattice is None:
        lattice = build_lattice(f.root, f.resolution)
    if lattice.root != f.root or lattice.depth != f.resolution:
        raise ValueError("lattice does not match the grid function")
    n = f.n
    table = sign_table(n)
    vols = cube_volumes(lattice)
    pyramid = f.pyramid
    levels = []
    for k in range(lattice.depth):
        children = split_children(pyramid[k + 1], n)
        levels.append(np.sqrt(vols[k]) * 2.0 ** (-n) * (children @ table))
    return HaarCoefficients(lattice, levels, float(pyramid[0].reshape(-1)[0]))


def haar_inverse(coeffs: HaarCoefficients) -> GridFunction:
    lattice = coeffs.lattice
    n = lattice.n
    table = sign_table(n)
    vols = cube_volumes(lattice)
    avg = np.full((1,) * n, coeffs.root_average)
    for k, arr in enumerate(coeffs.levels):
        children = avg[..., None] + vols[k] ** -0.5 * (arr @ table.T)
        avg = merge_children(children, n)
    return GridFunction(lattice.root, lattice.depth, avg)


def synthesize(lattice: ResolvedLattice, levels) -> GridFunction:
    """Sum of ``levels[k][Q, eps] h_Q^eps`` with zero root average."""
    return haar_inverse(HaarCoefficients(lattice, levels, 0.0))


def child_values(coeffs_level: np.ndarray, volume: float) -> np.ndarray:
    """Value of ``sum_eps c(Q, eps) h_Q^eps`` on each child of each cube of one level.

    Returns shape ``(2^k,)*n + (2^n,)``. This is the constant value the sum takes
    on every strict descendant lying in that child.
    """
    n = coeffs_level.ndim - 1
    return volume ** -0.5 * (coeffs_level @ sign_table(n).T)
