"""Dyadic geometry: grids, cubes, resolved lattices and piecewise-constant functions.

A :class:`GridFunction` is constant on the finest cells of a root cube, so every
cube average is a finite sum and identities can be checked to rounding error.
Arrays are stored with one axis per coordinate; flattening in C order gives the
lexicographic cell order.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .errors import OutsideRootError


class Tails(str, enum.Enum):
    """How the infinite lattice is modelled around a finite resolved one.

    ``truncated`` sums over lattice cubes only. ``descendants`` adds the
    analytic tower below the finest cells. ``extended`` also adds the standard
    ancestor tower above the root.
    """

    TRUNCATED = "truncated"
    DESCENDANTS = "descendants"
    EXTENDED = "extended"

    @property
    def below(self) -> bool:
        return self is not Tails.TRUNCATED

    @property
    def above(self) -> bool:
        return self is Tails.EXTENDED


@dataclass(frozen=True)
class DyadicGrid:
    """The lattice of cubes ``translation + calibre * 2**-k * (m + [0,1)^n)``."""

    translation: tuple
    calibre: float = 1.0
    dimension: int = 1

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if len(self.translation) != self.dimension:
            raise ValueError("translation must have one component per dimension")
        if not 1.0 <= self.calibre < 2.0:
            raise ValueError(f"calibre must lie in [1, 2), got {self.calibre}")
        for t in self.translation:
            if not -self.calibre < t <= 0.0:
                raise ValueError(f"translation components must lie in (-r, 0], got {t}")

    @classmethod
    def standard(cls, dimension: int = 1) -> "DyadicGrid":
        return cls((0.0,) * dimension, 1.0, dimension)


@dataclass(frozen=True)
class DyadicCube:
    level: int
    index: tuple
    grid: DyadicGrid

    def __post_init__(self):
        if len(self.index) != self.grid.dimension:
            raise ValueError("index length must equal the grid dimension")

    @classmethod
    def unit(cls, dimension: int = 1) -> "DyadicCube":
        """The root ``[0, 1)^n`` of the standard grid."""
        return cls(0, (0,) * dimension, DyadicGrid.standard(dimension))

    @property
    def n(self) -> int:
        return self.grid.dimension

    @property
    def side(self) -> float:
        return self.grid.calibre * 2.0 ** (-self.level)

    @property
    def volume(self) -> float:
        return self.side ** self.n

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.grid.translation) + self.side * np.asarray(self.index, dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return self.lower + self.side

    @property
    def centroid(self) -> np.ndarray:
        return self.lower + 0.5 * self.side

    def contains(self, point) -> bool:
        x = np.atleast_1d(np.asarray(point, dtype=float))
        return bool(np.all(self.lower <= x) and np.all(x < self.upper))

    def children(self) -> list:
        """The ``2^n`` children, ordered lexicographically by offset bits."""
        base = tuple(2 * i for i in self.index)
        return [
            DyadicCube(self.level + 1, tuple(b + c for b, c in zip(base, bits)), self.grid)
            for bits in itertools.product((0, 1), repeat=self.n)
        ]

    def parent(self) -> "DyadicCube":
        return DyadicCube(self.level - 1, tuple(i // 2 for i in self.index), self.grid)

    def ancestor(self, k: int) -> "DyadicCube":
        cube = self
        for _ in range(k):
            cube = cube.parent()
        return cube

    def is_within(self, other: "DyadicCube") -> bool:
        """True when ``self`` is ``other`` or one of its descendants."""
        if self.grid != other.grid or self.level < other.level:
            return False
        shift = self.level - other.level
        return all(i >> shift == j for i, j in zip(self.index, other.index))

    def local_index(self, root: "DyadicCube") -> tuple:
        """Index of ``self`` among the cubes of its generation inside ``root``."""
        if not self.is_within(root):
            raise OutsideRootError(f"{self} is not contained in {root}")
        shift = self.level - root.level
        return tuple(i - (j << shift) for i, j in zip(self.index, root.index))


@dataclass(frozen=True)
class ResolvedLattice:
    """All sub-cubes of ``root`` down to ``depth`` generations below it."""

    root: DyadicCube
    depth: int
    tail_mode: Tails = Tails.TRUNCATED

    @property
    def n(self) -> int:
        return self.root.n

    def level(self, offset: int) -> list:
        count = 2 ** offset
        return [
            DyadicCube(self.root.level + offset,
                       tuple((j << offset) + i for i, j in zip(idx, self.root.index)),
                       self.root.grid)
            for idx in itertools.product(range(count), repeat=self.n)
        ]

    def cubes(self) -> Iterator[DyadicCube]:
        """Level-major, then lexicographic."""
        for offset in range(self.depth + 1):
            yield from self.level(offset)

    def __iter__(self):
        return self.cubes()

    def __len__(self) -> int:
        return sum(2 ** (self.n * k) for k in range(self.depth + 1))

    def __contains__(self, cube) -> bool:
        return (isinstance(cube, DyadicCube) and cube.is_within(self.root)
                and cube.level - self.root.level <= self.depth)

    def tower(self, k: int) -> DyadicCube:
        """The k-th ancestor of the root in the standard upward tower."""
        return self.root.ancestor(k)


def build_lattice(root: DyadicCube, depth: int, tail_mode=Tails.TRUNCATED) -> ResolvedLattice:
    if depth < 0:
        raise ValueError(f"depth must be non-negative, got {depth}")
    return ResolvedLattice(root, int(depth), Tails(tail_mode))


# -- array helpers -----------------------------------------------------------

def block_mean(values: np.ndarray, k: int) -> np.ndarray:
    """Average over blocks of ``2^k`` cells along every axis."""
    if k == 0:
        return values
    n = values.ndim
    m = values.shape[0] >> k
    shape = []
    for _ in range(n):
        shape += [m, 2 ** k]
    return values.reshape(shape).mean(axis=tuple(range(1, 2 * n, 2)))


def block_sum(values: np.ndarray, k: int) -> np.ndarray:
    if k == 0:
        return values
    n = values.ndim
    m = values.shape[0] >> k
    shape = []
    for _ in range(n):
        shape += [m, 2 ** k]
    return values.reshape(shape).sum(axis=tuple(range(1, 2 * n, 2)))


def upsample(values: np.ndarray, k: int) -> np.ndarray:
    """Repeat every entry ``2^k`` times along every axis."""
    out = values
    for axis in range(values.ndim):
        out = np.repeat(out, 2 ** k, axis=axis)
    return out


def average_pyramid(values: np.ndarray) -> list:
    """Cube averages at every level, coarsest first; the last entry is ``values``."""
    levels = [values]
    while levels[-1].shape[0] > 1:
        levels.append(block_mean(levels[-1], 1))
    return levels[::-1]


class GridFunction:
    """A function on ``root`` that is constant on each of the ``2^(nL)`` finest cells.

    ``values`` may be given flat (lexicographic order) or with one axis per
    coordinate. The stored array is read-only.
    """

    def __init__(self, root: DyadicCube, resolution: int, values):
        if resolution < 0:
            raise ValueError("resolution must be non-negative")
        n = root.n
        side = 2 ** resolution
        arr = np.array(values, dtype=float)
        if arr.size != side ** n:
            raise ValueError(f"expected {side ** n} cell values, got {arr.size}")
        arr = arr.reshape((side,) * n)
        arr.flags.writeable = False
        self.root = root
        self.resolution = int(resolution)
        self.values = arr

    @classmethod
    def constant(cls, root, resolution, value=1.0):
        return cls(root, resolution, np.full((2 ** resolution,) * root.n, float(value)))

    @classmethod
    def from_callable(cls, func, root, resolution):
        """Sample ``func`` at cell centroids; ``func`` receives one array per coordinate."""
        return cls(root, resolution, func(*cell_centroids(root, resolution)))

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.root, self.resolution, values)

    @property
    def n(self) -> int:
        return self.root.n

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    @property
    def cell_side(self) -> float:
        return self.root.side * 2.0 ** (-self.resolution)

    @property
    def cell_volume(self) -> float:
        return self.cell_side ** self.n

    @cached_property
    def pyramid(self) -> list:
        return average_pyramid(self.values)

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_volume)

    def compatible(self, other: "GridFunction") -> bool:
        return self.root == other.root and self.resolution == other.resolution

    def _check(self, other):
        if not self.compatible(other):
            raise ValueError("grid functions live on different roots or resolutions")

    def __call__(self, points) -> np.ndarray:
        """Evaluate at points given as an array of shape ``(m, n)`` (or ``(m,)`` in 1-D)."""
        pts = np.asarray(points, dtype=float)
        if self.n == 1:
            pts = pts.reshape(-1, 1)
        pts = pts.reshape(-1, self.n)
        rel = (pts - self.root.lower) / self.cell_side
        idx = np.floor(rel).astype(int)
        side = 2 ** self.resolution
        if np.any(idx < 0) or np.any(idx >= side):
            raise OutsideRootError("evaluation point outside the root cube")
        return self.values[tuple(idx.T)]

    def __add__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return self.with_values(self.values - other.values)
        return self.with_values(self.values - other)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return self.with_values(self.values * other.values)
        return self.with_values(self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def __abs__(self):
        return self.with_values(np.abs(self.values))

    def __repr__(self):
        return f"GridFunction(root={self.root!r}, resolution={self.resolution})"


def cell_centroids(root: DyadicCube, resolution: int) -> list:
    """Coordinate arrays (``indexing='ij'``) of the finest-cell centroids."""
    h = root.side * 2.0 ** (-resolution)
    axes = [root.lower[i] + h * (np.arange(2 ** resolution) + 0.5) for i in range(root.n)]
    return np.meshgrid(*axes, indexing="ij")


def cube_slice(root: DyadicCube, resolution: int, cube: DyadicCube) -> tuple:
    """Array slice selecting the finest cells of ``cube`` (or the cell containing it)."""
    local = cube.local_index(root)
    offset = cube.level - root.level
    if offset <= resolution:
        span = 2 ** (resolution - offset)
        return tuple(slice(i * span, (i + 1) * span) for i in local)
    shift = offset - resolution
    return tuple(slice(i >> shift, (i >> shift) + 1) for i in local)


def cube_average(f: GridFunction, cube: DyadicCube) -> float:
    """Mean of ``f`` over ``cube``; cubes finer than a cell get the cell value."""
    return float(f.values[cube_slice(f.root, f.resolution, cube)].mean())


def shifted_grid_intervals(grid: DyadicGrid, scale: int, window: Sequence[float]) -> list:
    """Intervals of length ``r 2^-scale`` of a 1-D grid meeting ``[lo, hi)``, ordered."""
    if grid.dimension != 1:
        raise ValueError("shifted_grid_intervals is one-dimensional")
    lo, hi = float(window[0]), float(window[1])
    if not hi > lo:
        return []
    a = grid.translation[0]
    h = grid.calibre * 2.0 ** (-scale)
    first = math.floor((lo - a) / h)
    last = math.ceil((hi - a) / h) - 1
    out = []
    for m in range(first, last + 1):
        start = a + m * h
        if start < hi and start + h > lo:
            out.append(DyadicCube(scale, (m,), grid))
    return out
