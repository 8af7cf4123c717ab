"""Recovering the 1-D Riesz kernel by averaging dyadic operators over random grids.

A grid ``D_{a,r}`` has intervals of length ``r 2^-k`` with ``a`` an endpoint.
Averaging the single-scale operator ``f -> sum_I |I|^alpha <f>_I 1_I`` over the
translation ``a`` gives convolution with the tent

    F_{0,r}(x) = r^(alpha-1) (1 - |x|/r)_+ ,

which is supported on ``[-r, r]``. Summing over scales and averaging the
calibre with ``dr/r`` on ``[1, 2)`` yields ``c |x|^(alpha-1)`` with
``c = int_0^1 (1-y) y^-alpha dy = 1/((1-alpha)(2-alpha))``.

The sampler draws ``r`` from the probability density ``1/(r log 2)``; estimates
of the calibre-averaged kernel are multiplied by ``log 2`` so they estimate the
``dr/r`` integral itself.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import UnsupportedDimensionError
from .grid import DyadicGrid, GridFunction, shifted_grid_intervals

LOG2 = math.log(2.0)


def tent_kernel(x, r: float, alpha: float):
    """Expected single-scale kernel ``r^(alpha-1) (1 - |x|/r)_+``."""
    if r <= 0:
        raise ValueError("r must be positive")
    x = np.asarray(x, dtype=float)
    out = r ** (alpha - 1.0) * np.maximum(0.0, 1.0 - np.abs(x) / r)
    return float(out) if out.ndim == 0 else out


def limit_kernel_constant(alpha: float) -> float:
    """``int_0^1 (1 - y) y^-alpha dy``."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return 1.0 / ((1.0 - alpha) * (2.0 - alpha))


def half_support_constant(alpha: float) -> float:
    """``int_0^(1/2) (1 - y) y^-alpha dy``: the constant a tent cut off at ``|x| = r/2`` would give.

    The Monte Carlo average does not reproduce it; it is kept for comparison.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return 0.5 ** (1.0 - alpha) / (1.0 - alpha) - 0.5 ** (2.0 - alpha) / (2.0 - alpha)


def limit_kernel(x, alpha: float):
    return limit_kernel_constant(alpha) * np.abs(np.asarray(x, dtype=float)) ** (alpha - 1.0)


def calibre_kernel(x, r: float, alpha: float, scales) -> np.ndarray:
    """``sum_k F_{0, r 2^-k}(x)`` over the given scales ``k``."""
    x = np.asarray(x, dtype=float)
    return sum(tent_kernel(x, r * 2.0 ** (-k), alpha) for k in scales)


def tail_bound(rho: float, alpha: float) -> float:
    """Bound on ``sum_j (rho 2^j)^(alpha-1)``: coarse scales from length ``rho`` up."""
    return rho ** (alpha - 1.0) / (1.0 - 2.0 ** (alpha - 1.0))


@dataclass(frozen=True)
class GridSample:
    a: float
    r: float
    weight: float = 1.0

    def __post_init__(self):
        if not 1.0 <= self.r < 2.0:
            raise ValueError("calibre must lie in [1, 2)")
        if not -self.r < self.a <= 0.0:
            raise ValueError("translation must lie in (-r, 0]")

    @property
    def grid(self) -> DyadicGrid:
        return DyadicGrid((self.a,), self.r, 1)


def _draw(rng: np.random.Generator, size: int, calibre=None, span: float = 1.0):
    """Calibres and translations; ``a`` is uniform on ``(-span r, 0]``."""
    u = rng.random((size, 2))
    r = np.full(size, float(calibre)) if calibre is not None else 2.0 ** u[:, 0]
    return -span * r * u[:, 1], r


def sample_grids(rng, size: int):
    """Arrays ``(a, r)`` of ``size`` independent draws with the law of :func:`sample_grid`."""
    return _draw(np.random.default_rng(rng), size)


def sample_grid(rng) -> GridSample:
    """One grid: ``r`` with density ``1/(r log 2)`` on ``[1, 2)``, then ``a`` uniform on ``(-r, 0]``."""
    rng = np.random.default_rng(rng)
    a, r = _draw(rng, 1)
    return GridSample(float(a[0]), float(r[0]))


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    """Independent stream for one chunk of samples, fixed by ``(seed, chunk)``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))


def single_scale_projection(f: GridFunction, sample: GridSample, scale: int, alpha: float) -> GridFunction:
    """Single-scale projection of ``f`` (zero off its root) resampled onto its cells.

    Each cell receives the overlap-weighted values ``|I|^alpha <f>_I`` of the
    grid intervals that meet it.
    """
    if f.n != 1:
        raise UnsupportedDimensionError("grid averaging is one-dimensional")
    lo, hi = float(f.root.lower[0]), float(f.root.upper[0])
    h = f.cell_side
    edges = lo + h * np.arange(2 ** f.resolution + 1)
    cumulative = np.concatenate([[0.0], np.cumsum(f.flat) * h])
    intervals = shifted_grid_intervals(sample.grid, scale, (lo, hi))
    out = np.zeros(2 ** f.resolution)
    for cube in intervals:
        s, e = float(cube.lower[0]), float(cube.upper[0])
        mass = np.interp(min(e, hi), edges, cumulative) - np.interp(max(s, lo), edges, cumulative)
        value = cube.side ** alpha * mass / cube.side
        overlap = np.clip(np.minimum(edges[1:], e) - np.maximum(edges[:-1], s), 0.0, None) / h
        out += overlap * value
    return f.with_values(out)


def default_scales(abscissae, probe_width: float, alpha: float, rel_tail: float = 1e-3, calibre=None):
    """Scales covering every interval that can carry mass to the abscissae.

    Fine end: intervals shorter than ``min|x| - w/2`` cannot meet both the point
    and the probe. Coarse end: the omitted tail is below ``rel_tail`` times the
    smallest limit-kernel value on the window.
    """
    x = np.abs(np.asarray(abscissae, dtype=float))
    r_hi = 2.0 if calibre is None else float(calibre)
    r_lo = 1.0 if calibre is None else float(calibre)
    nearest = x.min() - 0.5 * probe_width
    k_max = math.ceil(math.log2(r_hi / nearest))
    target = rel_tail * limit_kernel_constant(alpha) * x.max() ** (alpha - 1.0)
    rho_max = (target * (1.0 - 2.0 ** (alpha - 1.0))) ** (1.0 / (alpha - 1.0))
    k_min = -math.ceil(math.log2(rho_max / r_lo))
    return list(range(k_min, k_max + 1)), tail_bound(r_lo * 2.0 ** (-k_min + 1), alpha)


@dataclass(frozen=True)
class KernelEstimate:
    abscissae: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    sample_count: int
    alpha: float
    bias_bound: np.ndarray = field(default=None)
    tail_bound: float = 0.0
    scales: tuple = ()

    def __post_init__(self):
        if len(self.abscissae) != len(self.values):
            raise ValueError("abscissae and values differ in length")
        if self.sample_count <= 0:
            raise ValueError("sample_count must be positive")


def _chunk_moments(seed, chunk, size, x, scales, alpha, width, calibre):
    # Intervals longer than r would all keep an endpoint in (-r, 0]; spreading a
    # over the coarsest length makes every scale's offset uniform.
    span = 2.0 ** max(0, -min(scales))
    a, r = _draw(chunk_rng(seed, chunk), size, calibre, span)
    total = np.zeros((size, len(x)))
    half = 0.5 * width
    for k in scales:
        rho = (r * 2.0 ** (-k))[:, None]
        start = a[:, None] + np.floor((x[None, :] - a[:, None]) / rho) * rho
        overlap = np.clip(np.minimum(start + rho, half) - np.maximum(start, -half), 0.0, None)
        total += rho ** (alpha - 1.0) * overlap / width
    return total.sum(axis=0), (total ** 2).sum(axis=0)


def empirical_average_kernel(alpha: float, num_samples: int, probe_width: float, abscissae,
                             scale_range=None, seed: int = 0, calibre=None,
                             chunk_size: int = 4096, workers: int = 1) -> KernelEstimate:
    """Monte Carlo estimate of the grid-averaged multi-scale kernel.

    Applies ``sum_k P^k`` to the probe ``1_[-w/2, w/2] / w`` for each sampled
    grid and evaluates at the abscissae. With ``calibre`` fixed only ``a`` is
    random and the result estimates ``F_r``; otherwise it estimates the
    ``dr/r``-averaged kernel. Results are identical for any ``workers``.
    """
    x = np.asarray(abscissae, dtype=float)
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if num_samples <= 1:
        raise ValueError("need at least two samples")
    if probe_width >= np.abs(x).min():
        raise ValueError("probe overlaps the singularity at an abscissa")
    tail = 0.0
    if scale_range is None:
        scale_range, tail = default_scales(x, probe_width, alpha, calibre=calibre)
    scales = tuple(int(k) for k in scale_range)
    sizes = [min(chunk_size, num_samples - start) for start in range(0, num_samples, chunk_size)]

    def run(chunk):
        return _chunk_moments(seed, chunk, sizes[chunk], x, scales, alpha, probe_width, calibre)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(c) for c in range(len(sizes))]
    s1 = np.array([math.fsum(p[0][j] for p in parts) for j in range(len(x))])
    s2 = np.array([math.fsum(p[1][j] for p in parts) for j in range(len(x))])
    mean = s1 / num_samples
    var = np.maximum(s2 - num_samples * mean ** 2, 0.0) / (num_samples - 1)
    scale = 1.0 if calibre is not None else LOG2
    lip = limit_kernel_constant(alpha) * (1.0 - alpha) * (np.abs(x) - 0.5 * probe_width) ** (alpha - 2.0)
    return KernelEstimate(x, scale * mean, scale * np.sqrt(var / num_samples), num_samples, alpha,
                          bias_bound=lip * probe_width / 4.0, tail_bound=tail, scales=scales)
