"""Testing the commutator against oscillating test functions to bound BMO from below.

For a cube ``Q``, ``P`` has four times its side and the same lower corner, and
``P_R`` is the upper half of ``P``. For ``x`` in ``Q`` and ``y`` in ``P_R`` the
scaled separation ``t = (x - y) / c`` with ``c = 2 l(P)`` satisfies
``1/8 <= |t| <= 1/2``. :func:`smooth_kernel` is smooth, even, 2-periodic and
equals ``|t|^(1 - alpha)`` there, so

    int_Q |b - <b>_{P_R}| = c^(1-alpha) / |P_R| * sum_k a_k <h_k, [b, I_alpha] f_k>

with ``h_k = sigma e^{i pi k x / c} 1_Q``, ``f_k = e^{-i pi k y / c} 1_{P_R}`` and
``sigma = sgn(b - <b>_{P_R})``. Only the one-dimensional case is implemented.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import GeometryError, UnsupportedDimensionError
from .grid import DyadicCube, GridFunction, cube_slice

INNER, OUTER = 1.0 / 8.0, 1.0 / 2.0


def _smoothstep(u):
    """C-infinity step from 0 (u <= 0) to 1 (u >= 1)."""
    u = np.clip(u, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
        b = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
    return a / (a + b)


def smooth_kernel(t, alpha: float):
    """Even 2-periodic C-infinity function equal to ``|t|^(1-alpha)`` on ``[1/8, 1/2]``.

    It is constant near 0 and near +-1 and blends with a C-infinity step on
    ``[1/16, 1/8]`` and ``[1/2, 3/4]``.
    """
    s = np.abs((np.asarray(t, dtype=float) + 1.0) % 2.0 - 1.0)
    power = s ** (1.0 - alpha)
    low = INNER ** (1.0 - alpha)
    high = OUTER ** (1.0 - alpha)
    rise = _smoothstep((s - INNER / 2) / (INNER / 2))
    fall = _smoothstep((s - OUTER) / 0.25)
    inner = low + rise * (power - low)
    return np.where(s < INNER, inner, np.where(s <= OUTER, power, power + fall * (high - power)))


@lru_cache(maxsize=None)
def _fourier_table(alpha: float, modes: int, samples: int = 1 << 14) -> tuple:
    t = -1.0 + 2.0 * np.arange(samples) / samples
    spectrum = np.fft.fft(smooth_kernel(t, alpha)) / samples
    k = np.arange(modes + 1)
    # shift from grid origin -1 to 0: e^{i pi k} = (-1)^k
    return tuple(float(v) for v in (spectrum[: modes + 1].real * (-1.0) ** k))


def fourier_coefficients(alpha: float, modes: int) -> np.ndarray:
    """Coefficients ``a_0..a_K`` with ``K(t) = sum_k a_k e^{i pi k t}`` (``a_-k = a_k``)."""
    return np.array(_fourier_table(float(alpha), int(modes)))


def fourier_tail(alpha: float, modes: int) -> float:
    """``sum_{|k| > K} |a_k|``, estimated from the coefficients up to a much larger order."""
    coeffs = fourier_coefficients(alpha, max(8 * modes, 512))
    return 2.0 * float(np.abs(coeffs[modes + 1:]).sum())


@dataclass(frozen=True)
class ProbeGeometry:
    q: DyadicCube
    p: DyadicCube

    @property
    def q_interval(self):
        return float(self.q.lower[0]), float(self.q.upper[0])

    @property
    def right_half_cube(self) -> DyadicCube:
        return self.p.children()[-1]

    @property
    def right_half(self):
        cube = self.right_half_cube
        return float(cube.lower[0]), float(cube.upper[0])

    @property
    def scale(self) -> float:
        return 2.0 * self.p.side


def probe_geometry(q: DyadicCube, root: DyadicCube) -> ProbeGeometry:
    """``P`` with ``l(P) = 4 l(Q)`` sharing the lower corner of ``Q``; must lie in ``root``."""
    if q.n != 1:
        raise UnsupportedDimensionError("the lower-bound probe is one-dimensional")
    if any(i % 4 for i in q.index):
        raise GeometryError("no dyadic cube of side 4 l(Q) shares the lower corner of Q")
    p = q.ancestor(2)
    if not p.is_within(root):
        raise GeometryError(f"{p} is not inside the root")
    return ProbeGeometry(q, p)


@dataclass(frozen=True)
class ProbeResult:
    lhs: float
    direct: float
    reconstruction: float
    truncation_bound: float
    pairings: np.ndarray
    norms: np.ndarray
    ratio: float
    modes: int

    @property
    def reconstruction_error(self) -> float:
        return abs(self.reconstruction - self.direct)


def _nodes(lo, hi, h, order):
    gx, gw = np.polynomial.legendre.leggauss(order)
    starts = np.arange(lo, hi - 0.5 * h, h)
    x = (starts[:, None] + 0.5 * h * (gx[None, :] + 1.0)).reshape(-1)
    w = np.tile(0.5 * h * gw, len(starts))
    return x, w


def probe_lhs(b: GridFunction, nu: GridFunction, q_cube: DyadicCube) -> float:
    """``nu(Q)^-1 int_Q |b - <b>_{P_R}|``."""
    geo = probe_geometry(q_cube, b.root)
    qs = cube_slice(b.root, b.resolution, geo.q)
    pr = cube_slice(b.root, b.resolution, geo.right_half_cube)
    bc = b - b.flat[0]
    direct = float(np.abs(bc.values[qs] - bc.values[pr].mean()).sum() * b.cell_side)
    return direct / float(nu.values[qs].sum() * b.cell_side)


def lower_bound_probe(b: GridFunction, mu: GridFunction, lam: GridFunction, q_cube: DyadicCube,
                      alpha: float, p: float, q: float, modes: int, order: int = 6) -> ProbeResult:
    """Pairings ``<h_k, [b, I_alpha] f_k>`` for ``|k| <= modes`` and the resulting ratio.

    ``lhs`` is ``nu(Q)^-1 int_Q |b - <b>_{P_R}|`` with ``nu = mu / lambda``.
    ``ratio`` divides it by ``max_k |pairing_k| / (||f_k||_{L^p(mu^p)} ||h_k||_{L^q'(lambda^-q')})``
    and is 0 when ``lhs`` is.
    """
    if modes < 1:
        raise ValueError("need at least one Fourier mode")
    if b.n != 1:
        raise UnsupportedDimensionError("the lower-bound probe is one-dimensional")
    geo = probe_geometry(q_cube, b.root)
    bc = b - b.flat[0]
    h = b.cell_side
    qs, pr = cube_slice(b.root, b.resolution, geo.q), cube_slice(b.root, b.resolution, geo.right_half_cube)
    b_q, b_r = bc.values[qs], bc.values[pr]
    mean_r = b_r.mean()
    sigma = np.sign(b_q - mean_r)
    direct = float(np.abs(b_q - mean_r).sum() * h)
    nu_q = float((mu.values[qs] / lam.values[qs]).sum() * h)
    lhs = direct / nu_q

    (x0, x1), (y0, y1) = geo.q_interval, geo.right_half
    x, wx = _nodes(x0, x1, h, order)
    y, wy = _nodes(y0, y1, h, order)
    bx = np.repeat(b_q, order)
    by = np.repeat(b_r, order)
    sx = np.repeat(sigma, order)
    core = (bx[:, None] - by[None, :]) * np.abs(x[:, None] - y[None, :]) ** (alpha - 1.0)
    c = geo.scale
    k = np.arange(-modes, modes + 1)
    ex = np.exp(1j * math.pi * np.outer(k, x) / c) * (wx * sx)[None, :]
    ey = np.exp(-1j * math.pi * np.outer(k, y) / c) * wy[None, :]
    pairings = np.einsum("kx,xy,ky->k", ex, core, ey)

    coeffs = fourier_coefficients(alpha, modes)
    a = coeffs[np.abs(k)]
    prefactor = c ** (1.0 - alpha) / (y1 - y0)
    reconstruction = float(prefactor * (a * pairings).sum().real)
    # |sum_{|k|>K} a_k pairing_k| <= sum_{|k|>K} |a_k| * int int |core|
    bound = prefactor * fourier_tail(alpha, modes) * float(np.abs(wx) @ np.abs(core) @ wy)

    f_norm = float((mu.values[pr] ** p).sum() * h) ** (1.0 / p)
    qp = q / (q - 1.0)
    h_norm = float((np.abs(sigma) * lam.values[qs] ** (-qp)).sum() * h) ** (1.0 / qp)
    norms = np.full(len(k), f_norm * h_norm)
    # sigma vanishes identically when b is constant on Q at its P_R average
    best = float(np.max(np.abs(pairings))) / (f_norm * h_norm) if h_norm > 0 else 0.0
    ratio = 0.0 if lhs == 0.0 else lhs / best
    return ProbeResult(lhs, direct, reconstruction, bound, pairings, norms, ratio, modes)
