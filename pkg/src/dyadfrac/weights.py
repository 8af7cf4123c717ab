"""Weights, Muckenhoupt-type characteristics and weighted BMO norms.

Every characteristic is dyadic: a maximum over the cubes of a resolved
lattice. Powers of a weight are taken cell by cell on its piecewise-constant
density, never by re-discretizing an analytic formula, so the relations
between ``w``, ``w^p``, ``w^-p'`` etc. hold exactly on the discrete model.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .grid import DyadicCube, GridFunction, ResolvedLattice, average_pyramid, block_sum, build_lattice, cell_centroids, upsample


class Weight(GridFunction):
    """A grid function with strictly positive, finite cell values."""

    def __init__(self, root, resolution, values):
        super().__init__(root, resolution, values)
        if not (np.all(np.isfinite(self.values)) and np.all(self.values > 0)):
            raise ValueError("weight values must be positive and finite")

    @classmethod
    def of(cls, g: GridFunction) -> "Weight":
        return g if isinstance(g, Weight) else cls(g.root, g.resolution, g.values)

    def power(self, t: float) -> "Weight":
        return Weight(self.root, self.resolution, self.values ** t)


def conjugate(p: float) -> float:
    return p / (p - 1.0)


def power_weight(beta: float, center, root: DyadicCube, resolution: int) -> Weight:
    """Cell values of ``|x - center|^beta``.

    In 1-D these are exact cell averages. For ``n >= 2`` cells are sampled at
    their centroids, except cells whose closure contains ``center``; those get
    the average of ``|y|^beta`` over a ball of radius one cell side around the
    singularity, ``n/(n+beta) h^beta``. That is an approximation.
    """
    n = root.n
    center = np.atleast_1d(np.asarray(center, dtype=float))
    if beta <= -n:
        raise ValueError(f"|x|^{beta} is not locally integrable in dimension {n}")
    h = root.side * 2.0 ** (-resolution)
    if n == 1:
        if beta <= -1:
            raise ValueError("beta must exceed -1 in one dimension")
        edges = root.lower[0] + h * np.arange(2 ** resolution + 1) - center[0]
        prim = np.sign(edges) * np.abs(edges) ** (beta + 1.0) / (beta + 1.0)
        return Weight(root, resolution, np.diff(prim) / h)
    coords = cell_centroids(root, resolution)
    dist = np.sqrt(sum((c - x0) ** 2 for c, x0 in zip(coords, center)))
    with np.errstate(divide="ignore"):
        values = dist ** beta
    near = np.ones(dist.shape, dtype=bool)
    for c, x0 in zip(coords, center):
        near &= np.abs(c - x0) <= 0.5 * h + 1e-15
    values[near] = n / (n + beta) * h ** beta
    return Weight(root, resolution, values)


def _lattice_for(w: GridFunction, lattice) -> ResolvedLattice:
    if lattice is None:
        return build_lattice(w.root, w.resolution)
    if lattice.root != w.root or lattice.depth > w.resolution:
        raise ValueError("lattice must share the root and not exceed the resolution")
    return lattice


def _averages(values: np.ndarray, depth: int) -> list:
    return average_pyramid(values)[: depth + 1]


def _max_over_levels(terms) -> float:
    return float(max(np.max(t) for t in terms))


def ap_characteristic(w: GridFunction, p: float, lattice=None) -> float:
    """``max_Q <w>_Q <w^(1-p')>_Q^(p-1)`` over lattice cubes."""
    if p <= 1:
        raise ValueError("p must exceed 1")
    lattice = _lattice_for(w, lattice)
    a = _averages(w.values, lattice.depth)
    b = _averages(w.values ** (1.0 - conjugate(p)), lattice.depth)
    return _max_over_levels(x * y ** (p - 1.0) for x, y in zip(a, b))


def _alpha_from(p, q, n, alpha):
    if p <= 1 or q <= 1:
        raise ValueError("p and q must exceed 1")
    gap = 1.0 / p - 1.0 / q
    if alpha is None:
        if not 0 < gap * n < n:
            raise ValueError(f"1/p - 1/q = {gap} gives no alpha in (0, n)")
        return gap * n
    if abs(gap - alpha / n) > 1e-12:
        raise ValueError(f"exponents violate 1/p - 1/q = alpha/n: {gap} vs {alpha / n}")
    return alpha


def apq_characteristic(w: GridFunction, p: float, q: float, alpha=None, lattice=None) -> float:
    """``max_Q <w^q>_Q <w^(-p')>_Q^(q/p')`` over lattice cubes."""
    _alpha_from(p, q, w.n, alpha)
    lattice = _lattice_for(w, lattice)
    pp = conjugate(p)
    a = _averages(w.values ** q, lattice.depth)
    b = _averages(w.values ** (-pp), lattice.depth)
    return _max_over_levels(x * y ** (q / pp) for x, y in zip(a, b))


def weighted_lp_norm(f: GridFunction, w, p: float) -> float:
    """``(int |f|^p w)^(1/p)``; pass ``w`` already raised to the wanted power, or None."""
    if p < 1:
        raise ValueError("p must be at least 1")
    # factoring out max|f| keeps the norm exactly homogeneous under power-of-two scaling
    top = float(np.max(np.abs(f.values)))
    if top == 0.0:
        return 0.0
    dens = np.abs(f.values / top) ** p
    if w is not None:
        if not f.compatible(w):
            raise ValueError("function and weight live on different grids")
        dens = dens * w.values
    return top * float(dens.sum() * f.cell_volume) ** (1.0 / p)


def weighted_bmo_norm(b: GridFunction, w: GridFunction, q: float = 1.0, lattice=None) -> float:
    """Dyadic weighted BMO norm.

    ``q = 1``: ``max_Q w(Q)^-1 int_Q |b - <b>_Q| dx``. For ``q > 1`` the
    integrand is ``|b - <b>_Q|^q w^(1-q) dx`` and the ``1/q`` root is taken, so
    ``q = 1`` is the first case and the norm is non-decreasing in ``q``.
    """
    if q < 1:
        raise ValueError("q must be at least 1")
    if not b.compatible(w):
        raise ValueError("symbol and weight live on different grids")
    lattice = _lattice_for(b, lattice)
    L = b.resolution
    pyr = b.pyramid
    density = np.ones(b.shape) if q == 1 else w.values ** (1.0 - q)
    best = 0.0
    for k in range(lattice.depth + 1):
        dev = np.abs(b.values - upsample(pyr[k], L - k)) ** q
        num = block_sum(dev * density, L - k)
        den = block_sum(w.values, L - k)
        best = max(best, float(np.max(num / den)) ** (1.0 / q))
    return best


@dataclass(frozen=True)
class WeightPair:
    """Two weights with exponents satisfying ``1/p - 1/q = alpha/n``."""

    mu: Weight
    lam: Weight
    p: float
    q: float
    alpha: float
    n: int = 1

    def __post_init__(self):
        if not self.mu.compatible(self.lam):
            raise ValueError("mu and lambda must share a grid")
        if self.mu.n != self.n:
            raise ValueError("weight dimension does not match n")
        if not 0 < self.alpha < self.n:
            raise ValueError("alpha must lie in (0, n)")
        _alpha_from(self.p, self.q, self.n, self.alpha)

    @property
    def nu(self) -> Weight:
        return Weight(self.mu.root, self.mu.resolution, self.mu.values / self.lam.values)

    @property
    def p_prime(self) -> float:
        return conjugate(self.p)

    @property
    def q_prime(self) -> float:
        return conjugate(self.q)


@dataclass(frozen=True)
class MembershipReport:
    mu_apq: float
    lambda_apq: float
    mu_p_ap: float
    mu_neg_pprime_apprime: float
    mu_q_aq: float
    mu_neg_qprime_aqprime: float
    lambda_p_ap: float
    lambda_neg_pprime_apprime: float
    lambda_q_aq: float
    lambda_neg_qprime_aqprime: float
    nu_a2: float
    wt_est_ratio: float

    def as_dict(self) -> dict:
        return asdict(self)

    def nu_holder_gap(self, p: float) -> float:
        """``[nu]_A2^p - [mu^p]_Ap [lambda^p]_Ap``; non-positive by Hoelder."""
        return self.nu_a2 ** p - self.mu_p_ap * self.lambda_p_ap


def wt_est_ratio(pair: WeightPair, lattice=None) -> float:
    """``max_Q mu^p(Q)^(1/p) lambda^-q'(Q)^(1/q') / (nu(Q) |Q|^(alpha/n))``.

    The powers of ``|Q|`` cancel exactly under the exponent relation, so the
    ratio is evaluated on averages.
    """
    lattice = _lattice_for(pair.mu, lattice)
    d = lattice.depth
    a = _averages(pair.mu.values ** pair.p, d)
    b = _averages(pair.lam.values ** (-pair.q_prime), d)
    c = _averages(pair.nu.values, d)
    return _max_over_levels(x ** (1.0 / pair.p) * y ** (1.0 / pair.q_prime) / z
                            for x, y, z in zip(a, b, c))


def membership_report(pair: WeightPair, lattice=None) -> MembershipReport:
    p, q, pp, qp = pair.p, pair.q, pair.p_prime, pair.q_prime
    fields = {}
    for name, w in (("mu", pair.mu), ("lambda", pair.lam)):
        fields[f"{name}_apq"] = apq_characteristic(w, p, q, pair.alpha, lattice)
        fields[f"{name}_p_ap"] = ap_characteristic(w.power(p), p, lattice)
        fields[f"{name}_neg_pprime_apprime"] = ap_characteristic(w.power(-pp), pp, lattice)
        fields[f"{name}_q_aq"] = ap_characteristic(w.power(q), q, lattice)
        fields[f"{name}_neg_qprime_aqprime"] = ap_characteristic(w.power(-qp), qp, lattice)
    fields["nu_a2"] = ap_characteristic(pair.nu, 2.0, lattice)
    fields["wt_est_ratio"] = wt_est_ratio(pair, lattice)
    return MembershipReport(**fields)


def certified_power_weight(beta: float, center, root: DyadicCube, resolution: int,
                           p: float, q: float = None, alpha=None, tol: float = 0.05) -> Weight:
    """A power weight whose A_p (or, given ``q``, A_{p,q}) characteristic is finite
    and changes by at most ``tol`` (relative) under one refinement.

    Raises ``ValueError`` otherwise; no analytic admissible range is assumed.
    """
    def char(w):
        if q is None:
            return ap_characteristic(w, p)
        return apq_characteristic(w, p, q, alpha)

    w = power_weight(beta, center, root, resolution)
    coarse = char(w)
    fine = char(power_weight(beta, center, root, resolution + 1))
    if not (math.isfinite(coarse) and math.isfinite(fine)) or abs(fine - coarse) > tol * coarse:
        raise ValueError(f"|x|^{beta} not certified: characteristic {coarse} -> {fine}")
    return w
