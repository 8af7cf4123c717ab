"""Experiment drivers and their CSV reports.

Each driver takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentReport`. Rows named ``pass:<check>`` carry 1.0 or 0.0 and
the tolerance that was applied; ``report.passed`` is the conjunction of them.
Per-trial random streams come from ``SeedSequence(seed, spawn_key=(trial,))``,
so reports do not depend on the number of worker threads.
"""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .averaging import empirical_average_kernel, limit_kernel
from .errors import ConfigError, GeometryError, UnsupportedDimensionError
from .grid import DyadicCube, GridFunction, Tails, build_lattice, cube_slice, upsample
from .haar import haar_forward, haar_function, signatures, synthesize
from .lowerbound import lower_bound_probe, probe_lhs
from .operators import (commutator_dyadic, decomposition_terms, descendant_weights, dyadic_frac_integral,
                        frac_maximal, riesz_matrix_1d, square_function)
from .weights import (Weight, WeightPair, ap_characteristic, apq_characteristic, certified_power_weight,
                      membership_report, power_weight, weighted_bmo_norm, weighted_lp_norm)

CSV_HEADER = ["experiment", "fingerprint", "metric", "value", "tolerance_or_stderr", "seed", "depth", "runtime_ms"]

EXPERIMENTS = ("decomp", "dominate", "duality", "lower-bound", "equiv", "kernel-avg", "weights-report")


def fmt(x) -> str:
    """17 significant digits, enough to round-trip a double."""
    return format(float(x), ".17g")


# -- configuration ------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    dimension: int = 1
    depth: int = 5
    alpha: float = 0.5
    p: float = None
    q: float = None
    mu: str = "one"
    lam: str = "one"
    symbol: str = "haar"
    trials: int = 20
    seed: int = 0
    output_path: str = None
    samples: int = 100000
    modes: int = 8
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        n = self.dimension
        if n < 1:
            raise ConfigError("dimension must be positive")
        if not 0 < self.alpha < n:
            raise ConfigError(f"alpha must lie in (0, {n})")
        if self.depth < 2:
            raise ConfigError("depth must be at least 2")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        gap = self.alpha / n
        p, q = self.p, self.q
        # default: the exponents symmetric about 1/2
        if p is None and q is None:
            p = 2.0 / (1.0 + gap)
        if p is None:
            p = 1.0 / (1.0 / q + gap)
        if q is None:
            inv = 1.0 / p - gap
            if inv <= 0:
                raise ConfigError(f"p={p} leaves no q with 1/p - 1/q = alpha/n")
            q = 1.0 / inv
        if p <= 1 or q <= 1:
            raise ConfigError("p and q must exceed 1")
        if abs(1.0 / p - 1.0 / q - gap) > 1e-12:
            raise ConfigError(f"1/p - 1/q = {1 / p - 1 / q} but alpha/n = {gap}")
        object.__setattr__(self, "p", float(p))
        object.__setattr__(self, "q", float(q))
        parse_weight_spec(self.mu)
        parse_weight_spec(self.lam)

    @property
    def fingerprint(self) -> str:
        return (f"dim={self.dimension};depth={self.depth};alpha={self.alpha!r};p={self.p!r};q={self.q!r};"
                f"mu={self.mu};lam={self.lam};symbol={self.symbol};trials={self.trials};seed={self.seed};"
                f"samples={self.samples};modes={self.modes}")

    def at_depth(self, depth: int) -> "ExperimentConfig":
        return replace(self, depth=depth)


CONFIG_KEYS = {f.name for f in fields(ExperimentConfig)}


def parse_weight_spec(spec: str):
    """``one`` or ``power:<beta>`` (``|x|^beta`` about the lower corner of the root)."""
    family, _, arg = spec.partition(":")
    if family == "one" and not arg:
        return ("one", None)
    if family == "power":
        try:
            return ("power", float(arg))
        except ValueError:
            pass
    raise ConfigError(f"bad weight spec {spec!r}; use 'one' or 'power:<beta>'")


def make_weight(spec: str, root: DyadicCube, resolution: int) -> Weight:
    family, beta = parse_weight_spec(spec)
    if family == "one":
        return Weight(root, resolution, np.ones((2 ** resolution,) * root.n))
    try:
        return power_weight(beta, root.lower, root, resolution)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def make_pair(config: ExperimentConfig, depth: int = None) -> WeightPair:
    depth = config.depth if depth is None else depth
    root = DyadicCube.unit(config.dimension)
    mu = make_weight(config.mu, root, depth)
    lam = make_weight(config.lam, root, depth)
    for w, spec in ((mu, config.mu), (lam, config.lam)):
        if not math.isfinite(apq_characteristic(w, config.p, config.q, config.alpha)):
            raise ConfigError(f"{spec} is not in A_(p,q)")
    return WeightPair(mu, lam, config.p, config.q, config.alpha, config.dimension)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


def random_haar_polynomial(rng, root: DyadicCube, resolution: int, top: int = None) -> GridFunction:
    """Zero-average sum of Haar functions with standard normal coefficients on levels below ``top``."""
    lattice = build_lattice(root, resolution)
    n = root.n
    top = resolution if top is None else min(top, resolution)
    levels = []
    for k in range(resolution):
        shape = (2 ** k,) * n + (2 ** n - 1,)
        # draw every level so coarse coefficients do not depend on the resolution
        levels.append(rng.standard_normal(shape) if k < top else np.zeros(shape))
    return synthesize(lattice, levels)


def _symbol(spec: str, rng, root, resolution) -> GridFunction:
    name, _, arg = spec.partition(":")
    if name == "haar":
        return random_haar_polynomial(rng, root, resolution)
    if name == "constant":
        return GridFunction.constant(root, resolution, float(arg or 0.0))
    if name == "gaussian":
        return GridFunction(root, resolution, rng.standard_normal((2 ** resolution,) * root.n))
    raise ConfigError(f"unknown symbol generator {spec!r}")


# -- reports ------------------------------------------------------------------

@dataclass
class ExperimentReport:
    config: ExperimentConfig
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def experiment(self) -> str:
        return self.config.experiment

    def add(self, metric: str, value, tolerance=float("nan")):
        self.rows.append((self.experiment, self.config.fingerprint, metric, float(value), float(tolerance)))

    def check(self, name: str, ok: bool, tolerance=float("nan")):
        self.add(f"pass:{name}", 1.0 if ok else 0.0, tolerance)

    def value(self, metric: str) -> float:
        for row in self.rows:
            if row[2] == metric:
                return row[3]
        raise KeyError(metric)

    def values(self, prefix: str) -> list:
        return [row[3] for row in self.rows if row[2].startswith(prefix)]

    @property
    def checks(self) -> dict:
        return {row[2][5:]: row[3] == 1.0 for row in self.rows if row[2].startswith("pass:")}

    @property
    def passed(self) -> bool:
        return all(self.checks.values()) and self.metadata.get("passed", True)

    def to_csv(self, path=None, record_runtime: bool = False) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        runtime = fmt(self.metadata.get("runtime_ms", 0.0)) if record_runtime else ""
        for exp, fp, metric, value, tol in self.rows:
            writer.writerow([exp, fp, metric, fmt(value), fmt(tol), self.config.seed, self.config.depth, runtime])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def summary(self) -> str:
        failed = [k for k, ok in self.checks.items() if not ok]
        status = "PASS" if not failed else "FAIL (" + ", ".join(failed) + ")"
        return f"{self.experiment}: {len(self.rows)} rows, {status}"


def _map_trials(func, count: int, workers: int) -> list:
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(func, range(count)))
    return [func(i) for i in range(count)]


def _timed(driver):
    def run(config: ExperimentConfig) -> ExperimentReport:
        start = time.perf_counter()
        report = driver(config)
        report.metadata.setdefault("seed", config.seed)
        report.metadata.setdefault("depth", config.depth)
        report.metadata["runtime_ms"] = 1e3 * (time.perf_counter() - start)
        return report
    run.__name__ = driver.__name__
    run.__doc__ = driver.__doc__
    return run


# -- decomposition identity -------------------------------------------------------

def decomposition_trial(b: GridFunction, f: GridFunction, alpha: float):
    """Sup and L2 norms of ``[b, I] f`` minus the four-term recombination, over ``|b|_inf |f|_inf``."""
    for g, name in ((b, "symbol"), (f, "function")):
        scale = max(float(np.max(np.abs(g.values))), 1.0)
        if abs(float(g.values.mean())) > 1e-12 * scale:
            raise ConfigError(f"{name} generator produced a nonzero average")
    diff = (commutator_dyadic(b, f, alpha, tails=Tails.EXTENDED)
            - decomposition_terms(b, f, alpha).recombine()).values
    norm = float(np.max(np.abs(b.values))) * float(np.max(np.abs(f.values)))
    if norm == 0.0:
        return 0.0, 0.0
    sup = float(np.max(np.abs(diff))) / norm
    l2 = math.sqrt(float((diff ** 2).mean()) * DyadicCube.unit(b.n).volume) / norm
    return sup, l2


@_timed
def decomposition_residual(config: ExperimentConfig, tol: float = 1e-10) -> ExperimentReport:
    """Residual of the four-term commutator decomposition on random zero-average pairs."""
    root = DyadicCube.unit(config.dimension)
    L = config.depth

    def trial(i):
        rng = trial_rng(config.seed, i)
        b = _symbol(config.symbol, rng, root, L)
        f = random_haar_polynomial(rng, root, L)
        return decomposition_trial(b, f, config.alpha)

    results = _map_trials(trial, config.trials, config.workers)
    report = ExperimentReport(config)
    for i, (sup, _) in enumerate(results):
        report.add(f"residual_sup[trial={i}]", sup, tol)
    worst = max(r[0] for r in results)
    report.add("max_residual_sup", worst, tol)
    report.metadata["max_residual_l2"] = max(r[1] for r in results)
    report.metadata["passed"] = worst <= tol
    return report


# -- domination -------------------------------------------------------------------

def domination_trial(f: GridFunction, g: GridFunction, alpha: float):
    """Signed maxima over cells of ``(S Phi)^2 - bound`` for both paraproduct-type operators.

    The first uses coefficients ``<f>_Q |Q|^(alpha/n) g(Q, eps)`` and the bound
    ``(M_alpha f)^2 (S g)^2``; the second replaces ``<f>_Q |Q|^(alpha/n)`` by the
    descendant weight of ``f`` on ``Q`` and the bound by ``(I_alpha |f|)^2 (S g)^2``.
    """
    lattice = build_lattice(f.root, f.resolution)
    n, L = f.n, f.resolution
    gh = haar_forward(g, lattice).levels
    fh = haar_forward(f, lattice).levels
    vols = lattice.root.volume * 2.0 ** (-n * np.arange(L + 1))
    sg2 = square_function(g, lattice).values ** 2
    avg = f.pyramid
    para = synthesize(lattice, [gh[k] * (avg[k] * vols[k] ** (alpha / n))[..., None] for k in range(L)])
    weights = descendant_weights(fh, lattice, alpha)
    t1 = synthesize(lattice, [gh[k] * weights[k][..., None] for k in range(L)])
    m = frac_maximal(f, alpha, lattice).values
    i_abs = dyadic_frac_integral(abs(f), alpha, lattice).values
    gap_para = float(np.max(square_function(para, lattice).values ** 2 - m ** 2 * sg2))
    gap_t1 = float(np.max(square_function(t1, lattice).values ** 2 - i_abs ** 2 * sg2))
    return gap_para, gap_t1


@_timed
def domination_check(config: ExperimentConfig, tol: float = 1e-12) -> ExperimentReport:
    """Cell-wise square-function domination on Gaussian ``f`` and ``g``."""
    root = DyadicCube.unit(config.dimension)

    def trial(i):
        rng = trial_rng(config.seed, i)
        shape = (2 ** config.depth,) * config.dimension
        f = GridFunction(root, config.depth, rng.standard_normal(shape))
        g = GridFunction(root, config.depth, rng.standard_normal(shape))
        return domination_trial(f, g, config.alpha)

    results = _map_trials(trial, config.trials, config.workers)
    report = ExperimentReport(config)
    for i, (a, b) in enumerate(results):
        report.add(f"paraproduct_gap[trial={i}]", a, tol)
        report.add(f"t1_gap[trial={i}]", b, tol)
    worst_a, worst_b = max(r[0] for r in results), max(r[1] for r in results)
    report.add("max_paraproduct_gap", worst_a, tol)
    report.add("max_t1_gap", worst_b, tol)
    report.check("paraproduct_domination", worst_a <= tol, tol)
    report.check("t1_domination", worst_b <= tol, tol)
    return report


# -- duality ------------------------------------------------------------------------

def duality_terms(b: GridFunction, phi: GridFunction, w: GridFunction):
    """``|<b, phi>|`` and ``|b|_BMO2(w) |S phi|_L1(w)``, for mean-zero ``phi``."""
    # centring b leaves the pairing unchanged and makes it exactly 0 for constants
    num = abs(float(((b.values - b.values.mean()) * phi.values).sum()) * b.cell_volume)
    bmo = weighted_bmo_norm(b, w, q=2.0)
    sphi = float((square_function(phi).values * w.values).sum()) * b.cell_volume
    return num, bmo * sphi


def duality_ratio(b: GridFunction, phi: GridFunction, w: GridFunction) -> float:
    """``|<b, phi>| / (|b|_BMO2(w) |S phi|_L1(w))``, taken as 0 when the pairing vanishes."""
    num, den = duality_terms(b, phi, w)
    if num == 0.0:
        return 0.0
    return num / den if den > 0 else math.inf


def _refine(g: GridFunction, extra: int = 1) -> GridFunction:
    return GridFunction(g.root, g.resolution + extra, upsample(g.values, extra))


def duality_hand_case(depth: int) -> float:
    root = DyadicCube.unit(1)
    h = haar_function(root, (0,), root, depth)
    return duality_ratio(h, h, GridFunction.constant(root, depth, 1.0))


@_timed
def duality_probe(config: ExperimentConfig, drift_tol: float = 0.05) -> ExperimentReport:
    """Pairing of a symbol with a test function against ``BMO^2(w)`` times ``|S phi|_L1(w)``.

    Each trial draws a power weight ``|x|^beta`` with ``beta`` uniform on
    ``(-0.6, 0.6)``, certified A_2, and Haar polynomials on the coarsest
    ``depth - 2`` levels, so refining the grid leaves ``b`` and ``phi`` unchanged.
    """
    root = DyadicCube.unit(config.dimension)
    L, n = config.depth, config.dimension
    top = max(1, L - 2)

    def trial(i):
        rng = trial_rng(config.seed, i)
        beta = float(rng.uniform(-0.6, 0.6)) * n
        if config.symbol == "haar":
            b = random_haar_polynomial(rng, root, L, top)
        else:
            b = _symbol(config.symbol, rng, root, L)
        phi = random_haar_polynomial(rng, root, L, top)
        w = certified_power_weight(beta, root.lower, root, L, 2.0)
        w_fine = power_weight(beta, root.lower, root, L + 1)
        num, den = duality_terms(b, phi, w)
        if num == 0.0 and den == 0.0:
            return beta, None, None, ap_characteristic(w, 2.0)
        r0 = duality_ratio(b, phi, w)
        r1 = duality_ratio(_refine(b), _refine(phi), w_fine)
        return beta, r0, r1, ap_characteristic(w, 2.0)

    results = _map_trials(trial, config.trials, config.workers)
    report = ExperimentReport(config)
    kept = [r for r in results if r[1] is not None]
    skipped = len(results) - len(kept)
    coarse = [r[1] for r in kept]
    fine = [r[2] for r in kept]
    report.add("skipped_trials", skipped)
    finite = all(math.isfinite(x) for x in coarse + fine)
    max0 = max(coarse, default=0.0)
    max1 = max(fine, default=0.0)
    drift = abs(max1 - max0) / max0 if max0 > 0 else 0.0
    trial_drift = max((abs(c - f) / c for c, f in zip(coarse, fine) if c > 0), default=0.0)
    report.add("max_ratio", max0)
    report.add("max_ratio_refined", max1)
    report.add("max_ratio_drift", drift, drift_tol)
    report.add("max_trial_drift", trial_drift)
    report.add("max_weight_a2", max((r[3] for r in results), default=0.0))
    hand = duality_hand_case(L)
    report.add("hand_case_ratio", hand, 1e-12)
    report.check("ratios_finite", finite)
    report.check("refinement_drift", drift <= drift_tol, drift_tol)
    report.check("hand_case", abs(hand - 1.0) <= 1e-12, 1e-12)
    return report


# -- lower bound ------------------------------------------------------------------

def _probe_cubes(root: DyadicCube, levels=(2, 3, 4, 5)):
    # between them these levels separate every step at a multiple of 1/16
    for m in levels:
        for i in range(0, 2 ** m, 4):
            yield DyadicCube(root.level + m, (root.index[0] * 2 ** m + i,), root.grid)


def lower_bound_symbols(rng, root: DyadicCube, resolution: int, count: int) -> list:
    """Steps at coarse dyadic points alternating with coarse Haar polynomials."""
    out = []
    x = (np.arange(2 ** resolution) + 0.5) / 2 ** resolution
    steps = rng.permutation(np.arange(1, 16)) / 16.0
    for i in range(count):
        if i % 2 == 0:
            t = steps[(i // 2) % len(steps)]
            out.append(GridFunction(root, resolution, (x < t).astype(float)))
        else:
            out.append(random_haar_polynomial(rng, root, resolution, 4))
    return out


def best_probe_cube(b, nu, root):
    """The admissible cube with the largest ``nu(Q)^-1 int_Q |b - <b>_{P_R}|``."""
    return max(_probe_cubes(root), key=lambda q: probe_lhs(b, nu, q))


@_timed
def lower_bound_experiment(config: ExperimentConfig, drift_tol: float = 0.10) -> ExperimentReport:
    """Commutator pairings with oscillating test functions on ``10`` (``trials``) symbols."""
    if config.dimension != 1:
        raise ConfigError("the lower-bound probe is implemented in one dimension")
    pair = make_pair(config)
    root = pair.mu.root
    L, K = config.depth, config.modes
    if L < 6:
        raise ConfigError("the lower-bound probe needs depth >= 6")
    rng = trial_rng(config.seed, 0)
    symbols = lower_bound_symbols(rng, root, L, config.trials)
    nu = pair.nu

    def probe(b, q, k):
        return lower_bound_probe(b, pair.mu, pair.lam, q, config.alpha, config.p, config.q, k)

    def trial(i):
        b = symbols[i]
        q = best_probe_cube(b, nu, root)
        return q, probe(b, q, K), probe(b, q, 2 * K)

    results = _map_trials(trial, len(symbols), config.workers)
    report = ExperimentReport(config)
    drifts, finite, recon_ok = [], True, True
    for i, (q, r1, r2) in enumerate(results):
        drift = abs(r2.ratio - r1.ratio) / r1.ratio if r1.ratio > 0 else math.inf
        drifts.append(drift)
        finite &= math.isfinite(r1.ratio) and r1.ratio > 0 and math.isfinite(r2.ratio)
        recon_ok &= r2.reconstruction_error <= r2.truncation_bound + 1e-9 * max(r2.direct, 1.0)
        report.add(f"lhs[symbol={i}]", r1.lhs)
        report.add(f"ratio[symbol={i};K={K}]", r1.ratio)
        report.add(f"ratio[symbol={i};K={2 * K}]", r2.ratio)
        report.add(f"ratio_drift[symbol={i}]", drift, drift_tol)
        report.add(f"reconstruction_error[symbol={i}]", r2.reconstruction_error, r2.truncation_bound)
    constant = GridFunction.constant(root, L, 0.3)
    zero = probe(constant, next(_probe_cubes(root)), K)
    const_zero = zero.lhs == 0.0 and zero.ratio == 0.0 and not np.any(zero.pairings) and zero.direct == 0.0
    report.add("max_ratio_drift", max(drifts), drift_tol)
    report.check("ratios_finite", finite)
    report.check("mode_doubling_drift", max(drifts) <= drift_tol, drift_tol)
    report.check("reconstruction_within_truncation", recon_ok)
    report.check("constant_symbol_zero", const_zero)
    return report


# -- operator norms -----------------------------------------------------------------

def _operator(tag, pair: WeightPair, b=None):
    alpha = pair.alpha
    if callable(tag):
        return tag
    if tag == "dyadic_frac_integral":
        return lambda f: dyadic_frac_integral(f, alpha)
    if tag == "frac_maximal":
        return lambda f: frac_maximal(f, alpha)
    if tag in ("commutator_dyadic", "commutator_continuum") and b is None:
        raise ConfigError(f"{tag} needs a symbol b")
    if tag == "commutator_dyadic":
        return lambda f: commutator_dyadic(b, f, alpha, tails=Tails.EXTENDED)
    if tag == "commutator_continuum":
        return _continuum_commutator(b, alpha)
    raise ConfigError(f"unknown operator {tag!r}")


def _continuum_commutator(b: GridFunction, alpha: float):
    if b.n != 1:
        raise ConfigError("the sampled continuum commutator is one-dimensional")
    h = b.cell_side
    mids = b.root.lower[0] + h * (np.arange(2 ** b.resolution) + 0.5)
    mat = riesz_matrix_1d(b.root, b.resolution, alpha, mids)
    bc = b.flat - b.flat[0]

    def apply(f):
        return f.with_values(bc * (mat @ f.flat) - mat @ (bc * f.flat))
    return apply


def norm_test_family(pair: WeightPair, trials: int, seed: int, max_level: int = None) -> list:
    """Indicators and Haar functions of lattice cubes, ``mu^(-p')`` bumps and random Haar polynomials."""
    root, L = pair.mu.root, pair.mu.resolution
    top = L if max_level is None else min(max_level, L)
    lattice = build_lattice(root, L)
    bump = pair.mu.values ** (-pair.p_prime)
    out = []
    for k in range(top + 1):
        for cube in lattice.level(k):
            ind = np.zeros(pair.mu.shape)
            ind[cube_slice(root, L, cube)] = 1.0
            out.append(GridFunction(root, L, ind))
            out.append(GridFunction(root, L, ind * bump))
            if k < L:
                for eps in signatures(root.n):
                    out.append(haar_function(cube, eps, root, L))
    for i in range(trials):
        out.append(random_haar_polynomial(trial_rng(seed, i), root, L))
    return out


def operator_norm_estimate(operator, pair: WeightPair, trials: int = 8, seed: int = 0, b=None,
                           max_level: int = None, family=None) -> float:
    """Largest ``|Tf|_{L^q(lambda^q)} / |f|_{L^p(mu^p)}`` over a test family: a lower bound for the norm."""
    T = _operator(operator, pair, b)
    family = norm_test_family(pair, trials, seed, max_level) if family is None else family
    mu_p = pair.mu.power(pair.p)
    lam_q = pair.lam.power(pair.q)
    best, used = 0.0, 0
    for f in family:
        den = weighted_lp_norm(f, mu_p, pair.p)
        if den == 0.0:
            continue
        used += 1
        best = max(best, weighted_lp_norm(T(f), lam_q, pair.q) / den)
    if used == 0:
        raise ConfigError("every test function is zero")
    return best


# -- equivalence ------------------------------------------------------------------

def equivalence_symbols(root: DyadicCube, resolution: int, seed: int) -> list:
    """Ten non-constant symbols defined on coarse levels, so they do not change under refinement."""
    x = (np.arange(2 ** resolution) + 0.5) / 2 ** resolution
    syms = [GridFunction(root, resolution, (x < t).astype(float)) for t in (0.5, 0.25, 0.75, 0.125)]
    syms.append(haar_function(DyadicCube(2, (1,), root.grid), (0,), root, resolution))
    syms.append(GridFunction(root, resolution, np.floor(8 * x) / 8))
    for i in range(4):
        syms.append(random_haar_polynomial(trial_rng(seed, i), root, resolution, 3))
    return syms


def _commutator_ratio(b, pair, trials, seed, max_level):
    bmo = weighted_bmo_norm(b, pair.nu)
    if bmo == 0.0:
        return None, 0.0
    est = operator_norm_estimate("commutator_dyadic", pair, trials, seed, b=b, max_level=max_level)
    return est / bmo, est


@_timed
def equivalence_scan(config: ExperimentConfig, drift_tol: float = 0.10) -> ExperimentReport:
    """Sampled commutator norm over the weighted BMO norm, across a suite of symbols and two depths."""
    if config.dimension != 1:
        raise ConfigError("the equivalence scan is one-dimensional")
    L = config.depth
    pairs = [make_pair(config, L), make_pair(config, L + 1)]
    root = pairs[0].mu.root
    level_cap = L - 2
    report = ExperimentReport(config)
    suites = [equivalence_symbols(root, d, config.seed) + [GridFunction.constant(root, d, 0.7)] for d in (L, L + 1)]

    def trial(i):
        return [_commutator_ratio(suites[j][i], pairs[j], config.trials, config.seed, level_cap) for j in (0, 1)]

    results = _map_trials(trial, len(suites[0]), config.workers)
    ratios = {0: [], 1: []}
    excluded = 0
    for i, res in enumerate(results):
        for j, (ratio, est) in enumerate(res):
            if ratio is None:
                excluded += j == 0
                report.add(f"estimate[symbol={i};depth={L + j}]", est)
                continue
            ratios[j].append(ratio)
            report.add(f"ratio[symbol={i};depth={L + j}]", ratio)
    lo0, hi0 = min(ratios[0]), max(ratios[0])
    lo1, hi1 = min(ratios[1]), max(ratios[1])
    drift = max(abs(lo1 - lo0) / lo0, abs(hi1 - hi0) / hi0)
    report.add("excluded_symbols", excluded)
    report.add("min_ratio", lo0)
    report.add("max_ratio", hi0)
    report.add("max_over_min", hi0 / lo0)
    report.add("depth_drift", drift, drift_tol)
    finite = all(0 < r < math.inf for r in ratios[0] + ratios[1])
    report.check("ratios_finite_positive", finite)
    report.check("depth_drift", drift <= drift_tol, drift_tol)

    b = suites[0][0]
    c = 3.7
    r_b, _ = _commutator_ratio(b, pairs[0], config.trials, config.seed, level_cap)
    r_cb, _ = _commutator_ratio(c * b, pairs[0], config.trials, config.seed, level_cap)
    scale_gap = abs(r_cb - r_b) / r_b
    report.add("scaling_gap", scale_gap, 1e-12)
    report.check("scaling_invariance", scale_gap <= 1e-12, 1e-12)

    flat = WeightPair(*(Weight(root, L, np.ones(pairs[0].mu.shape)) for _ in range(2)),
                      config.p, config.q, config.alpha, 1)
    zero_iff = True
    for i, sym in enumerate(suites[0]):
        est = operator_norm_estimate("commutator_dyadic", flat, config.trials, config.seed, b=sym,
                                     max_level=level_cap)
        constant = bool(np.all(sym.values == sym.flat[0]))
        zero_iff &= (est == 0.0) == constant
    report.check("zero_iff_constant_unweighted", zero_iff)
    return report


# -- kernel averaging ----------------------------------------------------------------

KERNEL_ABSCISSAE = (-0.4, -0.2, -0.1, -0.05, 0.05, 0.1, 0.2, 0.4)


@_timed
def kernel_average_experiment(config: ExperimentConfig, rel_tol: float = 0.05, probe_width: float = 1e-3):
    """Monte Carlo grid-averaged kernel against ``c |x|^(alpha-1)`` and its reflection."""
    if config.dimension != 1:
        raise ConfigError("grid averaging is one-dimensional")
    if not 0 < config.alpha < 1:
        raise ConfigError("alpha must lie in (0, 1)")
    est = empirical_average_kernel(config.alpha, config.samples, probe_width, KERNEL_ABSCISSAE,
                                   seed=config.seed, workers=config.workers)
    analytic = limit_kernel(est.abscissae, config.alpha)
    report = ExperimentReport(config)
    close, symmetric = True, True
    for x, v, s, a in zip(KERNEL_ABSCISSAE, est.values, est.stderr, analytic):
        report.add(f"estimate[x={x!r}]", v)
        report.add(f"stderr[x={x!r}]", s)
        report.add(f"analytic[x={x!r}]", a, rel_tol * a)
        close &= abs(v - a) <= rel_tol * a
    index = {x: i for i, x in enumerate(KERNEL_ABSCISSAE)}
    for x in KERNEL_ABSCISSAE:
        if x > 0:
            i, j = index[x], index[-x]
            gap = abs(est.values[i] - est.values[j])
            band = 4.0 * math.hypot(est.stderr[i], est.stderr[j])
            report.add(f"symmetry_gap[x={x!r}]", gap, band)
            symmetric &= gap <= band
    report.check("within_tolerance_of_limit", close, rel_tol)
    report.check("symmetric", symmetric)
    return report


# -- weights ------------------------------------------------------------------------

@_timed
def weights_report(config: ExperimentConfig, drift_tol: float = 0.02) -> ExperimentReport:
    """Membership report for the configured pair at two depths."""
    report = ExperimentReport(config)
    reps = [membership_report(make_pair(config, d)) for d in (config.depth, config.depth + 1)]
    for key, value in reps[0].as_dict().items():
        report.add(key, value)
    finite = all(math.isfinite(v) for v in reps[0].as_dict().values())
    gap = reps[0].nu_holder_gap(config.p)
    w0, w1 = reps[0].wt_est_ratio, reps[1].wt_est_ratio
    drift = abs(w1 - w0) / w0
    report.add("nu_holder_gap", gap, 0.0)
    report.add("wt_est_drift", drift, drift_tol)
    report.check("finite", finite)
    report.check("nu_holder", gap <= 1e-12 * reps[0].mu_p_ap * reps[0].lambda_p_ap)
    report.check("wt_est_drift", drift <= drift_tol, drift_tol)
    return report


DRIVERS = {
    "decomp": decomposition_residual,
    "dominate": domination_check,
    "duality": duality_probe,
    "lower-bound": lower_bound_experiment,
    "equiv": equivalence_scan,
    "kernel-avg": kernel_average_experiment,
    "weights-report": weights_report,
}


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    try:
        return DRIVERS[config.experiment](config)
    except (UnsupportedDimensionError, GeometryError) as exc:
        raise ConfigError(str(exc)) from exc
