import csv
import io
import math

import numpy as np
import pytest

from dyadfrac.errors import ConfigError, GeometryError
from dyadfrac.experiments import (CSV_HEADER, ExperimentConfig, ExperimentReport, best_probe_cube,
                                  decomposition_trial, domination_trial, duality_hand_case, duality_ratio,
                                  equivalence_symbols, fmt, make_pair, norm_test_family, operator_norm_estimate, random_haar_polynomial,
                                  run_experiment, trial_rng)
from dyadfrac.grid import DyadicCube, GridFunction
from dyadfrac.haar import haar_function
from dyadfrac.lowerbound import (fourier_coefficients, fourier_tail, lower_bound_probe, probe_geometry, probe_lhs,
                                 smooth_kernel)
from dyadfrac.operators import frac_maximal
from dyadfrac.weights import Weight, WeightPair

ROOT = DyadicCube.unit(1)


def flat_pair(L=6):
    one = Weight(ROOT, L, np.ones(2 ** L))
    return WeightPair(one, one, 4 / 3, 4.0, 0.5)


def test_config_defaults_and_validation():
    c = ExperimentConfig("decomp")
    assert c.p == pytest.approx(4 / 3) and c.q == pytest.approx(4.0)
    c = ExperimentConfig("decomp", dimension=2, alpha=1.0)
    assert 1 / c.p - 1 / c.q == pytest.approx(0.5)
    assert ExperimentConfig("decomp", p=1.5).q == pytest.approx(6.0)
    assert ExperimentConfig("decomp", q=4.0).p == pytest.approx(4 / 3)
    for kwargs in (dict(depth=1), dict(trials=0), dict(p=2.0, q=3.0), dict(alpha=1.0), dict(p=2.5),
                   dict(mu="bad"), dict(workers=0)):
        with pytest.raises(ConfigError):
            ExperimentConfig("decomp", **kwargs)
    with pytest.raises(ConfigError):
        ExperimentConfig("nope")


def test_fingerprint_is_stable_and_complete():
    a = ExperimentConfig("dominate", seed=3)
    b = ExperimentConfig("dominate", seed=3)
    assert a.fingerprint == b.fingerprint
    assert a.fingerprint != ExperimentConfig("dominate", seed=4).fingerprint
    assert "," not in a.fingerprint


def test_fmt_round_trips():
    for x in (0.1, 1 / 3, 1e-300, -2.5e17, math.pi):
        assert float(fmt(x)) == x
    assert fmt(0.1) == "0.10000000000000001"


def test_random_haar_polynomial_is_mean_zero_and_nested():
    p = random_haar_polynomial(trial_rng(1, 0), ROOT, 6, top=3)
    assert abs(p.values.mean()) <= 1e-15
    q = random_haar_polynomial(trial_rng(1, 0), ROOT, 7, top=3)
    assert np.allclose(np.repeat(p.flat, 2), q.flat, atol=1e-14)


def test_decomposition_trial_examples():
    rng = np.random.default_rng(0)
    f = random_haar_polynomial(rng, ROOT, 5)
    b = random_haar_polynomial(rng, ROOT, 5)
    assert decomposition_trial(GridFunction.constant(ROOT, 5, 0.0), f, 0.5) == (0.0, 0.0)
    sup, l2 = decomposition_trial(b, f, 0.5)
    assert sup <= 1e-10 and l2 <= sup
    sup2, _ = decomposition_trial(2 * b, 3 * f, 0.5)
    assert abs(sup2 - sup) <= 1e-12
    with pytest.raises(ConfigError):
        decomposition_trial(b + 1.0, f, 0.5)


def test_decomposition_experiment():
    rep = run_experiment(ExperimentConfig("decomp", depth=5, trials=20, seed=7))
    assert len(rep.rows) == 21 and rep.passed
    assert rep.value("max_residual_sup") <= 1e-10
    rep = run_experiment(ExperimentConfig("decomp", symbol="constant:0", trials=3))
    assert rep.value("max_residual_sup") == 0.0
    with pytest.raises(ConfigError):
        run_experiment(ExperimentConfig("decomp", symbol="gaussian", trials=2))
    with pytest.raises(ConfigError):
        run_experiment(ExperimentConfig("decomp", symbol="constant:2"))


def test_domination_examples():
    zero = GridFunction.constant(ROOT, 4, 0.0)
    g = haar_function(ROOT, (0,), ROOT, 4)
    assert domination_trial(zero, g, 0.5) == (0.0, 0.0)
    # one Haar coefficient: the paraproduct is |<f>_Q| |Q|^alpha on Q, below M_alpha f there
    rng = np.random.default_rng(2)
    f = GridFunction(ROOT, 4, rng.standard_normal(16))
    Q = DyadicCube(2, (1,), ROOT.grid)
    g = haar_function(Q, (0,), ROOT, 4)
    para, _ = domination_trial(f, g, 0.5)
    assert para <= 1e-14
    m = frac_maximal(f, 0.5).values[4:8]
    avg = f.values[4:8].mean() * Q.volume ** 0.5
    assert np.all(abs(avg) <= m)


def test_domination_experiment():
    for n, L in ((1, 5), (2, 3)):
        rep = run_experiment(ExperimentConfig("dominate", dimension=n, depth=L, trials=10, seed=1))
        assert rep.passed
        assert rep.value("max_paraproduct_gap") <= 1e-12


def test_duality_examples():
    assert abs(duality_hand_case(6) - 1.0) <= 1e-12
    phi = haar_function(ROOT, (0,), ROOT, 5)
    w = Weight(ROOT, 5, np.ones(32))
    assert duality_ratio(GridFunction.constant(ROOT, 5, 2.0), phi, w) == 0.0


def test_duality_experiment():
    rep = run_experiment(ExperimentConfig("duality", depth=6, trials=30, seed=2))
    assert rep.passed
    assert rep.value("hand_case_ratio") == pytest.approx(1.0, abs=1e-12)
    assert 0 < rep.value("max_ratio") < math.inf
    rep = run_experiment(ExperimentConfig("duality", depth=5, trials=4, symbol="constant:1.5"))
    assert rep.value("skipped_trials") == 4.0


def test_smooth_kernel_properties():
    t = np.linspace(-3, 3, 6001)
    k = smooth_kernel(t, 0.5)
    assert np.allclose(k, smooth_kernel(-t, 0.5))
    assert np.allclose(k, smooth_kernel(t + 2, 0.5))
    band = (np.abs(t) >= 1 / 8) & (np.abs(t) <= 1 / 2)
    assert np.allclose(k[band], np.abs(t[band]) ** 0.5)
    x = np.linspace(-1, 1, 101)
    for modes in (32, 64, 128):
        a = fourier_coefficients(0.5, modes)
        series = a[0] + 2 * sum(a[j] * np.cos(np.pi * j * x) for j in range(1, modes + 1))
        assert np.max(np.abs(series - smooth_kernel(x, 0.5))) <= fourier_tail(0.5, modes)
    assert fourier_tail(0.5, 128) < fourier_tail(0.5, 64) / 4
    assert np.abs(a[32:]).max() < 1e-3 * abs(a[0])


def test_probe_geometry_errors():
    with pytest.raises(GeometryError):
        probe_geometry(DyadicCube(3, (1,), ROOT.grid), ROOT)
    with pytest.raises(GeometryError):
        probe_geometry(DyadicCube(1, (0,), ROOT.grid), ROOT)
    geo = probe_geometry(DyadicCube(3, (4,), ROOT.grid), ROOT)
    assert geo.right_half == (0.75, 1.0) and geo.scale == 1.0
    b = GridFunction.constant(ROOT, 6, 0.0)
    with pytest.raises(ValueError):
        lower_bound_probe(b, b + 1, b + 1, DyadicCube(3, (0,), ROOT.grid), 0.5, 4 / 3, 4.0, 0)


def test_lower_bound_probe_examples():
    L = 7
    one = GridFunction.constant(ROOT, L, 1.0)
    q = DyadicCube(3, (0,), ROOT.grid)
    zero = lower_bound_probe(GridFunction.constant(ROOT, L, 2.2), one, one, q, 0.5, 4 / 3, 4.0, 4)
    assert zero.lhs == 0.0 and not np.any(zero.pairings) and zero.ratio == 0.0
    x = (np.arange(2 ** L) + 0.5) / 2 ** L
    step = GridFunction(ROOT, L, (x < 1 / 16).astype(float))
    res = lower_bound_probe(step, one, one, q, 0.5, 4 / 3, 4.0, 4)
    assert res.lhs > 0 and np.max(np.abs(res.pairings)) > 0
    assert res.reconstruction_error <= res.truncation_bound
    assert 0 < res.ratio < math.inf


def test_lower_bound_direct_pairing():
    # the k = 0 pairing against an independent double loop over cells with scipy quadrature
    from scipy import integrate
    L = 6
    one = GridFunction.constant(ROOT, L, 1.0)
    x = (np.arange(2 ** L) + 0.5) / 2 ** L
    b = GridFunction(ROOT, L, np.sin(9 * x))
    q = DyadicCube(3, (0,), ROOT.grid)
    res = lower_bound_probe(b, one, one, q, 0.5, 4 / 3, 4.0, 1)
    h = 1 / 64
    mean_r = b.flat[16:32].mean()
    total = 0.0
    for i in range(8):
        sigma = np.sign(b.flat[i] - mean_r)
        for j in range(16, 32):
            val, _ = integrate.dblquad(lambda y, t: abs(t - y) ** -0.5, i * h, (i + 1) * h, j * h, (j + 1) * h)
            total += sigma * (b.flat[i] - b.flat[j]) * val
    assert res.pairings[1].real == pytest.approx(total, rel=1e-9)


def test_probe_cubes_see_every_coarse_step():
    L = 7
    nu = GridFunction.constant(ROOT, L, 1.0)
    x = (np.arange(2 ** L) + 0.5) / 2 ** L
    for k in range(1, 16):
        b = GridFunction(ROOT, L, (x < k / 16).astype(float))
        assert probe_lhs(b, nu, best_probe_cube(b, nu, ROOT)) > 0


def test_lower_bound_experiment():
    rep = run_experiment(ExperimentConfig("lower-bound", depth=7, trials=4, mu="power:0.125", lam="power:-0.125"))
    assert rep.passed
    with pytest.raises(ConfigError):
        run_experiment(ExperimentConfig("lower-bound", dimension=2, alpha=1.0, depth=6))


def test_operator_norm_examples():
    pair = flat_pair()
    assert operator_norm_estimate(lambda f: 0 * f, pair, trials=2) == 0.0
    base = operator_norm_estimate("frac_maximal", pair, trials=2)
    double = operator_norm_estimate(lambda f: 2 * frac_maximal(f, 0.5), pair, trials=2)
    assert double == 2 * base
    assert base >= 1.0
    with pytest.raises(ConfigError):
        operator_norm_estimate("frac_maximal", pair, family=[GridFunction.constant(ROOT, 6, 0.0)])
    with pytest.raises(ConfigError):
        operator_norm_estimate("commutator_dyadic", pair)
    with pytest.raises(ConfigError):
        operator_norm_estimate("bogus", pair)


def test_operator_norm_commutators():
    pair = flat_pair()
    b = equivalence_symbols(ROOT, 6, 0)[0]
    dyad = operator_norm_estimate("commutator_dyadic", pair, trials=2, b=b, max_level=3)
    cont = operator_norm_estimate("commutator_continuum", pair, trials=2, b=b, max_level=3)
    assert dyad > 0 and cont > 0
    const = GridFunction.constant(ROOT, 6, 4.0)
    assert operator_norm_estimate("commutator_dyadic", pair, trials=2, b=const) == 0.0
    assert operator_norm_estimate("commutator_continuum", pair, trials=2, b=const) == 0.0
    assert len(norm_test_family(pair, 3, 0, max_level=2)) == 7 * 3 + 3


def test_equivalence_experiment():
    rep = run_experiment(ExperimentConfig("equiv", depth=6, trials=2, mu="power:0.125", lam="power:-0.125"))
    assert rep.passed
    assert rep.value("excluded_symbols") == 1.0
    assert 1.0 <= rep.value("max_over_min") < math.inf


def test_weights_report_experiment():
    rep = run_experiment(ExperimentConfig("weights-report", depth=8))
    assert rep.passed
    for key in ("mu_apq", "lambda_apq", "nu_a2", "wt_est_ratio"):
        assert rep.value(key) == pytest.approx(1.0, abs=1e-14)
    rep = run_experiment(ExperimentConfig("weights-report", depth=9, mu="power:0.125"))
    assert rep.passed
    with pytest.raises(ConfigError):
        make_pair(ExperimentConfig("weights-report", mu="power:-2"))


def test_kernel_average_experiment():
    rep = run_experiment(ExperimentConfig("kernel-avg", samples=20000, seed=4))
    assert rep.passed
    assert rep.value("analytic[x=0.1]") == pytest.approx(4 / 3 * 0.1 ** -0.5)


def test_report_csv_format():
    rep = ExperimentReport(ExperimentConfig("decomp", seed=5, depth=3))
    rep.add("x", 0.1, 1e-10)
    rep.check("ok", True, 0.5)
    text = rep.to_csv()
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == CSV_HEADER
    assert rows[1][2:] == ["x", "0.10000000000000001", "1e-10", "5", "3", ""]
    assert rows[2][3] == "1"
    assert rep.passed and rep.checks == {"ok": True}
    rep.check("bad", False)
    assert not rep.passed
    timed = rep.to_csv(record_runtime=True)
    assert list(csv.reader(io.StringIO(timed)))[1][-1] != ""


@pytest.mark.parametrize("experiment,kwargs", [
    ("decomp", dict(trials=12)),
    ("dominate", dict(trials=12, dimension=2, depth=3)),
    ("duality", dict(trials=12, depth=5)),
    ("kernel-avg", dict(samples=12000)),
])
def test_thread_count_does_not_change_csv(experiment, kwargs):
    one = run_experiment(ExperimentConfig(experiment, workers=1, seed=3, **kwargs)).to_csv()
    many = run_experiment(ExperimentConfig(experiment, workers=4, seed=3, **kwargs)).to_csv()
    assert one == many
