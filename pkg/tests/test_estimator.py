import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qmegs.bench import maxmin_error
from qmegs.errors import ExhaustionError, InvalidInputError, ModelConditionError
from qmegs.estimator import (
    FilterGrid,
    QmegsConfig,
    filter_eval,
    filter_oracle,
    filter_tail,
    log_periodic_gaussian,
    peak_search,
    periodic_gaussian,
    periodic_gaussian_excess,
    qmegs_int_run,
    qmegs_run,
    search_grid,
    theorem_params,
    wrapped_distance,
)
from qmegs.acceptance import expected_filter, seam_model
from qmegs.sampler import Dataset, sample_times
from qmegs.spectrum import SpectralModel, build_toy, exact_signal

seeds = st.integers(0, 2**32 - 1)


def make_dataset(t, z, T=1.0, sigma=1.0):
    return Dataset(np.asarray(t, float), np.asarray(z, complex), T, sigma)


def oracle_grid(model, T, q):
    g = search_grid(T, q)
    return FilterGrid(g.thetas, filter_oracle(model, g.thetas, T), T, q)


# -- config and grid --------------------------------------------------------

def test_config_validation():
    QmegsConfig()
    with pytest.raises(InvalidInputError):
        QmegsConfig(q=2.0, alpha=5.0)
    with pytest.raises(InvalidInputError):
        QmegsConfig(q=0.03, alpha=5.0)
    with pytest.raises(InvalidInputError):
        QmegsConfig(N=0)


@given(T=st.floats(0.5, 5000), q=st.sampled_from([0.01, 0.05, 0.1, 0.25, 1.0]))
def test_grid_exactness(T, q):
    g = search_grid(T, q)
    J = g.size - 1
    assert J == math.floor(2 * math.pi * T / q)
    theta_J = -math.pi + J * q / T
    assert theta_J <= math.pi + 1e-12 and math.pi < theta_J + q / T
    th = g.thetas
    assert th[0] == -math.pi
    assert np.allclose(np.diff(th[:50]), q / T)


# -- filter -----------------------------------------------------------------

def test_filter_constant_signal():
    d = make_dataset(np.zeros(7), np.ones(7))
    assert np.allclose(filter_eval(d, np.linspace(-3, 3, 11)), 1.0)
    assert np.allclose(filter_eval(d, search_grid(2.0, 0.1)), 1.0)


def test_filter_single_shot():
    d = make_dataset([1.0], [1 + 1j])
    assert filter_eval(d, [0.0])[0] == pytest.approx(math.sqrt(2))


def test_filter_grid_and_array_paths_agree(rng):
    m = build_toy(20, 1e-3, 0)
    t = sample_times(50.0, 1.0, 300, rng)
    d = make_dataset(t, exact_signal(m, t))
    g = search_grid(50.0, 0.05)
    assert np.allclose(filter_eval(d, g), filter_eval(d, g.thetas), atol=1e-12)


def test_filter_noiseless_single_mode_vs_gaussian(rng):
    lam, T, N = 0.2, 30.0, 20_000
    m = SpectralModel([lam], [1.0], (0,))
    t = sample_times(T, 5.0, N, rng)
    d = make_dataset(t, exact_signal(m, t))
    thetas = lam + np.linspace(-3, 3, 41) / T
    G = filter_eval(d, thetas)
    assert G[20] == pytest.approx(1.0)
    assert np.max(np.abs(G - filter_oracle(m, thetas, T))) <= 3 / math.sqrt(N)


def test_filter_consistency_invariant():
    # exact signal values, N = 1e5, sigma = 3: |G - oracle| <= e^{-9} + O(1/sqrt N), tolerance 0.02
    m = build_toy(20, 1e-3, 3)
    T, N = 20.0, 100_000
    t = sample_times(T, 3.0, N, np.random.default_rng(5))
    d = make_dataset(t, exact_signal(m, t), T, 3.0)
    g = search_grid(T, 0.05)
    thetas = g.thetas[::5]
    assert np.max(np.abs(filter_eval(d, thetas) - filter_oracle(m, thetas, T))) <= 0.02


def test_filter_oracle_examples():
    m = SpectralModel([0.1], [1.0], (0,))
    assert filter_oracle(m, 0.1, 50.0) == pytest.approx(1.0)
    assert filter_oracle(m, 0.1 + 1 / 50.0, 50.0) == pytest.approx(math.exp(-0.5))
    d = 0.01
    two = SpectralModel([-d, d], [0.5, 0.5], (0, 1))
    assert filter_oracle(two, 0.0, 40.0) == pytest.approx(2 * 0.5 * math.exp(-(40 * d) ** 2 / 2))


def test_filter_tail_excludes_dominant():
    m = build_toy(10, 0.2, 1)
    th = np.linspace(-1, 1, 9)
    dom_part = sum(m.overlaps[i] * np.exp(-0.5 * 9.0 * (th - m.eigenvalues[i]) ** 2) for i in m.dominant)
    assert np.allclose(filter_tail(m, th, 3.0) + dom_part, filter_oracle(m, th, 3.0))


@pytest.mark.parametrize("sigma", [2.0, 3.0, 4.0])
def test_truncation_error_bound(sigma):
    # the attainable bound: truncation moves at most 2 erfc(sigma/sqrt2) of mass
    rng = np.random.default_rng(int(sigma))
    m = build_toy(15, 0.1, int(sigma))
    T = 10.0
    th = rng.uniform(-math.pi, math.pi, 50)
    diff = np.abs(expected_filter(m, th, T, sigma) - filter_oracle(m, th, T))
    assert np.max(diff) <= 2 * math.erfc(sigma / math.sqrt(2))


# -- peak search ------------------------------------------------------------

def test_peak_single_max():
    vals = np.zeros(200)
    vals[37] = 1.0
    fg = FilterGrid(np.arange(200.0), vals, 1.0, 0.05)
    assert peak_search(fg, 1, 5.0, 1.0)[0] == 37.0


def test_peak_two_modes_oracle():
    m = SpectralModel([-0.5, 0.0, 0.5], [0.4, 0.2, 0.4], (0, 2))
    out = np.sort(peak_search(oracle_grid(m, 100.0, 0.05), 2, 5.0, 100.0))
    assert np.allclose(out, [-0.5, 0.5], atol=5e-4)


def test_peak_tie_lowest_index():
    vals = np.zeros(500)
    vals[[100, 300]] = 1.0
    fg = FilterGrid(np.arange(500.0), vals, 1.0, 0.05)
    assert peak_search(fg, 1, 5.0, 1.0)[0] == 100.0


def test_peak_block_is_open():
    # alpha/q = 100 steps: index 100 sits on the boundary of the first window and stays eligible
    vals = np.zeros(400)
    vals[0], vals[99], vals[100] = 3.0, 2.0, 1.0
    fg = FilterGrid(np.arange(400.0), vals, 1.0, 0.05)
    assert list(peak_search(fg, 2, 5.0, 1.0)) == [0.0, 100.0]


def test_peak_exhaustion_reports_found():
    fg = FilterGrid(np.arange(150.0), np.linspace(1, 0, 150), 1.0, 0.05)
    with pytest.raises(ExhaustionError) as exc:
        peak_search(fg, 3, 5.0, 1.0)
    assert exc.value.found == [0, 100]


def test_peak_wrap_blocks_across_seam():
    T, q, alpha = 10.0, 0.05, 5.0
    g = search_grid(T, q)
    vals = np.zeros(g.size)
    vals[-1], vals[5] = 2.0, 1.0  # both within alpha/T of each other around the circle
    vals[g.size // 2] = 0.5
    fg = FilterGrid(g.thetas, vals, T, q)
    plain = peak_search(fg, 2, alpha, T)
    wrapped = peak_search(fg, 2, alpha, T, wrap=True)
    assert plain[1] == g.thetas[5]
    assert wrapped[1] == g.thetas[g.size // 2]


@given(seed=seeds, K=st.integers(1, 6), scale=st.floats(1e-3, 1e3))
def test_peak_separation_and_scale_invariance(seed, K, scale):
    rng = np.random.default_rng(seed)
    T, q, alpha = 20.0, 0.05, 5.0
    g = search_grid(T, q)
    vals = rng.random(g.size)
    fg = FilterGrid(g.thetas, vals, T, q)
    out = peak_search(fg, K, alpha, T)
    d = np.abs(out[:, None] - out[None, :]) + np.eye(K) * 10
    assert np.all(d >= alpha / T - 1e-12)
    assert set(out) <= set(g.thetas)
    scaled = peak_search(FilterGrid(g.thetas, vals * scale, T, q), K, alpha, T)
    assert np.array_equal(out, scaled)


@given(seed=seeds)
def test_scale_free_argmax_on_shot_data(seed):
    rng = np.random.default_rng(seed)
    m = build_toy(10, 0.05, 0)
    t = sample_times(20.0, 1.0, 60, rng)
    z = exact_signal(m, t) + rng.normal(0, 0.3, t.size)
    g = search_grid(20.0, 0.05)
    a = peak_search(FilterGrid(g.thetas, filter_eval(make_dataset(t, z), g), 20.0, 0.05), 2, 5.0, 20.0)
    b = peak_search(FilterGrid(g.thetas, filter_eval(make_dataset(t, 4.0 * z), g), 20.0, 0.05), 2, 5.0, 20.0)
    assert np.array_equal(a, b)


# -- end to end -------------------------------------------------------------

def test_qmegs_single_mode():
    lam, T, q = 0.3, 100.0, 0.05
    m = SpectralModel([lam], [1.0], (0,))
    for s in range(3):
        r = qmegs_run(m, QmegsConfig(N=20_000, T=T, K=1), np.random.default_rng(s))
        assert abs(r.estimates[0] - lam) <= q / T


def test_qmegs_extra_peaks_harmless():
    m = build_toy(20, 0.3, 2)
    r = qmegs_run(m, QmegsConfig(N=2000, T=100.0, K=5), np.random.default_rng(0))
    assert r.estimates.size == 5
    assert maxmin_error(r.estimates, m) <= 5.0 / 100.0


def test_qmegs_cost_and_separation():
    m = build_toy(20, 1e-3, 0)
    cfg = QmegsConfig(T=400.0)
    r = qmegs_run(m, cfg, np.random.default_rng(1), keep_grid=True)
    assert r.T_max <= cfg.sigma * cfg.T and r.T_total <= cfg.N * cfg.sigma * cfg.T
    assert abs(r.estimates[0] - r.estimates[1]) >= cfg.alpha / cfg.T - 1e-12
    assert r.grid.values.size == search_grid(cfg.T, cfg.q).size
    assert np.all(r.grid.values <= math.sqrt(2) + 1)
    assert r.algorithm == "qmegs"


def test_qmegs_toy_large_T_median():
    m = build_toy(20, 1e-3, 0)
    cfg = QmegsConfig(T=100 * 2**7)
    errs = [maxmin_error(qmegs_run(m, cfg, np.random.default_rng(s)).estimates, m) for s in range(20)]
    assert np.median(errs) < 1e-3


def test_qmegs_int_seam_and_determinism():
    base = build_toy(20, 1e-3, 0)
    m = seam_model(base, offset=1e-3)
    cfg = QmegsConfig(N=2000, T=400.0, sigma=3.0)
    a = qmegs_int_run(m, cfg, np.random.default_rng(8))
    b = qmegs_int_run(m, cfg, np.random.default_rng(8))
    assert np.array_equal(a.estimates, b.estimates)
    assert a.algorithm == "qmegs-int"
    assert maxmin_error(a.estimates, m, wrapped=True) <= cfg.alpha / cfg.T
    assert np.all(np.abs(a.estimates) <= math.pi)
    with pytest.raises(InvalidInputError):
        qmegs_int_run(m, QmegsConfig(T=0.5), np.random.default_rng(0))


# -- periodic Gaussian and wrapped distance ---------------------------------

def test_periodic_gaussian_examples():
    assert periodic_gaussian(0.0, 3.0) == pytest.approx(1.0, abs=1e-12)
    assert periodic_gaussian(2 * math.pi, 1.0) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(InvalidInputError):
        periodic_gaussian(0.1, 0.5)


@pytest.mark.parametrize("T", [1.0, 2.0, 5.0, 20.0])
def test_periodic_gaussian_sandwich(T):
    x = np.linspace(-2 * math.pi / 3, 2 * math.pi / 3, 10_000)
    ex = periodic_gaussian_excess(x, T)
    assert np.all(ex >= 0) and np.all(ex <= math.log(1.01))
    assert np.array_equal(periodic_gaussian(x, T), periodic_gaussian(-x, T))
    y = np.linspace(0, math.pi, 2000)
    assert np.all(np.diff(log_periodic_gaussian(y, T)) < 0)


def test_periodic_gaussian_matches_direct_sum():
    T = 1.5
    x = np.linspace(-math.pi, math.pi, 101)
    j = np.arange(-20, 21)
    raw = np.exp(-((x[:, None] + 2 * math.pi * j[None, :]) ** 2) * T * T / 2).sum(axis=1)
    raw0 = np.exp(-((2 * math.pi * j) ** 2) * T * T / 2).sum()
    assert np.allclose(periodic_gaussian(x, T), raw / raw0, rtol=1e-12)


@given(x=st.floats(-50, 50), T=st.floats(1, 30))
def test_periodic_gaussian_periodic_even(x, T):
    a = log_periodic_gaussian(x, T)
    assert log_periodic_gaussian(x + 2 * math.pi, T) == pytest.approx(a, rel=1e-9, abs=1e-9)
    assert log_periodic_gaussian(-x, T) == pytest.approx(a, rel=1e-9, abs=1e-9)


def test_wrapped_distance_examples():
    assert wrapped_distance(0.1, 2 * math.pi - 0.1) == pytest.approx(0.2)
    assert wrapped_distance(1.3, 1.3) == 0.0
    assert wrapped_distance(0.0, math.pi) == pytest.approx(math.pi)


angles = st.floats(-20, 20)


@given(u=angles, v=angles, w=angles)
def test_wrapped_distance_metric(u, v, w):
    d = wrapped_distance(u, v)
    assert 0 <= d <= math.pi
    assert d == pytest.approx(wrapped_distance(v, u), abs=1e-12)
    assert d <= wrapped_distance(u, w) + wrapped_distance(w, v) + 1e-12
    assert wrapped_distance(u, u + 2 * math.pi) == pytest.approx(0.0, abs=1e-12)


# -- theorem parameters -----------------------------------------------------

def test_theorem_params_general():
    c = theorem_params("general", 0.4, 0.2, 1e-2, 0.05)
    assert c.q < c.alpha / 3
    assert abs(c.alpha / c.q - round(c.alpha / c.q)) < 1e-9
    assert c.T == pytest.approx(c.alpha / 1e-2)
    J = c.T / c.q
    assert c.N == math.ceil(8 / 0.2**2 * math.log((J + 2) / 0.05))


def test_theorem_params_gapped():
    c = theorem_params("gapped-dominant", 0.4, 0.2, 1.0, 0.05, delta_dom=0.2)
    assert c.T >= 6 * c.alpha / 0.2
    c = theorem_params("gapped-tail", 0.4, 0.2, 1.0, 0.05, delta=0.1)
    assert c.T >= 6 * c.alpha / 0.1
    with pytest.raises(InvalidInputError):
        theorem_params("gapped-tail", 0.4, 0.2, 1.0, 0.05, delta=0.1, zeta=0.2)
    with pytest.raises(InvalidInputError):
        theorem_params("gapped-dominant", 0.4, 0.2, 1.0, 0.05)


def test_theorem_params_degenerate_margin():
    c = theorem_params("general", 0.3 + 1e-9, 0.3, 1e-2, 0.05)
    assert c.N > 10**18
    assert c.warnings
    with pytest.raises(ModelConditionError):
        theorem_params("general", 0.3, 0.3, 1e-2, 0.05)


@given(pmin=st.floats(0.05, 1.0), frac=st.floats(0.0, 0.99), eps=st.floats(1e-4, 1.0))
def test_theorem_params_structure(pmin, frac, eps):
    ptail = frac * pmin
    c = theorem_params("general", pmin, ptail, eps, 0.1)
    assert c.q < c.alpha / 3 and c.alpha >= 5.0 and c.sigma == c.alpha
    assert abs(c.alpha / c.q - round(c.alpha / c.q)) < 1e-9
