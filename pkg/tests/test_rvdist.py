import logging
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pll import rng
from pll.errors import DomainError, TailExhausted
from pll.rvdist import (
    GapModel,
    PiecewisePolynomial,
    PowerLaw,
    RegVarSpec,
    Uniform,
    as_window,
    cdf,
    model_from_params,
    prepare_sample,
    quantile,
    sample,
    sample_around,
    sample_window,
    sample_windows,
    scaling_constants,
)
from pll.special import ks_pvalue, ks_statistic

PIECEWISE = PiecewisePolynomial([0.0, 0.3, 1.0], [0.4, 0.6], [0.5, 2.0], [3.0, 0.7])
INCREASING = [PowerLaw(0.5), PowerLaw(1.0), PowerLaw(2.0), Uniform(0.0, 1.0), Uniform(-2.0, 3.0), PIECEWISE]


@pytest.mark.parametrize(
    "model, x, want",
    [(PowerLaw(2.0), 0.5, 0.25), (PowerLaw(1.0), 0.3, 0.3), (Uniform(0.0, 1.0), 1.0, 1.0)],
)
def test_cdf_examples(model, x, want):
    assert cdf(model, x) == pytest.approx(want, abs=1e-15)


def test_quantile_examples():
    assert quantile(PowerLaw(2.0), 0.25) == pytest.approx(0.5, abs=1e-15)
    for q in (0.0, 0.1, 0.77, 1.0):
        assert quantile(Uniform(0.0, 1.0), q) == pytest.approx(q, abs=1e-15)


def test_gap_quantile_left_edge():
    assert quantile(GapModel(0.4, 0.6), 0.5) == pytest.approx(0.4, abs=1e-15)


def test_quantile_domain():
    with pytest.raises(DomainError):
        quantile(Uniform(), 1.5)
    with pytest.raises(DomainError):
        quantile(PowerLaw(2.0), -0.01)


def test_empty_sample():
    assert sample(PowerLaw(2.0), 3, 0).size == 0


def test_uniform_sampler_ks():
    x = sample(Uniform(0.0, 1.0), 2024, 100_000)
    assert ks_statistic(x, lambda v: np.clip(v, 0, 1)) < 0.01


def test_powerlaw_sample_mean():
    x = sample(PowerLaw(2.0), 99, 100_000)
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - 2.0 / 3.0) < 3 * se


@pytest.mark.parametrize("model", [PIECEWISE, GapModel(0.0, 0.2), GapModel(0.4, 0.6)])
def test_other_samplers_ks(model):
    x = sample(model, 5, 20_000)
    d = ks_statistic(x, model.cdf)
    assert ks_pvalue(d, x.size) > 1e-3


@pytest.mark.parametrize("model", INCREASING, ids=lambda m: m.family)
def test_inverse_consistency(model):
    p = rng.uniforms(17, 1000)
    assert np.max(np.abs(model.cdf(model.quantile(p)) - p)) < 1e-10


@given(st.floats(0.05, 8.0), st.floats(1e-6, 1.0), st.floats(1e-3, 1.0))
def test_powerlaw_regular_variation_exact(alpha, x, t):
    m = PowerLaw(alpha)
    assert m.cdf(x * t) / m.cdf(x) == pytest.approx(t**alpha, rel=1e-12)


@given(st.sampled_from(INCREASING), st.floats(0.0, 0.9), st.integers(10, 10**6))
def test_scaling_consistency(model, q, n):
    u = float(model.quantile(q))
    a_n, b_n = scaling_constants(model, u, n)
    assert n * (model.cdf(u + a_n) - model.cdf(u)) == pytest.approx(1.0, abs=1e-9)
    if b_n is not None:
        assert n * (model.cdf(u) - model.cdf(u - b_n)) == pytest.approx(1.0, abs=1e-9)


def test_scaling_constants_examples():
    a, b = scaling_constants(PowerLaw(2.0), 0.0, 100)
    assert a == pytest.approx(0.1, rel=1e-14) and b is None
    a, b = scaling_constants(Uniform(0.0, 1.0), 0.5, 1000)
    assert a == pytest.approx(0.001, rel=1e-10) and b == pytest.approx(0.001, rel=1e-10)
    for n in (7, 1000, 123456):
        a, _ = scaling_constants(PowerLaw(1.0), 0.0, n)
        assert a == pytest.approx(1.0 / n, rel=1e-12)


def test_tail_exhausted():
    with pytest.raises(TailExhausted) as err:
        scaling_constants(Uniform(), 0.9995, 1000)
    assert err.value.tag == "tail-exhausted"


@given(st.integers(0, 2**40), st.integers(0, 500), st.integers(0, 50))
def test_sample_reproducible(seed, n, rep):
    a = sample(PowerLaw(1.5), seed, n, rep)
    b = sample(PowerLaw(1.5), seed, n, rep)
    np.testing.assert_array_equal(a, b)


def test_replication_streams_differ():
    assert not np.array_equal(rng.uniforms(1, 10, 0), rng.uniforms(1, 10, 1))
    assert not np.array_equal(rng.uniforms(1, 10, 0), rng.uniforms(2, 10, 0))


@pytest.mark.parametrize("model", [PowerLaw(2.0), Uniform(), PIECEWISE, GapModel(0.0, 0.2)], ids=lambda m: m.family)
@pytest.mark.parametrize("band", [(0.0, 0.01), (0.2, 0.21), (0.5, 1.0)])
def test_window_equals_filtered_full_sample(model, band):
    n, seed, rep = 5000, 8, 3
    lo, hi = (float(model.quantile(p)) for p in band)
    full = np.sort(sample(model, seed, n, rep))
    win = sample_window(model, seed, n, lo, hi, rep)
    want = as_window(full, lo, hi)
    np.testing.assert_array_equal(win.values, want.values)
    assert (win.n_below, win.n_above) == (want.n_below, want.n_above)


def test_sample_windows_share_one_pass():
    m = Uniform()
    ws = sample_windows(m, 4, 1000, [(0.1, 0.2), (0.6, 0.65)], rep=2)
    for w, (lo, hi) in zip(ws, [(0.1, 0.2), (0.6, 0.65)]):
        np.testing.assert_array_equal(w.values, sample_window(m, 4, 1000, lo, hi, 2).values)


def test_sample_around_has_enough_neighbours():
    w = sample_around(Uniform(), 3, 100_000, 0.5, 5, 5)
    below = np.count_nonzero(w.values < 0.5)
    assert below >= 5 and w.values.size - below >= 5
    assert not w.is_full


def test_prepare_sample_breaks_ties(caplog):
    with caplog.at_level(logging.WARNING):
        y = prepare_sample([0.3, 0.1, 0.3, 0.3])
    assert np.all(np.diff(y) > 0)
    assert y[1] == 0.3
    assert "tied" in caplog.text


def test_regvar_annotations():
    assert PowerLaw(2.0).regvar(0.0) == RegVarSpec(0.0, 2.0, None, 1.0)
    spec = Uniform().regvar(0.5)
    assert (spec.alpha_right, spec.beta_left, spec.omega_right) == (1.0, 1.0, 1.0)
    spec = PIECEWISE.regvar(0.3)
    assert spec.alpha_right == 2.0 and spec.beta_left == 3.0
    assert spec.omega_right == pytest.approx(0.6 / 0.7**2)
    assert spec.omega_left == pytest.approx(0.4 / 0.3**3)


def test_piecewise_local_exponents_numerically():
    m = PIECEWISE
    for h in (1e-4, 1e-5):
        ratio = (m.cdf(0.3 + 2 * h) - m.cdf(0.3)) / (m.cdf(0.3 + h) - m.cdf(0.3))
        assert ratio == pytest.approx(2.0**2.0, rel=1e-3)
        ratio = (m.cdf(0.3) - m.cdf(0.3 - 2 * h)) / (m.cdf(0.3) - m.cdf(0.3 - h))
        assert ratio == pytest.approx(2.0**3.0, rel=1e-3)


def test_gap_regvar_inside_gap_rejected():
    with pytest.raises(DomainError):
        GapModel(0.4, 0.6).regvar(0.5)
    spec = GapModel(0.4, 0.6).regvar(0.6)
    assert spec.beta_left is None


def test_model_from_params():
    assert model_from_params({"family": "powerlaw", "alpha": 2}) == PowerLaw(2.0)
    with pytest.raises(DomainError):
        model_from_params({"family": "powerlaw", "alpha": 2, "beta": 1})
    with pytest.raises(DomainError):
        model_from_params({"family": "cauchy"})


@pytest.mark.parametrize(
    "bad",
    [lambda: PowerLaw(0.0), lambda: Uniform(1.0, 1.0), lambda: GapModel(0.6, 0.4), lambda: RegVarSpec(0.0, -1.0)],
)
def test_constructor_validation(bad):
    with pytest.raises(DomainError):
        bad()
