import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from pll import verify
from pll.compensator import (
    adaptive_simpson,
    compensator_2d,
    exact_compensator_1d,
    joint_compensator,
    limit_measure,
)
from pll.errors import DegenerateSurvival, DomainError, WindowsOverlap
from pll.rvdist import PowerLaw, RegVarSpec, Uniform, sample, sample_window, scaling_constants


def _product_cdf(u):
    u = np.clip(u, 0.0, 1.0)
    return u[..., 0] * u[..., 1]


def _product_survival(u):
    u = np.clip(u, 0.0, 1.0)
    return (1.0 - u[..., 0]) * (1.0 - u[..., 1])


def test_single_point_log_survival():
    path = exact_compensator_1d([0.5], Uniform(), 0.0, 1.0, None, [1.0])
    assert path.values[0] == pytest.approx(-math.log(0.5), abs=1e-12)
    assert path.values[0] == pytest.approx(0.693147, abs=1e-6)


def test_zero_at_origin():
    x = sample(PowerLaw(2.0), 1, 100)
    a, _ = scaling_constants(PowerLaw(2.0), 0.0, 100)
    assert exact_compensator_1d(x, PowerLaw(2.0), 0.0, a, None, [0.0]).values[0] == 0.0


def test_degenerate_survival():
    with pytest.raises(DegenerateSurvival):
        exact_compensator_1d([1.0], Uniform(), 0.0, 1.0, None, [1.0])


def test_left_side_uses_log_cdf():
    # one point below the median: contribution log F(x) - log F(max(Y, x - b t))
    y = 0.4
    path = exact_compensator_1d([y], Uniform(), 0.5, 0.1, 0.1, [-2.0, -0.5])
    assert path.values[0] == pytest.approx(math.log(0.5) - math.log(0.4))
    assert path.values[1] == pytest.approx(math.log(0.5) - math.log(0.45))


def test_window_matches_full_sample():
    model, n = PowerLaw(0.5), 10_000
    a, _ = scaling_constants(model, 0.0, n)
    grid = [0.2, 0.5, 1.0]
    full = exact_compensator_1d(sample(model, 6, n, 2), model, 0.0, a, None, grid)
    win = exact_compensator_1d(sample_window(model, 6, n, 0.0, a, 2), model, 0.0, a, None, grid)
    np.testing.assert_allclose(win.values, full.values, rtol=1e-12)


@given(st.integers(0, 1000), st.sampled_from([0.5, 1.0, 2.0]), st.lists(st.floats(0, 3), min_size=2, max_size=8))
def test_path_monotone_and_zero_start(seed, alpha, ts):
    model, n = PowerLaw(alpha), 200
    a, _ = scaling_constants(model, 0.0, n)
    grid = np.concatenate([[0.0], np.sort(ts)])
    vals = exact_compensator_1d(sample(model, seed, n), model, 0.0, a, None, grid).values
    assert vals[0] == 0.0
    assert np.all(np.diff(vals) >= -1e-15)


def test_replication_mean_matches_limit():
    config = verify.ReplicationConfig(100_000, 10_000, 101, PowerLaw(2.0))

    def one(r):
        win, proc = verify._window_process(config, r, 0.0, 1.0)
        return exact_compensator_1d(win, config.model, 0.0, proc.a_n, None, [0.5, 1.0]).values

    vals = np.array(verify.replicate(config, one))
    for j, t in enumerate((0.5, 1.0)):
        se = vals[:, j].std(ddof=1) / math.sqrt(vals.shape[0])
        assert abs(vals[:, j].mean() - t**2) <= 3 * se + 1e-12


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_l2_convergence(alpha):
    errs = [verify.compensator_l2(alpha, n, 500, 41) for n in (1_000, 10_000, 100_000)]
    assert errs[0] >= errs[1] >= errs[2]
    assert errs[2] < 0.01


@pytest.mark.parametrize(
    "spec, t, want",
    [
        (RegVarSpec(0.0, 1.0), 0.7, 0.7),
        (RegVarSpec(0.0, 2.0), 0.5, 0.25),
        (RegVarSpec(0.0, 1.0, None, 8.0), 0.3, 2.4),
        (RegVarSpec(0.0, 1.0, 2.0, 1.0, 3.0), -0.5, 0.75),
    ],
)
def test_limit_measure(spec, t, want):
    assert limit_measure(spec, t) == pytest.approx(want)


def test_limit_measure_left_without_index():
    with pytest.raises(DomainError):
        limit_measure(RegVarSpec(0.0, 1.0), -0.1)


def test_adaptive_simpson_accuracy():
    assert adaptive_simpson(math.exp, 0.0, 1.0, 1e-10) == pytest.approx(math.e - 1, abs=1e-10)
    assert adaptive_simpson(lambda s: math.sqrt(s), 0.0, 1.0, 1e-9) == pytest.approx(2 / 3, abs=1e-8)


# at the left support edge U_s = [0, s a_n], so both compensators are the same integral
@pytest.mark.parametrize("model, q", [(PowerLaw(2.0), 0.0), (PowerLaw(0.5), 0.0), (Uniform(), 0.0)])
def test_joint_single_quantile_matches_closed_form(model, q):
    n = 2000
    x = sample(model, 12, n)
    u = float(model.quantile(q))
    a, b = scaling_constants(model, u, n)
    grid = [0.3, 1.0, 5.0] + ([-0.4, -3.0] if b else [])
    (joint,) = joint_compensator(x, model, [q], 50.0, n, grid)
    exact = exact_compensator_1d(x, model, u, a, b, grid)
    np.testing.assert_allclose(joint.values, exact.values, atol=1e-8, rtol=0)


def test_joint_zero_at_origin():
    x = sample(Uniform(), 3, 1000)
    for path in joint_compensator(x, Uniform(), [0.3, 0.7], 1.0, 1000, [0.0, 0.5]):
        assert path.values[0] == 0.0


def test_joint_windows_overlap_reports_min_n():
    x = sample(Uniform(), 3, 1000)
    with pytest.raises(WindowsOverlap) as err:
        joint_compensator(x, Uniform(), [0.3, 0.301], 1.0, 1000, [0.5])
    # windows [x - K/n, x + K/n] separate once 2K/n < 0.001
    assert err.value.min_n == 2001
    assert err.value.tag == "windows-overlap"


def test_joint_replication_mean():
    model, n, reps = Uniform(), 100_000, 2_000
    vals = []
    for r in range(reps):
        w = sample_window(model, 77, n, 0.5 - 2e-5, 0.5 + 2e-5, r)
        (path,) = joint_compensator(w, model, [0.5], 1.0, n, [0.5, 1.0])
        vals.append(path.values)
    vals = np.array(vals)
    for j, t in enumerate((0.5, 1.0)):
        se = vals[:, j].std(ddof=1) / math.sqrt(reps)
        assert abs(vals[:, j].mean() - t) <= 3 * se + 1e-9


def test_2d_empty_sample():
    assert compensator_2d(np.empty((0, 2)), _product_cdf, _product_survival, 1.0, [0.5, 0.5]) == 0.0


def test_2d_product_model_against_quadrature():
    oracle, _ = integrate.dblquad(lambda v, u: 1.0 / ((1 - u) * (1 - v)), 0, 0.5, 0, 0.5, epsabs=1e-13)
    assert oracle == pytest.approx(math.log(2.0) ** 2, rel=1e-12)
    got = compensator_2d([[1.0, 1.0]], _product_cdf, _product_survival, 1.0, [0.5, 0.5])
    assert got == pytest.approx(oracle, rel=1e-4)


def test_2d_refinement_consistency():
    pts = [[1.0, 1.0], [0.2, 0.35], [0.45, 0.1]]
    coarse = compensator_2d(pts, _product_cdf, _product_survival, 1.0, [0.5, 0.5], resolution=256)
    fine = compensator_2d(pts, _product_cdf, _product_survival, 1.0, [0.5, 0.5], resolution=512)
    assert abs(fine - coarse) < 1e-4 * abs(fine)


def test_2d_indicator_is_exact_for_interior_point():
    # only the part of the box below (0.2, 0.35) contributes for that point
    oracle = math.log(1 / 0.8) * math.log(1 / 0.65)
    got = compensator_2d([[0.2, 0.35]], _product_cdf, _product_survival, 1.0, [0.5, 0.5])
    assert got == pytest.approx(oracle, rel=1e-4)


def test_path_csv():
    path = exact_compensator_1d([0.5], Uniform(), 0.0, 1.0, None, [0.0, 1.0])
    buf = io.StringIO()
    path.to_csv(buf)
    assert buf.getvalue().splitlines()[0] == "t,value,limit"
