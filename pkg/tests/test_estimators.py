import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thresholdou.estimators import (accumulate_regime_sums, continuous_lse_drift, lse_drift,
                                    lse_drift_zero_intercept, mqve, plugin_inference, qve,
                                    residual_sums, riemann_ito_integrals)
from thresholdou.model import SamplePath, ThresholdOUModel

from conftest import simulate
from oracles import regression_oracle


def test_sums_hand_example(short_path):
    (s,) = accumulate_regime_sums(short_path, ())
    assert s.count == 2
    assert s.L == pytest.approx(0.2, abs=1e-15)
    assert s.Q == pytest.approx(-0.2, abs=1e-15)
    assert s.D == pytest.approx(1.81, abs=1e-15)
    assert s.J == pytest.approx(1.9, abs=1e-15)
    assert s.H == pytest.approx(-0.19, abs=1e-15)
    assert s.V == pytest.approx(0.02, abs=1e-15)


def test_constant_path_sums():
    path = SamplePath([2.5] * 6, 0.1)
    (s,) = accumulate_regime_sums(path, ())
    assert (s.Q, s.H, s.V) == (0.0, 0.0, 0.0)
    assert s.D == 5 * 6.25 and s.J == 12.5
    assert s.L == pytest.approx(0.5)
    assert lse_drift(path, ()).degenerate[0]


def test_left_endpoint_attribution():
    s1, s2 = accumulate_regime_sums(SamplePath([-1.0, 1.0, -1.0], 0.1), (0.0,))
    assert s1.count == 1 and s2.count == 1
    assert s1.L == s2.L == pytest.approx(0.1)
    assert s1.Q == 2.0 and s2.Q == -2.0


def test_zero_intercept_hand_example(short_path):
    est = lse_drift_zero_intercept(short_path, ())
    assert est.alpha[0] == pytest.approx(0.19 / 0.181, rel=1e-13)
    assert est.alpha[0] == pytest.approx(1.049724, abs=1e-6)
    assert est.zero_intercept
    flat = SamplePath([0.3, 0.3, 0.3], 0.1)
    assert lse_drift_zero_intercept(flat, ()).alpha[0] == 0.0


def test_lse_matches_regression_oracle(short_path):
    est = lse_drift(short_path, ())
    a, b = regression_oracle(short_path.values, 0.1)
    assert est.alpha[0] == pytest.approx(a, abs=1e-12)
    assert est.beta[0] == pytest.approx(b, abs=1e-12)


def test_lse_per_regime_matches_oracle(scenario1_path):
    est = lse_drift(scenario1_path, (-0.5, 0.5))
    x = scenario1_path.values
    ids = np.searchsorted([-0.5, 0.5], x[:-1], side="right")
    h = scenario1_path.h
    for i in range(3):
        keep = ids == i
        design = np.column_stack([-x[:-1][keep] * h, np.full(keep.sum(), h)])
        coef, *_ = np.linalg.lstsq(design, np.diff(x)[keep], rcond=None)
        np.testing.assert_allclose([est.alpha[i], est.beta[i]], coef, rtol=1e-9, atol=1e-10)


def test_qve_hand_example():
    path = SamplePath([0.0, 0.2, 0.0, 0.2], 0.01)
    (s,) = accumulate_regime_sums(path, ())
    assert s.V == pytest.approx(0.12, abs=1e-15)
    assert s.L == pytest.approx(0.03, abs=1e-15)
    assert qve(path, ())[0] == pytest.approx(2.0, rel=1e-14)


def test_qve_unvisited_regime_is_nan():
    out = qve(SamplePath([0.0, 0.1, 0.2], 0.1), (5.0,))
    assert math.isnan(out[1]) and out[0] > 0


def test_deterministic_path_sigma_is_small():
    model = ThresholdOUModel((0.0,), (1.0, 2.0), (0.5, -0.5), 0.0)
    path = simulate(model, 2000, 0.01, x0=3.0)
    # QVE only sees (drift h)^2 per step
    assert np.all(qve(path, (0.0,)) ** 2 < 10 * 0.01)
    est = mqve(path, (0.0,))
    assert np.all(est.sigma < 1e-8)


def test_mqve_removes_drift_bias(scenario1_path):
    th = (-0.5, 0.5)
    mq = mqve(scenario1_path, th).sigma
    q = qve(scenario1_path, th)
    assert np.all(np.abs(mq - np.array([1, 2, 3])) < np.abs(q - np.array([1, 2, 3])))


def test_mqve_fallback_for_degenerate_regime():
    path = SamplePath([0.0, 0.5, 0.1, 0.4, 5.0, 0.2], 0.1)
    est = mqve(path, (1.0,))
    assert est.fallback.tolist() == [False, True]
    assert est.sigma[1] == pytest.approx(math.sqrt((0.2 - 5.0) ** 2 / 0.1))


def test_residual_sums_equal_regression_sse(scenario1_path):
    th = (-0.5, 0.5)
    rss = residual_sums(scenario1_path, th, lse_drift(scenario1_path, th))
    x = scenario1_path.values
    ids = np.searchsorted(th, x[:-1], side="right")
    for i in range(3):
        keep = ids == i
        design = np.column_stack([-x[:-1][keep], np.ones(keep.sum())]) * scenario1_path.h
        _, res, *_ = np.linalg.lstsq(design, np.diff(x)[keep], rcond=None)
        assert rss[i] == pytest.approx(res[0], rel=1e-9)


def test_ou_standard_error():
    path = simulate(ThresholdOUModel((), (1.0,), (0.0,), 1.0), 100_000, 0.01, seed=4)
    report = plugin_inference(path, ())
    assert report.regimes[0].alpha.se == pytest.approx(math.sqrt(2 / 1000), rel=0.1)


def test_ci_width(scenario1_path):
    report = plugin_inference(scenario1_path, (-0.5, 0.5), level=0.95)
    for r in report.regimes:
        for est in (r.alpha, r.beta):
            assert est.ci[1] - est.ci[0] == pytest.approx(2 * 1.959963984540054 * est.se,
                                                          abs=1e-9)


def test_plugin_equals_ols_covariance(scenario1_path):
    th = (-0.5, 0.5)
    report = plugin_inference(scenario1_path, th)
    sums = accumulate_regime_sums(scenario1_path, th)
    rss = residual_sums(scenario1_path, th, lse_drift(scenario1_path, th))
    h = scenario1_path.h
    for r, s, e in zip(report.regimes, sums, rss):
        s2 = e / s.L
        xtx = np.array([[s.D, -s.J], [-s.J, s.count]]) * h * h
        ols = s2 * h * np.linalg.inv(xtx)
        np.testing.assert_allclose(r.covariance, ols, rtol=1e-9)


def test_plugin_zero_intercept(scenario1_path):
    report = plugin_inference(scenario1_path, (0.0,), zero_intercept=True)
    assert all(r.beta is None for r in report.regimes)
    assert report.to_dict()["zero_intercept"] is True
    assert "beta_1" not in report.table()


def test_plugin_reports_degenerate_regime():
    path = simulate(ThresholdOUModel((), (1.0,), (0.0,), 1.0), 500, 0.1, seed=2)
    report = plugin_inference(path, (50.0,))
    r2 = report.regimes[1]
    assert r2.degenerate and r2.alpha is None and "empty regime" in r2.flags
    assert "degenerate" in report.table()
    doc = report.to_dict()
    assert doc["sigma_inference"] == "point estimate only"
    assert doc["regimes"][1]["alpha"] is None


def test_plugin_level_validation(short_path):
    with pytest.raises(ValueError):
        plugin_inference(short_path, (), level=1.5)


def test_report_values(scenario1_path):
    report = plugin_inference(scenario1_path, (-0.5, 0.5))
    assert report.m == 3
    np.testing.assert_array_equal(report.values("alpha"),
                                  lse_drift(scenario1_path, (-0.5, 0.5)).alpha)


def test_discrete_continuous_sums_bitwise(scenario1_path):
    th = (-0.5, 0.5)
    sums = accumulate_regime_sums(scenario1_path, th)
    integrals = riemann_ito_integrals(scenario1_path, th)
    for s, g in zip(sums, integrals):
        assert g["dX"] == s.Q
        assert g["x_dX"] == s.H
        assert g["bracket"] == s.V
    cont = continuous_lse_drift(integrals)
    disc = lse_drift(scenario1_path, th)
    np.testing.assert_allclose(cont.alpha, disc.alpha, rtol=1e-10)
    np.testing.assert_allclose(cont.beta, disc.beta, rtol=1e-10)


@settings(max_examples=40, deadline=None)
@given(a=st.floats(0.2, 5.0), b=st.floats(-3.0, 3.0), seed=st.integers(0, 2**32))
def test_affine_equivariance(a, b, seed):
    # under y = a x + b: alpha' = alpha, beta' = a beta + b alpha, theta' = a theta + b
    path = simulate(ThresholdOUModel((0.0,), (1.0, 2.0), (0.2, -0.3), 1.0), 400, 0.1, seed=seed)
    moved = SamplePath(a * path.values + b, path.h)
    est = lse_drift(path, (0.0,))
    est2 = lse_drift(moved, (b,))
    assert list(est.degenerate) == list(est2.degenerate)
    ok = ~est.degenerate
    np.testing.assert_allclose(est2.alpha[ok], est.alpha[ok], rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(est2.beta[ok], a * est.beta[ok] + b * est.alpha[ok],
                               rtol=1e-10, atol=1e-10)
