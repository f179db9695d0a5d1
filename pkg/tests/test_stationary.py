import math

import numpy as np
import pytest

from thresholdou.errors import DegenerateRegimeError, ModelError, NoInvariantDensityError
from thresholdou.model import ThresholdOUModel
from thresholdou.stationary import (asymptotic_covariance, invariant_density, regime_moments,
                                    segment_integrals)

from oracles import random_ergodic_model, trapezoid_moments, zeroed_second_moments

OU = ThresholdOUModel((), (1.0,), (0.0,), 1.0)
SCENARIO1_COMMON = ThresholdOUModel((-0.5, 0.5), (1, 2, 3), (0.3, 0.5, 0.7), 1.0)


def test_classical_ou_closed_form():
    d = invariant_density(OU)
    assert d.k[0] == pytest.approx(1 / math.sqrt(math.pi), abs=1e-15)
    mom = regime_moments(d, 1)
    assert (mom.P, mom.K, mom.R, mom.M) == (1.0, 0.0, 0.5, 0.5)
    cov = asymptotic_covariance(d, 1)
    assert cov.zero_intercept_variance == 2.0
    np.testing.assert_array_equal(cov.matrix, [[2.0, 0.0], [0.0, 1.0]])


def test_ou_with_mean_and_scale():
    model = ThresholdOUModel((), (2.0,), (1.0,), 0.5)
    mom = regime_moments(invariant_density(model), 1)
    mean, var = 0.5, 0.25 / 4
    assert mom.K == pytest.approx(mean, abs=1e-14)
    assert mom.R == pytest.approx(var + mean**2, abs=1e-14)


def test_symmetric_two_regime():
    model = ThresholdOUModel((0.0,), (1.0, 1.0), (0.0, 0.0), 1.0)
    d = invariant_density(model)
    assert d.k[0] == pytest.approx(d.k[1], rel=1e-15)
    m1, m2 = regime_moments(d, 1), regime_moments(d, 2)
    assert m1.P == pytest.approx(0.5, abs=1e-15)
    assert m1.K < 0 < m2.K
    assert m1.K == pytest.approx(-m2.K, abs=1e-15)
    c1, c2 = asymptotic_covariance(d, 1), asymptotic_covariance(d, 2)
    assert c1.matrix[0, 1] < 0 < c2.matrix[0, 1]


def test_scenario1_common_sigma_against_trapezoid():
    d = invariant_density(SCENARIO1_COMMON)
    k, moments = trapezoid_moments(SCENARIO1_COMMON, extent=10.0)
    np.testing.assert_allclose(d.k, k, rtol=1e-6)
    zeroed = zeroed_second_moments(SCENARIO1_COMMON)
    for i in range(3):
        mom = regime_moments(d, i + 1)
        np.testing.assert_allclose([mom.P, mom.K, mom.R], moments[i], atol=1e-8)
        assert mom.M == pytest.approx(zeroed[i], abs=1e-8)


def test_continuity_and_mass():
    d = invariant_density(SCENARIO1_COMMON)
    for j, t in enumerate(SCENARIO1_COMMON.thresholds, start=1):
        assert d.one_sided(j, t) == pytest.approx(d.one_sided(j + 1, t), rel=1e-12)
    assert sum(m.P for m in d.moments) == pytest.approx(1.0, abs=1e-12)
    assert d.mean() == pytest.approx(sum(m.K for m in d.moments))


def test_pdf_uses_upper_regime_at_threshold():
    model = ThresholdOUModel((0.0,), (1.0, 3.0), (0.0, 0.5), 1.0)
    d = invariant_density(model)
    # continuity makes both sides equal; the point itself belongs to regime 2
    assert float(d.pdf(0.0)) == pytest.approx(d.one_sided(2, 0.0), rel=1e-15)


def test_drift_only_tails_use_quadrature():
    model = ThresholdOUModel((-1.0, 1.0), (0.0, 1.0, 0.0), (1.0, 0.0, -1.0), 1.0)
    d = invariant_density(model)
    k, moments = trapezoid_moments(model)
    np.testing.assert_allclose(d.k, k, rtol=1e-7)
    for i in range(3):
        mom = d.moments[i]
        np.testing.assert_allclose([mom.P, mom.K, mom.R], moments[i], atol=1e-8)
    # zeroing the intercepts leaves flat tails: no invariant law
    assert math.isnan(regime_moments(d, 1).M)


def test_negative_middle_alpha():
    model = ThresholdOUModel((-1.0, 1.0), (1.0, -0.5, 1.0), (0.0, 0.0, 0.0), 1.0)
    d = invariant_density(model)
    _, moments = trapezoid_moments(model)
    for i in range(3):
        mom = d.moments[i]
        np.testing.assert_allclose([mom.P, mom.K, mom.R], moments[i], atol=1e-8)


@pytest.mark.parametrize("seed", range(8))
def test_random_models_against_trapezoid(seed):
    model = random_ergodic_model(np.random.default_rng(1000 + seed))
    d = invariant_density(model)
    k, moments = trapezoid_moments(model)
    np.testing.assert_allclose(d.k, k, atol=1e-8)
    for i in range(model.m):
        mom = d.moments[i]
        np.testing.assert_allclose([mom.P, mom.K, mom.R], moments[i], atol=1e-8)


def test_segment_integrals_variance_of_half_line():
    # int_0^inf of the N(0, 1/2) kernel is half the total mass
    _, (i0, i1, i2) = segment_integrals(1.0, 0.0, 1.0, 0.0, math.inf)
    _, (t0, _, t2) = segment_integrals(1.0, 0.0, 1.0, -math.inf, math.inf)
    assert i0 == pytest.approx(t0 / 2, rel=1e-15)
    assert i2 == pytest.approx(t2 / 2, rel=1e-15)
    assert i1 > 0


def test_errors():
    with pytest.raises(NoInvariantDensityError):
        invariant_density(ThresholdOUModel((), (-1.0,), (0.0,), 1.0))
    with pytest.raises(ModelError):
        invariant_density(ThresholdOUModel((0.0,), (1, 2), (0, 0), (1, 2)))
    with pytest.raises(ModelError):
        invariant_density(ThresholdOUModel((), (1.0,), (0.0,), 0.0))
    d = invariant_density(OU)
    with pytest.raises(IndexError):
        regime_moments(d, 2)


def test_degenerate_covariance():
    # a regime squeezed far into the tail has negligible mass
    model = ThresholdOUModel((30.0,), (1.0, 1.0), (0.0, 0.0), 1.0)
    d = invariant_density(model)
    with pytest.raises(DegenerateRegimeError):
        asymptotic_covariance(d, 2)
