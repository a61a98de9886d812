import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aoicred import (
    ASSchedule,
    H_gamma,
    H_gamma_inverse,
    MetricReport,
    RecoveryFunction,
    RRPolicy,
    ServiceDistribution,
    SystemConfig,
    ThresholdPolicy,
    h_eval,
)

alphas = st.floats(0.01, 20.0)
gammas = st.floats(0.0, 10.0)


def test_h_examples():
    assert h_eval(RecoveryFunction(1.0), 0.0) == 1.0
    assert h_eval(RecoveryFunction(1.0), 1.0) == pytest.approx(math.exp(-1), abs=1e-15)
    assert h_eval(RecoveryFunction(0.0), 5.0) == 1.0
    with pytest.raises(ValueError):
        h_eval(RecoveryFunction(1.0), -0.1)


def test_recovery_rejects_bad_alpha():
    for a in (-1.0, math.inf, math.nan):
        with pytest.raises(ValueError):
            RecoveryFunction(a)


def test_floor():
    assert RecoveryFunction(0.3).floor == 0.0
    assert RecoveryFunction(0.0).floor == 1.0


def test_H_gamma_example():
    assert H_gamma(RecoveryFunction(1.0), 2.0, 1.0) == pytest.approx(1 - 2 / math.e, abs=1e-15)


def test_H_gamma_inverse_examples():
    rf = RecoveryFunction(1.0)
    assert H_gamma_inverse(rf, 2.0, 1 - 2 / math.e) == pytest.approx(1.0, abs=1e-8)
    # the value rounded to six places still lands close
    assert H_gamma_inverse(rf, 2.0, 0.264241) == pytest.approx(1.0, abs=1e-6)
    # below H(0) = -gamma*alpha the root clamps to zero
    assert H_gamma_inverse(rf, 2.0, -5.0) == 0.0
    assert H_gamma_inverse(rf, 0.0, 3.0) == 3.0
    with pytest.raises(ValueError):
        H_gamma_inverse(rf, -1.0, 0.0)


@given(alphas, gammas, st.floats(0.0, 50.0))
def test_H_gamma_round_trip(alpha, gamma, x):
    rf = RecoveryFunction(alpha)
    y = H_gamma(rf, gamma, x)
    assert H_gamma_inverse(rf, gamma, y) == pytest.approx(x, abs=1e-7)


@given(alphas, gammas, st.floats(0.0, 30.0), st.floats(1e-3, 10.0))
def test_H_gamma_increasing(alpha, gamma, x, dx):
    rf = RecoveryFunction(alpha)
    assert H_gamma(rf, gamma, x + dx) > H_gamma(rf, gamma, x)


@given(alphas, st.floats(0.0, 30.0), st.floats(1e-3, 10.0))
def test_h_nonincreasing_and_convex(alpha, x, dx):
    rf = RecoveryFunction(alpha)
    a, b, c = (h_eval(rf, x + i * dx) for i in range(3))
    assert b <= a
    assert a + c - 2 * b >= -1e-15


@given(alphas, st.floats(0.0, 10.0))
def test_derivative_matches_finite_difference(alpha, x):
    rf = RecoveryFunction(alpha)
    eps = 1e-6
    fd = (h_eval(rf, x + eps) - h_eval(rf, max(x - eps, 0))) / (x + eps - max(x - eps, 0))
    assert float(rf.derivative(x)) == pytest.approx(fd, rel=1e-4, abs=1e-9)


@pytest.mark.parametrize("mean", [0.02, 1.0, 1.5, 50.0])
def test_service_moments_against_samples(mean):
    svc = ServiceDistribution(mean)
    y = svc.sample(np.random.default_rng(7), 1_000_000)
    n = len(y)
    assert abs(y.mean() - svc.mean) < 5 * y.std() / math.sqrt(n)
    assert abs((y**2).mean() - svc.second_moment) < 5 * (y**2).std() / math.sqrt(n)
    s = 0.7 / mean
    lt = np.exp(-s * y)
    assert abs(lt.mean() - svc.laplace(s)) < 5 * lt.std() / math.sqrt(n)


def test_service_parameter_readings():
    assert ServiceDistribution.exponential(50.0).mean == 50.0
    assert ServiceDistribution.exponential(50.0, parameter_is_rate=True).mean == pytest.approx(0.02)
    with pytest.raises(ValueError):
        ServiceDistribution(0.0)


def test_pdf_cdf_consistent():
    svc = ServiceDistribution(1.5)
    ys = np.linspace(0, 10, 2001)
    integral = np.trapezoid(svc.pdf(ys), ys)
    assert integral == pytest.approx(float(svc.cdf(10.0)), abs=1e-5)


def test_threshold_wait():
    pol = ThresholdPolicy(1.0)
    assert float(pol.wait(0.25)) == 0.75
    assert float(pol.wait(3.0)) == 0.0
    with pytest.raises(ValueError):
        ThresholdPolicy(-0.1)


def test_schedule_slots():
    assert ASSchedule((2, 1)).slots() == (0, 0, 1)
    with pytest.raises(ValueError):
        ASSchedule((0, 1))
    with pytest.raises(ValueError):
        RRPolicy(-1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        SystemConfig.single(rate=0.0, alpha=1.0)
    with pytest.raises(ValueError):
        SystemConfig.single(rate=1.0, alpha=1.0, beta=1.5)
    cfg = SystemConfig.multi([6, 6], [0.1, 50], ServiceDistribution(1.5), beta=0.5)
    assert cfg.K == 2 and cfg.equal_betas


def test_metric_report_objective():
    rep = MetricReport([2.0, 3.0], [0.5, 0.25], [0.5, 0.5])
    assert rep.objective == pytest.approx(0.5 * 2 + 0.5 * 0.5 + 0.5 * 3 + 0.5 * 0.25)
    assert rep.sum_aoi == 5.0 and rep.sum_err == 0.75
    assert rep.to_dict()["objective"] == rep.objective
