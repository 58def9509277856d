import math

import numpy as np
import pytest
from scipy import integrate

from annealed_posterior import (GaussianSummary, MeasurementModel, RejectedInputError, ScheduleParams,
                                build_admissible_schedule, chi_square_gaussians, energy_distance, energy_test,
                                gaussian_mgf_bound, gaussian_posterior_closed_form, kl_gaussians, laurent_massart_tail,
                                mi_tv_bound, tv_upper_bounds)
from annealed_posterior.evaluation import scalar_gaussian_tv

# measured worst case of log(chi^2 quantile) / (m gamma_i + log lambda) over the rungs, rounded up
CHI2_RUNG_CONSTANT = -0.35


def g1(mu, var):
    return GaussianSummary([mu], [[var]])


def chi2_quadrature(mp, vp, mq, vq):
    """int p^2 / q - 1 by adaptive quadrature, with the integrand formed in the log domain."""
    def integrand(x):
        log_p = -(x - mp) ** 2 / (2 * vp) - 0.5 * math.log(2 * math.pi * vp)
        log_q = -(x - mq) ** 2 / (2 * vq) - 0.5 * math.log(2 * math.pi * vq)
        return math.exp(2 * log_p - log_q)

    return integrate.quad(integrand, -40, 40, epsabs=1e-13, epsrel=1e-13, limit=200)[0] - 1


def test_summary_validation():
    with pytest.raises(RejectedInputError):
        GaussianSummary([0.0, 0.0], [[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(RejectedInputError):
        GaussianSummary([0.0], [[-1.0]])
    with pytest.raises(RejectedInputError):
        GaussianSummary([0.0, 1.0], [[1.0]])


def test_closed_form_zero_operator_and_scalar():
    prior = GaussianSummary([1.0, 2.0], [[2.0, 0.3], [0.3, 1.0]])
    post = gaussian_posterior_closed_form(prior, MeasurementModel(np.zeros((1, 2)), 0.4), [7.0])
    np.testing.assert_allclose(post.mean, prior.mean, atol=1e-12)
    np.testing.assert_allclose(post.cov, prior.cov, atol=1e-12)
    eta = 0.6
    post = gaussian_posterior_closed_form(g1(0.0, 1.0), MeasurementModel(np.eye(1), eta), [1.5])
    assert post.mean[0] == pytest.approx(1.5 / (1 + eta ** 2))
    assert post.cov[0, 0] == pytest.approx(eta ** 2 / (1 + eta ** 2))


def test_closed_form_normal_equations_and_precision_order():
    rng = np.random.default_rng(0)
    L = rng.standard_normal((5, 5))
    S = L @ L.T + 0.5 * np.eye(5)
    prior = GaussianSummary(rng.standard_normal(5), S)
    A = rng.standard_normal((3, 5))
    model = MeasurementModel(A, 0.3)
    y = rng.standard_normal(3)
    post = gaussian_posterior_closed_form(prior, model, y)
    P0 = np.linalg.inv(S)
    prec = P0 + A.T @ A / 0.09
    resid = prec @ post.mean - (P0 @ prior.mean + A.T @ y / 0.09)
    assert np.max(np.abs(resid)) <= 1e-10 * max(1.0, np.max(np.abs(prec @ post.mean)))
    gap = np.linalg.inv(post.cov) - P0
    assert np.min(np.linalg.eigvalsh(0.5 * (gap + gap.T))) >= -1e-10
    with pytest.raises(RejectedInputError):
        gaussian_posterior_closed_form(GaussianSummary(np.zeros(5), np.zeros((5, 5))), model, y)


def test_chi_square_examples():
    p = GaussianSummary([0.3, -0.2], [[1.0, 0.2], [0.2, 0.7]])
    assert chi_square_gaussians(p, p) == pytest.approx(0.0, abs=1e-12)

    exact = chi2_quadrature(0.0, 1.0, 0.0, 2.0)
    assert abs(chi_square_gaussians(g1(0, 1), g1(0, 2)) - exact) <= 1e-8
    assert chi_square_gaussians(g1(0, 3), g1(0, 1)) == math.inf


def test_chi_square_with_mean_shift_matches_quadrature():
    p, q = g1(0.4, 0.8), g1(-0.1, 1.3)

    exact = chi2_quadrature(0.4, 0.8, -0.1, 1.3)
    assert abs(chi_square_gaussians(p, q) - exact) <= 1e-8


def test_tv_bounds():
    p = g1(0.0, 1.0)
    assert tv_upper_bounds(p, p) == pytest.approx(0.0, abs=1e-12)
    q = g1(0.1, 1.0)
    assert math.sqrt(kl_gaussians(p, q) / 2) == pytest.approx(0.05)
    bound = tv_upper_bounds(p, q)
    assert bound <= 0.05 + 1e-12
    assert scalar_gaussian_tv(0.0, 1.0, 0.1, 1.0) <= bound
    shifts = np.linspace(0, 2, 21)
    vals = [tv_upper_bounds(p, g1(s, 1.0)) for s in shifts]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_energy_distance_examples():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((1000, 1))
    assert energy_distance(a, a) == pytest.approx(0.0, abs=1e-12)
    assert energy_distance(a, rng.standard_normal((1000, 1)) + 5) > 4
    b = rng.standard_normal((1000, 1))
    test = energy_test(a, b, seed=2)
    assert test.statistic <= test.null_quantile_99
    assert test.passes(0.01)
    assert energy_distance(a[::-1], b) == energy_distance(a, b)


def test_energy_test_rejects_shift():
    rng = np.random.default_rng(3)
    test = energy_test(rng.standard_normal((300, 2)), rng.standard_normal((300, 2)) + 0.5, seed=0)
    assert not test.passes(0.01)


def test_laurent_massart():
    assert laurent_massart_tail(7, 0.0) == (7.0, 7.0)
    m, t = 10, math.log(20)
    hi, lo = laurent_massart_tail(m, t)
    v = np.sum(np.random.default_rng(4).standard_normal((10 ** 5, m)) ** 2, axis=1)
    assert np.mean(v >= hi) <= 1 / 20
    assert np.mean(v <= lo) <= 1 / 20
    with pytest.raises(RejectedInputError):
        laurent_massart_tail(0, 1.0)


def test_mgf_bound():
    assert gaussian_mgf_bound(1e-9, 0.0, 1e-9, 3) == pytest.approx(1.0, abs=1e-7)
    assert gaussian_mgf_bound(0.1, 0.0, 0.1, 2) == pytest.approx(5.0 / 3.0)
    z = np.random.default_rng(5).standard_normal((10 ** 5, 2))
    assert np.mean(np.exp(0.1 * np.sum(z ** 2, axis=1))) <= 5.0 / 3.0
    with pytest.raises(RejectedInputError):
        gaussian_mgf_bound(0.3, 0.0, 0.3, 2)


def test_mgf_domination_grid():
    z = np.random.default_rng(6).standard_normal((10 ** 5, 5))
    norm = np.linalg.norm(z, axis=1)
    for alpha, beta in zip(np.linspace(-0.2, 0.15, 10), np.linspace(0.0, 1.5, 10)):
        gamma = (0.5 - alpha) / 2
        mc = np.mean(np.exp(alpha * norm ** 2 + beta * norm))
        assert gaussian_mgf_bound(alpha, beta, gamma, 5) >= mc


def test_mi_tv_bound():
    model = MeasurementModel(np.eye(1), 1.0)
    assert mi_tv_bound(model, 0.0, 10.0) == 0.0
    assert mi_tv_bound(MeasurementModel(2 * np.eye(1), 1.0), 1.0, 10.0) == pytest.approx(
        2 * mi_tv_bound(model, 1.0, 10.0))
    eta1 = 10.0
    bound = mi_tv_bound(model, 1.0, eta1)
    assert bound == pytest.approx(1 / 20)
    rng = np.random.default_rng(7)
    ys = rng.standard_normal(400) * math.sqrt(1 + eta1 ** 2)
    tv = np.mean([scalar_gaussian_tv(y / (1 + eta1 ** 2), eta1 ** 2 / (1 + eta1 ** 2), 0.0, 1.0, n_grid=4001)
                  for y in ys])
    assert tv <= bound


def test_chi_square_rung_closeness():
    model = MeasurementModel(np.eye(1), 0.5)
    params = ScheduleParams(alpha=1.0, d=1, m=1, lam=10.0, eps=0.1, R=1.0, C=1.0)
    ladder = build_admissible_schedule(model, params)
    rng = np.random.default_rng(0)

    def post(y, e):
        return g1(y / (1 + e * e), e * e / (1 + e * e))

    for i in range(ladder.N - 1):
        e1, e2 = ladder.etas[i], ladder.etas[i + 1]
        x = rng.standard_normal(1000)
        y2 = x + e2 * rng.standard_normal(1000)
        y1 = y2 + math.sqrt(e1 ** 2 - e2 ** 2) * rng.standard_normal(1000)
        chis = [chi_square_gaussians(post(a, e1), post(b, e2)) for a, b in zip(y1, y2)]
        q = np.quantile(chis, 1 - 1 / params.lam)
        assert q <= math.exp(CHI2_RUNG_CONSTANT * (params.m * ladder.gammas[i] + math.log(params.lam)))
