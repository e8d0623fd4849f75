import math

import mpmath
import numpy as np
import pytest
from scipy import integrate, special, stats

from chaostail.specfun import (
    ChiAlpha, chi_alpha_density, chi_alpha_tail, chisq_truncated_second_moment,
    log_chisq_excess_moment, log_upper_reg_gamma, log_watson_leading, lower_reg_gamma,
    upper_reg_gamma, watson_leading,
)


def test_q_examples():
    assert upper_reg_gamma(1, 1) == pytest.approx(math.exp(-1), rel=1e-14)
    assert upper_reg_gamma(0.5, 1) == pytest.approx(math.erfc(1.0), rel=1e-13)
    assert upper_reg_gamma(0.5, 1) == pytest.approx(0.1572992070, abs=1e-10)
    assert upper_reg_gamma(5, 0) == 1.0


def test_q_against_scipy_grid():
    s = np.array([0.5, 1, 1.5, 2, 3.5, 10, 50])[:, None]
    t = np.array([0.0, 0.01, 0.5, 1, 3, 10, 40, 100])[None, :]
    np.testing.assert_allclose(upper_reg_gamma(s, t), special.gammaincc(s, t), rtol=1e-12, atol=1e-15)


def test_p_plus_q_is_one():
    s = np.linspace(0.5, 20, 15)[:, None]
    t = np.linspace(0, 40, 17)[None, :]
    np.testing.assert_allclose(upper_reg_gamma(s, t) + lower_reg_gamma(s, t), 1.0, atol=1e-14)


def test_q_decreasing():
    t = np.linspace(0.01, 50, 400)
    q = upper_reg_gamma(2.5, t)
    assert np.all(np.diff(q) < 0)
    assert np.all((q >= 0) & (q <= 1))


@pytest.mark.parametrize("s,t", [(1.5, 5000.0), (0.5, 800.0), (4.0, 1200.0)])
def test_log_q_far_tail(s, t):
    ref = float(mpmath.log(mpmath.gammainc(s, t, mpmath.inf, regularized=True)))
    assert log_upper_reg_gamma(s, t) == pytest.approx(ref, rel=1e-12)


def test_chi_alpha_tail_examples():
    assert chi_alpha_tail(ChiAlpha(2, 2), 2.0) == pytest.approx(math.exp(-1))
    assert chi_alpha_tail(ChiAlpha(1, 1), 1.0) == pytest.approx(2 * stats.norm.sf(1.0), rel=1e-12)
    assert 2 * stats.norm.sf(1.0) == pytest.approx(0.3173105079, abs=1e-10)


def test_chi_alpha_tail_vs_asymptotic():
    m = ChiAlpha(3, 2)
    x = 400.0  # x^{2/alpha} = 400
    ratio = m.tail(x) / math.exp(m.log_tail_asymptotic(x))
    assert abs(ratio - 1) < 0.02


def test_power_transform_consistency(rng):
    for alpha in (0.5, 1.5, 3.0):
        x = rng.uniform(0.1, 20, 10)
        np.testing.assert_allclose(ChiAlpha(4, alpha).tail(x), ChiAlpha(4, 1).tail(x ** (1 / alpha)),
                                   rtol=1e-12)


def test_density_examples():
    x = np.array([0.3, 1.0, 4.0])
    np.testing.assert_allclose(chi_alpha_density(ChiAlpha(2, 2), x), np.exp(-x / 2) / 2, rtol=1e-13)
    ref = math.exp(-0.5) / (math.sqrt(2) * math.gamma(1.5))
    assert chi_alpha_density(ChiAlpha(3, 1), 1.0) == pytest.approx(ref, rel=1e-13)
    assert ref == pytest.approx(0.4839414, abs=1e-7)
    np.testing.assert_allclose(ChiAlpha(3, 1).density(x), stats.chi(3).pdf(x), rtol=1e-12)


@pytest.mark.parametrize("d,alpha", [(1, 1.0), (3, 2.0), (5, 0.7), (10, 3.0)])
def test_density_integrates_to_one(d, alpha):
    m = ChiAlpha(d, alpha)
    val, _ = integrate.quad(m.density, 0, np.inf, limit=200)
    assert val == pytest.approx(1.0, abs=1e-8)


def test_density_is_minus_tail_derivative(rng):
    m = ChiAlpha(4, 1.5)
    for x in rng.uniform(0.2, 8, 20):
        h = 1e-5 * x
        fd = -(m.tail(x + h) - m.tail(x - h)) / (2 * h)
        assert fd == pytest.approx(m.density(x), abs=1e-6)


def test_truncated_second_moment():
    assert chisq_truncated_second_moment(3, 0.0) == pytest.approx(3.0)
    assert chisq_truncated_second_moment(2, 2.0) == pytest.approx(4 * math.exp(-1), rel=1e-13)
    ref, _ = integrate.quad(lambda y: y * stats.chi2(5).pdf(y), 3, np.inf)
    assert chisq_truncated_second_moment(5, 3.0) == pytest.approx(ref, abs=1e-8)


def test_excess_moment_identity():
    # E[chi2; chi2 > t] - d P{chi2 > t} = 2 t f(t) for chi2 with d dof
    for d in (1, 2, 5):
        for t in (0.5, 3.0, 30.0):
            lhs = chisq_truncated_second_moment(d, t) - d * upper_reg_gamma(d / 2, t / 2)
            assert math.exp(log_chisq_excess_moment(d, t)) == pytest.approx(lhs, rel=1e-10)
            assert lhs == pytest.approx(2 * t * stats.chi2(d).pdf(t), rel=1e-10)


def watson_integral(y0, beta, c, delta, gamma, x):
    """Adaptive quadrature of I(x) = int_{x/y0}^inf y^gamma e^{-c y^beta} (y0 - x/y)^delta dy."""
    lo = x / y0
    width = 60.0 / (c * beta * lo ** (beta - 1))
    f = lambda y: y**gamma * math.exp(-c * (y**beta - lo**beta)) * (y0 - x / y) ** delta  # noqa: E731
    val, _ = integrate.quad(f, lo, lo + width, limit=500, epsabs=0, epsrel=1e-13)
    return val * math.exp(-c * lo**beta)


def test_watson_leading_form():
    # y0 = beta = c = delta = 1, gamma = 0: x^{-1} e^{-x} Gamma(2)
    assert watson_leading(1, 1, 1, 1, 0, 30.0) == pytest.approx(math.exp(-30) / 30, rel=1e-14)
    assert log_watson_leading(1, 1, 1, 1, 0, 30.0) == pytest.approx(-30 - math.log(30), rel=1e-14)


def test_watson_quadrature_at_30():
    lead = watson_leading(1, 1, 1, 1, 0, 30.0)
    assert abs(watson_integral(1, 1, 1, 1, 0, 30.0) / lead - 1) < 0.07


def test_watson_error_decays_like_x_to_minus_beta():
    xs = np.array([20.0, 40.0, 80.0])
    err = np.array([abs(watson_integral(1, 1, 1, 1, 0, x) / watson_leading(1, 1, 1, 1, 0, x) - 1) for x in xs])
    assert np.all(np.diff(err) < 0)
    slope = np.polyfit(np.log(xs), np.log(err), 1)[0]
    assert abs(slope + 1.0) < 0.2


@pytest.mark.parametrize("y0,beta,c,x", [(1.0, 1.0, 1.0, 5.0), (2.0, 2.0, 0.5, 7.0), (0.5, 1.5, 3.0, 2.0)])
def test_watson_exact_for_perfect_derivative(y0, beta, c, x):
    exact = math.exp(-c * (x / y0) ** beta) / (c * beta)
    assert watson_leading(y0, beta, c, 0.0, beta - 1, x) == pytest.approx(exact, rel=1e-12)
    assert watson_integral(y0, beta, c, 0.0, beta - 1, x) == pytest.approx(exact, rel=1e-10)


def test_watson_rejects_bad_parameters():
    with pytest.raises(ValueError):
        watson_leading(1, 1, -1, 1, 0, 3.0)
